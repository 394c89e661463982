//! C ABI over the monopart library.
//!
//! Graphs and partitions are opaque handles created by `mp_*` constructors
//! and released with the matching `*_free`. Every fallible call returns an
//! [`MpStatus`]; on failure [`mp_last_error`] describes the problem. Strings
//! returned to the caller are owned by the caller and released with
//! [`mp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use monopart::graphbuild::{build_graph, WeightConfig};
use monopart::ingest::{parse_dependencies, parse_infra_yaml, InfraManifest};
use monopart::metrics::{compute_ngm, evaluate, GroundTruth};
use monopart::model::{ApplicationGraph, PartitionSet, PriceTable};
use monopart::partition::{partition_graph, ObjectiveConfig};
use monopart::rational::{self, Rational};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Internal = 5,
}

/// An application graph.
pub struct MpGraph(ApplicationGraph);

/// A partition of a graph's classes, with the objective it scored.
pub struct MpPartition {
    set: PartitionSet,
    objective: Rational,
    seed: u64,
}

/// Partitioning parameters. `alpha` and `epsilon` are decimal or `p/q`
/// strings; NULL selects the default.
#[repr(C)]
pub struct MpConfig {
    pub k: usize,
    pub alpha: *const c_char,
    pub epsilon: *const c_char,
    pub seed: u64,
    pub restarts: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: MpStatus, msg: impl std::fmt::Display) -> MpStatus {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
    status
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), (MpStatus, String)>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
            MpStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(MpStatus::Internal, "panic inside monopart"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MpStatus, String)> {
    if p.is_null() {
        return Err((MpStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (MpStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, (MpStatus, String)> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MpStatus, String)> {
    p.as_ref().ok_or_else(|| (MpStatus::NullPointer, format!("{what} is NULL")))
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

fn parse_err(e: impl std::fmt::Display) -> (MpStatus, String) {
    (MpStatus::Parse, e.to_string())
}

fn arg_err(e: impl std::fmt::Display) -> (MpStatus, String) {
    (MpStatus::InvalidArgument, e.to_string())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `mp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from a monopart function and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration for `k` partitions.
#[no_mangle]
pub extern "C" fn mp_config_default(k: usize) -> MpConfig {
    let d = ObjectiveConfig::default();
    MpConfig { k, alpha: ptr::null(), epsilon: ptr::null(), seed: d.seed, restarts: d.restarts }
}

/// Builds a graph from a dependency export (XML or JSON) and an optional
/// infrastructure manifest (YAML, may be NULL).
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_build(
    deps: *const c_char,
    manifest: *const c_char,
    out: *mut *mut MpGraph,
) -> MpStatus {
    guard(|| {
        if out.is_null() {
            return Err((MpStatus::NullPointer, "out is NULL".into()));
        }
        let export = parse_dependencies(str_arg(deps, "deps")?).map_err(parse_err)?;
        let manifest = match opt_str_arg(manifest, "manifest")? {
            Some(doc) => parse_infra_yaml(doc).map_err(parse_err)?,
            None => InfraManifest::default(),
        };
        let g = build_graph(&export.records, &manifest, &[], &WeightConfig::default()).map_err(arg_err)?;
        *out = Box::into_raw(Box::new(MpGraph(g)));
        Ok(())
    })
}

/// Loads a graph from the JSON written by `monopart ingest`.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_from_json(json: *const c_char, out: *mut *mut MpGraph) -> MpStatus {
    guard(|| {
        if out.is_null() {
            return Err((MpStatus::NullPointer, "out is NULL".into()));
        }
        let g: ApplicationGraph = serde_json::from_str(str_arg(json, "json")?).map_err(parse_err)?;
        if let Some(problem) = monopart::validate_graph(&g).first() {
            return Err((MpStatus::Parse, format!("invalid graph: {problem}")));
        }
        *out = Box::into_raw(Box::new(MpGraph(g)));
        Ok(())
    })
}

/// Number of classes, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_class_count(g: *const MpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.class_count())
}

/// # Safety
/// `g` must be NULL or a live graph handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_free(g: *mut MpGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Partitions `g` under `cfg` with the default price table.
///
/// # Safety
/// `g` must be a live graph handle, `cfg` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_partition(g: *const MpGraph, cfg: *const MpConfig, out: *mut *mut MpPartition) -> MpStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let c = handle(cfg, "config")?;
        if out.is_null() {
            return Err((MpStatus::NullPointer, "out is NULL".into()));
        }
        let rat = |p: *const c_char, what: &str, default: Rational| -> Result<Rational, (MpStatus, String)> {
            match opt_str_arg(p, what)? {
                Some(s) => rational::parse(s).map_err(|e| arg_err(format!("{what}: {e}"))),
                None => Ok(default),
            }
        };
        let d = ObjectiveConfig::default();
        let cfg = ObjectiveConfig {
            k: c.k,
            alpha: rat(c.alpha, "alpha", d.alpha)?,
            epsilon: rat(c.epsilon, "epsilon", d.epsilon)?,
            seed: c.seed,
            restarts: c.restarts,
            ..d
        };
        let o = partition_graph(&g.0, &PriceTable::default(), &cfg).map_err(arg_err)?;
        *out = Box::into_raw(Box::new(MpPartition { set: o.partition, objective: o.objective, seed: o.seed }));
        Ok(())
    })
}

/// Number of partitions, or 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn mp_partition_k(p: *const MpPartition) -> usize {
    p.as_ref().map_or(0, |p| p.set.k())
}

/// Partition of the class at `index` (graph order), or -1 when out of range.
///
/// # Safety
/// `p` must be NULL or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn mp_partition_part_of(p: *const MpPartition, index: usize) -> i64 {
    match p.as_ref() {
        Some(p) if index < p.set.len() => p.set.part_of(index) as i64,
        _ => -1,
    }
}

/// Objective as an exact decimal or `p/q` string; free with `mp_string_free`.
///
/// # Safety
/// `p` must be NULL or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn mp_partition_objective(p: *const MpPartition) -> *mut c_char {
    p.as_ref().map_or(ptr::null_mut(), |p| out_string(rational::format(&p.objective)))
}

/// Seed of the restart that produced the partition.
///
/// # Safety
/// `p` must be NULL or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn mp_partition_seed(p: *const MpPartition) -> u64 {
    p.as_ref().map_or(0, |p| p.seed)
}

/// # Safety
/// `p` must be NULL or a live partition handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn mp_partition_free(p: *mut MpPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Newman-Girvan modularity of `p` on `g`, as a double.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_ngm(g: *const MpGraph, p: *const MpPartition, weighted: bool, out: *mut f64) -> MpStatus {
    guard(|| {
        let (g, p) = (handle(g, "graph")?, handle(p, "partition")?);
        if out.is_null() {
            return Err((MpStatus::NullPointer, "out is NULL".into()));
        }
        if p.set.len() != g.0.class_count() {
            return Err(arg_err("partition does not belong to this graph"));
        }
        *out = rational::to_f64(&compute_ngm(&g.0, &p.set, weighted).map_err(arg_err)?);
        Ok(())
    })
}

/// Evaluation report as JSON (rationals as strings). `truth` is an optional
/// YAML/JSON `{class: label}` document. Free the result with `mp_string_free`.
///
/// # Safety
/// Handles must be live; `truth` NULL or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_evaluate_json(
    g: *const MpGraph,
    p: *const MpPartition,
    truth: *const c_char,
    out: *mut *mut c_char,
) -> MpStatus {
    guard(|| {
        let (g, p) = (handle(g, "graph")?, handle(p, "partition")?);
        if out.is_null() {
            return Err((MpStatus::NullPointer, "out is NULL".into()));
        }
        if p.set.len() != g.0.class_count() {
            return Err(arg_err("partition does not belong to this graph"));
        }
        let truth = opt_str_arg(truth, "truth")?.map(GroundTruth::parse).transpose().map_err(parse_err)?;
        let report =
            evaluate(&g.0, &p.set, &g.0.dependencies, truth.as_ref(), &PriceTable::default()).map_err(arg_err)?;
        let json = serde_json::to_string(&report).map_err(|e| (MpStatus::Internal, e.to_string()))?;
        *out = out_string(json);
        Ok(())
    })
}
