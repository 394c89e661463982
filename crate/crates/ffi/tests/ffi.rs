//! Drives the C ABI from Rust the way a C caller would.

use std::ffi::{CStr, CString};
use std::ptr;

use monopart_ffi::*;

const DEPS: &str = r#"<dependencies>
  <class name="a.A"><dependsOn name="a.B" relation="call"/><dependsOn name="a.C" relation="call"/></class>
  <class name="a.B"><dependsOn name="a.C" relation="call"/></class>
  <class name="a.C"><dependsOn name="b.D" relation="reference"/></class>
  <class name="b.D"><dependsOn name="b.E" relation="call"/><dependsOn name="b.F" relation="call"/></class>
  <class name="b.E"><dependsOn name="b.F" relation="call"/></class>
</dependencies>"#;

const MANIFEST: &str = "resources:
- name: db-a
  kind: database
- name: db-b
  kind: database
bindings:
- class: a.A
  resource: db-a
- class: a.B
  resource: db-a
- class: b.E
  resource: db-b
- class: b.F
  resource: db-b
";

const TRUTH: &str = "a.A: x\na.B: x\na.C: x\nb.D: y\nb.E: y\nb.F: y\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(mp_last_error()) }.to_str().unwrap().to_owned()
}

fn graph() -> *mut MpGraph {
    let (deps, manifest) = (c(DEPS), c(MANIFEST));
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mp_graph_build(deps.as_ptr(), manifest.as_ptr(), &mut g) }, MpStatus::Ok, "{}", last_error());
    g
}

#[test]
fn build_partition_and_evaluate() {
    let g = graph();
    assert_eq!(unsafe { mp_graph_class_count(g) }, 6);

    let cfg = mp_config_default(2);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { mp_partition(g, &cfg, &mut p) }, MpStatus::Ok, "{}", last_error());
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { mp_partition_k(p) }, 2);

    let parts: Vec<i64> = (0..6).map(|i| unsafe { mp_partition_part_of(p, i) }).collect();
    assert!(parts.iter().all(|&x| x == 0 || x == 1));
    assert_eq!(parts[0], parts[1]);
    assert_eq!(parts[1], parts[2]);
    assert_eq!(parts[3], parts[4]);
    assert_eq!(parts[4], parts[5]);
    assert_ne!(parts[0], parts[3]);
    assert_eq!(unsafe { mp_partition_part_of(p, 6) }, -1);
    assert_eq!(unsafe { mp_partition_part_of(ptr::null(), 0) }, -1);

    let obj = unsafe { mp_partition_objective(p) };
    assert!(!obj.is_null());
    // only the C -> D reference is cut; nothing is duplicated
    assert_eq!(unsafe { CStr::from_ptr(obj) }.to_str().unwrap(), "0.5");
    unsafe { mp_string_free(obj) };

    let mut q = f64::NAN;
    assert_eq!(unsafe { mp_ngm(g, p, true, &mut q) }, MpStatus::Ok);
    assert!(q > 0.3 && q < 0.5, "{q}");

    let truth = c(TRUTH);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mp_evaluate_json(g, p, truth.as_ptr(), &mut json) }, MpStatus::Ok, "{}", last_error());
    let report: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    unsafe { mp_string_free(json) };
    assert_eq!(report["f1"], "1");
    assert_eq!(report["cluster_sizes"], serde_json::json!([3, 3]));

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mp_evaluate_json(g, p, ptr::null(), &mut json) }, MpStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    unsafe { mp_string_free(json) };
    assert!(report["f1"].is_null());

    unsafe {
        mp_partition_free(p);
        mp_graph_free(g);
    }
}

#[test]
fn same_seed_same_partition() {
    let g = graph();
    let alpha = c("1/3");
    let cfg = MpConfig { k: 3, alpha: alpha.as_ptr(), epsilon: ptr::null(), seed: 7, restarts: 4 };
    let run = || {
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { mp_partition(g, &cfg, &mut p) }, MpStatus::Ok, "{}", last_error());
        let parts: Vec<i64> = (0..6).map(|i| unsafe { mp_partition_part_of(p, i) }).collect();
        let seed = unsafe { mp_partition_seed(p) };
        unsafe { mp_partition_free(p) };
        (parts, seed)
    };
    assert_eq!(run(), run());
    unsafe { mp_graph_free(g) };
}

#[test]
fn errors_are_reported_with_a_message() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mp_graph_build(ptr::null(), ptr::null(), &mut g) }, MpStatus::NullPointer);
    assert!(last_error().contains("deps"));
    assert!(g.is_null());

    let bad = c("<dependencies><class name=");
    assert_eq!(unsafe { mp_graph_build(bad.as_ptr(), ptr::null(), &mut g) }, MpStatus::Parse);
    assert!(!last_error().is_empty());

    let deps = c(DEPS);
    assert_eq!(unsafe { mp_graph_build(deps.as_ptr(), ptr::null(), ptr::null_mut()) }, MpStatus::NullPointer);

    let invalid = [0xffu8, 0xfe, 0];
    let mut g2 = ptr::null_mut();
    assert_eq!(unsafe { mp_graph_build(invalid.as_ptr().cast(), ptr::null(), &mut g2) }, MpStatus::InvalidUtf8);

    let g = graph();
    let mut p = ptr::null_mut();
    let cfg = mp_config_default(7);
    assert_eq!(unsafe { mp_partition(g, &cfg, &mut p) }, MpStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert!(p.is_null());

    let alpha = c("two");
    let cfg = MpConfig { alpha: alpha.as_ptr(), ..mp_config_default(2) };
    assert_eq!(unsafe { mp_partition(g, &cfg, &mut p) }, MpStatus::InvalidArgument);
    assert!(last_error().contains("alpha"));

    assert_eq!(unsafe { mp_partition(ptr::null(), &cfg, &mut p) }, MpStatus::NullPointer);
    let mut q = 0.0;
    assert_eq!(unsafe { mp_ngm(g, ptr::null(), false, &mut q) }, MpStatus::NullPointer);

    // a success clears the message
    assert_eq!(unsafe { mp_graph_class_count(g) }, 6);
    let cfg = mp_config_default(2);
    assert_eq!(unsafe { mp_partition(g, &cfg, &mut p) }, MpStatus::Ok);
    assert_eq!(last_error(), "");

    unsafe {
        mp_partition_free(p);
        mp_graph_free(g);
        mp_graph_free(ptr::null_mut());
        mp_partition_free(ptr::null_mut());
        mp_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { mp_graph_class_count(ptr::null()) }, 0);
    assert!(unsafe { mp_partition_objective(ptr::null()) }.is_null());
}

#[test]
fn graph_round_trips_through_json() {
    let deps = monopart::ingest::parse_dependencies(DEPS).unwrap();
    let manifest = monopart::ingest::parse_infra_yaml(MANIFEST).unwrap();
    let built = monopart::build_graph(&deps.records, &manifest, &[], &monopart::WeightConfig::default()).unwrap();
    let json = c(&serde_json::to_string(&built).unwrap());
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mp_graph_from_json(json.as_ptr(), &mut g) }, MpStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { mp_graph_class_count(g) }, 6);
    unsafe { mp_graph_free(g) };

    let bad = c("{\"classes\": 3}");
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { mp_graph_from_json(bad.as_ptr(), &mut g) }, MpStatus::Parse);
    assert!(g.is_null());
}
