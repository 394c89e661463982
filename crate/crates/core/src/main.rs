use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use monopart::generate::{generate, GeneratorConfig};
use monopart::graphbuild::{build_graph, to_dot, WeightConfig};
use monopart::infra::{InfraModel, PartitionInfraReport};
use monopart::ingest::{
    group_flows, parse_dependencies, parse_infra_yaml, parse_traces, write_dependency_xml, write_infra_yaml,
    FlowRuleConfig, InfraManifest, NamedFlow,
};
use monopart::metrics::{compute_ngm, evaluate, render_table, GroundTruth};
use monopart::model::{validate_graph, ApplicationGraph, PartitionSet, PriceTable, ResourceKind, SCHEMA_VERSION};
use monopart::partition::{edge_cut, partition_graph, sweep_k, ObjectiveConfig, PartitionOutcome};
use monopart::rational::{self, Rational};

#[derive(Parser)]
#[command(name = "monopart", version, about = "Decompose a monolith into microservice candidates")]
struct Cli {
    /// Output directory (default "out").
    #[arg(long, global = true, env = "MONOPART_OUT")]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the inputs and write graph.json.
    Ingest(InputArgs),
    /// Partition the graph; writes partition.json and infra_report.json.
    Partition(PartitionArgs),
    /// Score a partition; writes evaluation.json.
    Evaluate(EvaluateArgs),
    /// Write a planted-partition fixture: deps.xml, infra.yaml, truth.yaml.
    Generate(GenerateArgs),
    /// Render the graph (optionally colored by partition) to graph.dot.
    Dot(DotArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Class-dependency export (XML or JSON).
    #[arg(long)]
    deps: PathBuf,
    /// Infrastructure manifest (YAML).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Execution trace log.
    #[arg(long, requires = "flow_rules")]
    traces: Option<PathBuf>,
    /// Trace line regex and entry points (YAML).
    #[arg(long, requires = "traces")]
    flow_rules: Option<PathBuf>,
    /// Edge weight configuration (YAML).
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    /// Number of partitions; required unless --sweep-k is given.
    #[arg(long, required_unless_present = "sweep_k")]
    k: Option<usize>,
    #[arg(long, default_value = "0.5", value_parser = parse_rational)]
    alpha: Rational,
    #[arg(long, default_value = "0.1", value_parser = parse_rational)]
    epsilon: Rational,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Price table (YAML); defaults to the built-in table.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Try every k in LO..HI and keep the one with the highest modularity.
    #[arg(long, value_parser = parse_range)]
    sweep_k: Option<(usize, usize)>,
    /// Do not require one compute unit per partition.
    #[arg(long)]
    no_compute_floor: bool,
    /// Count each database once, in the lowest partition using it.
    #[arg(long)]
    shared_databases: bool,
    /// Build the graph from these inputs instead of reading graph.json.
    #[arg(long)]
    deps: Option<PathBuf>,
    #[arg(long, requires = "deps")]
    manifest: Option<PathBuf>,
    #[arg(long, requires_all = ["deps", "flow_rules"])]
    traces: Option<PathBuf>,
    #[arg(long, requires = "traces")]
    flow_rules: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground truth (YAML or JSON `{class: label}`).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Row label in the table.
    #[arg(long, default_value = "run")]
    dataset: String,
    /// Partition file (default: partition.json in the output directory).
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Graph file (default: graph.json in the output directory).
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    clusters: usize,
    #[arg(long)]
    p_in: f64,
    #[arg(long)]
    p_out: f64,
    #[arg(long, default_value_t = 1)]
    resources_per_cluster: usize,
    /// Comma-separated kinds cycled through each cluster's resources.
    #[arg(long, value_delimiter = ',', default_value = "database", value_parser = parse_kind)]
    resource_kinds: Vec<ResourceKind>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "com.example")]
    package: String,
}

#[derive(Args)]
struct DotArgs {
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got '{s}'"))?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= LO <= HI, got {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_kind(s: &str) -> Result<ResourceKind, String> {
    ResourceKind::from_manifest(s).ok_or_else(|| format!("unknown resource kind '{s}'"))
}

/// User errors exit 2, internal failures 1.
enum Failure {
    User(String),
    Internal(String),
}

type Outcome<T> = Result<T, Failure>;

fn user(msg: impl std::fmt::Display) -> Failure {
    Failure::User(msg.to_string())
}

fn at(path: &Path) -> impl Fn(monopart::Error) -> Failure + '_ {
    move |e| user(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))
}

/// JSON documents carry `schema_version` next to their payload.
#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn to_json<T: Serialize>(body: T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(&Versioned { schema_version: SCHEMA_VERSION, body })
        .map_err(|e| Failure::Internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Outcome<T> {
    let doc: Versioned<T> = serde_json::from_str(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(user(format!(
            "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            doc.schema_version
        )));
    }
    Ok(doc.body)
}

struct Output {
    dir: PathBuf,
    force: bool,
}

impl Output {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes all files or none: existing targets are checked up front.
    fn write(&self, files: &[(&str, String)]) -> Outcome<()> {
        if !self.force {
            if let Some((name, _)) = files.iter().find(|(n, _)| self.path(n).exists()) {
                return Err(user(format!("{} exists; pass --force to overwrite", self.path(name).display())));
            }
        }
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| Failure::Internal(format!("cannot create {}: {e}", self.dir.display())))?;
        for (name, body) in files {
            let path = self.path(name);
            std::fs::write(&path, body)
                .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))?;
            log::info!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionDoc {
    k: usize,
    assignment: BTreeMap<String, usize>,
    #[serde(with = "rational::serde_str")]
    objective: Rational,
    seed: u64,
}

fn load_prices(path: Option<&Path>) -> Outcome<PriceTable> {
    let Some(path) = path else { return Ok(PriceTable::default()) };
    let prices = PriceTable::from_yaml(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))?;
    if !prices.is_valid() {
        return Err(user(format!("{}: prices must be non-negative", path.display())));
    }
    Ok(prices)
}

fn build(
    deps: &Path,
    manifest: Option<&Path>,
    traces: Option<(&Path, &Path)>,
    weights: Option<&Path>,
) -> Outcome<(ApplicationGraph, usize)> {
    let export = parse_dependencies(&read(deps)?).map_err(|e| at(deps)(e.into()))?;
    for w in &export.warnings {
        log::warn!("{}: {w}", deps.display());
    }
    let manifest = match manifest {
        Some(p) => parse_infra_yaml(&read(p)?).map_err(|e| at(p)(e.into()))?,
        None => InfraManifest::default(),
    };
    let mut skipped = 0;
    let flows: Vec<NamedFlow> = match traces {
        Some((log_path, rules_path)) => {
            let rules = FlowRuleConfig::from_yaml(&read(rules_path)?).map_err(|e| at(rules_path)(e.into()))?;
            let parsed = parse_traces(&read(log_path)?, &rules).map_err(|e| at(log_path)(e.into()))?;
            skipped = parsed.skipped;
            group_flows(&parsed.records)
        }
        None => Vec::new(),
    };
    let cfg = match weights {
        Some(p) => {
            serde_yaml::from_str::<WeightConfig>(&read(p)?).map_err(|e| user(format!("{}: {e}", p.display())))?
        }
        None => WeightConfig::default(),
    };
    let g =
        build_graph(&export.records, &manifest, &flows, &cfg).map_err(|e| user(format!("{}: {e}", deps.display())))?;
    Ok((g, skipped))
}

fn load_graph(path: &Path) -> Outcome<ApplicationGraph> {
    let g: ApplicationGraph = from_json(path)?;
    let problems = validate_graph(&g);
    if let Some(first) = problems.first() {
        return Err(user(format!("{}: invalid graph: {first}", path.display())));
    }
    Ok(g)
}

fn load_partition(path: &Path, g: &ApplicationGraph) -> Outcome<PartitionSet> {
    let doc: PartitionDoc = from_json(path)?;
    PartitionSet::from_names(g, doc.k, &doc.assignment).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn graph_summary(g: &ApplicationGraph) -> String {
    format!(
        "classes: {}\nedges: {}\nresources: {}\nflows: {}\n",
        g.class_count(),
        g.class_edges.len(),
        g.resources.len(),
        g.flows.len()
    )
}

fn cmd_ingest(out: &Output, a: &InputArgs) -> Outcome<()> {
    let traces = a.traces.as_deref().zip(a.flow_rules.as_deref());
    let (g, skipped) = build(&a.deps, a.manifest.as_deref(), traces, a.weights.as_deref())?;
    out.write(&[("graph.json", to_json(&g)?)])?;
    print!("{}", graph_summary(&g));
    if skipped > 0 {
        println!("skipped trace lines: {skipped}");
    }
    Ok(())
}

fn cmd_partition(out: &Output, a: &PartitionArgs) -> Outcome<()> {
    let prices = load_prices(a.prices.as_deref())?;
    let mut files = Vec::new();
    let g = match &a.deps {
        Some(deps) => {
            let traces = a.traces.as_deref().zip(a.flow_rules.as_deref());
            let (g, _) = build(deps, a.manifest.as_deref(), traces, None)?;
            files.push(("graph.json", to_json(&g)?));
            g
        }
        None => load_graph(&out.path("graph.json"))?,
    };
    let cfg = ObjectiveConfig {
        alpha: a.alpha,
        epsilon: a.epsilon,
        k: a.k.unwrap_or(1),
        seed: a.seed,
        restarts: a.restarts,
        ..ObjectiveConfig::default()
    };
    let mut text = String::new();
    let outcome: PartitionOutcome = match a.sweep_k {
        Some((lo, hi)) => {
            let (entries, best) = sweep_k(&g, &prices, &cfg, lo..=hi).map_err(user)?;
            writeln!(text, "{:>4}  {:>12}  {:>8}", "k", "objective", "NGM").unwrap();
            for e in &entries {
                writeln!(
                    text,
                    "{:>4}  {:>12}  {:>8}",
                    e.k,
                    rational::format_fixed(&e.outcome.objective, 4),
                    rational::format_fixed(&e.ngm, 4)
                )
                .unwrap();
            }
            writeln!(text, "best k: {}", entries[best].k).unwrap();
            entries[best].outcome.clone()
        }
        None => partition_graph(&g, &prices, &cfg).map_err(user)?,
    };
    let p = &outcome.partition;
    let model = InfraModel { compute_floor: !a.no_compute_floor, shared_databases: a.shared_databases };
    let report = model.report(&g, p, &prices).map_err(|e| Failure::Internal(e.to_string()))?;
    let ngm = compute_ngm(&g, p, true).map_or_else(|_| "-".to_string(), |q| rational::format_fixed(&q, 4));
    let names = g.names();
    let doc = PartitionDoc {
        k: p.k(),
        assignment: p.by_name(&names).into_iter().map(|(n, i)| (n.to_string(), i)).collect(),
        objective: outcome.objective,
        seed: outcome.seed,
    };
    files.push(("partition.json", to_json(&doc)?));
    files.push(("infra_report.json", to_json(&report)?));
    out.write(&files)?;

    writeln!(text, "k: {}", p.k()).unwrap();
    writeln!(text, "objective: {}", rational::format(&outcome.objective)).unwrap();
    writeln!(text, "edge_cut: {}", rational::format(&edge_cut(&g, p))).unwrap();
    writeln!(text, "NGM: {ngm}").unwrap();
    text.push_str(&partition_table(p, &report));
    print!("{text}");
    Ok(())
}

fn partition_table(p: &PartitionSet, report: &PartitionInfraReport) -> String {
    let sizes = p.sizes();
    let mut s = format!("{:>9}  {:>5}  {}\n", "partition", "size", "infra (ec, s3, db, ca)");
    for pi in &report.per_partition {
        writeln!(s, "{:>9}  {:>5}  {}", pi.partition, sizes[pi.partition], pi.factor).unwrap();
    }
    writeln!(s, "{:>9}  {:>5}  {}  cost {}", "total", p.len(), report.total, rational::format(&report.total_cost))
        .unwrap();
    writeln!(
        s,
        "{:>9}  {:>5}  {}  cost {}",
        "monolith",
        p.len(),
        report.monolith_baseline,
        rational::format(&report.baseline_cost)
    )
    .unwrap();
    s
}

#[derive(Serialize)]
struct EvaluationDoc<'a> {
    dataset: &'a str,
    #[serde(flatten)]
    report: &'a monopart::EvaluationReport,
}

fn cmd_evaluate(out: &Output, a: &EvaluateArgs) -> Outcome<()> {
    let graph_path = a.graph.clone().unwrap_or_else(|| out.path("graph.json"));
    let g = load_graph(&graph_path)?;
    let part_path = a.partition.clone().unwrap_or_else(|| out.path("partition.json"));
    let p = load_partition(&part_path, &g)?;
    let truth = match &a.truth {
        Some(t) => Some(GroundTruth::parse(&read(t)?).map_err(|e| user(format!("{}: {e}", t.display())))?),
        None => None,
    };
    let prices = load_prices(a.prices.as_deref())?;
    let report = evaluate(&g, &p, &g.dependencies, truth.as_ref(), &prices).map_err(|e| {
        let what = a.truth.as_deref().map_or(part_path.clone(), Path::to_path_buf);
        user(format!("{}: {e}", what.display()))
    })?;
    out.write(&[("evaluation.json", to_json(EvaluationDoc { dataset: &a.dataset, report: &report })?)])?;
    print!("{}", render_table(&[(&a.dataset, &report)]));
    Ok(())
}

fn cmd_generate(out: &Output, a: &GenerateArgs) -> Outcome<()> {
    let cfg = GeneratorConfig {
        classes: a.classes,
        clusters: a.clusters,
        p_in: a.p_in,
        p_out: a.p_out,
        resources_per_cluster: a.resources_per_cluster,
        resource_kinds: a.resource_kinds.clone(),
        seed: a.seed,
        package: a.package.clone(),
    };
    let fx = generate(&cfg).map_err(user)?;
    out.write(&[
        ("deps.xml", write_dependency_xml(&fx.dependencies)),
        ("infra.yaml", write_infra_yaml(&fx.manifest)),
        ("truth.yaml", fx.truth.to_yaml()),
    ])?;
    println!(
        "classes: {}\ndependencies: {}\nresources: {}",
        a.classes,
        fx.dependencies.len(),
        fx.manifest.resources.len()
    );
    Ok(())
}

fn cmd_dot(out: &Output, a: &DotArgs) -> Outcome<()> {
    let g = load_graph(&a.graph.clone().unwrap_or_else(|| out.path("graph.json")))?;
    let p = a.partition.as_deref().map(|path| load_partition(path, &g)).transpose()?;
    out.write(&[("graph.dot", to_dot(&g, p.as_ref()))])?;
    println!("wrote {}", out.path("graph.dot").display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = Output { dir: cli.out.clone().unwrap_or_else(|| PathBuf::from("out")), force: cli.force };
    let result = match &cli.command {
        Command::Ingest(a) => cmd_ingest(&out, a),
        Command::Partition(a) => cmd_partition(&out, a),
        Command::Evaluate(a) => cmd_evaluate(&out, a),
        Command::Generate(a) => cmd_generate(&out, a),
        Command::Dot(a) => cmd_dot(&out, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
