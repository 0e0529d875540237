use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use grng::bench::{self, BenchReport, DEFAULT_ORACLE_CAP};
use grng::datagen::{self, GenSpec};
use grng::hierarchy::{HierarchyConfig, RadiiSchedule, DEFAULT_K_BUDGET};
use grng::io::{self, Format};
use grng::{Dataset, Error, Hierarchy, MetricKind, Result};

/// Exact RNG construction and search over a hierarchy of GRNG layers.
#[derive(Parser)]
#[command(name = "grng", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset file.
    Gen(GenArgs),
    /// Build a hierarchy, optionally check it against brute force, and save it.
    Build(BuildArgs),
    /// Run queries against a saved or freshly built hierarchy.
    Search(SearchArgs),
    /// Build once per radii schedule and write one CSV row each.
    Sweep(SweepArgs),
    /// Export the 1-NN graph, MST, RNG and GG of a small dataset.
    Graphs(GraphsArgs),
    /// Audit a hierarchy's invariants and compare it with brute force.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Source {
    /// Dataset file, or a synthetic spec such as `uniform:1000:2`.
    #[arg(long)]
    dataset: Option<String>,
    /// File format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, default_value = "l2")]
    metric: MetricKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Shape {
    /// Layer count for a geometric schedule from half the sampled diameter.
    #[arg(long, conflicts_with = "radii")]
    layers: Option<usize>,
    /// Explicit radii, coarsest first, ending in 0: `0.4,0.1,0`.
    #[arg(long)]
    radii: Option<String>,
    #[arg(long, default_value_t = DEFAULT_K_BUDGET)]
    kbudget: usize,
}

#[derive(Args)]
struct Outputs {
    #[arg(long)]
    stats_json: Option<PathBuf>,
    #[arg(long)]
    stats_csv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Compare against brute force.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    src: Source,
    #[command(flatten)]
    shape: Shape,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Where to write the snapshot.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    stats: Outputs,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    src: Source,
    #[command(flatten)]
    shape: Shape,
    /// Saved hierarchy; without it one is built from --dataset.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Query file; without it random queries are drawn.
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Neighbor sets as JSON, one array per query.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    stats: Outputs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    src: Source,
    /// Layer counts to try: `2,3,4`.
    #[arg(long)]
    layers: Option<String>,
    /// Radii lists to try, separated by `;`: `0.2,0;0.1,0`.
    #[arg(long)]
    radii: Option<String>,
    #[arg(long, default_value_t = DEFAULT_K_BUDGET)]
    kbudget: usize,
    /// Seeds `seed..seed+repeats`; synthetic data is redrawn per seed.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Random queries per configuration for the search column.
    #[arg(long, default_value_t = 0)]
    count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats_json: Option<PathBuf>,
}

#[derive(Args)]
struct GraphsArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
    /// Directory for knn.txt, mst.txt, rng.txt and gg.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats_json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    src: Source,
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
    /// Report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
enum Verdict {
    Ok,
    OracleFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Build(a) => build(a),
        Cmd::Search(a) => search(a),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Graphs(a) => graphs(a),
        Cmd::Verify(a) => verify(a),
    };
    match res {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::OracleFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_source(src: &Source, seed: u64) -> Result<(Dataset, String)> {
    let text = src
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Config("--dataset is required".into()))?;
    if Path::new(text).exists() {
        let raw = io::load(text, src.format)?;
        let (data, dedup) = raw.dedup();
        if !dedup.removed.is_empty() {
            eprintln!("dropped {} duplicate rows from {text}", dedup.removed.len());
        }
        return Ok((data, text.to_string()));
    }
    let spec = GenSpec::parse(text, seed).map_err(|_| {
        Error::Config(format!("`{text}` is neither a file nor a spec like uniform:1000:2"))
    })?;
    Ok((datagen::generate(&spec)?, format!("{text}@{seed}")))
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{t}` in `{text}`")))
        })
        .collect()
}

fn config(shape: &Shape, seed: u64) -> Result<HierarchyConfig> {
    let radii = match (&shape.radii, shape.layers) {
        (Some(r), _) => RadiiSchedule::explicit(parse_list(r)?),
        (None, Some(l)) => RadiiSchedule::layers(l),
        (None, None) => RadiiSchedule::default(),
    };
    Ok(HierarchyConfig {
        radii,
        k_budget: shape.kbudget,
        seed,
        ..Default::default()
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn emit(report: &BenchReport, out: &Outputs) -> Result<()> {
    if let Some(p) = &out.stats_json {
        write_text(p, &report.to_json()?)?;
    }
    if let Some(p) = &out.stats_csv {
        report
            .write_stats_csv(&mut create(p)?)
            .map_err(|e| Error::Io { path: p.clone(), source: e })?;
    }
    Ok(())
}

fn oracle_verdict(report: &BenchReport) -> Verdict {
    match &report.oracle {
        Some(o) if !o.passed() => {
            eprintln!(
                "oracle mismatch: {} extra, {} missing, {} failed queries; e.g. {}",
                o.extra,
                o.missing,
                o.failed_queries,
                o.sample.join(" ")
            );
            Verdict::OracleFailed
        }
        Some(_) => {
            println!("oracle: exact");
            Verdict::Ok
        }
        None => Verdict::Ok,
    }
}

fn gen(a: GenArgs) -> Result<Verdict> {
    let (data, label) = load_source(&a.src, a.src.seed)?;
    io::save(&data, &a.out, a.src.format)?;
    println!("wrote {} points ({label}, d={}) to {}", data.len(), data.dim(), a.out.display());
    Ok(Verdict::Ok)
}

fn build(a: BuildArgs) -> Result<Verdict> {
    let (data, label) = load_source(&a.src, a.src.seed)?;
    let cap = a.oracle.oracle.then_some(a.oracle.oracle_cap);
    let (h, report) = bench::run_build(&data, &label, config(&a.shape, a.src.seed)?, a.src.metric, cap)?;
    let b = report.build.as_ref().expect("build summary");
    println!(
        "built N={} radii={:?} pivots={:?} edges={} distances={} ({:.1}/point) in {:.2}s",
        data.len(),
        report.radii,
        report.pivots,
        report.edges,
        b.construction_distances,
        b.per_point,
        b.seconds
    );
    if let Some(out) = &a.out {
        h.save(out)?;
    }
    emit(&report, &a.stats)?;
    Ok(oracle_verdict(&report))
}

fn hierarchy_for(src: &Source, shape: &Shape, snapshot: Option<&Path>) -> Result<(Hierarchy, String)> {
    match snapshot {
        Some(p) => Ok((Hierarchy::load(p, Some(src.metric.shared()))?, p.display().to_string())),
        None => {
            let (data, label) = load_source(src, src.seed)?;
            let (h, _) = Hierarchy::build(&data, config(shape, src.seed)?, src.metric.shared())?;
            Ok((h, label))
        }
    }
}

fn search(a: SearchArgs) -> Result<Verdict> {
    let (h, label) = hierarchy_for(&a.src, &a.shape, a.snapshot.as_deref())?;
    let queries = match &a.queries {
        Some(p) => io::load(p, a.src.format)?,
        None => datagen::queries(h.points(), a.count, a.src.seed.wrapping_add(1))?,
    };
    let cap = a.oracle.oracle.then_some(a.oracle.oracle_cap);
    let report = bench::run_search(&h, &label, &queries, cap, a.out.is_some())?;
    let s = report.search.as_ref().expect("search summary");
    println!(
        "{} queries ({} duplicates skipped): mean {:.1} distances, p50 {} p90 {} p99 {} max {}",
        s.queries,
        s.duplicates.len(),
        s.mean,
        s.p50,
        s.p90,
        s.p99,
        s.max
    );
    if let Some(out) = &a.out {
        write_text(out, &serde_json::to_string(&s.neighbors)?)?;
    }
    emit(&report, &a.stats)?;
    Ok(oracle_verdict(&report))
}

fn sweep(a: SweepArgs) -> Result<Verdict> {
    let mut schedules = Vec::new();
    if let Some(l) = &a.layers {
        for v in parse_list(l)? {
            schedules.push(RadiiSchedule::layers(v as usize));
        }
    }
    if let Some(r) = &a.radii {
        for part in r.split(';').filter(|p| !p.trim().is_empty()) {
            schedules.push(RadiiSchedule::explicit(parse_list(part)?));
        }
    }
    if schedules.is_empty() {
        schedules.push(RadiiSchedule::default());
    }
    let base = HierarchyConfig {
        k_budget: a.kbudget,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for seed in a.src.seed..a.src.seed + a.repeats.max(1) {
        let (data, _) = load_source(&a.src, seed)?;
        let queries = match a.count {
            0 => None,
            c => Some(datagen::queries(&data, c, seed.wrapping_add(1))?),
        };
        rows.extend(bench::run_sweep(&data, &schedules, &[seed], &base, a.src.metric, queries.as_ref())?);
    }
    for r in &rows {
        println!("{} seed={} pivots={:?} construction={}", r.label, r.seed, r.pivots, r.construction_distances);
    }
    if let Some(out) = &a.out {
        bench::write_sweep_csv(&rows, &mut create(out)?).map_err(|e| Error::Io { path: out.clone(), source: e })?;
    }
    if let Some(p) = &a.stats_json {
        write_text(p, &serde_json::to_string_pretty(&rows)?)?;
    }
    Ok(Verdict::Ok)
}

fn graphs(a: GraphsArgs) -> Result<Verdict> {
    let (data, label) = load_source(&a.src, a.src.seed)?;
    let (set, report) = bench::run_graphs(&data, &label, a.src.metric, a.oracle_cap)?;
    println!(
        "avg degree: 1nn {:.4} mst {:.4} rng {:.4} gg {:.4}; chain holds: {}",
        report.knn.average, report.mst.average, report.rng.average, report.gg.average, report.chain_holds
    );
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
        for (name, g) in [("knn", &set.knn), ("mst", &set.mst), ("rng", &set.rng), ("gg", &set.gg)] {
            write_text(&dir.join(format!("{name}.txt")), &g.to_edge_list())?;
        }
    }
    if let Some(p) = &a.stats_json {
        write_text(p, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(Verdict::Ok)
}

fn verify(a: VerifyArgs) -> Result<Verdict> {
    let (h, label) = hierarchy_for(&a.src, &a.shape, a.snapshot.as_deref())?;
    let audit = h.validate_with_cap(a.oracle_cap);
    for v in audit.violations.iter().take(20) {
        eprintln!("violation: {v}");
    }
    let diff = if h.len() <= a.oracle_cap {
        let reference = grng::oracle::brute_rng(h.points(), a.src.metric.instance().as_ref());
        Some(h.rng().diff(&reference))
    } else {
        eprintln!("N = {} exceeds the oracle cap; RNG comparison skipped", h.len());
        None
    };
    let exact = diff.as_ref().is_none_or(|d| d.is_empty());
    println!(
        "{label}: {} violations, audited layers {:?}, rng {}",
        audit.violations.len(),
        audit.audited_layers,
        match &diff {
            Some(d) if d.is_empty() => "exact".to_string(),
            Some(d) => format!("{} extra {} missing", d.extra.len(), d.missing.len()),
            None => "not compared".to_string(),
        }
    );
    if let Some(out) = &a.out {
        let json = serde_json::json!({
            "source": label,
            "violations": audit.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "audited_layers": audit.audited_layers,
            "extra": diff.as_ref().map(|d| d.extra.len()),
            "missing": diff.as_ref().map(|d| d.missing.len()),
        });
        write_text(out, &serde_json::to_string_pretty(&json)?)?;
    }
    Ok(if audit.is_clean() && exact { Verdict::Ok } else { Verdict::OracleFailed })
}
