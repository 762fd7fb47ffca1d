//! `simulate`, `verify`, `estimate` and `report`. Exit codes: 0 success,
//! 1 check failure or missing runs, 2 schema violation or I/O, 3 numeric failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::artifacts;
use super::config::{OpConfig, MAX_SEED, ScenarioConfig, ScenarioKind};
use super::report::{CheckOutcome, RunReport, Verdict};
use super::{apply_overrides, brownian, registry, sha256_hex, simulate, verify, HarnessError};
use crate::operators::obs_admissibility_constant;
use crate::semilinear::{a_tau, det_observability_constant, gronwall_upsilon, h_margin, observability_experiment, threshold_root};
use crate::stochastic::exact_controllability_test;

#[derive(Parser, Debug)]
#[command(name = "wellposed", version, about = "Stochastic well-posed linear systems laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the scenario and write trajectory and moment tables.
    Simulate(RunArgs),
    /// Run every check listed in the scenario.
    Verify(RunArgs),
    /// Constants table, plus the Lipschitz sweep for semilinear scenarios.
    Estimate(RunArgs),
    /// Collect the reports under a runs directory into one document.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Scenario file, or the name of a shipped scenario.
    #[arg(long)]
    config: String,
    /// Output directory; defaults to the scenario's, then `runs/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the scenario seed.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
    seed_override: Option<u64>,
    /// Replaces every path count in the scenario.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads, overriding the scenario value; 0 uses the global pool. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ReportArgs {
    /// Runs directory holding one subdirectory per scenario.
    #[arg(long, default_value = "runs")]
    config: PathBuf,
    /// Where to write `report.md` and `summary.svg`; defaults to the runs directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for uniformity; ignored.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Accepted for uniformity; ignored.
    #[arg(long)]
    paths: Option<usize>,
    /// Accepted for uniformity; ignored.
    #[arg(long)]
    threads: Option<usize>,
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => with_config(&a, cmd_simulate),
        Command::Verify(a) => with_config(&a, cmd_verify),
        Command::Estimate(a) => with_config(&a, cmd_estimate),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() {
    std::process::exit(run(std::env::args_os()));
}

type Handler = fn(&ScenarioConfig, &Path) -> Result<i32, HarnessError>;

fn with_config(a: &RunArgs, f: Handler) -> Result<i32, HarnessError> {
    let mut cfg = registry::load(&a.config)?;
    apply_overrides(&mut cfg, a.seed_override, a.paths);
    let out = a
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("runs").join(&cfg.name));
    std::fs::create_dir_all(&out)?;
    let threads = a.threads.unwrap_or(cfg.numerics.threads);
    let start = Instant::now();
    let code = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Io(e.to_string()))?;
        pool.install(|| f(&cfg, &out))?
    } else {
        f(&cfg, &out)?
    };
    let timing = serde_json::json!({ "seconds": start.elapsed().as_secs_f64(), "threads": threads });
    write(&out, "timing.json", &format!("{timing}\n"))?;
    Ok(code)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), HarnessError> {
    std::fs::write(dir.join(name), text).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn base_report(cfg: &ScenarioConfig, command: &str) -> RunReport {
    RunReport {
        scenario: cfg.name.clone(),
        command: command.into(),
        config_hash: sha256_hex(cfg.to_toml().as_bytes()),
        seed: cfg.seed,
        paths: cfg.numerics.paths,
        checks: Vec::new(),
        artifacts: Vec::new(),
    }
}

fn cmd_simulate(cfg: &ScenarioConfig, out: &Path) -> Result<i32, HarnessError> {
    let sim = simulate(cfg)?;
    let n = &cfg.numerics;
    let mut report = base_report(cfg, "simulate");
    write(out, "trajectories.csv", &artifacts::trajectories_csv(&sim.states, n.csv_paths, n.csv_nodes))?;
    write(out, "moments.csv", &artifacts::moments_csv(&sim.states, n.csv_nodes))?;
    report.artifacts = vec!["trajectories.csv".into(), "moments.csv".into()];
    if let Some(y) = &sim.outputs {
        write(out, "outputs.csv", &artifacts::trajectories_csv(y, n.csv_paths, n.csv_nodes))?;
        report.artifacts.push("outputs.csv".into());
    }
    report.artifacts.push("report.json".into());
    write(out, "report.json", &report.to_json())?;
    println!("simulated {} ({} paths) into {}", cfg.name, sim.states.paths(), out.display());
    Ok(0)
}

fn cmd_verify(cfg: &ScenarioConfig, out: &Path) -> Result<i32, HarnessError> {
    let report = verify(cfg)?;
    let mut text = String::new();
    for c in &report.checks {
        let _ = writeln!(text, "{}", c.line());
    }
    let _ = writeln!(text, "{} {}", report.verdict().label(), cfg.name);
    print!("{text}");
    write(out, "verify.txt", &text)?;
    write(out, "report.json", &report.to_json())?;
    Ok(if report.verdict() == Verdict::Fail { 1 } else { 0 })
}

fn cmd_estimate(cfg: &ScenarioConfig, out: &Path) -> Result<i32, HarnessError> {
    let mut report = base_report(cfg, "estimate");
    let mut rows: Vec<(String, f64)> = Vec::new();
    if cfg.kind == ScenarioKind::Semilinear {
        let (spec, s) = cfg.semilinear()?;
        if s.sweep.is_empty() {
            return Err(HarnessError::Schema("estimate needs a nonempty [semilinear] sweep".into()));
        }
        let gamma = obs_admissibility_constant(&spec.gen, &spec.obs, s.tau)?;
        let ups = gronwall_upsilon(&spec.gen, spec.lipschitz, s.tau)?;
        let det = det_observability_constant(&spec.gen, &spec.obs, s.tau)?.value;
        let a = a_tau(gamma, ups, s.tau);
        rows.extend([
            ("tau".into(), s.tau),
            ("lipschitz".into(), spec.lipschitz),
            ("gamma".into(), gamma),
            ("upsilon".into(), ups),
            ("delta_det".into(), det),
            ("a_tau".into(), a),
            ("h".into(), h_margin(det, a, spec.lipschitz)),
            ("theta_hat".into(), threshold_root(&spec.gen, &spec.obs, s.tau)?),
        ]);
        let w = brownian(cfg)?;
        let exp = observability_experiment(cfg.semilinear_family()?, s.tau, &s.sweep, s.pairs, cfg.seed, &w)?;
        if let Some(r) = exp.rows.iter().find(|r| r.lipschitz == spec.lipschitz) {
            rows.push(("kappa_hat".into(), r.kappa));
            rows.push(("kappa_se".into(), r.kappa_se));
        }
        write(out, "sweep.csv", &artifacts::sweep_csv(&exp))?;
        write(out, "sweep.svg", &artifacts::sweep_svg(&exp))?;
        report.artifacts.extend(["sweep.csv".into(), "sweep.svg".into()]);
    } else {
        let gen = cfg.generator()?;
        let tau = cfg.numerics.horizon;
        rows.push(("tau".into(), tau));
        if cfg.observation != OpConfig::None {
            let cop = cfg.observation(gen.dim())?;
            rows.push(("gamma".into(), obs_admissibility_constant(&gen, &cop, tau)?));
            rows.push(("delta_det".into(), det_observability_constant(&gen, &cop, tau)?.value));
        }
        if cfg.control != OpConfig::None {
            let r = exact_controllability_test(&cfg.linear_spec()?, tau)?;
            rows.push(("gramian_sigma_min".into(), r.sigma_min));
            rows.push(("gramian_sigma_max".into(), r.sigma_max));
        }
    }
    write(out, "constants.csv", &artifacts::constants_csv(&rows))?;
    report.artifacts.insert(0, "constants.csv".into());
    report.artifacts.push("report.json".into());
    write(out, "report.json", &report.to_json())?;
    for (q, v) in &rows {
        println!("{q:<18} {v}");
    }
    Ok(0)
}

/// Role of each acceptance criterion in the report table.
pub const CRITERIA: [&str; 16] = [
    "Ito isometry for adapted integrands",
    "Ornstein-Uhlenbeck variance",
    "Strong order of the exponential Euler scheme",
    "Stochastic convolution admissibility, uniform in the integrand",
    "Lax-Phillips semigroup equivalence",
    "Fixed point and linearity of the input-to-state map",
    "Variation-of-constants formula for perturbed systems",
    "Perturbed semigroup: iterative and exponential routes",
    "Exactness of the Dirichlet lift",
    "Delay system and its product-space realization",
    "Controllability Gramian",
    "Deterministic observability constant",
    "Observability threshold for semilinear systems",
    "Well-posedness constant for semilinear systems",
    "Domain discrimination by the Yosida extension",
    "Byte-identical verify reports",
];

fn aggregate(vs: impl Iterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Pass;
    for v in vs {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => out = Verdict::Inconclusive,
            Verdict::Pass => {}
        }
    }
    out
}

fn cmd_report(a: &ReportArgs) -> Result<i32, HarnessError> {
    let root = &a.config;
    let out = a.out.clone().unwrap_or_else(|| root.clone());
    let mut reports: Vec<RunReport> = Vec::new();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", root.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("report.json").is_file())
        .collect();
    dirs.sort();
    for d in &dirs {
        let text = std::fs::read_to_string(d.join("report.json"))?;
        let r: RunReport = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Schema(format!("{}: {e}", d.join("report.json").display())))?;
        if r.command == "verify" {
            reports.push(r);
        }
    }
    let mut by_criterion: BTreeMap<u8, Vec<(&str, &CheckOutcome)>> = BTreeMap::new();
    let mut extras: Vec<(&str, &CheckOutcome)> = Vec::new();
    for r in &reports {
        for c in &r.checks {
            match c.criterion {
                Some(k) => by_criterion.entry(k).or_default().push((&r.scenario, c)),
                None => extras.push((&r.scenario, c)),
            }
        }
    }
    let mut md = String::from("# Verification report\n\n");
    let _ = writeln!(md, "Runs read from `{}`: {}.\n", root.display(), reports.len());
    md.push_str("| # | Result checked | Verdict | Scenarios | Outcomes |\n|---|---|---|---|---|\n");
    let mut summary = Vec::new();
    let mut missing = 0;
    for (i, role) in CRITERIA.iter().enumerate() {
        let k = (i + 1) as u8;
        match by_criterion.get(&k) {
            Some(list) => {
                let v = aggregate(list.iter().map(|(_, c)| c.verdict));
                let mut scen: Vec<&str> = list.iter().map(|(s, _)| *s).collect();
                scen.dedup();
                let passed = list.iter().filter(|(_, c)| c.verdict == Verdict::Pass).count();
                let _ = writeln!(md, "| {k} | {role} | {} | {} | {passed}/{} pass |", v.label(), scen.join(", "), list.len());
                summary.push((k, Some(v)));
            }
            None => {
                missing += 1;
                let _ = writeln!(md, "| {k} | {role} | MISSING | | no run found |");
                summary.push((k, None));
            }
        }
    }
    md.push_str("\n## Outcomes\n\n| Scenario | Check | lhs | relation | rhs | tolerance | provenance | verdict |\n|---|---|---|---|---|---|---|---|\n");
    for (k, list) in &by_criterion {
        for (s, c) in list {
            let _ = writeln!(md, "| {s} | [{k}] {} | {:e} | {:?} | {:e} | {:e} | {:?} | {} |", c.name, c.lhs, c.relation, c.rhs, c.tolerance, c.provenance, c.verdict.label());
        }
    }
    for (s, c) in &extras {
        let _ = writeln!(md, "| {s} | {} | {:e} | {:?} | {:e} | {:e} | {:?} | {} |", c.name, c.lhs, c.relation, c.rhs, c.tolerance, c.provenance, c.verdict.label());
    }
    std::fs::create_dir_all(&out)?;
    write(&out, "report.md", &md)?;
    write(&out, "summary.svg", &artifacts::summary_svg(&summary))?;
    let failed = summary.iter().any(|(_, v)| *v == Some(Verdict::Fail));
    if missing > 0 {
        eprintln!("{missing} criteria have no run");
    }
    println!("wrote {}", out.join("report.md").display());
    Ok(if failed || missing > 0 { 1 } else { 0 })
}
