//! `platoon-lab`: analysis, planning and simulation front end.

mod problem;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use platoon_core::equilibrium::solve_vstar;
use platoon_core::metrics::compute_metrics;
use platoon_core::models::linearize;
use platoon_core::ocp::{audit_plan, solve_ocp};
use platoon_core::platoon_dynamics::{
    build_platoon, controllability_condition, controllability_margin, is_controllable_numeric, stability_report,
    DEFAULT_RANK_TOL, DEFAULT_ZERO_TOL,
};
use platoon_core::simulator::config::apply_config;
use platoon_core::simulator::logs::{read_events, read_trajectory};
use platoon_core::simulator::{parse_config, ScenarioConfig};
use platoon_core::sweep::{
    aggregate_sweep, run_sweep, run_to_dir, SweepSpec, CONFIG_ECHO, EVENTS_FILE, TRAJECTORY_FILE,
};

/// Grid resolution (m/s) of the equilibrium-velocity scan.
const VSTAR_GRID: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "platoon-lab", version, about = "Mixed-platoon intersection lab")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (`[section]` headers, `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra setting `section.key=value`, applied after the file; repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stability and controllability of the linearized 1+n platoon.
    Analyze {
        /// Equilibrium velocity to linearize at; defaults to v*.
        #[arg(long)]
        v_eq: Option<f64>,
        /// Number of followers; defaults to the platoon size at v*.
        #[arg(long)]
        n: Option<usize>,
        /// Print `key,value` rows instead of text.
        #[arg(long)]
        csv: bool,
    },
    /// Optimal equilibrium velocity, spacing and passing count.
    Vstar,
    /// Solve one trajectory problem.
    Plan {
        /// Problem description file.
        problem: PathBuf,
        /// Transcription nodes.
        #[arg(long, default_value_t = platoon_core::ocp::DEFAULT_NODES)]
        nodes: usize,
    },
    /// Run one scenario into the output directory.
    Simulate,
    /// Run a volume × MPR grid and aggregate it.
    Sweep {
        /// Comma-separated arrival rates (veh/h).
        #[arg(long, value_delimiter = ',', required = true)]
        volumes: Vec<f64>,
        /// Comma-separated CAV fractions.
        #[arg(long, value_delimiter = ',', required = true)]
        mprs: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Concurrent runs; defaults to every available core.
        #[arg(long)]
        workers: Option<usize>,
        /// Only rebuild aggregate.csv and improvement.csv from existing runs.
        #[arg(long)]
        aggregate_only: bool,
    },
    /// Recompute metrics from a run directory.
    Metrics {
        run_dir: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    for set in &common.sets {
        let (key, value) = set.split_once('=').with_context(|| format!("--set {set:?}: expected SECTION.KEY=VALUE"))?;
        let (section, key) =
            key.trim().split_once('.').with_context(|| format!("--set {set:?}: expected SECTION.KEY=VALUE"))?;
        cfg = apply_config(&cfg, &format!("[{section}]\n{key} = {}\n", value.trim()))
            .with_context(|| format!("--set {set:?}"))?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common) -> Result<&Path> {
    common.out.as_deref().context("--out <dir> is required for this subcommand")
}

fn analyze(cfg: &ScenarioConfig, v_eq: Option<f64>, n: Option<usize>, csv: bool) -> Result<()> {
    let eq = solve_vstar(&cfg.ovm, cfg.timing.green, VSTAR_GRID, cfg.bounds.v_max)?;
    let v_eq = v_eq.unwrap_or(eq.v_star);
    let n = n.unwrap_or_else(|| eq.platoon_size());
    let coeffs = linearize(&cfg.ovm, v_eq)?;
    let model = build_platoon(coeffs, n)?;
    let report = stability_report(&model, DEFAULT_ZERO_TOL)?;
    let numeric = is_controllable_numeric(&model, DEFAULT_RANK_TOL)?;
    let mut rows: Vec<(String, String)> = vec![
        ("v_eq".into(), v_eq.to_string()),
        ("n".into(), n.to_string()),
        ("alpha1".into(), coeffs.alpha1.to_string()),
        ("alpha2".into(), coeffs.alpha2.to_string()),
        ("alpha3".into(), coeffs.alpha3.to_string()),
        ("zero_eigenvalues".into(), report.zero_count.to_string()),
        ("lyapunov_stable".into(), report.is_lyapunov_stable.to_string()),
        ("max_real_part_nonzero".into(), report.max_real_part_nonzero.to_string()),
        ("controllability_margin".into(), controllability_margin(&coeffs).to_string()),
        ("controllable_condition".into(), controllability_condition(&coeffs).to_string()),
        ("controllable_numeric".into(), numeric.to_string()),
    ];
    for (k, ev) in report.eigenvalues.iter().enumerate() {
        rows.push((format!("eigenvalue_{k}"), format!("{}{:+}i", ev.re, ev.im)));
    }
    if csv {
        println!("key,value");
        for (k, v) in rows {
            println!("{k},{v}");
        }
    } else {
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            println!("{k:<width$}  {v}");
        }
    }
    Ok(())
}

fn vstar(cfg: &ScenarioConfig) -> Result<()> {
    let eq = solve_vstar(&cfg.ovm, cfg.timing.green, VSTAR_GRID, cfg.bounds.v_max)?;
    println!("v_star={}", eq.v_star);
    println!("d_star={}", eq.d_star);
    println!("n_max={}", eq.n_max);
    println!("t_green={}", eq.t_green);
    println!("degenerate={}", eq.degenerate);
    Ok(())
}

fn plan(cfg: &ScenarioConfig, problem_path: &Path, nodes: usize, out: &Path) -> Result<()> {
    let text = fs::read_to_string(problem_path).with_context(|| format!("reading {}", problem_path.display()))?;
    let problem = problem::parse_problem(&text, cfg).with_context(|| format!("in {}", problem_path.display()))?;
    let plan = solve_ocp(&problem, nodes)?;
    let audit = audit_plan(&problem, &plan, 10, 5e-3);
    fs::create_dir_all(out)?;
    fs::write(out.join("plan.csv"), problem::plan_csv(&plan))?;
    let summary = format!(
        "cost={} status={} audit={} max_violation={} iterations={}",
        plan.cost,
        plan.solver_status.as_str(),
        if audit.passed { "pass" } else { "fail" },
        audit.max_violation,
        plan.iterations
    );
    fs::write(out.join("summary.txt"), format!("{summary}\n"))?;
    println!("{summary}");
    if !audit.passed {
        eprintln!("audit: {}", audit.worst);
    }
    Ok(())
}

fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<()> {
    let (artifact, metrics) = run_to_dir(cfg, out)?;
    print!("{}", metrics.to_key_value());
    println!("run_complete={}", artifact.complete);
    let faults = artifact.faults().count();
    if faults > 0 {
        eprintln!("warning: {faults} simulation fault(s) recorded in {}", out.join(EVENTS_FILE).display());
    }
    Ok(())
}

fn metrics(run_dir: &Path) -> Result<()> {
    let read = |name: &str| {
        let p = run_dir.join(name);
        fs::read(&p).with_context(|| format!("reading {}", p.display()))
    };
    let cfg = parse_config(std::str::from_utf8(&read(CONFIG_ECHO)?)?).context("in config.echo")?;
    let rows = read_trajectory(read(TRAJECTORY_FILE)?.as_slice()).context("in trajectory.csv")?;
    let events = read_events(read(EVENTS_FILE)?.as_slice()).context("in events.csv")?;
    print!("{}", compute_metrics(&cfg, &rows, &events)?.to_key_value());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Analyze { v_eq, n, csv } => analyze(&load_config(common)?, v_eq, n, csv),
        Command::Vstar => vstar(&load_config(common)?),
        Command::Plan { problem, nodes } => plan(&load_config(common)?, &problem, nodes, out_dir(common)?),
        Command::Simulate => simulate(&load_config(common)?, out_dir(common)?),
        Command::Sweep { volumes, mprs, reps, workers, aggregate_only } => {
            let mut spec = SweepSpec::new(volumes, mprs, reps, load_config(common)?, out_dir(common)?.to_path_buf());
            spec.workers = workers;
            spec.validate()?;
            let rows = if aggregate_only { aggregate_sweep(&spec)? } else { run_sweep(&spec)? };
            let bad = rows.iter().filter(|r| r.status != "ok").count();
            println!("runs={} ok={} incomplete_or_missing={bad}", rows.len(), rows.len() - bad);
            println!("aggregate={}", spec.out_dir.join("aggregate.csv").display());
            println!("improvement={}", spec.out_dir.join("improvement.csv").display());
            if bad > 0 {
                bail!("{bad} run(s) did not complete");
            }
            Ok(())
        }
        Command::Metrics { run_dir } => metrics(&run_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
