//! Grids of scenario runs: one output directory per run, then a single
//! aggregation pass over the finished directories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{PlatoonError, Result};
use crate::metrics::{compute_metrics, MetricsSummary, CSV_COLUMNS};
use crate::simulator::logs::{write_events, write_trajectory};
use crate::simulator::{render_config, run_scenario, RunArtifact, ScenarioConfig};

pub const CONFIG_ECHO: &str = "config.echo";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const METRICS_FILE: &str = "metrics.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Arrival rates (veh/h).
    pub volumes: Vec<f64>,
    pub mprs: Vec<f64>,
    pub repetitions: usize,
    pub base: ScenarioConfig,
    pub out_dir: PathBuf,
    /// Repetition `r` uses seed `base.seed + r·seed_stride`.
    pub seed_stride: u64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn new(volumes: Vec<f64>, mprs: Vec<f64>, repetitions: usize, base: ScenarioConfig, out_dir: PathBuf) -> Self {
        Self {
            volumes,
            mprs,
            repetitions,
            base,
            out_dir,
            seed_stride: 1,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.volumes.is_empty() || self.mprs.is_empty() {
            return Err(PlatoonError::Config("sweep needs at least one volume and one mpr".into()));
        }
        if self.repetitions == 0 {
            return Err(PlatoonError::Config("sweep needs at least one repetition".into()));
        }
        if self.workers == Some(0) {
            return Err(PlatoonError::Config("workers must be positive".into()));
        }
        for cell in self.cells() {
            cell.config.validate()?;
        }
        Ok(())
    }

    /// Every run of the grid, volume-major.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &volume in &self.volumes {
            for &mpr in &self.mprs {
                for rep in 0..self.repetitions {
                    let config = ScenarioConfig {
                        volume,
                        mpr,
                        seed: self.base.seed.wrapping_add(rep as u64 * self.seed_stride),
                        ..self.base.clone()
                    };
                    out.push(SweepCell {
                        volume,
                        mpr,
                        rep,
                        dir: self.out_dir.join(run_dir_name(volume, mpr, rep)),
                        config,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub volume: f64,
    pub mpr: f64,
    pub rep: usize,
    pub dir: PathBuf,
    pub config: ScenarioConfig,
}

pub fn run_dir_name(volume: f64, mpr: f64, rep: usize) -> String {
    format!("v{volume}_m{mpr}_r{rep}")
}

/// Metrics file contents: the summary plus the run's completion status.
pub fn metrics_text(metrics: &MetricsSummary, artifact: &RunArtifact) -> String {
    let mut s = metrics.to_key_value();
    let _ = writeln!(s, "run_complete={}", artifact.complete);
    let _ = writeln!(s, "end_time_s={}", artifact.end_time);
    let _ = writeln!(s, "faults={}", artifact.faults().count());
    s
}

/// Runs one scenario and writes its output directory.
pub fn run_to_dir(config: &ScenarioConfig, dir: &Path) -> Result<(RunArtifact, MetricsSummary)> {
    let artifact = run_scenario(config)?;
    let metrics = compute_metrics(config, &artifact.rows, &artifact.events)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_ECHO), render_config(config))?;
    write_trajectory(BufWriter::new(fs::File::create(dir.join(TRAJECTORY_FILE))?), &artifact.rows)?;
    write_events(BufWriter::new(fs::File::create(dir.join(EVENTS_FILE))?), &artifact.events)?;
    fs::write(dir.join(METRICS_FILE), metrics_text(&metrics, &artifact))?;
    Ok((artifact, metrics))
}

/// Runs every cell (concurrently) and aggregates. Failed runs are reported
/// by the aggregation as incomplete rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<AggregateRow>> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir)?;
    let cells = spec.cells();
    let run_all = || {
        cells.par_iter().for_each(|cell| {
            if let Err(e) = run_to_dir(&cell.config, &cell.dir) {
                let _ = fs::create_dir_all(&cell.dir);
                let _ = fs::write(cell.dir.join("error.txt"), format!("{e}\n"));
            }
        })
    };
    match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PlatoonError::Config(format!("cannot start {n} workers: {e}")))?
            .install(run_all),
        None => run_all(),
    }
    aggregate_sweep(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub volume: f64,
    pub mpr: f64,
    pub rep: usize,
    pub seed: u64,
    /// `ok`, `incomplete` (time cap hit) or `missing` (no usable metrics).
    pub status: &'static str,
    pub metrics: Option<MetricsSummary>,
}

fn read_cell(cell: &SweepCell) -> AggregateRow {
    let text = fs::read_to_string(cell.dir.join(METRICS_FILE)).ok();
    let metrics = text.as_deref().and_then(|t| MetricsSummary::parse_key_value(t).ok());
    let complete = text.as_deref().is_some_and(|t| t.lines().any(|l| l.trim() == "run_complete=true"));
    let status = match (&metrics, complete) {
        (None, _) => "missing",
        (Some(_), false) => "incomplete",
        (Some(_), true) => "ok",
    };
    AggregateRow {
        volume: cell.volume,
        mpr: cell.mpr,
        rep: cell.rep,
        seed: cell.config.seed,
        status,
        metrics,
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn metric_values(m: &MetricsSummary) -> [f64; 4] {
    [m.attd, m.fuel_per_100km, m.accel_decel_cycles_per_vehicle, m.idling_time_per_vehicle]
}

const METRIC_NAMES: [&str; 4] = ["attd", "fuel", "cycles", "idling"];

/// One `(volume, mpr)` cell of the improvement table.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub volume: f64,
    pub mpr: f64,
    pub runs: usize,
    /// Mean and standard deviation per metric, in `attd, fuel, cycles, idling` order.
    pub stats: [(f64, f64); 4],
    /// Percent reduction against the mean of the 0% MPR runs at the same
    /// volume (mean and standard deviation over repetitions); NaN without a
    /// reference.
    pub improvement: [(f64, f64); 4],
}

pub fn improvement_table(rows: &[AggregateRow]) -> Vec<ImprovementRow> {
    let key = |v: f64, m: f64| (v.to_bits(), m.to_bits());
    let mut groups: BTreeMap<(u64, u64), Vec<&AggregateRow>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows {
        let k = key(r.volume, r.mpr);
        if !groups.contains_key(&k) {
            order.push((r.volume, r.mpr));
        }
        groups.entry(k).or_default().push(r);
    }
    let values = |group: &[&AggregateRow], idx: usize| -> Vec<f64> {
        group
            .iter()
            .filter(|r| r.status == "ok")
            .filter_map(|r| r.metrics.as_ref().map(|m| metric_values(m)[idx]))
            .collect()
    };
    order
        .into_iter()
        .map(|(volume, mpr)| {
            let group = &groups[&key(volume, mpr)];
            let reference = groups.get(&key(volume, 0.0));
            let mut stats = [(0.0, 0.0); 4];
            let mut improvement = [(f64::NAN, f64::NAN); 4];
            for idx in 0..4 {
                let vals = values(group, idx);
                stats[idx] = mean_std(&vals);
                if let Some(reference) = reference {
                    let (base, _) = mean_std(&values(reference, idx));
                    if base.is_finite() && base != 0.0 {
                        // linear in the run values, so the cell mean gives the mean
                        // improvement and a reference cell scores exactly zero
                        let (mean, std) = stats[idx];
                        improvement[idx] = ((base - mean) / base * 100.0, std / base.abs() * 100.0);
                    }
                }
            }
            ImprovementRow {
                volume,
                mpr,
                runs: values(group, 0).len(),
                stats,
                improvement,
            }
        })
        .collect()
}

/// Reads every run directory of the grid and writes `aggregate.csv` and
/// `improvement.csv` into the sweep directory.
pub fn aggregate_sweep(spec: &SweepSpec) -> Result<Vec<AggregateRow>> {
    let rows: Vec<AggregateRow> = spec.cells().iter().map(read_cell).collect();
    let csv_err = |e: csv::Error| PlatoonError::Io(e.to_string());

    let mut w = csv::Writer::from_path(spec.out_dir.join("aggregate.csv")).map_err(csv_err)?;
    let mut header = vec!["volume", "mpr", "rep", "seed", "status"];
    header.extend(CSV_COLUMNS);
    w.write_record(&header).map_err(csv_err)?;
    for r in &rows {
        let mut rec = vec![r.volume.to_string(), r.mpr.to_string(), r.rep.to_string(), r.seed.to_string(), r.status.to_string()];
        match &r.metrics {
            Some(m) => rec.extend(m.csv_values()),
            None => rec.extend(CSV_COLUMNS.iter().map(|_| String::new())),
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(spec.out_dir.join("improvement.csv")).map_err(csv_err)?;
    let mut header = vec!["volume".to_string(), "mpr".to_string(), "runs".to_string()];
    for name in METRIC_NAMES {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_std"));
    }
    for name in METRIC_NAMES {
        header.push(format!("{name}_improvement_pct"));
        header.push(format!("{name}_improvement_std"));
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in improvement_table(&rows) {
        let mut rec = vec![r.volume.to_string(), r.mpr.to_string(), r.runs.to_string()];
        for (m, s) in r.stats.iter().chain(r.improvement.iter()) {
            rec.push(m.to_string());
            rec.push(s.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(rows)
}
