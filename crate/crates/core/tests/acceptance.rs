//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use platoon_core::coordinator::ControllerKind;
use platoon_core::equilibrium::solve_vstar;
use platoon_core::metrics::MetricsSummary;
use platoon_core::models::{LinearCoeffs, OvmParams};
use platoon_core::ocp::transcription::Transcription;
use platoon_core::ocp::{audit_plan, feasibility_seed, solve_ocp, Kinematics, OcpProblem, DEFAULT_NODES};
use platoon_core::platoon_dynamics::{build_platoon, eigenvalues, is_controllable_numeric, DEFAULT_RANK_TOL};
use platoon_core::simulator::{run_scenario, ScenarioConfig};
use platoon_core::sweep::{run_sweep, run_to_dir, SweepSpec, EVENTS_FILE, TRAJECTORY_FILE};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<f64, String> {
    let secs = start.elapsed().as_secs_f64();
    check(start.elapsed() < budget, || format!("took {secs:.1} s, budget {} s", budget.as_secs()))?;
    Ok(secs)
}

/// Largest distance between two spectra under a greedy nearest matching.
fn spectrum_distance(expected: &[Complex<f64>], actual: &[Complex<f64>]) -> f64 {
    if expected.len() != actual.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; actual.len()];
    let mut worst = 0.0_f64;
    for e in expected {
        let (j, d) = actual
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, a)| (j, (a - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("same length");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Roots of `λ² + α2·λ + α1`.
fn quadratic_roots(a1: f64, a2: f64) -> [Complex<f64>; 2] {
    let disc = Complex::new(a2 * a2 - 4.0 * a1, 0.0).sqrt();
    [(-a2 + disc) / 2.0, (-a2 - disc) / 2.0]
}

fn platoon_spectrum(c: LinearCoeffs, n: usize) -> Vec<Complex<f64>> {
    eigenvalues(&build_platoon(c, n).unwrap().a_matrix).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (a1, a2, a3) = (rng.random_range(0.01..3.0), rng.random_range(0.01..3.0), rng.random_range(-2.0..2.0));
        let [r1, r2] = quadratic_roots(a1, a2);
        let expected = [Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), r1, r2];
        worst = worst.max(spectrum_distance(&expected, &platoon_spectrum(LinearCoeffs::new(a1, a2, a3), 1)));
    }
    check(worst <= 1e-9, || format!("worst eigenvalue error {worst:e}"))?;
    let secs = within_budget(start, Duration::from_secs(1))?;
    Ok(format!("100 draws, worst error {worst:.1e}, {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_rec = 0.0_f64;
    for _ in 0..200 {
        let c = LinearCoeffs::new(rng.random_range(0.01..3.0), rng.random_range(0.01..3.0), rng.random_range(-2.0..2.0));
        let roots = quadratic_roots(c.alpha1, c.alpha2);
        let mut prev = platoon_spectrum(c, 1);
        for n in 1..=10 {
            let spectrum = if n == 1 { prev.clone() } else { platoon_spectrum(c, n) };
            let rho = spectrum.iter().map(|l| l.norm()).fold(0.0, f64::max);
            let tol = 1e-9 * rho.max(1.0);
            let zeros = spectrum.iter().filter(|l| l.norm() <= tol).count();
            check(zeros == 2, || format!("{c:?} n={n}: {zeros} zero eigenvalues"))?;
            let max_re = spectrum.iter().filter(|l| l.norm() > tol).map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
            check(max_re < 0.0, || format!("{c:?} n={n}: nonzero eigenvalue with real part {max_re}"))?;
            if n > 1 {
                let mut expected = prev.clone();
                expected.extend(roots);
                let d = spectrum_distance(&expected, &spectrum);
                worst_rec = worst_rec.max(d);
                check(d <= 1e-8, || format!("{c:?} n={n}: recursion off by {d:e}"))?;
            }
            prev = spectrum;
        }
    }
    let secs = within_budget(start, Duration::from_secs(10))?;
    Ok(format!("200 draws x n=1..10, recursion error {worst_rec:.1e}, {secs:.2} s"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut draws = 0;
    let mut negative = 0;
    while draws < 1000 {
        let c = LinearCoeffs::new(rng.random_range(0.01..3.0), rng.random_range(0.01..3.0), rng.random_range(-3.0..3.0));
        let margin = c.alpha1 - c.alpha2 * c.alpha3 + c.alpha3 * c.alpha3;
        if margin.abs() < 1e-3 {
            continue;
        }
        draws += 1;
        negative += usize::from(margin < 0.0);
        let n = rng.random_range(1..=6);
        let numeric = is_controllable_numeric(&build_platoon(c, n).unwrap(), DEFAULT_RANK_TOL).unwrap();
        check(numeric, || format!("{c:?} n={n}: margin {margin:.4} but numeric verdict uncontrollable"))?;
    }
    let violation = build_platoon(LinearCoeffs::new(1.0, 2.0, 1.0), 2).unwrap();
    check(!is_controllable_numeric(&violation, DEFAULT_RANK_TOL).unwrap(), || {
        "(1, 2, 1) with n = 2 reported controllable".into()
    })?;
    let secs = within_budget(start, Duration::from_secs(30))?;
    Ok(format!("1000 draws ({negative} with negative margin) agree, (1,2,1) uncontrollable, {secs:.2} s"))
}

/// Front-to-front equilibrium spacing from the inverted OVM.
fn spacing_oracle(p: &OvmParams, v: f64) -> f64 {
    p.l_veh + (((v - p.v1) / p.v2).atanh() + p.c2) / p.c1
}

fn criterion_4() -> Outcome {
    let p = OvmParams::default();
    let v_max = 15.0;
    let lo = (p.v1 - p.v2).max(0.0);
    let hi = (p.v1 + p.v2).min(v_max);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut k = 1;
    loop {
        let v = lo + k as f64 * 1e-3;
        if v >= hi {
            break;
        }
        let r = v / spacing_oracle(&p, v);
        if r > best.0 {
            best = (r, v);
        }
        k += 1;
    }
    let sols: Vec<_> = [10.0, 20.0, 40.0].iter().map(|&g| solve_vstar(&p, g, 1e-3, v_max).unwrap()).collect();
    let s = sols[1];
    check((s.v_star - best.1).abs() <= 5e-3, || format!("v* {} vs grid oracle {}", s.v_star, best.1))?;
    check(
        sols.iter().all(|x| x.v_star.to_bits() == s.v_star.to_bits() && x.d_star.to_bits() == s.d_star.to_bits()),
        || "v* depends on the green time".into(),
    )?;
    let h = 1e-5;
    let d = spacing_oracle(&p, s.v_star);
    let dd = (spacing_oracle(&p, s.v_star + h) - spacing_oracle(&p, s.v_star - h)) / (2.0 * h);
    let foc = (d - dd * s.v_star).abs() / d;
    check(foc < 1e-4, || format!("first-order residual {foc:e}"))?;
    Ok(format!(
        "v*={:.6} (oracle {:.3}), d*={:.4}, residual {foc:.1e}, identical for green 10/20/40 s",
        s.v_star, best.1, s.d_star
    ))
}

/// Minimum-cost leader trajectory on an exact (t, v, x) lattice: time step
/// `dt`, speed step `dv`, and piecewise-constant acceleration, so positions
/// stay on multiples of `dv·dt/2`.
fn dp_lattice_cost(p: &OcpProblem, dt: f64, dv: f64) -> f64 {
    let b = &p.bounds;
    let steps = ((p.tf - p.t0) / dt).round() as usize;
    let nv = (b.v_max / dv).round() as usize + 1;
    let dx = dv * dt / 2.0;
    let v0 = (p.initial_state[0].v / dv).round() as usize;
    let np = (b.v_max * (p.tf - p.t0) / dx).ceil() as usize + 2;
    let max_up = (b.a_max * dt / dv).floor() as isize;
    let max_down = (-b.a_min * dt / dv).floor() as isize;
    let fuel = &p.fuel;
    // fuel over one step, composite Simpson on 40 panels
    let stage = |i: usize, j: usize| -> f64 {
        let (va, vb) = (i as f64 * dv, j as f64 * dv);
        let a = (vb - va) / dt;
        let m = 40;
        let mut s = 0.0;
        for q in 0..=m {
            let w = if q == 0 || q == m { 1.0 } else if q % 2 == 1 { 4.0 } else { 2.0 };
            s += w * fuel.rate(va + (vb - va) * q as f64 / m as f64, a);
        }
        s * dt / (3.0 * m as f64)
    };
    let table: Vec<Vec<f64>> = (0..nv)
        .map(|i| {
            (0..nv)
                .map(|j| {
                    let d = j as isize - i as isize;
                    if d > max_up || -d > max_down {
                        f64::INFINITY
                    } else {
                        stage(i, j)
                    }
                })
                .collect()
        })
        .collect();
    let mut cur = vec![f64::INFINITY; nv * np];
    cur[v0 * np] = 0.0;
    let mut next = vec![f64::INFINITY; nv * np];
    for _ in 0..steps {
        next.fill(f64::INFINITY);
        for i in 0..nv {
            let row = &cur[i * np..(i + 1) * np];
            let j_lo = (i as isize - max_down).max(0) as usize;
            let j_hi = ((i as isize + max_up) as usize).min(nv - 1);
            for (pos, &c) in row.iter().enumerate() {
                if !c.is_finite() {
                    continue;
                }
                for j in j_lo..=j_hi {
                    let q = pos + i + j;
                    if q >= np {
                        break;
                    }
                    let val = c + table[i][j];
                    let slot = &mut next[j * np + q];
                    if val < *slot {
                        *slot = val;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let x_start = p.initial_state[0].x;
    let mut best = f64::INFINITY;
    for i in 0..nv {
        for pos in 0..np {
            let c = cur[i * np + pos];
            if !c.is_finite() {
                continue;
            }
            let x = x_start + pos as f64 * dx;
            if x > p.x_tar || x < p.x_tar - b.x0_max {
                continue;
            }
            let v = i as f64 * dv;
            best = best.min(c + p.w1 * (x - p.x_tar).powi(2) + p.w2 * (v - p.v_star).powi(2));
        }
    }
    best
}

fn random_two_follower_problem(seed: u64) -> OcpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ovm = OvmParams::default();
    let v0: f64 = rng.random_range(6.0..14.0);
    let gap = spacing_oracle(&ovm, v0.min(ovm.v1 + 0.99 * ovm.v2));
    let x0 = -rng.random_range(150.0..300.0);
    let init = (0..3)
        .map(|i| {
            let jitter = if i == 0 { 0.0 } else { rng.random_range(-3.0..3.0) };
            Kinematics::new(x0 - i as f64 * gap + jitter, v0 + rng.random_range(-1.0..1.0))
        })
        .collect();
    let tf = -x0 / rng.random_range(8.0..13.0);
    OcpProblem::new(0.0, tf, init, 0.0, 12.325554055573207)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut converged = 0;
    let mut worst_audit = 0.0_f64;
    let mut worst_follow = 0.0_f64;
    for seed in 0..20 {
        let p = random_two_follower_problem(1000 + seed);
        let plan = solve_ocp(&p, DEFAULT_NODES).map_err(|e| format!("seed {seed}: {e}"))?;
        if !plan.is_converged() {
            continue;
        }
        converged += 1;
        let report = audit_plan(&p, &plan, 10, 5e-3);
        worst_audit = worst_audit.max(report.max_violation);
        worst_follow = worst_follow.max(report.follower_velocity_deviation);
        check(report.passed, || format!("seed {seed}: converged plan fails audit: {}", report.worst))?;
        check(report.follower_velocity_deviation <= 1e-3, || {
            format!("seed {seed}: follower deviation {}", report.follower_velocity_deviation)
        })?;
    }
    check(converged >= 10, || format!("only {converged}/20 instances converged"))?;

    let mut worst_grad = 0.0_f64;
    for seed in 0..5 {
        let p = random_two_follower_problem(2000 + seed);
        let nodes = 30;
        let tr = Transcription::new(&p, nodes, 0.25, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = feasibility_seed(&p, nodes).iter().map(|a| a + rng.random_range(-0.3..0.3)).collect();
        let (_, g) = tr.objective_grad(&u);
        let scale = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for k in 0..u.len() {
            let eps = 1e-6;
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[k] += eps;
            dn[k] -= eps;
            let fd = (tr.objective_grad(&up).0 - tr.objective_grad(&dn).0) / (2.0 * eps);
            let rel = (fd - g[k]).abs() / g[k].abs().max(1e-3 * scale);
            worst_grad = worst_grad.max(rel);
        }
    }
    check(worst_grad <= 1e-4, || format!("gradient relative error {worst_grad:e}"))?;

    let mut worst_dp = 0.0_f64;
    for &(x0, v0, tf) in &[(-250.0, 12.0, 25.0), (-200.0, 10.0, 20.0), (-300.0, 14.0, 28.0), (-180.0, 8.0, 20.0)] {
        let p = OcpProblem::new(0.0, tf, vec![Kinematics::new(x0, v0)], 0.0, 12.0);
        let plan = solve_ocp(&p, DEFAULT_NODES).map_err(|e| e.to_string())?;
        let dp = dp_lattice_cost(&p, 1.0, 0.1);
        let rel = (plan.cost - dp).abs() / dp;
        if rel > worst_dp.abs() {
            worst_dp = (plan.cost - dp) / dp;
        }
        check(rel <= 0.02, || format!("1+0 ({x0}, {v0}, {tf}): plan {} vs lattice {dp}", plan.cost))?;
    }
    let secs = within_budget(start, Duration::from_secs(300))?;
    Ok(format!(
        "{converged}/20 converged and audited (max violation {worst_audit:.1e}, follower dev {worst_follow:.1e}), \
         gradient error {worst_grad:.1e}, plan vs lattice {:+.2}% at worst, {secs:.1} s",
        worst_dp * 100.0
    ))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn operating_point(controller: ControllerKind, seed: u64) -> ScenarioConfig {
    ScenarioConfig { controller, seed, volume: 750.0, mpr: 0.5, total_vehicles: 100, ..ScenarioConfig::default() }
}

fn five_seed_metrics(controller: ControllerKind) -> Result<Vec<MetricsSummary>, String> {
    (1..=5)
        .map(|seed| {
            let cfg = operating_point(controller, seed);
            let art = run_scenario(&cfg).map_err(|e| e.to_string())?;
            check(art.complete, || format!("{controller:?} seed {seed} hit the time cap"))?;
            let faults = art.faults().count();
            check(faults == 0, || format!("{controller:?} seed {seed}: {faults} faults"))?;
            platoon_core::metrics::compute_metrics(&cfg, &art.rows, &art.events).map_err(|e| e.to_string())
        })
        .collect()
}

struct OperatingPoint {
    none: Vec<MetricsSummary>,
    pcc: Vec<MetricsSummary>,
    mixed: Vec<MetricsSummary>,
    secs: f64,
}

fn operating_point_runs() -> Result<OperatingPoint, String> {
    let start = Instant::now();
    let none = five_seed_metrics(ControllerKind::None)?;
    let pcc = five_seed_metrics(ControllerKind::PccPlus)?;
    let mixed = five_seed_metrics(ControllerKind::MixedPlatoon)?;
    Ok(OperatingPoint { none, pcc, mixed, secs: start.elapsed().as_secs_f64() })
}

fn stat(runs: &[MetricsSummary], f: impl Fn(&MetricsSummary) -> f64) -> (f64, f64) {
    mean_std(&runs.iter().map(f).collect::<Vec<_>>())
}

fn criterion_6(op: &Result<OperatingPoint, String>) -> Outcome {
    let op = op.as_ref().map_err(Clone::clone)?;
    let (attd_n, _) = stat(&op.none, |m| m.attd);
    let (attd_m, _) = stat(&op.mixed, |m| m.attd);
    let (fuel_n, _) = stat(&op.none, |m| m.fuel_per_100km);
    let (fuel_m, _) = stat(&op.mixed, |m| m.fuel_per_100km);
    let (idle_n, _) = stat(&op.none, |m| m.idling_time_per_vehicle);
    let (idle_m, _) = stat(&op.mixed, |m| m.idling_time_per_vehicle);
    let attd_gain = (attd_n - attd_m) / attd_n;
    let fuel_gain = (fuel_n - fuel_m) / fuel_n;
    let summary = format!(
        "ATTD {attd_m:.2} vs {attd_n:.2} s (-{:.1}%), fuel {fuel_m:.2} vs {fuel_n:.2} L/100km (-{:.1}%), \
         idling {idle_m:.2} vs {idle_n:.2} s, {:.0} s",
        attd_gain * 100.0,
        fuel_gain * 100.0,
        op.secs
    );
    check(attd_gain >= 0.10, || format!("ATTD gain too small: {summary}"))?;
    check(fuel_gain >= 0.20, || format!("fuel gain too small: {summary}"))?;
    check(idle_m < 0.25 * idle_n, || format!("idling too high: {summary}"))?;
    check(op.secs < 600.0, || format!("over budget: {summary}"))?;
    Ok(summary)
}

fn criterion_7(op: &Result<OperatingPoint, String>) -> Outcome {
    let op = op.as_ref().map_err(Clone::clone)?;
    let (attd_n, sd_n) = stat(&op.none, |m| m.attd);
    let (attd_p, sd_p) = stat(&op.pcc, |m| m.attd);
    let slack = sd_n.max(sd_p);
    let summary = format!("PCC+ ATTD {attd_p:.2} ± {sd_p:.2} s vs no control {attd_n:.2} ± {sd_n:.2} s");
    check(attd_p <= attd_n + slack, || summary.clone())?;
    Ok(summary)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = ScenarioConfig { controller: ControllerKind::MixedPlatoon, seed: 1, ..ScenarioConfig::default() };
    let spec = SweepSpec::new(vec![600.0, 900.0, 1100.0], vec![0.0, 0.4, 0.7, 1.0], 3, base, dir.path().to_path_buf());
    let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
    let bad: Vec<_> = rows.iter().filter(|r| r.status != "ok").map(|r| (r.volume, r.mpr, r.rep, r.status)).collect();
    check(bad.is_empty(), || format!("runs not ok: {bad:?}"))?;
    let table = platoon_core::sweep::improvement_table(&rows);
    let mut cells = Vec::new();
    let mut negative = Vec::new();
    for r in table.iter().filter(|r| r.mpr >= 0.4) {
        let (attd, fuel) = (r.improvement[0].0, r.improvement[1].0);
        let cell = format!("{}/{}: {attd:.1}%/{fuel:.1}%", r.volume, r.mpr);
        if !(attd >= 0.0 && fuel >= 0.0) {
            negative.push(cell.clone());
        }
        cells.push(cell);
    }
    let summary = format!("ATTD/fuel improvement per volume/mpr: {}", cells.join(", "));
    check(negative.is_empty(), || format!("negative at {}; {summary}", negative.join(", ")))?;
    let secs = within_budget(start, Duration::from_secs(1800))?;
    Ok(format!("{summary}; {secs:.0} s"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = ScenarioConfig { total_vehicles: 40, volume: 900.0, ..ScenarioConfig::default() };
    let mut spec = SweepSpec::new(vec![900.0], vec![0.3, 0.8], 2, base, dir.path().join("sweep"));
    spec.workers = Some(3);
    run_sweep(&spec).map_err(|e| e.to_string())?;
    let read = |d: &std::path::Path| -> Result<(Vec<u8>, Vec<u8>), String> {
        Ok((
            fs::read(d.join(TRAJECTORY_FILE)).map_err(|e| e.to_string())?,
            fs::read(d.join(EVENTS_FILE)).map_err(|e| e.to_string())?,
        ))
    };
    let mut compared = 0;
    for (k, cell) in spec.cells().iter().enumerate() {
        for rerun in 0..2 {
            let solo = dir.path().join(format!("solo_{k}_{rerun}"));
            run_to_dir(&cell.config, &solo).map_err(|e| e.to_string())?;
            check(read(&solo)? == read(&cell.dir)?, || {
                format!("volume {} mpr {} rep {}: logs differ from the concurrent sweep", cell.volume, cell.mpr, cell.rep)
            })?;
            compared += 1;
        }
    }
    Ok(format!("{compared} sequential re-runs byte-identical to 3-worker sweep output"))
}

fn criterion_10() -> Outcome {
    let mut notes = Vec::new();
    for controller in [ControllerKind::None, ControllerKind::PccPlus, ControllerKind::MixedPlatoon] {
        let mut cfg = ScenarioConfig { controller, total_vehicles: 1, mpr: 0.0, ..ScenarioConfig::default() };
        cfg.timing.red = 0.0;
        let art = run_scenario(&cfg).map_err(|e| e.to_string())?;
        let m = platoon_core::metrics::compute_metrics(&cfg, &art.rows, &art.events).map_err(|e| e.to_string())?;
        check(m.attd.abs() <= cfg.step, || format!("{controller:?}: ATTD {}", m.attd))?;
        check(m.idling_time_per_vehicle == 0.0, || format!("{controller:?}: idling {}", m.idling_time_per_vehicle))?;
        notes.push(format!("{}={:.3}", controller.as_str(), m.attd));
    }
    Ok(format!("single vehicle, permanent green: ATTD {} s, idling 0", notes.join(" ")))
}

fn main() {
    // numeric arguments select a subset of criteria
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| only.is_empty() || only.contains(&n);
    let mut failed = 0;
    let mut report = |n: usize, name: &str, run: &dyn Fn() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let line = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(msg)) => format!("criterion {n:>2} PASS  {name}: {msg}"),
            Ok(Err(msg)) => {
                failed += 1;
                format!("criterion {n:>2} FAIL  {name}: {msg}")
            }
            Err(_) => {
                failed += 1;
                format!("criterion {n:>2} FAIL  {name}: panicked")
            }
        };
        println!("{line}");
    };
    report(1, "closed-form spectrum", &criterion_1);
    report(2, "stability property suite", &criterion_2);
    report(3, "controllability suite", &criterion_3);
    report(4, "equilibrium velocity", &criterion_4);
    report(5, "trajectory optimizer honesty", &criterion_5);
    let op = if wanted(6) || wanted(7) {
        catch_unwind(operating_point_runs).unwrap_or_else(|_| Err("operating-point runs panicked".into()))
    } else {
        Err("not run".into())
    };
    report(6, "end-to-end ordering", &|| criterion_6(&op));
    report(7, "benchmark sanity", &|| criterion_7(&op));
    report(8, "sweep shape", &criterion_8);
    report(9, "determinism", &criterion_9);
    report(10, "free-flow zero", &criterion_10);
    if failed > 0 {
        println!("{failed} failed");
        std::process::exit(1);
    }
    println!("all selected criteria passed");
}
