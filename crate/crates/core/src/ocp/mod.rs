//! Fuel-optimal trajectory planning for a "1+n" platoon: one controlled
//! leader followed by `n` OVM-driven vehicles, approaching a stop line.
//!
//! The continuous problem (fuel integral plus terminal penalties, safety
//! headway, speed/acceleration bounds, terminal position box) is transcribed
//! by [`transcription`] and solved by an augmented-Lagrangian loop around
//! L-BFGS.

pub mod audit;
pub mod lbfgs;
pub mod transcription;

use crate::error::{PlatoonError, Result};
use crate::models::{FuelParams, OvmParams};
use lbfgs::{minimize, LbfgsOptions};
use transcription::Transcription;

pub use audit::{audit_plan, AuditReport};

pub const DEFAULT_NODES: usize = 60;

/// Position (m) and velocity (m/s) of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub x: f64,
    pub v: f64,
}

impl Kinematics {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcpBounds {
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    /// Minimum bumper-to-bumper gap (m).
    pub d_safe: f64,
    /// Largest admissible terminal distance short of the target (m).
    pub x0_max: f64,
}

impl Default for OcpBounds {
    fn default() -> Self {
        Self {
            v_max: 15.0,
            a_min: -6.0,
            a_max: 3.0,
            d_safe: 2.0,
            x0_max: 10.0,
        }
    }
}

/// Predicted front position of the vehicle ahead of the leader, sampled
/// every `dt` from `t0` and linear in between. Past the last sample it
/// continues at `v_end`; before the first it is held.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadPath {
    pub t0: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub v_end: f64,
    /// Bumper gap the leader keeps to this vehicle (m).
    pub min_gap: f64,
}

impl LeadPath {
    pub fn position(&self, t: f64) -> f64 {
        let s = ((t - self.t0) / self.dt).max(0.0);
        let last = self.x.len() - 1;
        let k = s.floor() as usize;
        if k >= last {
            return self.x[last] + self.v_end * (t - self.t0 - last as f64 * self.dt).max(0.0);
        }
        let f = s - k as f64;
        self.x[k] + f * (self.x[k + 1] - self.x[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcpProblem {
    pub t0: f64,
    pub tf: f64,
    /// Leader first, then followers in order.
    pub initial_state: Vec<Kinematics>,
    pub x_tar: f64,
    pub v_star: f64,
    pub w1: f64,
    pub w2: f64,
    pub bounds: OcpBounds,
    pub ovm: OvmParams,
    pub fuel: FuelParams,
    /// Vehicle ahead of the leader and the gap to keep behind it.
    pub lead_path: Option<LeadPath>,
}

impl OcpProblem {
    /// Problem with default weights (1e5, 1e4), bounds and model constants.
    pub fn new(t0: f64, tf: f64, initial_state: Vec<Kinematics>, x_tar: f64, v_star: f64) -> Self {
        Self {
            t0,
            tf,
            initial_state,
            x_tar,
            v_star,
            w1: 1e5,
            w2: 1e4,
            bounds: OcpBounds::default(),
            ovm: OvmParams::default(),
            fuel: FuelParams::default(),
            lead_path: None,
        }
    }

    /// Number of followers.
    pub fn n(&self) -> usize {
        self.initial_state.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        let bad = |m: String| Err(PlatoonError::Argument(m));
        if self.initial_state.is_empty() {
            return bad("initial_state must contain the leader".into());
        }
        if !(self.tf > self.t0) || !self.t0.is_finite() || !self.tf.is_finite() {
            return bad(format!("need tf > t0, got t0={} tf={}", self.t0, self.tf));
        }
        if !(b.a_min < 0.0 && b.a_max > 0.0) {
            return bad(format!("need a_min < 0 < a_max, got [{}, {}]", b.a_min, b.a_max));
        }
        if !(b.v_max >= 0.0) || !(b.d_safe > 0.0) || !(b.x0_max >= 0.0) {
            return bad(format!("invalid bounds {b:?}"));
        }
        if ![self.x_tar, self.v_star, self.w1, self.w2].iter().all(|x| x.is_finite()) {
            return bad("target and weights must be finite".into());
        }
        for (i, k) in self.initial_state.iter().enumerate() {
            if !k.x.is_finite() || !k.v.is_finite() {
                return bad(format!("vehicle {i} has a non-finite initial state"));
            }
        }
        for i in 1..self.initial_state.len() {
            let gap = self.initial_state[i - 1].x - self.initial_state[i].x - self.ovm.l_veh;
            if !(gap > b.d_safe) {
                return bad(format!(
                    "initial gap {gap:.3} m ahead of vehicle {i} is not above d_safe {}",
                    b.d_safe
                ));
            }
        }
        if let Some(lp) = &self.lead_path {
            if lp.x.is_empty()
                || !(lp.dt > 0.0)
                || !(lp.min_gap > 0.0)
                || !lp.x.iter().chain([&lp.t0, &lp.v_end, &lp.min_gap]).all(|v| v.is_finite())
            {
                return bad("lead path needs samples, a positive step and gap, and finite values".into());
            }
        }
        self.ovm.validate()?;
        self.fuel.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIter,
    Infeasible,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIter => "max-iter",
            SolverStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPlan {
    /// Uniform node times from `t0` to `tf`.
    pub times: Vec<f64>,
    /// Leader acceleration at each node; linear in between.
    pub u: Vec<f64>,
    /// Kinematics of all vehicles at each node.
    pub states: Vec<Vec<Kinematics>>,
    /// Objective with the exact fuel model.
    pub cost: f64,
    pub solver_status: SolverStatus,
    /// Largest constraint value on the transcription grid (0 if feasible).
    pub max_violation: f64,
    pub iterations: usize,
}

impl TrajectoryPlan {
    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn tf(&self) -> f64 {
        *self.times.last().expect("plan has nodes")
    }

    /// Planned leader acceleration at time `t`; zero after the horizon.
    pub fn accel_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.u[0];
        }
        if t >= self.times[n - 1] {
            return 0.0;
        }
        let h = (self.times[n - 1] - self.times[0]) / (n - 1) as f64;
        let k = (((t - self.times[0]) / h).floor() as usize).min(n - 2);
        let theta = (t - self.times[k]) / h;
        self.u[k] + (self.u[k + 1] - self.u[k]) * theta
    }

    pub fn is_converged(&self) -> bool {
        self.solver_status == SolverStatus::Converged
    }
}

/// `w1·(x0 − x_tar)² + w2·Σ(v_i − v*)²`.
pub fn terminal_cost(state_at_tf: &[Kinematics], x_tar: f64, v_star: f64, w1: f64, w2: f64) -> f64 {
    let pos = state_at_tf.first().map_or(0.0, |k| w1 * (k.x - x_tar).powi(2));
    pos + state_at_tf.iter().map(|k| w2 * (k.v - v_star).powi(2)).sum::<f64>()
}

/// Instantaneous platoon fuel rate (ml/s): the leader at acceleration `u`,
/// followers at their OVM acceleration.
pub fn running_cost(platoon: &[Kinematics], u: f64, ovm: &OvmParams, fuel: &FuelParams) -> f64 {
    let mut total = 0.0;
    for (i, k) in platoon.iter().enumerate() {
        let a = if i == 0 {
            u
        } else {
            ovm.accel(platoon[i - 1].x - k.x, k.v, 1.0)
        };
        total += fuel.rate(k.v, a);
    }
    total
}

/// Solver tuning.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Largest RK4 step inside one node interval (s).
    pub max_substep: f64,
    /// Softplus width for the fuel nonsmoothness.
    pub smoothing: f64,
    /// Constraint tolerance on the transcription grid.
    pub feas_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Inner stationarity test on the scaled merit function.
    pub grad_tol: f64,
    /// Inner stall test: relative merit decrease over ten iterations.
    pub stall_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_substep: 0.25,
            smoothing: 1e-2,
            feas_tol: 1e-4,
            max_outer: 20,
            max_inner: 300,
            grad_tol: 1e-5,
            stall_tol: 1e-7,
        }
    }
}

/// Constant leader acceleration reaching `x_tar` at `tf`, clipped to the
/// acceleration bounds, with the speed held once it would leave `[0, v_max]`.
pub fn feasibility_seed(problem: &OcpProblem, nodes: usize) -> Vec<f64> {
    let b = &problem.bounds;
    let lead = problem.initial_state[0];
    let span = problem.tf - problem.t0;
    let a = (2.0 * (problem.x_tar - lead.x - lead.v * span) / (span * span)).clamp(b.a_min, b.a_max);
    let h = span / (nodes - 1) as f64;
    let mut u = vec![a; nodes];
    let mut v = lead.v;
    for k in 0..nodes - 1 {
        let next = v + a * h;
        if next > b.v_max || next < 0.0 {
            let target = next.clamp(0.0, b.v_max);
            // reach the bound at the end of this interval, then hold
            let uk = (2.0 * (target - v) / h - u[k]).clamp(b.a_min, b.a_max);
            u[k + 1] = uk;
            for rest in u.iter_mut().skip(k + 2) {
                *rest = 0.0;
            }
            if k + 2 < nodes {
                u[k + 1] = 0.0;
                u[k] = ((target - v) / h).clamp(b.a_min, b.a_max);
            }
            break;
        }
        v = next;
    }
    u
}

fn max_violation(g: &[f64]) -> f64 {
    g.iter().fold(0.0_f64, |m, &x| m.max(x))
}

fn build_plan(tr: &Transcription, u: Vec<f64>, status: SolverStatus, iterations: usize) -> TrajectoryPlan {
    let p = tr.problem;
    let sweep = tr.forward(&u, true);
    let cost = tr.objective_of(&sweep);
    let g = tr.constraints_of(&u, &sweep);
    let d = tr.dim();
    let nveh = p.initial_state.len();
    let times = (0..tr.nodes).map(|k| p.t0 + k as f64 * tr.h).collect();
    let states = (0..tr.nodes)
        .map(|k| {
            let y = &sweep.states[k * tr.substeps * d..];
            (0..nveh).map(|i| Kinematics::new(y[2 * i], y[2 * i + 1])).collect()
        })
        .collect();
    TrajectoryPlan {
        times,
        u,
        states,
        cost,
        solver_status: status,
        max_violation: max_violation(&g),
        iterations,
    }
}

/// Whether the leader can end inside the terminal box at all.
fn terminal_box_reachable(p: &OcpProblem) -> bool {
    let b = &p.bounds;
    let lead = p.initial_state[0];
    let span = p.tf - p.t0;
    let dist_lo = p.x_tar - b.x0_max - lead.x;
    let dist_hi = p.x_tar - lead.x;
    // farthest: accelerate to v_max, then hold
    let t_up = ((b.v_max - lead.v) / b.a_max).clamp(0.0, span);
    let far = lead.v * t_up + 0.5 * b.a_max * t_up * t_up + b.v_max.max(lead.v) * (span - t_up);
    // nearest: brake to a stop
    let t_dn = (lead.v / -b.a_min).min(span);
    let near = lead.v * t_dn + 0.5 * b.a_min * t_dn * t_dn;
    far >= dist_lo - 1e-9 && near <= dist_hi + 1e-9
}

/// Solve with the default options.
pub fn solve_ocp(problem: &OcpProblem, transcription_nodes: usize) -> Result<TrajectoryPlan> {
    solve_ocp_with(problem, transcription_nodes, &SolveOptions::default())
}

pub fn solve_ocp_with(
    problem: &OcpProblem,
    transcription_nodes: usize,
    opts: &SolveOptions,
) -> Result<TrajectoryPlan> {
    problem.validate()?;
    if transcription_nodes < 10 {
        return Err(PlatoonError::Argument(format!(
            "transcription_nodes must be at least 10, got {transcription_nodes}"
        )));
    }
    let tr = Transcription::new(problem, transcription_nodes, opts.max_substep, opts.smoothing);
    let seed = feasibility_seed(problem, transcription_nodes);
    if !terminal_box_reachable(problem) {
        return Ok(build_plan(&tr, seed, SolverStatus::Infeasible, 0));
    }

    let seed_sweep = tr.forward(&seed, false);
    let fuel_seed = seed_sweep.states[tr.total_substeps() * tr.dim() + 2 * problem.initial_state.len()];
    let scale = 1.0 / fuel_seed.abs().max(1.0);

    let m = tr.constraint_count();
    let mut mu = vec![0.0; m];
    let mut rho = 100.0;
    let mut u = seed.clone();
    let mut prev_violation = f64::INFINITY;
    let mut iterations = 0;
    let mut status = SolverStatus::MaxIter;
    let inner = LbfgsOptions {
        max_iter: opts.max_inner,
        grad_tol: opts.grad_tol,
        stall_tol: opts.stall_tol,
        ..Default::default()
    };
    for _ in 0..opts.max_outer {
        let res = minimize(
            |x, grad| tr.merit(x, &mu, rho, scale, grad).0,
            u.clone(),
            &inner,
        );
        iterations += res.iterations;
        u = res.x;
        let sweep = tr.forward(&u, false);
        let g = tr.constraints_of(&u, &sweep);
        let viol = max_violation(&g);
        for (m_c, g_c) in mu.iter_mut().zip(&g) {
            *m_c = (*m_c + rho * g_c).max(0.0);
        }
        if viol <= opts.feas_tol && (res.converged || res.stalled) {
            status = SolverStatus::Converged;
            break;
        }
        if viol > 0.25 * prev_violation {
            rho = (rho * 10.0).min(1e9);
        }
        prev_violation = viol;
    }

    let mut plan = build_plan(&tr, u, status, iterations);
    if plan.max_violation > 1e-3 {
        plan.solver_status = SolverStatus::Infeasible;
    }
    // never return something worse than a feasible seed
    let seed_plan = build_plan(&tr, seed, SolverStatus::Converged, iterations);
    let plan_usable = plan.max_violation <= opts.feas_tol;
    if seed_plan.max_violation <= opts.feas_tol && (!plan_usable || seed_plan.cost < plan.cost) {
        return Ok(seed_plan);
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_vstar;
    use crate::models::equilibrium_spacing;

    fn cruise_problem(n: usize, v: f64, span: f64) -> OcpProblem {
        let ovm = OvmParams::default();
        let d = equilibrium_spacing(&ovm, v).unwrap();
        let x0 = -v * span;
        let init = (0..=n).map(|i| Kinematics::new(x0 - i as f64 * d, v)).collect();
        OcpProblem::new(0.0, span, init, 0.0, v)
    }

    fn random_problem(seed: u64) -> OcpProblem {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let ovm = OvmParams::default();
        let v0 = rng.random_range(6.0..14.0);
        let d = equilibrium_spacing(&ovm, v0).unwrap();
        let x0 = -rng.random_range(200.0..300.0);
        let init = (0..3)
            .map(|i| Kinematics::new(x0 - i as f64 * d, v0 + rng.random_range(-0.5..0.5)))
            .collect();
        let tf = -x0 / rng.random_range(9.0..13.0);
        OcpProblem::new(0.0, tf, init, 0.0, 12.325554055573207)
    }

    #[test]
    fn terminal_cost_values() {
        let on = [Kinematics::new(0.0, 12.0), Kinematics::new(-20.0, 12.0)];
        assert_eq!(terminal_cost(&on, 0.0, 12.0, 1e5, 1e4), 0.0);
        let short = [Kinematics::new(-1.0, 12.0)];
        assert_eq!(terminal_cost(&short, 0.0, 12.0, 1e5, 1e4), 1e5);
        let mixed = [Kinematics::new(-0.5, 11.0), Kinematics::new(-30.0, 13.5)];
        // 1e5·0.25 + 1e4·(1 + 2.25)
        assert!((terminal_cost(&mixed, 0.0, 12.0, 1e5, 1e4) - 57_500.0).abs() < 1e-9);
    }

    #[test]
    fn running_cost_values() {
        let ovm = OvmParams::default();
        let fuel = FuelParams::default();
        let idle = [Kinematics::new(0.0, 0.0), Kinematics::new(-10.0, 0.0), Kinematics::new(-20.0, 0.0)];
        // followers stand with V_des(10) < 0, so their OVM accel is negative
        assert!((running_cost(&idle, 0.0, &ovm, &fuel) - 3.0 * 0.666).abs() < 1e-12);
        let one = [Kinematics::new(0.0, 10.0)];
        assert_eq!(running_cost(&one, 1.0, &ovm, &fuel), fuel.rate(10.0, 1.0));
        let s = solve_vstar(&ovm, 30.0, 0.001, 15.0).unwrap();
        let cruise: Vec<_> = (0..3).map(|i| Kinematics::new(-(i as f64) * s.d_star, s.v_star)).collect();
        let want = 3.0 * fuel.rate(s.v_star, 0.0);
        assert!((running_cost(&cruise, 0.0, &ovm, &fuel) - want).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let p = random_problem(seed);
            let tr = Transcription::new(&p, 30, 0.25, 1e-2);
            let mut u = feasibility_seed(&p, 30);
            for (k, x) in u.iter_mut().enumerate() {
                *x += 0.3 * ((k as f64 + seed as f64) * 0.7).sin();
            }
            let (_, g) = tr.objective_grad(&u);
            for k in [0, 7, 15, 29] {
                let eps = 1e-5;
                let mut up = u.clone();
                up[k] += eps;
                let mut dn = u.clone();
                dn[k] -= eps;
                let fd = (tr.objective_grad(&up).0 - tr.objective_grad(&dn).0) / (2.0 * eps);
                let rel = (fd - g[k]).abs() / fd.abs().max(1.0);
                assert!(rel < 1e-4, "seed {seed} k {k}: fd {fd} adj {}", g[k]);
            }
        }
    }

    #[test]
    fn merit_gradient_matches_finite_differences() {
        let p = random_problem(11);
        let tr = Transcription::new(&p, 20, 0.25, 1e-2);
        let mut u = feasibility_seed(&p, 20);
        u[3] = 3.4;
        u[10] = -6.5;
        let mu: Vec<f64> = (0..tr.constraint_count()).map(|c| (c % 7) as f64 * 0.1).collect();
        let mut g = vec![0.0; u.len()];
        tr.merit(&u, &mu, 50.0, 0.1, &mut g);
        let mut scratch = vec![0.0; u.len()];
        for k in 0..u.len() {
            let eps = 1e-6;
            let mut up = u.clone();
            up[k] += eps;
            let mut dn = u.clone();
            dn[k] -= eps;
            let fd = (tr.merit(&up, &mu, 50.0, 0.1, &mut scratch).0
                - tr.merit(&dn, &mu, 50.0, 0.1, &mut scratch).0)
                / (2.0 * eps);
            assert!((fd - g[k]).abs() <= 1e-4 * fd.abs().max(1.0), "k {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn equilibrium_cruise_is_certified() {
        let p = cruise_problem(2, 12.0, 20.0);
        let tr = Transcription::new(&p, 40, 0.25, 1e-2);
        let cruise_cost = tr.exact_objective(&vec![0.0; 40]);
        let plan = solve_ocp(&p, 40).unwrap();
        assert!(plan.is_converged());
        assert!(plan.cost <= cruise_cost + 1e-9, "{} > {}", plan.cost, cruise_cost);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        let p = OcpProblem::new(0.0, 5.0, vec![Kinematics::new(-300.0, 8.0)], 0.0, 12.0);
        let plan = solve_ocp(&p, 20).unwrap();
        assert_eq!(plan.solver_status, SolverStatus::Infeasible);
    }

    #[test]
    fn invalid_problem_rejected() {
        let p = OcpProblem::new(0.0, 10.0, vec![Kinematics::new(0.0, 8.0), Kinematics::new(-6.0, 8.0)], 0.0, 12.0);
        assert!(matches!(solve_ocp(&p, 20), Err(PlatoonError::Argument(_))));
        let p = OcpProblem::new(0.0, 10.0, vec![Kinematics::new(-100.0, 8.0)], 0.0, 12.0);
        assert!(solve_ocp(&p, 5).is_err());
    }

    #[test]
    fn random_instances_pass_audit() {
        for seed in 0..4 {
            let p = random_problem(seed);
            let plan = solve_ocp(&p, DEFAULT_NODES).unwrap();
            let report = audit_plan(&p, &plan, 10, 5e-3);
            if plan.is_converged() {
                assert!(report.passed, "seed {seed}: {report:?}");
                assert!(report.follower_velocity_deviation <= 1e-3);
            }
        }
    }

    /// Vehicle ahead that waits at `x_stop` until `t_go`, then accelerates at 1.5 m/s².
    fn stop_and_go(x_stop: f64, t_go: f64) -> LeadPath {
        let dt = 0.1;
        let x = (0..=600)
            .map(|k| {
                let tau = (k as f64 * dt - t_go).max(0.0);
                let ramp = tau.min(10.0);
                x_stop + 0.75 * ramp * ramp + 15.0 * (tau - ramp)
            })
            .collect();
        LeadPath { t0: 0.0, dt, x, v_end: 15.0, min_gap: 2.0 }
    }

    #[test]
    fn lead_path_interpolates_and_extrapolates() {
        let lp = LeadPath { t0: 1.0, dt: 0.5, x: vec![0.0, 1.0, 3.0], v_end: 4.0, min_gap: 2.0 };
        assert_eq!(lp.position(0.0), 0.0);
        assert_eq!(lp.position(1.25), 0.5);
        assert_eq!(lp.position(1.75), 2.0);
        assert_eq!(lp.position(3.0), 3.0 + 4.0);
    }

    #[test]
    fn merit_gradient_with_lead_path() {
        let mut p = random_problem(5);
        let lead = p.initial_state[0];
        p.lead_path = Some(stop_and_go(lead.x + 60.0, 4.0));
        let tr = Transcription::new(&p, 20, 0.25, 1e-2);
        let u = feasibility_seed(&p, 20);
        let sweep = tr.forward(&u, false);
        let g = tr.constraints_of(&u, &sweep);
        let kinds = tr.constraint_kinds();
        let active = g.iter().zip(&kinds).any(|(v, k)| *k == transcription::ConstraintKind::LeadHeadway && *v > 0.0);
        assert!(active, "the seed should run into the vehicle ahead");
        let mu = vec![0.3; tr.constraint_count()];
        let mut grad = vec![0.0; u.len()];
        tr.merit(&u, &mu, 20.0, 0.1, &mut grad);
        let mut scratch = vec![0.0; u.len()];
        for k in 0..u.len() {
            let eps = 1e-6;
            let mut up = u.clone();
            up[k] += eps;
            let mut dn = u.clone();
            dn[k] -= eps;
            let fd = (tr.merit(&up, &mu, 20.0, 0.1, &mut scratch).0 - tr.merit(&dn, &mu, 20.0, 0.1, &mut scratch).0)
                / (2.0 * eps);
            assert!((fd - grad[k]).abs() <= 1e-4 * fd.abs().max(1.0), "k {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn plan_keeps_distance_to_vehicle_ahead() {
        let init = vec![Kinematics::new(-250.0, 12.0), Kinematics::new(-275.0, 12.0)];
        let mut p = OcpProblem::new(0.0, 30.0, init, 0.0, 12.325554055573207);
        p.lead_path = Some(stop_and_go(-100.0, 18.0));
        let plan = solve_ocp(&p, DEFAULT_NODES).unwrap();
        assert!(plan.is_converged(), "{:?}", plan.solver_status);
        let report = audit_plan(&p, &plan, 10, 5e-3);
        assert!(report.passed, "{report:?}");
        let mut free = p.clone();
        free.lead_path = None;
        let unconstrained = solve_ocp(&free, DEFAULT_NODES).unwrap();
        assert!(!audit_plan(&p, &unconstrained, 10, 5e-3).passed, "the vehicle ahead must matter");
    }
}
