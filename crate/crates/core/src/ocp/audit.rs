//! Independent constraint check for a plan: re-integrates the platoon on a
//! grid finer than the plan's nodes and evaluates every path and terminal
//! constraint there.

use super::{OcpProblem, TrajectoryPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// Largest constraint excess found (0 when everything holds).
    pub max_violation: f64,
    /// Description of the worst offender.
    pub worst: String,
    /// Largest node-wise gap between re-integrated and planned follower velocity.
    pub follower_velocity_deviation: f64,
    pub passed: bool,
}

/// Leader kinematics under a piecewise-linear acceleration, integrated exactly.
fn leader_at(plan: &TrajectoryPlan, x0: f64, v0: f64, t: f64) -> (f64, f64, f64) {
    let n = plan.times.len();
    let h = (plan.tf() - plan.t0()) / (n - 1) as f64;
    let (mut x, mut v) = (x0, v0);
    let rel = (t - plan.t0()).max(0.0);
    let k_end = ((rel / h).floor() as usize).min(n - 2);
    for k in 0..k_end {
        let (a, b) = (plan.u[k], plan.u[k + 1]);
        x += v * h + (2.0 * a + b) * h * h / 6.0;
        v += 0.5 * (a + b) * h;
    }
    let tau = rel - k_end as f64 * h;
    let (a, b) = (plan.u[k_end], plan.u[k_end + 1]);
    let slope = (b - a) / h;
    let xt = x + v * tau + 0.5 * a * tau * tau + slope * tau.powi(3) / 6.0;
    let vt = v + a * tau + 0.5 * slope * tau * tau;
    (xt, vt, a + slope * tau)
}

pub fn audit_plan(problem: &OcpProblem, plan: &TrajectoryPlan, refine: usize, tol: f64) -> AuditReport {
    let b = &problem.bounds;
    let ovm = &problem.ovm;
    let nveh = problem.initial_state.len();
    let nodes = plan.times.len();
    let steps = (nodes - 1) * refine.max(1);
    let dt = (plan.tf() - plan.t0()) / steps as f64;
    let lead0 = problem.initial_state[0];

    let mut worst = (0.0_f64, String::from("none"));
    let mut note = |excess: f64, what: &dyn Fn() -> String| {
        if excess > worst.0 {
            worst = (excess, what());
        }
    };

    let mut xs: Vec<f64> = problem.initial_state.iter().map(|k| k.x).collect();
    let mut vs: Vec<f64> = problem.initial_state.iter().map(|k| k.v).collect();
    let mut deviation = 0.0_f64;

    let accel = |xs: &[f64], vs: &[f64], i: usize| ovm.accel(xs[i - 1] - xs[i], vs[i], 1.0);

    for s in 0..=steps {
        let t = plan.t0() + s as f64 * dt;
        let (lx, lv, la) = leader_at(plan, lead0.x, lead0.v, t);
        xs[0] = lx;
        vs[0] = lv;
        if s % refine.max(1) == 0 {
            let k = s / refine.max(1);
            for i in 1..nveh {
                deviation = deviation.max((vs[i] - plan.states[k][i].v).abs());
            }
        }
        if s > 0 {
            for i in 0..nveh {
                note(-vs[i], &|| format!("vehicle {i} speed below 0 at t={t:.3}"));
                note(vs[i] - b.v_max, &|| format!("vehicle {i} above v_max at t={t:.3}"));
                let a = if i == 0 { la } else { accel(&xs, &vs, i) };
                note(b.a_min - a, &|| format!("vehicle {i} below a_min at t={t:.3}"));
                note(a - b.a_max, &|| format!("vehicle {i} above a_max at t={t:.3}"));
                if i > 0 {
                    let gap = xs[i - 1] - xs[i] - ovm.l_veh;
                    note(b.d_safe - gap, &|| format!("vehicle {i} headway {gap:.4} at t={t:.3}"));
                }
            }
        }
        if let (Some(lp), true) = (&problem.lead_path, s > 0) {
            let gap = lp.position(t) - lx - ovm.l_veh;
            note(lp.min_gap - gap, &|| format!("leader headway {gap:.4} at t={t:.3}"));
        }
        if s == steps {
            note(lx - problem.x_tar, &|| format!("leader past target by {:.4}", lx - problem.x_tar));
            note(problem.x_tar - b.x0_max - lx, &|| format!("leader short of box at {lx:.4}"));
            break;
        }
        // RK4 for followers; the leader is known exactly at stage times
        let stage = |xs: &[f64], vs: &[f64], t_stage: f64| -> (Vec<f64>, Vec<f64>) {
            let mut dx = vec![0.0; nveh];
            let mut dv = vec![0.0; nveh];
            let (lx, lv, _) = leader_at(plan, lead0.x, lead0.v, t_stage);
            let mut xs2 = xs.to_vec();
            let mut vs2 = vs.to_vec();
            xs2[0] = lx;
            vs2[0] = lv;
            for i in 1..nveh {
                dx[i] = vs2[i];
                dv[i] = accel(&xs2, &vs2, i);
            }
            (dx, dv)
        };
        let shifted = |base: &[f64], d: &[f64], c: f64| -> Vec<f64> {
            base.iter().zip(d).map(|(b, d)| b + c * d).collect()
        };
        let (k1x, k1v) = stage(&xs, &vs, t);
        let (k2x, k2v) = stage(&shifted(&xs, &k1x, dt / 2.0), &shifted(&vs, &k1v, dt / 2.0), t + dt / 2.0);
        let (k3x, k3v) = stage(&shifted(&xs, &k2x, dt / 2.0), &shifted(&vs, &k2v, dt / 2.0), t + dt / 2.0);
        let (k4x, k4v) = stage(&shifted(&xs, &k3x, dt), &shifted(&vs, &k3v, dt), t + dt);
        for i in 1..nveh {
            xs[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            vs[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }

    let k_last = nodes - 1;
    for i in 1..nveh {
        deviation = deviation.max((vs[i] - plan.states[k_last][i].v).abs());
    }
    AuditReport {
        max_violation: worst.0,
        worst: worst.1,
        follower_velocity_deviation: deviation,
        passed: worst.0 <= tol,
    }
}
