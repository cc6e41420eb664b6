//! Receding-horizon velocity tracker used by the PCC+ benchmark. Only the
//! CAV's own states enter the cost; the predecessor (constant-velocity
//! prediction) and the stop line during red enter as hard constraints.

use nalgebra::{DMatrix, DVector};

use super::qp::{solve_qp, AdmmOptions};
use crate::ocp::OcpBounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PccParams {
    /// Prediction horizon (s).
    pub horizon: f64,
    /// Prediction step (s).
    pub step: f64,
    /// Weight on squared velocity error.
    pub q: f64,
    /// Weight on squared acceleration.
    pub r: f64,
}

impl Default for PccParams {
    fn default() -> Self {
        Self {
            horizon: 5.0,
            step: 0.5,
            q: 1.0,
            r: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerInput {
    pub x0: f64,
    pub v0: f64,
    pub v_target: f64,
    pub l_veh: f64,
    /// Predecessor position and velocity.
    pub predecessor: Option<(f64, f64)>,
    /// The stop line may not be passed during this many seconds from now.
    pub wall_for: Option<f64>,
    /// Distance kept from the stop line while it is closed (m).
    pub wall_margin: f64,
}

/// Acceleration sequence over the horizon; the first entry is applied.
pub fn track(params: &PccParams, bounds: &OcpBounds, input: &TrackerInput) -> Vec<f64> {
    let n = ((params.horizon / params.step).round() as usize).max(1);
    let dt = params.step;
    let mut sv = DMatrix::zeros(n, n);
    let mut sx = DMatrix::zeros(n, n);
    for k in 1..=n {
        for j in 0..k {
            sv[(k - 1, j)] = dt;
            sx[(k - 1, j)] = dt * dt * (k as f64 - j as f64 - 0.5);
        }
    }
    let p = (sv.transpose() * &sv * params.q + DMatrix::identity(n, n) * params.r) * 2.0;
    let c = sv.transpose() * DVector::from_element(n, input.v0 - input.v_target) * (2.0 * params.q);

    let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e, bounds.a_min, bounds.a_max));
    }
    for k in 0..n {
        let row: Vec<f64> = sv.row(k).iter().copied().collect();
        rows.push((row, -input.v0, bounds.v_max - input.v0));
    }
    for k in 0..n {
        let tk = (k + 1) as f64 * dt;
        let free = input.x0 + tk * input.v0;
        let row: Vec<f64> = sx.row(k).iter().copied().collect();
        if let Some((xp, vp)) = input.predecessor {
            let limit = xp + vp * tk - input.l_veh - bounds.d_safe - free;
            rows.push((row.clone(), f64::NEG_INFINITY, limit));
        }
        if let Some(until) = input.wall_for {
            if tk <= until {
                rows.push((row, f64::NEG_INFINITY, -input.wall_margin - free));
            }
        }
    }
    let m = rows.len();
    let mut a = DMatrix::zeros(m, n);
    let mut lo = DVector::zeros(m);
    let mut hi = DVector::zeros(m);
    for (i, (row, l, h)) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        lo[i] = l;
        hi[i] = h;
    }
    let sol = solve_qp(&p, &c, &a, &lo, &hi, None, &AdmmOptions::default());
    sol.x.iter().map(|u| u.clamp(bounds.a_min, bounds.a_max)).collect()
}
