//! Optimal terminal velocity of a mixed platoon: the equilibrium velocity
//! that maximizes the number of vehicles crossing during one green phase.
//!
//! With equilibrium spacing `d(v)` the passing count is `v·T_green / d(v)`,
//! so the maximizer depends on the car-following model only; the green time
//! merely scales the count.

use crate::error::{PlatoonError, Result};
use crate::models::{equilibrium_spacing, OvmParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSolution {
    pub v_star: f64,
    pub d_star: f64,
    /// Passing count before flooring.
    pub n_max: f64,
    pub t_green: f64,
    /// The objective was flat over the scanned grid; `v_star` is the midpoint.
    pub degenerate: bool,
}

impl EquilibriumSolution {
    /// Number of followers a leader should take along.
    pub fn platoon_size(&self) -> usize {
        self.n_max.floor().max(0.0) as usize
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Maximize `v / spacing(v)` over `[lo, hi)` (the upper end is excluded, as
/// it is the open edge of the spacing's domain). Returns `(v, degenerate)`.
pub fn maximize_flow_ratio(
    spacing: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_step: f64,
) -> Result<(f64, bool)> {
    if !(grid_step > 0.0) {
        return Err(PlatoonError::Argument(format!("grid_step must be positive, got {grid_step}")));
    }
    if !(hi > lo) {
        return Err(PlatoonError::Config(format!(
            "empty admissible velocity interval [{lo}, {hi})"
        )));
    }
    let ratio = |v: f64| v / spacing(v);
    let count = ((hi - lo) / grid_step).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    let mut worst = f64::INFINITY;
    for k in 0..count {
        let v = lo + k as f64 * grid_step;
        if v >= hi {
            break;
        }
        let r = ratio(v);
        if !r.is_finite() {
            continue;
        }
        if r > best.0 {
            best = (r, v);
        }
        worst = worst.min(r);
    }
    if !best.0.is_finite() {
        return Err(PlatoonError::Config("objective not finite anywhere on the grid".into()));
    }
    if best.0 - worst <= 1e-9 * best.0.abs().max(1.0) {
        return Ok((0.5 * (lo + hi), true));
    }
    let a = (best.1 - grid_step).max(lo);
    let b = (best.1 + grid_step).min(hi - 1e-12 * hi.abs().max(1.0));
    let v = golden_max(&ratio, a, b, 1e-12);
    // golden section can only improve on the grid point
    let v = if ratio(v) >= best.0 { v } else { best.1 };
    Ok((v, false))
}

/// Optimal equilibrium velocity for the OVM, capped at `v_cap`.
pub fn solve_vstar(
    params: &OvmParams,
    t_green: f64,
    grid_step: f64,
    v_cap: f64,
) -> Result<EquilibriumSolution> {
    params.validate()?;
    if !(t_green > 0.0) {
        return Err(PlatoonError::Argument(format!("t_green must be positive, got {t_green}")));
    }
    let (dom_lo, dom_hi) = params.equilibrium_domain();
    let lo = dom_lo.max(0.0);
    let hi = dom_hi.min(v_cap);
    // when the cap is inside the domain it is attainable
    let hi_open = if v_cap < dom_hi { hi + grid_step * 1e-9 } else { hi };
    let spacing = |v: f64| equilibrium_spacing(params, v).unwrap_or(f64::INFINITY);
    let (v_star, degenerate) = maximize_flow_ratio(spacing, lo, hi_open, grid_step)?;
    let v_star = v_star.min(hi);
    let d_star = equilibrium_spacing(params, v_star)?;
    Ok(EquilibriumSolution {
        v_star,
        d_star,
        n_max: v_star * t_green / d_star,
        t_green,
        degenerate,
    })
}
