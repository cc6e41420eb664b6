//! Small dense convex QP solver (operator splitting):
//! minimize `½xᵀPx + cᵀx` subject to `lo ≤ Ax ≤ hi`.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct AdmmOptions {
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            max_iter: 4000,
            eps_abs: 1e-6,
            eps_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest bound excess of `Ax`.
    pub max_violation: f64,
}

pub fn solve_qp(
    p: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    warm: Option<&DVector<f64>>,
    opts: &AdmmOptions,
) -> QpSolution {
    let n = c.len();
    let m = lo.len();
    let rho = opts.rho;
    let kkt = p + DMatrix::identity(n, n) * opts.sigma + a.transpose() * a * rho;
    let chol = kkt.cholesky().expect("QP matrix is positive definite");
    let at = a.transpose();

    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut z = (a * &x).zip_zip_map(lo, hi, |v, l, h| v.clamp(l, h));
    let mut y = DVector::zeros(m);
    let mut converged = false;
    let mut iterations = opts.max_iter;
    for it in 0..opts.max_iter {
        let rhs = &x * opts.sigma - c + &at * (&z * rho - &y);
        let x_t = chol.solve(&rhs);
        let z_t = a * &x_t;
        let x_new = &x_t * opts.alpha + &x * (1.0 - opts.alpha);
        let z_relax = &z_t * opts.alpha + &z * (1.0 - opts.alpha);
        let z_new = (&z_relax + &y / rho).zip_zip_map(lo, hi, |v, l, h| v.clamp(l, h));
        y += (&z_relax - &z_new) * rho;
        x = x_new;
        z = z_new;

        if it % 10 == 9 {
            let ax = a * &x;
            let r_prim = (&ax - &z).amax();
            let px = p * &x;
            let aty = &at * &y;
            let r_dual = (&px + c + &aty).amax();
            let e_prim = opts.eps_abs + opts.eps_rel * ax.amax().max(z.amax());
            let e_dual = opts.eps_abs + opts.eps_rel * px.amax().max(aty.amax()).max(c.amax());
            if r_prim <= e_prim && r_dual <= e_dual {
                converged = true;
                iterations = it + 1;
                break;
            }
        }
    }
    let ax = a * &x;
    let max_violation = (0..m).fold(0.0_f64, |acc, i| acc.max(lo[i] - ax[i]).max(ax[i] - hi[i]));
    QpSolution {
        x,
        iterations,
        converged,
        max_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_constrained_quadratic() {
        // min (x0-2)² + (x1+1)² with 0 ≤ x ≤ 1
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0]));
        let c = DVector::from_vec(vec![-4.0, 2.0]);
        let a = DMatrix::identity(2, 2);
        let lo = DVector::from_vec(vec![0.0, 0.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let s = solve_qp(&p, &c, &a, &lo, &hi, None, &AdmmOptions::default());
        assert!(s.converged);
        assert!((s.x[0] - 1.0).abs() < 1e-4 && s.x[1].abs() < 1e-4, "{:?}", s.x);
    }

    #[test]
    fn coupled_constraint() {
        // min x0² + x1² s.t. x0 + x1 ≥ 2 → (1, 1)
        let p = DMatrix::identity(2, 2) * 2.0;
        let c = DVector::zeros(2);
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let lo = DVector::from_vec(vec![2.0]);
        let hi = DVector::from_vec(vec![f64::INFINITY]);
        let s = solve_qp(&p, &c, &a, &lo, &hi, None, &AdmmOptions::default());
        assert!(s.converged);
        assert!((s.x[0] - 1.0).abs() < 1e-4 && (s.x[1] - 1.0).abs() < 1e-4);
    }
}
