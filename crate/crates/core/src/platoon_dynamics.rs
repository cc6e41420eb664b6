//! Linear state-space model of a "1+n" mixed platoon and its open-loop
//! stability and controllability analysis.
//!
//! State ordering: `[x0, v0, d~1, v~1, …, d~n, v~n]`. The leading CAV is a
//! double integrator driven by its acceleration; each follower is the
//! linearized car-following law about the platoon equilibrium.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{PlatoonError, Result};
use crate::models::LinearCoeffs;

/// Default zero-eigenvalue tolerance, relative to `max(1, spectral radius)`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Default PBH rank tolerance, relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Values of `α1 − α2·α3 + α3²` at or below this magnitude count as zero.
pub const CONDITION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonModel {
    /// Number of following vehicles.
    pub n: usize,
    /// Per-follower linear coefficients (all equal for a homogeneous platoon).
    pub coeffs: Vec<LinearCoeffs>,
    pub a_matrix: DMatrix<f64>,
    pub b_matrix: DVector<f64>,
}

impl PlatoonModel {
    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn is_homogeneous(&self) -> bool {
        self.coeffs.windows(2).all(|w| w[0] == w[1])
    }
}

/// Homogeneous "1+n" platoon.
pub fn build_platoon(coeffs: LinearCoeffs, n: usize) -> Result<PlatoonModel> {
    if n < 1 {
        return Err(PlatoonError::Argument(
            "a platoon needs at least one following vehicle (n >= 1)".into(),
        ));
    }
    build_heterogeneous(&vec![coeffs; n])
}

/// Platoon with individual coefficients per follower. Only the numeric
/// analyses apply to the heterogeneous case.
pub fn build_heterogeneous(coeffs: &[LinearCoeffs]) -> Result<PlatoonModel> {
    let n = coeffs.len();
    if n < 1 {
        return Err(PlatoonError::Argument(
            "a platoon needs at least one following vehicle (n >= 1)".into(),
        ));
    }
    if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
        return Err(PlatoonError::Argument(format!("non-finite coefficients {bad:?}")));
    }
    let dim = 2 * n + 2;
    let mut a = DMatrix::zeros(dim, dim);
    // CAV block: x0' = v0, v0' = u
    a[(0, 1)] = 1.0;
    for (k, c) in coeffs.iter().enumerate() {
        let row = 2 * (k + 1);
        let prev_v = row - 1;
        // coupling to the predecessor's velocity
        a[(row, prev_v)] = 1.0;
        a[(row + 1, prev_v)] = c.alpha3;
        // own dynamics
        a[(row, row + 1)] = -1.0;
        a[(row + 1, row)] = c.alpha1;
        a[(row + 1, row + 1)] = -c.alpha2;
    }
    let mut b = DVector::zeros(dim);
    b[1] = 1.0;
    Ok(PlatoonModel {
        n,
        coeffs: coeffs.to_vec(),
        a_matrix: a,
        b_matrix: b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub zero_count: usize,
    pub is_lyapunov_stable: bool,
    /// Largest real part among the non-zero eigenvalues (`-inf` if none).
    pub max_real_part_nonzero: f64,
}

/// Strongly connected components of the dependency graph of `a`
/// (edge j → i whenever `a[i, j] != 0`). Permuting the matrix so that these
/// components are contiguous yields a block-triangular form whose diagonal
/// blocks carry the whole spectrum.
fn irreducible_blocks(a: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| i != j && a[(i, j)] != 0.0).collect())
        .collect();

    // iterative Tarjan
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < succ[v].len() {
                let w = succ[v][*next];
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Eigenvalues of a general real matrix. The matrix is first reduced to its
/// irreducible diagonal blocks; each block is then solved with a real Schur
/// decomposition. Chains of identical blocks make the platoon matrix
/// defective, and a dense eigensolve would only resolve those eigenvalues to
/// about `eps^(1/n)`.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if a.nrows() != a.ncols() {
        return Err(PlatoonError::Argument("eigenvalues of a non-square matrix".into()));
    }
    let mut out = Vec::with_capacity(a.nrows());
    for block in irreducible_blocks(a) {
        if block.len() == 1 {
            let i = block[0];
            out.push(Complex::new(a[(i, i)], 0.0));
            continue;
        }
        let m = block.len();
        let sub = DMatrix::from_fn(m, m, |r, c| a[(block[r], block[c])]);
        let norm = sub.norm();
        let schur = Schur::try_new(sub, f64::EPSILON, 10_000).ok_or_else(|| {
            PlatoonError::Numerical(format!(
                "Schur iteration did not converge on a {m}x{m} block (Frobenius norm {norm:.3e})"
            ))
        })?;
        out.extend(schur.complex_eigenvalues().iter().copied());
    }
    out.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(out)
}

fn spectral_radius(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|l| l.norm()).fold(0.0, f64::max)
}

pub fn stability_report(model: &PlatoonModel, zero_tol: f64) -> Result<StabilityReport> {
    if !(zero_tol > 0.0) {
        return Err(PlatoonError::Argument(format!("zero_tol must be positive, got {zero_tol}")));
    }
    let eigenvalues = eigenvalues(&model.a_matrix)?;
    let threshold = zero_tol * spectral_radius(&eigenvalues).max(1.0);
    let zero_count = eigenvalues.iter().filter(|l| l.norm() <= threshold).count();
    let max_real_part_nonzero = eigenvalues
        .iter()
        .filter(|l| l.norm() > threshold)
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let is_lyapunov_stable = zero_count == 2 && max_real_part_nonzero < 0.0;
    Ok(StabilityReport {
        eigenvalues,
        zero_count,
        is_lyapunov_stable,
        max_real_part_nonzero,
    })
}

/// `α1 − α2·α3 + α3²`.
pub fn controllability_margin(coeffs: &LinearCoeffs) -> f64 {
    coeffs.alpha1 - coeffs.alpha2 * coeffs.alpha3 + coeffs.alpha3 * coeffs.alpha3
}

/// Sufficient condition for controllability of the homogeneous platoon.
pub fn controllability_condition(coeffs: &LinearCoeffs) -> bool {
    controllability_margin(coeffs).abs() > CONDITION_TOL
}

/// Groups eigenvalues that agree to within `tol` and returns the members of
/// every group followed by the group means. Defective eigenvalues are split
/// by rounding; the mean of the split cluster is far more accurate.
fn pbh_test_points(eigs: &[Complex<f64>], tol: f64) -> Vec<Complex<f64>> {
    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    for &l in eigs {
        match clusters.iter_mut().find(|c| (c[0] - l).norm() <= tol) {
            Some(c) => c.push(l),
            None => clusters.push(vec![l]),
        }
    }
    let mut points = Vec::new();
    for c in clusters {
        let mean = c.iter().sum::<Complex<f64>>() / c.len() as f64;
        points.push(mean);
        if c.len() > 1 {
            points.extend(c);
        }
    }
    points
}

/// Numerical rank of `[λI − A, B]`.
fn pbh_rank(a: &DMatrix<f64>, b: &DVector<f64>, lambda: Complex<f64>, rank_tol: f64) -> usize {
    let dim = a.nrows();
    let m = DMatrix::<Complex<f64>>::from_fn(dim, dim + 1, |r, c| {
        if c < dim {
            let diag = if r == c { lambda } else { Complex::new(0.0, 0.0) };
            diag - Complex::new(a[(r, c)], 0.0)
        } else {
            Complex::new(b[r], 0.0)
        }
    });
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

/// PBH controllability test: `rank [λI − A, B] = 2n + 2` for every eigenvalue.
pub fn is_controllable_numeric(model: &PlatoonModel, rank_tol: f64) -> Result<bool> {
    if !(rank_tol > 0.0) {
        return Err(PlatoonError::Argument(format!("rank_tol must be positive, got {rank_tol}")));
    }
    let eigs = eigenvalues(&model.a_matrix)?;
    let cluster_tol = 1e-6 * spectral_radius(&eigs).max(1.0);
    let dim = model.dim();
    for lambda in pbh_test_points(&eigs, cluster_tol) {
        if pbh_rank(&model.a_matrix, &model.b_matrix, lambda, rank_tol) < dim {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Closed-form spectrum of the homogeneous platoon: a double zero from the
/// leader plus `n` copies of the roots of `λ² + α2·λ + α1`.
pub fn closed_form_spectrum(coeffs: &LinearCoeffs, n: usize) -> Vec<Complex<f64>> {
    let (r1, r2) = follower_roots(coeffs);
    let mut out = vec![Complex::new(0.0, 0.0); 2];
    for _ in 0..n {
        out.push(r1);
        out.push(r2);
    }
    out
}

/// Roots of `λ² + α2·λ + α1`.
pub fn follower_roots(coeffs: &LinearCoeffs) -> (Complex<f64>, Complex<f64>) {
    let half = -coeffs.alpha2 / 2.0;
    let disc = coeffs.alpha2 * coeffs.alpha2 - 4.0 * coeffs.alpha1;
    let s = Complex::new(disc, 0.0).sqrt() / 2.0;
    (Complex::new(half, 0.0) + s, Complex::new(half, 0.0) - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(a1: f64, a2: f64, a3: f64) -> LinearCoeffs {
        LinearCoeffs::new(a1, a2, a3)
    }

    #[test]
    fn n1_block_layout() {
        let m = build_platoon(lc(0.458, 0.85, 0.3), 1).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, -1.0, //
                0.0, 0.3, 0.458, -0.85,
            ],
        );
        assert_eq!(m.a_matrix, expected);
        assert_eq!(m.b_matrix.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn n_zero_rejected() {
        assert!(matches!(
            build_platoon(lc(1.0, 1.0, 0.0), 0),
            Err(PlatoonError::Argument(_))
        ));
    }

    #[test]
    fn b_has_single_actuator() {
        for n in 1..8 {
            let m = build_platoon(lc(0.5, 0.85, 0.0), n).unwrap();
            assert_eq!(m.b_matrix.sum(), 1.0);
            assert_eq!(m.dim(), 2 * n + 2);
        }
    }

    #[test]
    fn n1_closed_form_eigenvalues() {
        let c = lc(0.458, 0.85, 0.0);
        let report = stability_report(&build_platoon(c, 1).unwrap(), DEFAULT_ZERO_TOL).unwrap();
        let mut expected = closed_form_spectrum(&c, 1);
        expected.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
        for (got, want) in report.eigenvalues.iter().zip(&expected) {
            assert!((got - want).norm() < 1e-9, "{got} vs {want}");
        }
        assert!(report.is_lyapunov_stable);
        assert_eq!(report.zero_count, 2);
    }

    #[test]
    fn negative_alpha1_unstable() {
        let m = build_platoon(lc(-0.1, 0.85, 0.0), 3).unwrap();
        let r = stability_report(&m, DEFAULT_ZERO_TOL).unwrap();
        assert!(!r.is_lyapunov_stable);
        assert!(r.max_real_part_nonzero > 0.0);
    }

    #[test]
    fn condition_examples() {
        assert!(controllability_condition(&lc(0.458, 0.85, 0.0)));
        assert!(!controllability_condition(&lc(1.0, 2.0, 1.0)));
    }

    #[test]
    fn pbh_detects_constructed_violation() {
        let m = build_platoon(lc(1.0, 2.0, 1.0), 2).unwrap();
        assert!(!is_controllable_numeric(&m, DEFAULT_RANK_TOL).unwrap());
    }

    #[test]
    fn pbh_all_zero_coefficients_uncontrollable() {
        let m = build_platoon(lc(0.0, 0.0, 0.0), 1).unwrap();
        assert!(!is_controllable_numeric(&m, DEFAULT_RANK_TOL).unwrap());
    }

    #[test]
    fn heterogeneous_spectrum_is_union_of_blocks() {
        let cs = [lc(0.4, 0.8, 0.0), lc(0.6, 1.1, 0.2), lc(0.3, 0.9, -0.1)];
        let m = build_heterogeneous(&cs).unwrap();
        let eigs = eigenvalues(&m.a_matrix).unwrap();
        assert_eq!(eigs.len(), 8);
        for c in &cs {
            let (r1, r2) = follower_roots(c);
            assert!(eigs.iter().any(|l| (l - r1).norm() < 1e-12));
            assert!(eigs.iter().any(|l| (l - r2).norm() < 1e-12));
        }
        assert!(!m.is_homogeneous());
    }

    #[test]
    fn scc_split_of_dense_matrix_is_single_block() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.3, -1.0, 2.0, 1.0, 0.1, 0.2]);
        assert_eq!(irreducible_blocks(&a).len(), 1);
        let eigs = eigenvalues(&a).unwrap();
        let trace: f64 = eigs.iter().map(|l| l.re).sum();
        assert!((trace - 0.2).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn positive_coefficients_give_two_zeros_and_stability(
                a1 in 0.05f64..2.0, a2 in 0.1f64..3.0, a3 in 0.0f64..2.0, n in 1usize..7,
            ) {
                let m = build_platoon(lc(a1, a2, a3), n).unwrap();
                let r = stability_report(&m, DEFAULT_ZERO_TOL).unwrap();
                prop_assert_eq!(r.zero_count, 2);
                prop_assert!(r.is_lyapunov_stable);
                prop_assert_eq!(r.eigenvalues.len(), 2 * n + 2);
            }

            #[test]
            fn condition_agrees_with_pbh(
                a1 in -2.0f64..2.0, a2 in -3.0f64..3.0, a3 in -2.0f64..2.0, n in 1usize..5,
            ) {
                let c = lc(a1, a2, a3);
                prop_assume!(controllability_margin(&c).abs() > 1e-3);
                let m = build_platoon(c, n).unwrap();
                prop_assert!(is_controllable_numeric(&m, DEFAULT_RANK_TOL).unwrap());
                prop_assert!(controllability_condition(&c));
            }
        }
    }
}
