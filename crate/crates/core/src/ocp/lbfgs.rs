//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `‖∇f‖∞ <= grad_tol`.
    pub grad_tol: f64,
    /// Stop when the relative decrease over one iteration falls below this.
    pub rel_decrease_tol: f64,
    /// Stop when the relative decrease over the last `stall_window`
    /// iterations falls below this.
    pub stall_tol: f64,
    pub stall_window: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 12,
            max_iter: 300,
            grad_tol: 1e-6,
            rel_decrease_tol: 1e-13,
            stall_tol: 0.0,
            stall_window: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Stopped because progress stalled rather than on the gradient test.
    pub stalled: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimize `f` starting from `x0`. `fg` returns the value and writes the
/// gradient into its second argument.
pub fn minimize<F>(mut fg: F, x0: Vec<f64>, opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha_buf = vec![0.0; opts.memory];
    let mut f_hist: VecDeque<f64> = VecDeque::with_capacity(opts.stall_window + 1);
    f_hist.push_back(f);

    for iter in 0..opts.max_iter {
        let gnorm = inf_norm(&g);
        if gnorm <= opts.grad_tol {
            return LbfgsResult {
                x,
                f,
                grad_inf: gnorm,
                iterations: iter,
                evaluations,
                converged: true,
                stalled: false,
            };
        }

        // two-loop recursion
        dir.copy_from_slice(&g);
        for (i, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha_buf[i] = a;
            for (d, yi) in dir.iter_mut().zip(y) {
                *d -= a * yi;
            }
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gnorm.max(1.0),
        };
        for d in dir.iter_mut() {
            *d *= gamma;
        }
        for (i, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &dir);
            for (d, si) in dir.iter_mut().zip(s) {
                *d += (alpha_buf[i] - b) * si;
            }
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            history.clear();
            let scale = 1.0 / gnorm.max(1.0);
            for (d, gi) in dir.iter_mut().zip(&g) {
                *d = -gi * scale;
            }
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..50 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = fg(&x_new, &mut g_new);
            evaluations += 1;
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return LbfgsResult {
                x,
                f,
                grad_inf: gnorm,
                iterations: iter,
                evaluations,
                converged: false,
                stalled: true,
            };
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - f_new;
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        f_hist.push_back(f);
        if f_hist.len() > opts.stall_window {
            f_hist.pop_front();
        }
        let window_decrease = f_hist.front().copied().unwrap_or(f) - f;
        let stalled = f_hist.len() == opts.stall_window
            && window_decrease <= opts.stall_tol * f.abs().max(1.0);
        if decrease <= opts.rel_decrease_tol * f.abs().max(1.0) || stalled {
            let gnorm = inf_norm(&g);
            return LbfgsResult {
                x,
                f,
                grad_inf: gnorm,
                iterations: iter + 1,
                evaluations,
                converged: gnorm <= opts.grad_tol,
                stalled: true,
            };
        }
    }
    let gnorm = inf_norm(&g);
    LbfgsResult {
        x,
        f,
        grad_inf: gnorm,
        iterations: opts.max_iter,
        evaluations,
        converged: gnorm <= opts.grad_tol,
        stalled: false,
    }
}
