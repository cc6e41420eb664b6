//! Condensed transcription of the platoon OCP.
//!
//! Decision variables are the CAV accelerations at the uniform nodes; the
//! control is piecewise linear in between. Vehicle states and the fuel
//! integral are propagated by classical RK4 on a substep grid, so the
//! dynamics hold by construction and only path/terminal inequalities remain.
//! Gradients are obtained by reverse-mode differentiation through RK4.

use super::OcpProblem;

/// Inequality constraint `g <= 0` at one substep point, or at a node for the
/// CAV control bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    SpeedLow(usize),
    SpeedHigh(usize),
    AccelLow(usize),
    AccelHigh(usize),
    Headway(usize),
    LeadHeadway,
    TerminalHigh,
    TerminalLow,
}

pub struct Transcription<'a> {
    pub problem: &'a OcpProblem,
    pub nodes: usize,
    pub substeps: usize,
    /// Node spacing.
    pub h: f64,
    /// RK4 step.
    pub hs: f64,
    pub smoothing: f64,
    nveh: usize,
}

/// Forward sweep storage.
pub struct Sweep {
    /// State after each substep, `(S + 1) × dim`.
    pub states: Vec<f64>,
    /// RK4 stage states, `S × 4 × dim`.
    stages: Vec<f64>,
}

impl<'a> Transcription<'a> {
    pub fn new(problem: &'a OcpProblem, nodes: usize, max_substep: f64, smoothing: f64) -> Self {
        let h = (problem.tf - problem.t0) / (nodes - 1) as f64;
        let substeps = ((h / max_substep).ceil() as usize).max(1);
        Self {
            problem,
            nodes,
            substeps,
            h,
            hs: h / substeps as f64,
            smoothing,
            nveh: problem.initial_state.len(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.nveh + 1
    }

    pub fn total_substeps(&self) -> usize {
        (self.nodes - 1) * self.substeps
    }

    fn fuel_index(&self) -> usize {
        2 * self.nveh
    }

    pub fn initial(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for (i, k) in self.problem.initial_state.iter().enumerate() {
            y[2 * i] = k.x;
            y[2 * i + 1] = k.v;
        }
        y
    }

    /// Control at fraction `theta` of interval `k`.
    #[inline]
    fn control(u: &[f64], k: usize, theta: f64) -> f64 {
        u[k] + (u[k + 1] - u[k]) * theta
    }

    /// Right-hand side. With `exact` the nonsmooth fuel model is used.
    fn rhs(&self, y: &[f64], u: f64, exact: bool, out: &mut [f64]) {
        let p = self.problem;
        let fuel_rate = |v: f64, a: f64| {
            if exact {
                p.fuel.rate(v, a)
            } else {
                p.fuel.smooth_rate(v, a, self.smoothing).0
            }
        };
        out[0] = y[1];
        out[1] = u;
        let mut fuel = fuel_rate(y[1], u);
        for i in 1..self.nveh {
            let (x, v) = (y[2 * i], y[2 * i + 1]);
            let a = p.ovm.accel(y[2 * i - 2] - x, v, 1.0);
            out[2 * i] = v;
            out[2 * i + 1] = a;
            fuel += fuel_rate(v, a);
        }
        out[self.fuel_index()] = fuel;
    }

    /// Accumulates `wᵀ ∂f/∂y` into `ybar` and returns `wᵀ ∂f/∂u`.
    fn rhs_vjp(&self, y: &[f64], u: f64, w: &[f64], ybar: &mut [f64]) -> f64 {
        let p = self.problem;
        let wj = w[self.fuel_index()];
        let (_, g_v, g_a) = p.fuel.smooth_rate(y[1], u, self.smoothing);
        ybar[1] += w[0] + wj * g_v;
        let ubar = w[1] + wj * g_a;
        for i in 1..self.nveh {
            let (x, v) = (y[2 * i], y[2 * i + 1]);
            let (a, a_d, a_v) = p.ovm.accel_with_partials(y[2 * i - 2] - x, v, 1.0);
            let (_, g_v, g_a) = p.fuel.smooth_rate(v, a, self.smoothing);
            let c = w[2 * i + 1] + wj * g_a;
            ybar[2 * i - 2] += c * a_d;
            ybar[2 * i] -= c * a_d;
            ybar[2 * i + 1] += w[2 * i] + c * a_v + wj * g_v;
        }
        ubar
    }

    /// RK4 forward sweep.
    pub fn forward(&self, u: &[f64], exact: bool) -> Sweep {
        let d = self.dim();
        let s_total = self.total_substeps();
        let m = self.substeps;
        let mut states = vec![0.0; (s_total + 1) * d];
        let mut stages = vec![0.0; s_total * 4 * d];
        states[..d].copy_from_slice(&self.initial());
        let hs = self.hs;
        let mut k1 = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        let mut k3 = vec![0.0; d];
        let mut k4 = vec![0.0; d];
        for j in 0..s_total {
            let (k, sub) = (j / m, j % m);
            let u1 = Self::control(u, k, sub as f64 / m as f64);
            let u2 = Self::control(u, k, (sub as f64 + 0.5) / m as f64);
            let u4 = Self::control(u, k, (sub + 1) as f64 / m as f64);
            let (done, rest) = states.split_at_mut((j + 1) * d);
            let s = &done[j * d..];
            let st = &mut stages[j * 4 * d..(j + 1) * 4 * d];
            st[..d].copy_from_slice(s);
            self.rhs(&st[..d], u1, exact, &mut k1);
            for i in 0..d {
                st[d + i] = s[i] + 0.5 * hs * k1[i];
            }
            self.rhs(&st[d..2 * d], u2, exact, &mut k2);
            for i in 0..d {
                st[2 * d + i] = s[i] + 0.5 * hs * k2[i];
            }
            self.rhs(&st[2 * d..3 * d], u2, exact, &mut k3);
            for i in 0..d {
                st[3 * d + i] = s[i] + hs * k3[i];
            }
            self.rhs(&st[3 * d..], u4, exact, &mut k4);
            let next = &mut rest[..d];
            for i in 0..d {
                next[i] = s[i] + hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Sweep { states, stages }
    }

    pub fn state_at(&self, sweep: &'_ Sweep, j: usize) -> Vec<f64> {
        let d = self.dim();
        sweep.states[j * d..(j + 1) * d].to_vec()
    }

    /// Smoothed objective: fuel integral plus terminal penalty.
    pub fn objective_of(&self, sweep: &Sweep) -> f64 {
        let d = self.dim();
        let end = &sweep.states[self.total_substeps() * d..];
        end[self.fuel_index()] + self.terminal(end)
    }

    fn terminal(&self, y: &[f64]) -> f64 {
        let p = self.problem;
        let mut phi = p.w1 * (y[0] - p.x_tar).powi(2);
        for i in 0..self.nveh {
            phi += p.w2 * (y[2 * i + 1] - p.v_star).powi(2);
        }
        phi
    }

    fn point_constraint_count(&self) -> usize {
        2 * self.nveh + 3 * (self.nveh - 1) + usize::from(self.problem.lead_path.is_some())
    }

    pub fn constraint_count(&self) -> usize {
        self.total_substeps() * self.point_constraint_count() + 2 * self.nodes + 2
    }

    /// Enumerates the constraint kinds in evaluation order.
    pub fn constraint_kinds(&self) -> Vec<ConstraintKind> {
        let mut kinds = Vec::with_capacity(self.constraint_count());
        for _ in 0..self.total_substeps() {
            self.point_kinds(&mut kinds);
        }
        for _ in 0..self.nodes {
            kinds.push(ConstraintKind::AccelLow(0));
            kinds.push(ConstraintKind::AccelHigh(0));
        }
        kinds.push(ConstraintKind::TerminalHigh);
        kinds.push(ConstraintKind::TerminalLow);
        kinds
    }

    fn point_kinds(&self, kinds: &mut Vec<ConstraintKind>) {
        for i in 0..self.nveh {
            kinds.push(ConstraintKind::SpeedLow(i));
            kinds.push(ConstraintKind::SpeedHigh(i));
        }
        for i in 1..self.nveh {
            kinds.push(ConstraintKind::AccelLow(i));
            kinds.push(ConstraintKind::AccelHigh(i));
            kinds.push(ConstraintKind::Headway(i));
        }
        if self.problem.lead_path.is_some() {
            kinds.push(ConstraintKind::LeadHeadway);
        }
    }

    fn point_constraints(&self, y: &[f64], t: f64, out: &mut [f64]) {
        let p = self.problem;
        let b = &p.bounds;
        let mut c = 0;
        for i in 0..self.nveh {
            out[c] = -y[2 * i + 1];
            out[c + 1] = y[2 * i + 1] - b.v_max;
            c += 2;
        }
        for i in 1..self.nveh {
            let gap = y[2 * i - 2] - y[2 * i];
            let a = p.ovm.accel(gap, y[2 * i + 1], 1.0);
            out[c] = b.a_min - a;
            out[c + 1] = a - b.a_max;
            out[c + 2] = b.d_safe + p.ovm.l_veh - gap;
            c += 3;
        }
        if let Some(lp) = &p.lead_path {
            out[c] = lp.min_gap + p.ovm.l_veh - (lp.position(t) - y[0]);
        }
    }

    fn point_constraints_vjp(&self, y: &[f64], w: &[f64], ybar: &mut [f64]) {
        let p = self.problem;
        let mut c = 0;
        for i in 0..self.nveh {
            ybar[2 * i + 1] += -w[c] + w[c + 1];
            c += 2;
        }
        for i in 1..self.nveh {
            let gap = y[2 * i - 2] - y[2 * i];
            let (_, a_d, a_v) = p.ovm.accel_with_partials(gap, y[2 * i + 1], 1.0);
            let wa = w[c + 1] - w[c];
            let wg = wa * a_d - w[c + 2];
            ybar[2 * i - 2] += wg;
            ybar[2 * i] -= wg;
            ybar[2 * i + 1] += wa * a_v;
            c += 3;
        }
        if p.lead_path.is_some() {
            ybar[0] += w[c];
        }
    }

    /// All constraint values `g` (feasible iff every entry is `<= 0`).
    pub fn constraints_of(&self, u: &[f64], sweep: &Sweep) -> Vec<f64> {
        let d = self.dim();
        let pc = self.point_constraint_count();
        let s_total = self.total_substeps();
        let b = &self.problem.bounds;
        let mut g = vec![0.0; self.constraint_count()];
        for j in 1..=s_total {
            let t = self.problem.t0 + j as f64 * self.hs;
            self.point_constraints(&sweep.states[j * d..(j + 1) * d], t, &mut g[(j - 1) * pc..j * pc]);
        }
        let mut c = s_total * pc;
        for &uk in u {
            g[c] = b.a_min - uk;
            g[c + 1] = uk - b.a_max;
            c += 2;
        }
        let x_end = sweep.states[s_total * d];
        g[c] = x_end - self.problem.x_tar;
        g[c + 1] = self.problem.x_tar - b.x0_max - x_end;
        g
    }

    /// Value and gradient of `scale·f + Σ ψ(g; μ, ρ)` where `ψ` is the
    /// augmented-Lagrangian term for `g <= 0`. Returns `(merit, f, g)`.
    pub fn merit(
        &self,
        u: &[f64],
        mu: &[f64],
        rho: f64,
        scale: f64,
        grad: &mut [f64],
    ) -> (f64, f64, Vec<f64>) {
        let sweep = self.forward(u, false);
        let f = self.objective_of(&sweep);
        let g = self.constraints_of(u, &sweep);
        // dψ/dg
        let mut wts = vec![0.0; g.len()];
        let mut merit = scale * f;
        for c in 0..g.len() {
            let t = (mu[c] + rho * g[c]).max(0.0);
            merit += (t * t - mu[c] * mu[c]) / (2.0 * rho);
            wts[c] = t;
        }
        self.backward(u, &sweep, scale, &wts, grad);
        (merit, f, g)
    }

    /// Reverse sweep: gradient of `scale·f + Σ wts·g` with `wts` held fixed.
    pub fn backward(&self, u: &[f64], sweep: &Sweep, scale: f64, wts: &[f64], grad: &mut [f64]) {
        let p = self.problem;
        let d = self.dim();
        let m = self.substeps;
        let hs = self.hs;
        let s_total = self.total_substeps();
        let pc = self.point_constraint_count();
        grad.iter_mut().for_each(|x| *x = 0.0);

        // control-bound constraints
        let mut c = s_total * pc;
        for k in 0..self.nodes {
            grad[k] += -wts[c] + wts[c + 1];
            c += 2;
        }

        let end = &sweep.states[s_total * d..];
        let mut lam = vec![0.0; d];
        lam[self.fuel_index()] = scale;
        lam[0] += scale * 2.0 * p.w1 * (end[0] - p.x_tar) + wts[c] - wts[c + 1];
        for i in 0..self.nveh {
            lam[2 * i + 1] += scale * 2.0 * p.w2 * (end[2 * i + 1] - p.v_star);
        }
        self.point_constraints_vjp(end, &wts[(s_total - 1) * pc..s_total * pc], &mut lam);

        let mut kb1 = vec![0.0; d];
        let mut kb2 = vec![0.0; d];
        let mut kb3 = vec![0.0; d];
        let mut kb4 = vec![0.0; d];
        let mut yb = vec![0.0; d];
        for j in (0..s_total).rev() {
            let (k, sub) = (j / m, j % m);
            let th1 = sub as f64 / m as f64;
            let th2 = (sub as f64 + 0.5) / m as f64;
            let th4 = (sub + 1) as f64 / m as f64;
            let u1 = Self::control(u, k, th1);
            let u2 = Self::control(u, k, th2);
            let u4 = Self::control(u, k, th4);
            let st = &sweep.stages[j * 4 * d..(j + 1) * 4 * d];
            for i in 0..d {
                kb1[i] = hs / 6.0 * lam[i];
                kb2[i] = hs / 3.0 * lam[i];
                kb3[i] = hs / 3.0 * lam[i];
                kb4[i] = hs / 6.0 * lam[i];
            }
            let mut sbar = lam.clone();

            yb.iter_mut().for_each(|x| *x = 0.0);
            let ub4 = self.rhs_vjp(&st[3 * d..], u4, &kb4, &mut yb);
            for i in 0..d {
                sbar[i] += yb[i];
                kb3[i] += hs * yb[i];
            }
            yb.iter_mut().for_each(|x| *x = 0.0);
            let ub3 = self.rhs_vjp(&st[2 * d..3 * d], u2, &kb3, &mut yb);
            for i in 0..d {
                sbar[i] += yb[i];
                kb2[i] += 0.5 * hs * yb[i];
            }
            yb.iter_mut().for_each(|x| *x = 0.0);
            let ub2 = self.rhs_vjp(&st[d..2 * d], u2, &kb2, &mut yb);
            for i in 0..d {
                sbar[i] += yb[i];
                kb1[i] += 0.5 * hs * yb[i];
            }
            yb.iter_mut().for_each(|x| *x = 0.0);
            let ub1 = self.rhs_vjp(&st[..d], u1, &kb1, &mut yb);
            for i in 0..d {
                sbar[i] += yb[i];
            }

            grad[k] += ub1 * (1.0 - th1) + (ub2 + ub3) * (1.0 - th2) + ub4 * (1.0 - th4);
            grad[k + 1] += ub1 * th1 + (ub2 + ub3) * th2 + ub4 * th4;

            if j >= 1 {
                let y = &sweep.states[j * d..(j + 1) * d];
                self.point_constraints_vjp(y, &wts[(j - 1) * pc..j * pc], &mut sbar);
            }
            lam = sbar;
        }
    }

    /// Smoothed objective and its gradient.
    pub fn objective_grad(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let sweep = self.forward(u, false);
        let f = self.objective_of(&sweep);
        let wts = vec![0.0; self.constraint_count()];
        let mut grad = vec![0.0; u.len()];
        self.backward(u, &sweep, 1.0, &wts, &mut grad);
        (f, grad)
    }

    /// Objective evaluated with the nonsmooth fuel model.
    pub fn exact_objective(&self, u: &[f64]) -> f64 {
        let sweep = self.forward(u, true);
        self.objective_of(&sweep)
    }
}
