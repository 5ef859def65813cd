use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::banded::BorderedBanded;
use super::{evaluate_features, Evaluation, NlpSpec, Row, SolveResult, Termination, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub eq_tol: f64,
    pub ineq_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub damping: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub init_noise: f64,
    pub restarts: usize,
    /// Outer iterations compared when detecting stalled constraint violation.
    pub stall_window: usize,
    pub stall_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eq_tol: 1e-3,
            ineq_tol: 1e-3,
            max_outer: 30,
            max_inner: 50,
            damping: 1e-2,
            mu0: 10.0,
            mu_max: 1e5,
            init_noise: 1e-2,
            restarts: 1,
            stall_window: 4,
            stall_ratio: 0.95,
        }
    }
}

pub fn solve(spec: &NlpSpec, seed: u64) -> SolveResult {
    solve_with(spec, seed, &SolverOptions::default())
}

/// Augmented Lagrangian over Levenberg-damped Gauss-Newton steps, restarted
/// with `seed + i` while the verdict is infeasible.
pub fn solve_with(spec: &NlpSpec, seed: u64, opts: &SolverOptions) -> SolveResult {
    let mut total = 0;
    let mut total_outer = 0;
    let mut last = None;
    for attempt in 0..=opts.restarts {
        let mut r = attempt_solve(spec, seed.wrapping_add(attempt as u64), opts);
        total += r.iterations;
        total_outer += r.outer_iterations;
        r.iterations = total;
        r.outer_iterations = total_outer;
        r.restarts = attempt;
        if r.feasible {
            return r;
        }
        last = Some(r);
    }
    last.expect("at least one attempt")
}

struct Multipliers {
    mu: f64,
    eq: Vec<f64>,
    ineq: Vec<f64>,
}

impl Multipliers {
    fn active(&self, i: usize, g: f64) -> bool {
        g > 0.0 || self.ineq[i] > 0.0
    }

    fn lagrangian(&self, ev: &Evaluation) -> f64 {
        let mut l = ev.cost;
        for (h, lam) in ev.eq.iter().zip(&self.eq) {
            l += self.mu * h * h + lam * h;
        }
        for (i, (&g, lam)) in ev.ineq.iter().zip(&self.ineq).enumerate() {
            if self.active(i, g) {
                l += self.mu * g * g + lam * g;
            }
        }
        l
    }
}

fn lead_bandwidth(rows: &[&[Row]], lead: usize) -> usize {
    let mut bw = 0;
    for set in rows {
        for row in set.iter() {
            let mut lo = usize::MAX;
            let mut hi = 0;
            for &(c, _) in row {
                if c < lead {
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
            if lo != usize::MAX {
                bw = bw.max(hi - lo);
            }
        }
    }
    bw
}

/// Gauss-Newton step for the augmented Lagrangian at `ev`.
fn gn_step(spec: &NlpSpec, ev: &Evaluation, m: &Multipliers, damping: f64) -> Option<Vec<f64>> {
    let nv = spec.num_vars();
    let lead = spec.border_offset();
    let active_ineq: Vec<usize> = (0..ev.ineq.len()).filter(|&i| m.active(i, ev.ineq[i])).collect();
    let active_rows: Vec<Row> = active_ineq.iter().map(|&i| ev.ineq_jac[i].clone()).collect();
    let bw = lead_bandwidth(&[&ev.cost_jac, &ev.eq_jac, &active_rows], lead);
    let mut h = BorderedBanded::zeros(lead, bw, nv - lead);
    let mut grad = vec![0.0; nv];
    let mut accumulate = |row: &Row, weight: f64, lin: f64| {
        for (a, &(ca, va)) in row.iter().enumerate() {
            grad[ca] += lin * va;
            for &(cb, vb) in &row[..=a] {
                h.add(ca, cb, weight * va * vb);
            }
        }
    };
    for (row, &r) in ev.cost_jac.iter().zip(&ev.cost_residuals) {
        accumulate(row, 1.0, r);
    }
    for ((row, &r), &lam) in ev.eq_jac.iter().zip(&ev.eq).zip(&m.eq) {
        accumulate(row, m.mu, m.mu * r + 0.5 * lam);
    }
    for (&i, row) in active_ineq.iter().zip(&active_rows) {
        accumulate(row, m.mu, m.mu * ev.ineq[i] + 0.5 * m.ineq[i]);
    }
    h.add_diagonal(damping);
    let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
    h.solve(&rhs)
}

fn attempt_solve(spec: &NlpSpec, seed: u64, opts: &SolverOptions) -> SolveResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, opts.init_noise).expect("valid noise scale");
    let mut x: Vec<f64> = spec.init.iter().map(|v| v + noise.sample(&mut rng)).collect();
    let mut ev = evaluate_features(spec, &x);
    let mut m = Multipliers { mu: opts.mu0, eq: vec![0.0; ev.eq.len()], ineq: vec![0.0; ev.ineq.len()] };
    let mut iterations = 0;
    let mut history: Vec<f64> = Vec::new();
    let mut damping = opts.damping;
    let mut termination = Termination::MaxIter;

    let mut outer_iterations = 0;
    let finish = |x: Vec<f64>, ev: &Evaluation, iterations: usize, outer_iterations: usize, termination: Termination| {
        let feasible = termination == Termination::Converged;
        SolveResult {
            feasible,
            trajectory: Trajectory::from_solution(spec, x, ev),
            iterations,
            outer_iterations,
            termination,
            restarts: 0,
        }
    };

    if !ev.is_finite() {
        return finish(x, &ev, 0, 0, Termination::Diverged);
    }
    for outer in 0..opts.max_outer {
        outer_iterations += 1;
        let mut l = m.lagrangian(&ev);
        for _ in 0..opts.max_inner {
            iterations += 1;
            let mut accepted = false;
            let mut small_step = false;
            while damping < 1e10 {
                let Some(step) = gn_step(spec, &ev, &m, damping) else {
                    damping *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + d).collect();
                let trial_ev = evaluate_features(spec, &trial);
                let trial_l = if trial_ev.is_finite() { m.lagrangian(&trial_ev) } else { f64::INFINITY };
                if trial_l < l {
                    let decrease = l - trial_l;
                    small_step = step.iter().fold(0.0f64, |a, d| a.max(d.abs())) < 1e-10
                        || decrease <= 1e-12 * (1.0 + l);
                    x = trial;
                    ev = trial_ev;
                    l = trial_l;
                    damping = (damping / 3.0).max(1e-9);
                    accepted = true;
                    break;
                }
                damping *= 10.0;
            }
            if !accepted || small_step {
                break;
            }
        }
        if !ev.is_finite() {
            termination = Termination::Diverged;
            break;
        }
        let eq_viol = ev.max_eq_residual();
        let in_viol = ev.max_ineq_violation();
        if eq_viol <= opts.eq_tol && in_viol <= opts.ineq_tol {
            termination = Termination::Converged;
            break;
        }
        let viol = eq_viol.max(in_viol);
        history.push(viol);
        if outer >= 2 * opts.stall_window && viol > opts.stall_ratio * history[outer - opts.stall_window] {
            break;
        }
        for (lam, h) in m.eq.iter_mut().zip(&ev.eq) {
            *lam += 2.0 * m.mu * h;
        }
        for (lam, g) in m.ineq.iter_mut().zip(&ev.ineq) {
            *lam = (*lam + 2.0 * m.mu * g).max(0.0);
        }
        m.mu = (2.0 * m.mu).min(opts.mu_max);
        damping = opts.damping;
    }
    finish(x, &ev, iterations, outer_iterations, termination)
}
