//! Forward-backward splitting for mixed-norm regularized recovery.
//!
//! Solves
//!
//! ```text
//!     min_x  ||x||_{V,1} + (mu/2) ||A x - u||_{V,2}^2
//! ```
//!
//! by alternating a gradient step on the quadratic term,
//! `G(x) = x - tau*mu * A^T (A x - u)`, with the proximal map of the
//! mixed `l1` norm, which shrinks every row's `V`-norm by `tau` and zeroes
//! rows at or below the threshold. The step is admissible when
//! `0 < tau*mu < 2 / ||A^T A||_2`; auto mode picks `tau*mu` just inside
//! `1 / ||A^T A||_2` from a power-iteration estimate, which also makes the
//! objective trace monotone.
//!
//! With a non-identity Gram matrix the problem is first mapped to identity
//! coordinates by a one-time Cholesky change of variables (`x -> x L`,
//! `u -> u L` for `M = L L^T`). Row `V`-norms become Euclidean norms there,
//! so the thresholding formula applies literally, and all reported norms and
//! residuals agree with the original geometry.

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertVector, InnerProduct};
use crate::linalg;
use crate::operator::{adjoint_apply_matrix, apply_matrix, Measurements};

/// Step-size selection for the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `tau * mu = (1 - tol) / lambda_hat` with `lambda_hat` the power
    /// iteration estimate of `||A^T A||_2`.
    Auto,
    /// Explicit threshold `tau`; requires `0 < tau * mu < 2 / ||A^T A||_2`.
    Fixed(f64),
}

/// Configuration of a single solve.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Penalty weight `mu > 0` on the quadratic fidelity term.
    pub mu: f64,
    pub step: StepSize,
    /// Relative iterate-change threshold.
    pub tol_fixed_point: f64,
    /// First-order optimality threshold.
    pub tol_kkt: f64,
    pub max_iter: usize,
    /// Record per-iterate supports and solutions (memory-heavy; off by
    /// default).
    pub record_history: bool,
}

impl SolverConfig {
    pub fn new(mu: f64) -> Self {
        SolverConfig {
            mu,
            step: StepSize::Auto,
            tol_fixed_point: 1e-9,
            tol_kkt: 1e-8,
            max_iter: 100_000,
            record_history: false,
        }
    }

    pub fn with_step(mut self, tau: f64) -> Self {
        self.step = StepSize::Fixed(tau);
        self
    }

    pub fn with_tolerances(mut self, tol_fixed_point: f64, tol_kkt: f64) -> Self {
        self.tol_fixed_point = tol_fixed_point;
        self.tol_kkt = tol_kkt;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidConfig(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.tol_fixed_point > 0.0) || !(self.tol_kkt > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if let StepSize::Fixed(tau) = self.step {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::InvalidConfig(format!("step must be positive, got {tau}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// The iterate stalled exactly without certifying optimality.
    #[serde(rename = "fixed-point")]
    FixedPoint,
    /// Iterate change and first-order residual both met their tolerances.
    #[serde(rename = "kkt")]
    Kkt,
    #[serde(rename = "max-iter")]
    MaxIter,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: HilbertVector,
    pub iterations: usize,
    /// Objective value at `x^0, ..., x^iterations`; nonincreasing (up to
    /// round-off) for admissible steps at or below `1 / ||A^T A||_2`.
    pub objective_trace: Vec<f64>,
    /// First-order optimality residual at the returned solution.
    pub kkt_residual: f64,
    /// `||A x - u||_{V,2}` at the returned solution, computed directly.
    pub residual_v2: f64,
    /// Row supports of logged iterates (`record_history` only).
    pub support_trace: Vec<Vec<usize>>,
    /// Logged iterates (`record_history` only).
    pub iterate_history: Vec<HilbertVector>,
    pub termination: Termination,
    /// The threshold `tau` actually used.
    pub step: f64,
    /// Penalty weight the solve ran with.
    pub mu: f64,
    /// Power-iteration estimate of `||A^T A||_2`.
    pub spectral_estimate: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    iterations: usize,
    termination: Termination,
    kkt_residual: f64,
    residual_v2: f64,
    step: f64,
    mu: f64,
    spectral_estimate: f64,
    objective_trace: &'a [f64],
    support_trace: &'a [Vec<usize>],
}

impl SolverReport {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIter
    }

    /// Scalar traces as JSON; the solution itself is saved separately via
    /// [`HilbertVector::save_csv`].
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let body = ReportJson {
            iterations: self.iterations,
            termination: self.termination,
            kkt_residual: self.kkt_residual,
            residual_v2: self.residual_v2,
            step: self.step,
            mu: self.mu,
            spectral_estimate: self.spectral_estimate,
            objective_trace: &self.objective_trace,
            support_trace: &self.support_trace,
        };
        let text = serde_json::to_string_pretty(&body)
            .map_err(|e| Error::parse(path, e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Gradient step `x - tau_eff * A^T (A x - u)` with `tau_eff = tau * mu`.
pub fn forward_step(
    x: &HilbertVector,
    a: &Array2<f64>,
    u: &Measurements,
    tau_eff: f64,
) -> HilbertVector {
    assert!(tau_eff > 0.0, "effective step must be positive");
    let ax = apply_matrix(a, x);
    let resid = Measurements::new(ax.data() - u.data(), Arc::clone(u.inner_product()))
        .expect("finite residual");
    let grad = adjoint_apply_matrix(a, &resid);
    let mut out = x.clone();
    out.axpy(-tau_eff, &grad);
    out
}

/// Row-wise soft thresholding of the `V`-norms: row `j` becomes
/// `(x_j / ||x_j||_V) * max(||x_j||_V - tau, 0)`, with rows at or below the
/// threshold (including zero rows) mapped to exactly zero.
pub fn backward_step(x: &HilbertVector, tau: f64) -> HilbertVector {
    assert!(tau > 0.0, "threshold must be positive");
    let mut out = x.clone();
    let k = x.coord_dim();
    for j in 0..x.rows() {
        let norm = x.row_norm(j);
        if norm <= tau {
            for r in 0..k {
                out.data_mut()[[j, r]] = 0.0;
            }
        } else {
            let scale = (norm - tau) / norm;
            for r in 0..k {
                out.data_mut()[[j, r]] *= scale;
            }
        }
    }
    out
}

/// First-order optimality residual of the mixed-norm objective at `x`.
///
/// With `g = mu * A^T (A x - u)`: the maximum over nonzero rows of
/// `||g_j + x_j / ||x_j||_V||_V` and over zero rows of
/// `max(||g_j||_V - 1, 0)`. Zero exactly at minimizers.
pub fn kkt_residual(x: &HilbertVector, a: &Array2<f64>, u: &Measurements, mu: f64) -> f64 {
    let ax = apply_matrix(a, x);
    let resid = Measurements::new(ax.data() - u.data(), Arc::clone(u.inner_product()))
        .expect("finite residual");
    let grad = adjoint_apply_matrix(a, &resid);
    let ip = x.inner_product();
    let k = x.coord_dim();
    let mut worst = 0.0f64;
    let mut row = vec![0.0; k];
    for j in 0..x.rows() {
        let norm = x.row_norm(j);
        if norm > 0.0 {
            for r in 0..k {
                row[r] = mu * grad.data()[[j, r]] + x.data()[[j, r]] / norm;
            }
            worst = worst.max(ip.v_norm(&row));
        } else {
            for r in 0..k {
                row[r] = mu * grad.data()[[j, r]];
            }
            worst = worst.max((ip.v_norm(&row) - 1.0).max(0.0));
        }
    }
    worst
}

/// Objective `||x||_{V,1} + (mu/2) ||A x - u||_{V,2}^2`, computed directly.
pub fn objective_value(x: &HilbertVector, a: &Array2<f64>, u: &Measurements, mu: f64) -> f64 {
    let ax = apply_matrix(a, x);
    let resid = Measurements::new(ax.data() - u.data(), Arc::clone(u.inner_product()))
        .expect("finite residual");
    x.mixed_norm(1.0) + 0.5 * mu * resid.v2_norm().powi(2)
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 500_000;

/// Runs the forward-backward iteration from `x0` (zero when absent) until
/// both the fixed-point and KKT tests pass, the iterate stalls exactly, or
/// `max_iter` is exhausted. Exhaustion is reported through
/// [`Termination::MaxIter`], not as an error.
pub fn solve(
    a: &Array2<f64>,
    u: &Measurements,
    x0: Option<&HilbertVector>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cfg.validate()?;
    let n = a.ncols();
    if a.nrows() != u.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator has {} rows, measurements have {}",
            a.nrows(),
            u.len()
        )));
    }
    let ip = Arc::clone(u.inner_product());
    if let Some(x0) = x0 {
        if x0.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial guess has {} rows, operator has {} columns",
                x0.rows(),
                n
            )));
        }
        if !x0.inner_product().compatible(&ip) {
            return Err(Error::DimensionMismatch(
                "initial guess and measurements use different inner products".into(),
            ));
        }
    }

    if ip.is_identity() {
        let x0_data = x0.map(|v| v.data().clone());
        let internals = solve_identity(a, u.data(), x0_data.as_ref(), cfg)?;
        finish_report(internals, ip, None, cfg)
    } else {
        // one-time Cholesky change of variables into identity coordinates
        let l = ip.cholesky_factor()?;
        let u_t = linalg::matmul(u.data(), &l);
        let x0_t = x0.map(|v| linalg::matmul(v.data(), &l));
        let internals = solve_identity(a, &u_t, x0_t.as_ref(), cfg)?;
        finish_report(internals, ip, Some(l), cfg)
    }
}

/// Raw outcome of the identity-coordinate iteration.
struct SolveInternals {
    x: Array2<f64>,
    iterations: usize,
    objective_trace: Vec<f64>,
    kkt_residual: f64,
    residual_v2: f64,
    support_trace: Vec<Vec<usize>>,
    iterate_history: Vec<Array2<f64>>,
    termination: Termination,
    step: f64,
    spectral_estimate: f64,
}

fn finish_report(
    internals: SolveInternals,
    ip: Arc<InnerProduct>,
    transform: Option<Array2<f64>>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let back = |data: Array2<f64>| -> Result<HilbertVector> {
        let data = match &transform {
            Some(l) => linalg::right_solve_lower(&data, l),
            None => data,
        };
        HilbertVector::new(data, Arc::clone(&ip))
    };
    let solution = back(internals.x)?;
    let mut iterate_history = Vec::with_capacity(internals.iterate_history.len());
    for it in internals.iterate_history {
        iterate_history.push(back(it)?);
    }
    Ok(SolverReport {
        solution,
        iterations: internals.iterations,
        objective_trace: internals.objective_trace,
        kkt_residual: internals.kkt_residual,
        residual_v2: internals.residual_v2,
        support_trace: internals.support_trace,
        iterate_history,
        termination: internals.termination,
        step: internals.step,
        mu: cfg.mu,
        spectral_estimate: internals.spectral_estimate,
    })
}

/// Power iteration on a precomputed Gram matrix; same contract as
/// [`crate::operator::spectral_norm_sq`].
fn power_iteration_gram(b: &Array2<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let n = b.nrows();
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x5eed_0001);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= vn;
    }
    let mut lambda_prev = 0.0;
    let mut best = 0.0f64;
    let mut hits = 0;
    for _ in 0..max_iter {
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += b[[i, j]] * v[j];
            }
            w[i] = s;
        }
        let lambda: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        best = best.max(lambda);
        let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wnorm == 0.0 {
            let mut fresh: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fnorm = fresh.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut fresh {
                *x /= fnorm;
            }
            v = fresh;
            continue;
        }
        if (lambda - lambda_prev).abs() <= tol * lambda.max(f64::MIN_POSITIVE) {
            hits += 1;
            if hits >= 2 {
                return Ok(lambda);
            }
        } else {
            hits = 0;
        }
        lambda_prev = lambda;
        v = w;
        for x in &mut v {
            *x /= wnorm;
        }
    }
    Err(Error::SpectralNormStalled {
        iterations: max_iter,
        best,
    })
}

fn solve_identity(
    a: &Array2<f64>,
    u_data: &Array2<f64>,
    x0: Option<&Array2<f64>>,
    cfg: &SolverConfig,
) -> Result<SolveInternals> {
    let n = a.ncols();
    let k = u_data.ncols();

    let g_mat = linalg::gram(a);
    let h = linalg::at_b(a, u_data);
    let u_sq: f64 = u_data.iter().map(|v| v * v).sum();

    let lambda_hat = if linalg::frobenius(a) == 0.0 {
        // A = 0: the quadratic term is constant; any positive step works
        0.0
    } else {
        power_iteration_gram(&g_mat, POWER_TOL, POWER_MAX_ITER)?
    };
    let (tau, tau_eff) = match cfg.step {
        StepSize::Auto => {
            if lambda_hat == 0.0 {
                return Err(Error::InvalidConfig(
                    "auto step size is undefined for the zero operator".into(),
                ));
            }
            let te = (1.0 - POWER_TOL) / lambda_hat;
            (te / cfg.mu, te)
        }
        StepSize::Fixed(tau) => {
            let te = tau * cfg.mu;
            if lambda_hat > 0.0 && te >= 2.0 / (lambda_hat / (1.0 - POWER_TOL)) {
                return Err(Error::InvalidConfig(format!(
                    "step tau*mu = {te} outside the admissible interval (0, {})",
                    2.0 / lambda_hat
                )));
            }
            (tau, te)
        }
    };

    let mut x = match x0 {
        Some(v) => v.clone(),
        None => Array2::zeros((n, k)),
    };
    let mut grad = grad_at(&g_mat, &h, &x);
    let mut objective_trace = Vec::new();
    objective_trace.push(objective_from_grad(&x, &grad, &h, u_sq, cfg.mu));

    let mut support_trace = Vec::new();
    let mut iterate_history = Vec::new();
    if cfg.record_history {
        support_trace.push(support_of(&x));
        iterate_history.push(x.clone());
    }

    let mut termination = Termination::MaxIter;
    let mut iterations = cfg.max_iter;
    let mut kkt = f64::NAN;
    for iter in 1..=cfg.max_iter {
        // forward: y = x - tau_eff * grad; backward: row-wise shrinkage
        let mut x_next = Array2::<f64>::zeros((n, k));
        let mut diff_sq = 0.0f64;
        let mut x_norm_sq = 0.0f64;
        {
            let x_s = x.as_slice().expect("contiguous");
            let g_s = grad.as_slice().expect("contiguous");
            let next_s = x_next.as_slice_mut().expect("contiguous");
            for j in 0..n {
                let xrow = &x_s[j * k..(j + 1) * k];
                let grow = &g_s[j * k..(j + 1) * k];
                let nrow = &mut next_s[j * k..(j + 1) * k];
                let mut norm_sq = 0.0;
                for ((nv, &xv), &gv) in nrow.iter_mut().zip(xrow).zip(grow) {
                    let yv = xv - tau_eff * gv;
                    *nv = yv;
                    norm_sq += yv * yv;
                }
                let norm = norm_sq.sqrt();
                if norm <= tau {
                    for nv in nrow.iter_mut() {
                        *nv = 0.0;
                    }
                } else {
                    let scale = (norm - tau) / norm;
                    for nv in nrow.iter_mut() {
                        *nv *= scale;
                    }
                }
                for (&nv, &xv) in nrow.iter().zip(xrow) {
                    let d = nv - xv;
                    diff_sq += d * d;
                    x_norm_sq += xv * xv;
                }
            }
        }

        let grad_next = grad_at(&g_mat, &h, &x_next);
        objective_trace.push(objective_from_grad(&x_next, &grad_next, &h, u_sq, cfg.mu));
        if cfg.record_history {
            support_trace.push(support_of(&x_next));
            iterate_history.push(x_next.clone());
        }

        let diff = diff_sq.sqrt();
        if diff <= cfg.tol_fixed_point * x_norm_sq.sqrt().max(1.0) {
            let res = kkt_from_grad(&x_next, &grad_next, cfg.mu);
            if res <= cfg.tol_kkt {
                termination = Termination::Kkt;
                iterations = iter;
                kkt = res;
                x = x_next;
                break;
            }
            if diff == 0.0 {
                // exact stall: no further progress is possible
                termination = Termination::FixedPoint;
                iterations = iter;
                kkt = res;
                x = x_next;
                break;
            }
        }
        x = x_next;
        grad = grad_next;
    }
    if kkt.is_nan() {
        let grad_final = grad_at(&g_mat, &h, &x);
        kkt = kkt_from_grad(&x, &grad_final, cfg.mu);
    }

    // direct residual, free of the cancellation in the quadratic form
    let residual_v2 = {
        let ax = linalg::matmul(a, &x);
        let mut s = 0.0;
        for (p, q) in ax.iter().zip(u_data.iter()) {
            let d = p - q;
            s += d * d;
        }
        s.sqrt()
    };

    Ok(SolveInternals {
        x,
        iterations,
        objective_trace,
        kkt_residual: kkt,
        residual_v2,
        support_trace,
        iterate_history,
        termination,
        step: tau,
        spectral_estimate: lambda_hat,
    })
}

fn grad_at(g_mat: &Array2<f64>, h: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    let mut grad = linalg::matmul(g_mat, x);
    grad.zip_mut_with(h, |g, &hv| *g -= hv);
    grad
}

/// Objective via the quadratic form; exact enough for trace reporting
/// (cancellation is bounded by machine epsilon times the data scale).
fn objective_from_grad(
    x: &Array2<f64>,
    grad: &Array2<f64>,
    h: &Array2<f64>,
    u_sq: f64,
    mu: f64,
) -> f64 {
    let n = x.nrows();
    let k = x.ncols();
    let mut l1 = 0.0;
    let mut x_dot_grad = 0.0;
    let mut x_dot_h = 0.0;
    for j in 0..n {
        let mut norm_sq = 0.0;
        for r in 0..k {
            let v = x[[j, r]];
            norm_sq += v * v;
            x_dot_grad += v * grad[[j, r]];
            x_dot_h += v * h[[j, r]];
        }
        l1 += norm_sq.sqrt();
    }
    let resid_sq = (x_dot_grad - x_dot_h + u_sq).max(0.0);
    l1 + 0.5 * mu * resid_sq
}

fn kkt_from_grad(x: &Array2<f64>, grad: &Array2<f64>, mu: f64) -> f64 {
    let n = x.nrows();
    let k = x.ncols();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut norm_sq = 0.0;
        for r in 0..k {
            norm_sq += x[[j, r]] * x[[j, r]];
        }
        let norm = norm_sq.sqrt();
        let mut s = 0.0;
        if norm > 0.0 {
            for r in 0..k {
                let v = mu * grad[[j, r]] + x[[j, r]] / norm;
                s += v * v;
            }
            worst = worst.max(s.sqrt());
        } else {
            for r in 0..k {
                let v = mu * grad[[j, r]];
                s += v * v;
            }
            worst = worst.max((s.sqrt() - 1.0).max(0.0));
        }
    }
    worst
}

fn support_of(x: &Array2<f64>) -> Vec<usize> {
    (0..x.nrows())
        .filter(|&j| x.row(j).iter().any(|&v| v != 0.0))
        .collect()
}

/// Outcome of the penalty continuation for residual-constrained recovery.
#[derive(Debug)]
pub struct ConstrainedSolve {
    pub report: SolverReport,
    /// Final penalty weight meeting the residual target.
    pub mu: f64,
    /// The residual target `eta / sqrt(m)` that was enforced.
    pub target: f64,
}

const CONTINUATION_MAX_DECADES: usize = 40;
const CONTINUATION_BISECTIONS: usize = 20;

/// Solves the residual-constrained problem
/// `min ||z||_{V,1}  s.t.  ||A z - u||_{V,2} <= eta / sqrt(m)`
/// by geometric continuation over the penalty weight (warm-started, factor
/// 10) followed by a log-space bisection refinement. `cfg.mu` seeds the
/// continuation.
pub fn solve_constrained(
    a: &Array2<f64>,
    u: &Measurements,
    x0: Option<&HilbertVector>,
    cfg: &SolverConfig,
    eta: f64,
) -> Result<ConstrainedSolve> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "eta must be positive (got {eta}); use the unconstrained path when no tail estimate exists"
        )));
    }
    let target = eta / (u.len() as f64).sqrt();

    let run = |mu: f64, warm: Option<&HilbertVector>| -> Result<SolverReport> {
        let mut c = cfg.clone();
        c.mu = mu;
        c.record_history = false;
        solve(a, u, warm, &c)
    };

    // ascend until feasible
    let mut mu = cfg.mu;
    let mut report = run(mu, x0)?;
    let mut best_residual = report.residual_v2;
    let mut lo = None;
    let mut decade = 0;
    while report.residual_v2 > target {
        decade += 1;
        if decade > CONTINUATION_MAX_DECADES {
            return Err(Error::ContinuationStalled {
                target,
                best: best_residual,
            });
        }
        lo = Some(mu);
        mu *= 10.0;
        let warm = report.solution.clone();
        report = run(mu, Some(&warm))?;
        best_residual = best_residual.min(report.residual_v2);
    }

    // if the seed was already feasible, descend to bracket from below
    if lo.is_none() {
        let mut probe = mu / 10.0;
        for _ in 0..CONTINUATION_MAX_DECADES {
            let candidate = run(probe, Some(&report.solution))?;
            if candidate.residual_v2 <= target {
                mu = probe;
                report = candidate;
                probe /= 10.0;
            } else {
                lo = Some(probe);
                break;
            }
        }
    }

    // one bisection refinement pass toward the smallest feasible weight
    if let Some(mut lo) = lo {
        let mut hi = mu;
        for _ in 0..CONTINUATION_BISECTIONS {
            let mid = (lo.ln() + hi.ln()) / 2.0;
            let mid = mid.exp();
            let candidate = run(mid, Some(&report.solution))?;
            if candidate.residual_v2 <= target {
                hi = mid;
                report = candidate;
            } else {
                lo = mid;
            }
        }
        mu = hi;
    }

    Ok(ConstrainedSolve { report, mu, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn identity_hv(data: Array2<f64>) -> HilbertVector {
        let k = data.ncols();
        HilbertVector::new(data, InnerProduct::identity(k)).unwrap()
    }

    fn identity_meas(data: Array2<f64>) -> Measurements {
        let k = data.ncols();
        Measurements::new(data, InnerProduct::identity(k)).unwrap()
    }

    #[test]
    fn backward_step_examples() {
        let x = identity_hv(array![[3.0, 4.0]]);
        let out = backward_step(&x, 1.0);
        assert!((out.data()[[0, 0]] - 2.4).abs() < 1e-15);
        assert!((out.data()[[0, 1]] - 3.2).abs() < 1e-15);

        // boundary: norm equal to the threshold maps to exactly zero
        let x = identity_hv(array![[0.6, 0.8]]);
        let out = backward_step(&x, 1.0);
        assert_eq!(out.data()[[0, 0]], 0.0);
        assert_eq!(out.data()[[0, 1]], 0.0);

        let zero = identity_hv(Array2::zeros((3, 2)));
        let out = backward_step(&zero, 0.5);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_step_respects_gram_norm() {
        let ip = crate::hilbert::InnerProduct::explicit_spd(array![[4.0, 0.0], [0.0, 1.0]]).unwrap();
        // row (1, 0) has V-norm 2
        let x = HilbertVector::new(array![[1.0, 0.0]], ip).unwrap();
        let out = backward_step(&x, 1.0);
        // norm shrinks from 2 to 1: scale 1/2
        assert!((out.data()[[0, 0]] - 0.5).abs() < 1e-15);
        let out = backward_step(&x, 2.0);
        assert_eq!(out.data()[[0, 0]], 0.0);
    }

    #[test]
    fn forward_step_trivia() {
        // zero residual leaves x unchanged
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let x = identity_hv(array![[0.5, 0.25], [-0.75, 1.5]]);
        let u = identity_meas(x.data().clone());
        let out = forward_step(&x, &a, &u, 0.7);
        assert_eq!(out.data(), x.data());

        // A = I, tau_eff = 1 returns u (dyadic data keeps it exact)
        let u = identity_meas(array![[0.25, -0.5], [1.0, 0.125]]);
        let out = forward_step(&x, &a, &u, 1.0);
        assert_eq!(out.data(), u.data());
    }

    #[test]
    fn forward_step_is_nonexpansive() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((6, 10), |_| rng.random_range(-1.0..1.0));
        let lambda = crate::operator::spectral_norm_sq(&a, 1e-12, 100_000).unwrap();
        let tau_eff = 1.9 / lambda;
        let u = identity_meas(Array2::from_shape_fn((6, 3), |_| rng.random_range(-1.0..1.0)));
        for _ in 0..100 {
            let v = identity_hv(Array2::from_shape_fn((10, 3), |_| rng.random_range(-1.0..1.0)));
            let w = identity_hv(Array2::from_shape_fn((10, 3), |_| rng.random_range(-1.0..1.0)));
            let gv = forward_step(&v, &a, &u, tau_eff);
            let gw = forward_step(&w, &a, &u, tau_eff);
            let lhs = gv.sub(&gw).mixed_norm(2.0);
            let rhs = v.sub(&w).mixed_norm(2.0);
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn kkt_residual_trivia() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let x = identity_hv(Array2::zeros((2, 2)));
        let u = identity_meas(Array2::zeros((2, 2)));
        assert_eq!(kkt_residual(&x, &a, &u, 1.0), 0.0);

        // zero is optimal iff the dual norm of the gradient is at most 1
        let u = identity_meas(array![[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(kkt_residual(&x, &a, &u, 1.0), 0.0);
        let u = identity_meas(array![[3.0, 0.0], [0.0, 0.0]]);
        assert!(kkt_residual(&x, &a, &u, 1.0) > 1.0);
    }

    #[test]
    fn solve_zero_data_stops_immediately() {
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let u = identity_meas(Array2::zeros((2, 2)));
        let report = solve(&a, &u, None, &SolverConfig::new(1.0)).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.termination, Termination::Kkt);
        assert!(report.solution.data().iter().all(|&v| v == 0.0));
        assert_eq!(report.kkt_residual, 0.0);
    }

    #[test]
    fn identity_operator_solution_is_prox_of_data() {
        let u_data = array![[3.0, 4.0], [0.25, 0.0], [-2.0, 0.0]];
        let a = Array2::<f64>::eye(3);
        let u = identity_meas(u_data.clone());
        let cfg = SolverConfig::new(1.0).with_step(1.0);
        let report = solve(&a, &u, None, &cfg).unwrap();
        let expect = backward_step(&identity_hv(u_data), 1.0);
        assert_eq!(report.solution.data(), expect.data());
        assert_eq!(report.termination, Termination::Kkt);
    }

    #[test]
    fn inadmissible_fixed_step_is_rejected() {
        let a = Array2::<f64>::eye(2);
        let u = identity_meas(Array2::zeros((2, 1)));
        let cfg = SolverConfig::new(1.0).with_step(2.5);
        assert!(solve(&a, &u, None, &cfg).is_err());
    }

    #[test]
    fn objective_trace_is_monotone_on_random_instance() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let a = Array2::from_shape_fn((8, 16), |_| rng.random_range(-1.0..1.0) / 8f64.sqrt());
        let u = identity_meas(Array2::from_shape_fn((8, 2), |_| rng.random_range(-1.0..1.0)));
        let cfg = SolverConfig::new(50.0).with_max_iter(2000);
        let report = solve(&a, &u, None, &cfg).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn planted_row_sparse_signal_is_recovered() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let (m, n, k) = (24, 32, 3);
        let a = Array2::from_shape_fn((m, n), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) / (m as f64).sqrt()
        });
        let ip = InnerProduct::identity(k);
        let mut truth = Array2::<f64>::zeros((n, k));
        for r in 0..k {
            truth[[4, r]] = 1.0 + r as f64;
            truth[[20, r]] = -0.5 * (r as f64 + 1.0);
        }
        let x_star = HilbertVector::new(truth, Arc::clone(&ip)).unwrap();
        let u = apply_matrix(&a, &x_star);

        // continuation toward a large penalty removes the shrinkage bias;
        // the attainable KKT residual scales with mu (the gradient is
        // multiplied by it), so certify optimality at the last stage where
        // 1e-9 is meaningful in f64
        let mut warm: Option<HilbertVector> = None;
        let mut report = None;
        for mu in [1e2, 1e4, 1e6] {
            let cfg = SolverConfig::new(mu).with_tolerances(1e-12, 1e-9);
            let r = solve(&a, &u, warm.as_ref(), &cfg).unwrap();
            warm = Some(r.solution.clone());
            report = Some(r);
        }
        let report = report.unwrap();
        let sol = &report.solution;
        assert_eq!(sol.row_support(1e-6), vec![4, 20]);
        let err = sol.sub(&x_star).mixed_norm(2.0) / x_star.mixed_norm(2.0);
        assert!(err < 1e-6, "relative error {err}");
        assert!(report.kkt_residual <= 1e-9);
    }

    #[test]
    fn support_stabilizes_on_noiseless_instance() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (m, n, k) = (16, 24, 2);
        let a = Array2::from_shape_fn((m, n), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) / (m as f64).sqrt()
        });
        let ip = InnerProduct::identity(k);
        let mut truth = Array2::<f64>::zeros((n, k));
        truth[[5, 0]] = 2.0;
        truth[[5, 1]] = -1.0;
        let x_star = HilbertVector::new(truth, Arc::clone(&ip)).unwrap();
        let u = apply_matrix(&a, &x_star);
        let stage = solve(&a, &u, None, &SolverConfig::new(1e2).with_max_iter(20_000)).unwrap();
        let cfg = SolverConfig::new(1e4).with_history().with_max_iter(20_000);
        let report = solve(&a, &u, Some(&stage.solution), &cfg).unwrap();
        assert_eq!(report.termination, Termination::Kkt);
        // the support settles well before termination: the last fifth of
        // the trace is constant and equals the planted support
        let final_support = report.support_trace.last().unwrap().clone();
        let tail_start = report.support_trace.len() * 4 / 5;
        for s in &report.support_trace[tail_start..] {
            assert_eq!(s, &final_support);
        }
        assert_eq!(final_support, vec![5]);
    }

    #[test]
    fn gram_geometry_matches_explicit_transform() {
        // solving with an SPD Gram equals transforming by its Cholesky
        // factor, solving with the identity, and mapping back
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let (m, n, k) = (6, 8, 3);
        let a = Array2::from_shape_fn((m, n), |_| rng.random_range(-0.5..0.5));
        let gram = array![[2.0, 0.5, 0.0], [0.5, 1.0, 0.25], [0.0, 0.25, 3.0]];
        let ip = InnerProduct::explicit_spd(gram.clone()).unwrap();
        let u_raw = Array2::from_shape_fn((m, k), |_| rng.random_range(-1.0..1.0));
        let u = Measurements::new(u_raw.clone(), Arc::clone(&ip)).unwrap();
        let cfg = SolverConfig::new(25.0).with_tolerances(1e-12, 1e-10);
        let report = solve(&a, &u, None, &cfg).unwrap();

        let l = crate::linalg::cholesky_lower(&gram).unwrap();
        let u_t = identity_meas(crate::linalg::matmul(&u_raw, &l));
        let report_t = solve(&a, &u_t, None, &cfg).unwrap();
        let mapped_back = crate::linalg::right_solve_lower(report_t.solution.data(), &l);
        for (x, y) in report.solution.data().iter().zip(mapped_back.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((report.kkt_residual - report_t.kkt_residual).abs() < 1e-12);
    }

    #[test]
    fn constrained_continuation_meets_target() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let (m, n, k) = (12, 20, 2);
        let a = Array2::from_shape_fn((m, n), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) / (m as f64).sqrt()
        });
        let ip = InnerProduct::identity(k);
        let mut truth = Array2::<f64>::zeros((n, k));
        truth[[3, 0]] = 1.5;
        truth[[3, 1]] = 0.5;
        truth[[11, 0]] = -1.0;
        let x_star = HilbertVector::new(truth, Arc::clone(&ip)).unwrap();
        let u = apply_matrix(&a, &x_star);

        let eta = 0.05 * (m as f64).sqrt(); // target residual 0.05
        let cfg = SolverConfig::new(1.0);
        let out = solve_constrained(&a, &u, None, &cfg, eta).unwrap();
        assert!(out.report.residual_v2 <= out.target + 1e-12);
        // the bisection keeps the weight near the feasibility boundary:
        // a decade less regularized must violate the target
        let mut weaker = cfg.clone();
        weaker.mu = out.mu / 10.0;
        let check = solve(&a, &u, None, &weaker).unwrap();
        assert!(check.residual_v2 > out.target);
    }

    #[test]
    fn constrained_rejects_nonpositive_eta() {
        let a = Array2::<f64>::eye(2);
        let u = identity_meas(Array2::zeros((2, 1)));
        assert!(solve_constrained(&a, &u, None, &SolverConfig::new(1.0), 0.0).is_err());
    }

    #[test]
    fn max_iter_exhaustion_reports_not_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = Array2::from_shape_fn((4, 8), |_| rng.random_range(-1.0..1.0));
        let u = identity_meas(Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0)));
        let cfg = SolverConfig::new(100.0).with_max_iter(3);
        let report = solve(&a, &u, None, &cfg).unwrap();
        assert_eq!(report.termination, Termination::MaxIter);
        assert_eq!(report.iterations, 3);
    }

    #[test]
    fn report_json_round_trips_through_serde() {
        let a = Array2::<f64>::eye(2);
        let u = identity_meas(array![[2.0, 0.0], [0.0, 0.0]]);
        let cfg = SolverConfig::new(1.0).with_step(1.0).with_history();
        let report = solve(&a, &u, None, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        report.save_json(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["iterations"].as_u64().unwrap() as usize, report.iterations);
        assert_eq!(parsed["termination"], "kkt");
        assert!(parsed["objective_trace"].as_array().unwrap().len() >= 2);
    }
}
