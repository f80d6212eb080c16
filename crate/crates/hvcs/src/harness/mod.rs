//! End-to-end experiment driver.
//!
//! For each trial and sample budget: draw parameter points, evaluate the
//! field sampler (normally the elliptic model problem), assemble the
//! sampling operator, recover the expansion by mixed-norm regularization,
//! extract mean and standard-deviation fields, and record relative
//! energy-norm errors against a high-sample Monte Carlo reference. Monte
//! Carlo and least-squares baselines run on the same per-trial sample sets.
//!
//! Sample draws are nested within a trial (each budget extends the previous
//! one) and trial `t` is seeded with `seed + t`, so any trial reproduces in
//! isolation; the reference uses `seed - 1`. The whole pipeline is a pure
//! function of the configuration: records, summaries, and metadata are
//! byte-identical across runs.

pub mod config;
pub mod report;
pub mod sampler;

use std::sync::Arc;

use ndarray::Array1;
use rayon::prelude::*;

pub use config::{ExperimentConfig, Method, SolverSettings};
pub use report::{emit_report, parse_records, summarize, ErrorRecord, FlagNote, ReportPaths, RunMetadata};
pub use sampler::{draw_samples, to_basis_coords, FieldSampler, PdeFieldSampler};

use crate::error::{Error, Result};
use crate::expansion::ExpansionModel;
use crate::hilbert::{HilbertVector, InnerProduct};
use crate::multiindex::{total_degree_set, IndexSet};
use crate::operator::{apply_matrix, Measurements, SamplingOperator};
use crate::pde::{DiffusionCoefficient, PdeProblem};
use crate::solver::{solve, solve_constrained, SolverConfig, Termination};

/// Hard limit on penalty-grid extension decades.
const MU_DECADE_CAP: usize = 12;

/// High-sample Monte Carlo reference fields with retained samples for
/// empirical error evaluation.
#[derive(Debug, Clone)]
pub struct ReferenceFields {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
    /// Physical parameter points the reference was built from.
    pub samples: Vec<Vec<f64>>,
    pub solutions: Vec<Array1<f64>>,
    pub seed: u64,
    /// Relative change of the fields against the half-sample estimate.
    pub floor_mean: f64,
    pub floor_std: f64,
}

/// Everything a run produces besides files.
#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<ErrorRecord>,
    pub flags: Vec<FlagNote>,
    pub metadata: RunMetadata,
}

impl RunOutput {
    /// Numerical trouble occurred somewhere (solver iteration caps).
    pub fn has_flags(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// A configured experiment: index set, field sampler, and geometry.
pub struct Experiment {
    config: ExperimentConfig,
    set: IndexSet,
    field_sampler: Box<dyn FieldSampler>,
    ip: Arc<InnerProduct>,
}

struct TrialData {
    points: Vec<Vec<f64>>,
    solutions: Vec<Array1<f64>>,
}

impl Experiment {
    /// Builds the standard PDE-backed experiment.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let coefficient = DiffusionCoefficient::with_amplitude_scale(
            config.dimension,
            config.correlation_length,
            config.variant,
            config.amplitude_scale,
        )?;
        let problem = PdeProblem::new(config.spatial_nodes, coefficient)?;
        let ip = Arc::clone(problem.energy_inner_product());
        let field_sampler = Box::new(PdeFieldSampler::new(problem));
        Self::assemble(config.clone(), field_sampler, ip)
    }

    /// Uses a custom field sampler (e.g. a planted polynomial) in place of
    /// the PDE; the inner product fixes the `V` geometry.
    pub fn with_sampler(
        config: &ExperimentConfig,
        field_sampler: Box<dyn FieldSampler>,
        ip: Arc<InnerProduct>,
    ) -> Result<Self> {
        config.validate()?;
        Self::assemble(config.clone(), field_sampler, ip)
    }

    fn assemble(
        config: ExperimentConfig,
        field_sampler: Box<dyn FieldSampler>,
        ip: Arc<InnerProduct>,
    ) -> Result<Self> {
        if field_sampler.parametric_dim() != config.dimension {
            return Err(Error::DimensionMismatch(format!(
                "sampler has parametric dimension {}, config says {}",
                field_sampler.parametric_dim(),
                config.dimension
            )));
        }
        if field_sampler.field_dim() != ip.dim() {
            return Err(Error::DimensionMismatch(format!(
                "sampler produces fields of dimension {}, inner product has {}",
                field_sampler.field_dim(),
                ip.dim()
            )));
        }
        let set = total_degree_set(config.dimension, config.degree)?;
        if config.methods.contains(&Method::Ols) {
            let m_min = config.sdof_schedule[0];
            if m_min < set.len() {
                return Err(Error::Underdetermined {
                    m: m_min,
                    n: set.len(),
                });
            }
        }
        Ok(Experiment {
            config,
            set,
            field_sampler,
            ip,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    pub fn inner_product(&self) -> &Arc<InnerProduct> {
        &self.ip
    }

    fn max_sdof(&self) -> usize {
        *self.config.sdof_schedule.last().expect("validated nonempty")
    }

    fn trial_seed(&self, trial: usize) -> u64 {
        self.config.seed.wrapping_add(trial as u64)
    }

    fn trial_data(&self, trial: usize) -> TrialData {
        let points = draw_samples(self.max_sdof(), self.config.dimension, self.trial_seed(trial));
        let solutions: Vec<Array1<f64>> = points
            .par_iter()
            .map(|t| self.field_sampler.sample(t))
            .collect();
        TrialData { points, solutions }
    }

    /// Builds the Monte Carlo reference with
    /// `reference_factor * max(sdof_schedule)` samples at seed `seed - 1`,
    /// along with its half-sample floor estimate.
    pub fn build_reference(&self) -> Result<ReferenceFields> {
        let m_ref = self
            .config
            .reference_factor
            .saturating_mul(self.max_sdof())
            .max(2);
        let seed = self.config.seed.wrapping_sub(1);
        let samples = draw_samples(m_ref, self.config.dimension, seed);
        let solutions: Vec<Array1<f64>> = samples
            .par_iter()
            .map(|t| self.field_sampler.sample(t))
            .collect();
        let (mean, std) = mean_std_fields(&solutions);
        let (mean_half, std_half) = mean_std_fields(&solutions[..m_ref / 2]);
        let floor_mean = relative_error(&self.ip, &mean_half, &mean);
        let floor_std = relative_error(&self.ip, &std_half, &std);
        Ok(ReferenceFields {
            mean,
            std,
            samples,
            solutions,
            seed,
            floor_mean,
            floor_std,
        })
    }

    /// Runs every configured method against a shared reference and collects
    /// records (method-major, then trial, then budget), flags, and metadata.
    pub fn run(&self) -> Result<RunOutput> {
        let reference = self.build_reference()?;
        let trial_outcomes: Vec<(Vec<Vec<ErrorRecord>>, Vec<FlagNote>)> = (0..self.config.trials)
            .into_par_iter()
            .map(|trial| self.run_trial(trial, &reference))
            .collect::<Result<Vec<_>>>()?;

        let mut records = Vec::new();
        for (method_idx, _) in self.config.methods.iter().enumerate() {
            for (per_method, _) in &trial_outcomes {
                records.extend(per_method[method_idx].iter().cloned());
            }
        }
        let m_ref = reference.solutions.len();
        records.push(ErrorRecord {
            method: Method::Reference,
            sdof: m_ref,
            trial: 0,
            rel_err_mean: reference.floor_mean,
            rel_err_std: reference.floor_std,
        });
        let mut flags = Vec::new();
        for (_, trial_flags) in trial_outcomes {
            flags.extend(trial_flags);
        }
        let metadata = RunMetadata {
            config: self.config.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            trial_seed_rule: "trial t draws with seed + t; reference with seed - 1".into(),
            reference_seed: reference.seed,
            reference_samples: m_ref,
            reference_floor_mean: reference.floor_mean,
            reference_floor_std: reference.floor_std,
            flags: flags.clone(),
        };
        Ok(RunOutput {
            records,
            flags,
            metadata,
        })
    }

    fn run_trial(
        &self,
        trial: usize,
        reference: &ReferenceFields,
    ) -> Result<(Vec<Vec<ErrorRecord>>, Vec<FlagNote>)> {
        let data = self.trial_data(trial);
        let mut per_method = Vec::with_capacity(self.config.methods.len());
        let mut flags = Vec::new();
        for &method in &self.config.methods {
            let records = match method {
                Method::Scs => self.scs_trial(trial, &data, reference, &mut flags)?,
                Method::Mc => self.mc_trial(trial, &data, reference),
                Method::Ols => self.ols_trial(trial, &data, reference, &mut flags)?,
                Method::Reference => Vec::new(),
            };
            per_method.push(records);
        }
        Ok((per_method, flags))
    }

    /// Sparse recovery over the full schedule of one trial.
    pub fn run_scs(&self, reference: &ReferenceFields) -> Result<(Vec<ErrorRecord>, Vec<FlagNote>)> {
        self.run_method(reference, |exp, trial, data, flags| {
            exp.scs_trial(trial, data, reference, flags)
        })
    }

    /// Monte Carlo baseline on the same per-trial samples.
    pub fn run_mc(&self, reference: &ReferenceFields) -> Result<(Vec<ErrorRecord>, Vec<FlagNote>)> {
        self.run_method(reference, |exp, trial, data, _flags| {
            Ok(exp.mc_trial(trial, data, reference))
        })
    }

    /// Least-squares baseline; requires every scheduled budget to be at
    /// least the basis cardinality.
    pub fn run_ols(&self, reference: &ReferenceFields) -> Result<(Vec<ErrorRecord>, Vec<FlagNote>)> {
        let n = self.set.len();
        let m_min = self.config.sdof_schedule[0];
        if m_min < n {
            return Err(Error::Underdetermined { m: m_min, n });
        }
        self.run_method(reference, |exp, trial, data, flags| {
            exp.ols_trial(trial, data, reference, flags)
        })
    }

    fn run_method<F>(
        &self,
        _reference: &ReferenceFields,
        worker: F,
    ) -> Result<(Vec<ErrorRecord>, Vec<FlagNote>)>
    where
        F: Fn(&Self, usize, &TrialData, &mut Vec<FlagNote>) -> Result<Vec<ErrorRecord>> + Sync,
    {
        let outcomes: Vec<(Vec<ErrorRecord>, Vec<FlagNote>)> = (0..self.config.trials)
            .into_par_iter()
            .map(|trial| {
                let data = self.trial_data(trial);
                let mut flags = Vec::new();
                let records = worker(self, trial, &data, &mut flags)?;
                Ok((records, flags))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut records = Vec::new();
        let mut flags = Vec::new();
        for (r, f) in outcomes {
            records.extend(r);
            flags.extend(f);
        }
        Ok((records, flags))
    }

    fn scs_trial(
        &self,
        trial: usize,
        data: &TrialData,
        reference: &ReferenceFields,
        flags: &mut Vec<FlagNote>,
    ) -> Result<Vec<ErrorRecord>> {
        let mut records = Vec::new();
        let mut warm: Option<HilbertVector> = None;
        for &m in &self.config.sdof_schedule {
            let (solution, notes) = self.recover_at(&data.points[..m], &data.solutions[..m], warm.as_ref())?;
            for detail in notes {
                flags.push(FlagNote {
                    method: Method::Scs,
                    sdof: m,
                    trial,
                    detail,
                });
            }
            warm = Some(solution.clone());
            let model = ExpansionModel::new(self.set.clone(), solution)?;
            records.push(self.error_record(Method::Scs, m, trial, &model.mean_field(), &model.std_field(), reference));
        }
        Ok(records)
    }

    /// One sparse recovery at a fixed sample budget: residual-constrained
    /// continuation when a tail estimate `eta` is configured, otherwise
    /// penalty-weight selection by cross-validated discrepancy (hold out a
    /// sample fraction, scan a geometric weight grid warm-started upward,
    /// keep the weight with the smallest held-out residual, refit on all
    /// samples).
    fn recover_at(
        &self,
        points: &[Vec<f64>],
        solutions: &[Array1<f64>],
        warm: Option<&HilbertVector>,
    ) -> Result<(HilbertVector, Vec<String>)> {
        let m = points.len();
        let mut notes = Vec::new();
        let base_cfg = SolverConfig {
            mu: 1.0,
            step: crate::solver::StepSize::Auto,
            tol_fixed_point: self.config.solver.tol_fixed_point,
            tol_kkt: self.config.solver.tol_kkt,
            max_iter: self.config.solver.max_iter,
            record_history: false,
        };

        if let Some(eta) = self.config.eta {
            let y: Vec<Vec<f64>> = points.iter().map(|t| to_basis_coords(t)).collect();
            let a = SamplingOperator::assemble(self.set.clone(), &y)?;
            let u = Measurements::from_solution_samples(solutions, Arc::clone(&self.ip))?;
            let out = solve_constrained(a.matrix(), &u, warm, &base_cfg, eta)?;
            if out.report.termination == Termination::MaxIter {
                notes.push(format!(
                    "constrained solve hit max_iter at mu = {:.3e}",
                    out.mu
                ));
            }
            return Ok((out.report.solution, notes));
        }

        // hold-out split: a prefix trains, the tail validates
        let m_val = ((self.config.solver.validation_fraction * m as f64).round() as usize)
            .clamp(1, m - 1);
        let m_train = m - m_val;
        let y_train: Vec<Vec<f64>> = points[..m_train].iter().map(|t| to_basis_coords(t)).collect();
        let y_val: Vec<Vec<f64>> = points[m_train..].iter().map(|t| to_basis_coords(t)).collect();
        let a_train = SamplingOperator::assemble(self.set.clone(), &y_train)?;
        let u_train = Measurements::from_solution_samples(&solutions[..m_train], Arc::clone(&self.ip))?;
        let a_val = SamplingOperator::assemble(self.set.clone(), &y_val)?;
        let u_val = Measurements::from_solution_samples(&solutions[m_train..], Arc::clone(&self.ip))?;

        // the weight at which the zero vector stops being optimal anchors
        // the grid
        let correlation = a_train.adjoint_apply(&u_train);
        let lambda_max = correlation
            .row_norms()
            .into_iter()
            .fold(0.0f64, f64::max);
        if lambda_max == 0.0 {
            // degenerate zero data: zero is the exact minimizer
            return Ok((HilbertVector::zeros(self.set.len(), Arc::clone(&self.ip)), notes));
        }

        // scan the base grid, then keep extending while the largest weight
        // is still the held-out winner (up to a hard cap), so the grid
        // boundary never caps the attainable fit
        let base_decades = self.config.solver.mu_grid_decades;
        let cap = base_decades.max(MU_DECADE_CAP);
        let mut best: Option<(f64, usize, f64, HilbertVector)> = None;
        let mut warm_cv: Option<HilbertVector> = warm.cloned();
        let mut decade = 1;
        while decade <= cap {
            if decade > base_decades {
                match &best {
                    Some((_, d, _, _)) if *d == decade - 1 => {}
                    _ => break,
                }
            }
            let mu = 10f64.powi(decade as i32) / lambda_max;
            let mut cfg = base_cfg.clone();
            cfg.mu = mu;
            let report = solve(a_train.matrix(), &u_train, warm_cv.as_ref(), &cfg)?;
            if report.termination == Termination::MaxIter {
                notes.push(format!("CV solve hit max_iter at mu = {mu:.3e}"));
            }
            let residual = validation_residual(&a_val, &u_val, &report.solution);
            if best.as_ref().map_or(true, |(r, _, _, _)| residual < *r) {
                best = Some((residual, decade, mu, report.solution.clone()));
            }
            warm_cv = Some(report.solution);
            decade += 1;
        }
        let (_, _, mu_best, cv_solution) = best.expect("grid has at least one decade");

        let y_full: Vec<Vec<f64>> = points.iter().map(|t| to_basis_coords(t)).collect();
        let a_full = SamplingOperator::assemble(self.set.clone(), &y_full)?;
        let u_full = Measurements::from_solution_samples(solutions, Arc::clone(&self.ip))?;
        let mut cfg = base_cfg;
        cfg.mu = mu_best;
        let report = solve(a_full.matrix(), &u_full, Some(&cv_solution), &cfg)?;
        if report.termination == Termination::MaxIter {
            notes.push(format!("final solve hit max_iter at mu = {mu_best:.3e}"));
        }
        Ok((report.solution, notes))
    }

    fn mc_trial(
        &self,
        trial: usize,
        data: &TrialData,
        reference: &ReferenceFields,
    ) -> Vec<ErrorRecord> {
        let mut records = Vec::new();
        for &m in &self.config.sdof_schedule {
            let (mean, std) = mean_std_fields(&data.solutions[..m]);
            records.push(self.error_record(Method::Mc, m, trial, &mean, &std, reference));
        }
        records
    }

    fn ols_trial(
        &self,
        trial: usize,
        data: &TrialData,
        reference: &ReferenceFields,
        flags: &mut Vec<FlagNote>,
    ) -> Result<Vec<ErrorRecord>> {
        let n = self.set.len();
        let mut records = Vec::new();
        for &m in &self.config.sdof_schedule {
            if m < n {
                return Err(Error::Underdetermined { m, n });
            }
            let y: Vec<Vec<f64>> = data.points[..m].iter().map(|t| to_basis_coords(t)).collect();
            let a = SamplingOperator::assemble(self.set.clone(), &y)?;
            let u = Measurements::from_solution_samples(&data.solutions[..m], Arc::clone(&self.ip))?;
            let gram = crate::linalg::gram(a.matrix());
            let rhs = crate::linalg::at_b(a.matrix(), u.data());
            let coeffs = match crate::linalg::spd_solve_many(&gram, &rhs) {
                Some(c) => c,
                None => {
                    flags.push(FlagNote {
                        method: Method::Ols,
                        sdof: m,
                        trial,
                        detail: "normal equations singular".into(),
                    });
                    continue;
                }
            };
            let solution = HilbertVector::new(coeffs, Arc::clone(&self.ip))?;
            let model = ExpansionModel::new(self.set.clone(), solution)?;
            records.push(self.error_record(Method::Ols, m, trial, &model.mean_field(), &model.std_field(), reference));
        }
        Ok(records)
    }

    fn error_record(
        &self,
        method: Method,
        sdof: usize,
        trial: usize,
        mean: &Array1<f64>,
        std: &Array1<f64>,
        reference: &ReferenceFields,
    ) -> ErrorRecord {
        ErrorRecord {
            method,
            sdof,
            trial,
            rel_err_mean: relative_error(&self.ip, mean, &reference.mean),
            rel_err_std: relative_error(&self.ip, std, &reference.std),
        }
    }
}

/// Residual of a candidate on held-out data, `||A_val x - u_val||_{V,2}`.
fn validation_residual(a_val: &SamplingOperator, u_val: &Measurements, x: &HilbertVector) -> f64 {
    let predicted = apply_matrix(a_val.matrix(), x);
    let diff = predicted.data() - u_val.data();
    let m = Measurements::new(diff, Arc::clone(u_val.inner_product())).expect("finite residual");
    m.v2_norm()
}

/// Sample mean and (pointwise, unbiased) standard deviation of fields.
/// Variances below the squared rounding noise of the field scale are
/// truncated to exactly zero, so constant samples report zero deviation
/// instead of summation noise.
fn mean_std_fields(solutions: &[Array1<f64>]) -> (Array1<f64>, Array1<f64>) {
    assert!(!solutions.is_empty());
    let k = solutions[0].len();
    let m = solutions.len();
    let mut mean = Array1::<f64>::zeros(k);
    for s in solutions {
        mean += s;
    }
    mean /= m as f64;
    let mut var = Array1::<f64>::zeros(k);
    if m >= 2 {
        let mut scale = Array1::<f64>::zeros(k);
        for s in solutions {
            for r in 0..k {
                let d = s[r] - mean[r];
                var[r] += d * d;
                scale[r] = scale[r].max(s[r].abs());
            }
        }
        var /= (m - 1) as f64;
        for r in 0..k {
            let noise = 1e-14 * scale[r];
            if var[r] <= noise * noise {
                var[r] = 0.0;
            }
        }
    }
    (mean, var.mapv_into(f64::sqrt))
}

/// Relative `V`-norm error, falling back to the absolute error when the
/// reference vanishes.
fn relative_error(ip: &Arc<InnerProduct>, field: &Array1<f64>, reference: &Array1<f64>) -> f64 {
    let diff: Vec<f64> = field
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| a - b)
        .collect();
    let num = ip.v_norm(&diff);
    let den = ip.v_norm(reference.as_slice().expect("contiguous"));
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Convenience wrapper: build, run, and emit the report files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(RunOutput, ReportPaths)> {
    let experiment = Experiment::from_config(config)?;
    let output = experiment.run()?;
    let paths = emit_report(
        &output.records,
        &output.metadata,
        &config.output_dir,
        &config.file_stem(),
    )?;
    Ok((output, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::CoefficientVariant;

    fn tiny_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.dimension = 3;
        c.degree = 1;
        c.spatial_nodes = 15;
        c.sdof_schedule = vec![6, 12];
        c.trials = 2;
        c.seed = 11;
        c.reference_factor = 20;
        c.solver.mu_grid_decades = 5;
        c
    }

    #[test]
    fn degenerate_coefficient_recovers_exactly() {
        let mut c = tiny_config();
        c.amplitude_scale = 0.0;
        c.variant = CoefficientVariant::Affine;
        let exp = Experiment::from_config(&c).unwrap();
        let reference = exp.build_reference().unwrap();
        let (records, flags) = exp.run_scs(&reference).unwrap();
        assert!(flags.is_empty());
        for r in &records {
            assert!(r.rel_err_mean <= 1e-8, "mean error {}", r.rel_err_mean);
            assert!(r.rel_err_std <= 1e-8, "std error {}", r.rel_err_std);
        }
        // MC is exact here as well
        let (mc, _) = exp.run_mc(&reference).unwrap();
        for r in &mc {
            assert!(r.rel_err_mean <= 1e-12);
            assert_eq!(r.rel_err_std, 0.0);
        }
    }

    #[test]
    fn reference_is_reproducible_and_floored() {
        let c = tiny_config();
        let exp = Experiment::from_config(&c).unwrap();
        let a = exp.build_reference().unwrap();
        let b = exp.build_reference().unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std, b.std);
        assert!(a.floor_mean >= 0.0 && a.floor_mean.is_finite());
        // reference error against itself is zero
        assert_eq!(relative_error(exp.inner_product(), &a.mean, &b.mean), 0.0);
    }

    #[test]
    fn ols_requires_enough_samples() {
        let mut c = tiny_config();
        c.methods = vec![Method::Ols];
        // N = C(3+1,1) = 4 <= 6: fine
        let exp = Experiment::from_config(&c).unwrap();
        let reference = exp.build_reference().unwrap();
        let (records, flags) = exp.run_ols(&reference).unwrap();
        assert!(flags.is_empty());
        assert_eq!(records.len(), 2 * 2);

        // an undersampled schedule is refused outright
        let mut c2 = tiny_config();
        c2.dimension = 8;
        c2.degree = 2; // N = 45 > 6
        c2.methods = vec![Method::Ols];
        assert!(matches!(
            Experiment::from_config(&c2),
            Err(Error::Underdetermined { .. })
        ));
    }

    #[test]
    fn ols_interpolates_at_critical_sampling() {
        // m = N with a well-conditioned square system: residual ~ 0
        let mut c = tiny_config();
        c.sdof_schedule = vec![4];
        c.trials = 1;
        let exp = Experiment::from_config(&c).unwrap();
        let data = exp.trial_data(0);
        let y: Vec<Vec<f64>> = data.points.iter().map(|t| to_basis_coords(t)).collect();
        let a = SamplingOperator::assemble(exp.index_set().clone(), &y).unwrap();
        let u = Measurements::from_solution_samples(&data.solutions, Arc::clone(exp.inner_product())).unwrap();
        let gram = crate::linalg::gram(a.matrix());
        let rhs = crate::linalg::at_b(a.matrix(), u.data());
        let coeffs = crate::linalg::spd_solve_many(&gram, &rhs).expect("invertible");
        let x = HilbertVector::new(coeffs, Arc::clone(exp.inner_product())).unwrap();
        let resid = apply_matrix(a.matrix(), &x).data() - u.data();
        let norm: f64 = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1e-10, "interpolation residual {norm}");
    }

    #[test]
    fn run_produces_ordered_records_and_metadata() {
        let c = tiny_config();
        let exp = Experiment::from_config(&c).unwrap();
        let out = exp.run().unwrap();
        // methods appear in config order, trials within, budgets within
        let scs: Vec<&ErrorRecord> = out.records.iter().filter(|r| r.method == Method::Scs).collect();
        assert_eq!(scs.len(), 4);
        assert_eq!((scs[0].trial, scs[0].sdof), (0, 6));
        assert_eq!((scs[1].trial, scs[1].sdof), (0, 12));
        assert_eq!((scs[2].trial, scs[2].sdof), (1, 6));
        let reference: Vec<&ErrorRecord> =
            out.records.iter().filter(|r| r.method == Method::Reference).collect();
        assert_eq!(reference.len(), 1);
        assert_eq!(reference[0].sdof, 20 * 12);
        assert_eq!(out.metadata.reference_samples, 240);
    }
}
