use hvcs::harness::{draw_samples, to_basis_coords, ExperimentConfig};
use hvcs::hilbert::HilbertVector;
use hvcs::operator::{apply_matrix, Measurements, SamplingOperator};
use hvcs::pde::{DiffusionCoefficient, CoefficientVariant, PdeProblem};
use hvcs::solver::{solve, SolverConfig, StepSize};
use hvcs::multiindex::total_degree_set;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let cfg = ExperimentConfig::default();
    let coef = DiffusionCoefficient::new(8, 0.5, CoefficientVariant::Affine).unwrap();
    let problem = PdeProblem::new(63, coef).unwrap();
    let ip = Arc::clone(problem.energy_inner_product());
    let set = total_degree_set(8, 2).unwrap();
    let points = draw_samples(160, 8, cfg.seed);
    let sols: Vec<_> = points.iter().map(|t| problem.solve(t)).collect();

    for &m in &[20usize, 160] {
        println!("=== m = {m}");
        let m_val = ((0.2 * m as f64).round() as usize).clamp(1, m - 1);
        let m_train = m - m_val;
        let y_train: Vec<Vec<f64>> = points[..m_train].iter().map(|t| to_basis_coords(t)).collect();
        let a_train = SamplingOperator::assemble(set.clone(), &y_train).unwrap();
        let u_train = Measurements::from_solution_samples(&sols[..m_train], Arc::clone(&ip)).unwrap();
        let y_val: Vec<Vec<f64>> = points[m_train..m].iter().map(|t| to_basis_coords(t)).collect();
        let a_val = SamplingOperator::assemble(set.clone(), &y_val).unwrap();
        let u_val = Measurements::from_solution_samples(&sols[m_train..m], Arc::clone(&ip)).unwrap();

        let corr = a_train.adjoint_apply(&u_train);
        let lambda_max = corr.row_norms().into_iter().fold(0.0f64, f64::max);
        println!("lambda_max = {lambda_max:.4e}");

        let mut warm: Option<HilbertVector> = None;
        for decade in 1..=9 {
            let mu = 10f64.powi(decade) / lambda_max;
            let scfg = SolverConfig { mu, step: StepSize::Auto, tol_fixed_point: 1e-8, tol_kkt: 1e-6, max_iter: 50_000, record_history: false };
            let t0 = Instant::now();
            let r = solve(a_train.matrix(), &u_train, warm.as_ref(), &scfg).unwrap();
            let pred = apply_matrix(a_val.matrix(), &r.solution);
            let diff = pred.data() - u_val.data();
            let vres = Measurements::new(diff, Arc::clone(&ip)).unwrap().v2_norm();
            println!("  decade {decade}: mu={mu:.2e} iters={} term={:?} t={:.2}s val_resid={:.4e} supp={}",
                r.iterations, r.termination, t0.elapsed().as_secs_f64(), vres,
                r.solution.row_support(1e-12).len());
            warm = Some(r.solution);
        }
    }
}
