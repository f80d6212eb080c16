//! Parameterized elliptic model problem on the unit interval.
//!
//! Solves `-(a(x,t) u'(x,t))' = 1` on `D = [0,1]` with homogeneous
//! Dirichlet ends, where the diffusion coefficient is a truncated
//! trigonometric expansion in the parameters `t in (-sqrt(3), sqrt(3))^d`:
//!
//! ```text
//!   a(x,t) = 10 + t_1 (sqrt(pi) L / 2)^{1/2}
//!               + sum_{i=2}^d zeta_i theta_i(x) t_i
//!   zeta_i  = (sqrt(pi) L)^{1/2} exp(-(floor(i/2) pi L)^2 / 8)
//!   theta_i = sin(floor(i/2) pi x / L_p)   for even i
//!             cos(floor(i/2) pi x / L_p)   for odd  i
//! ```
//!
//! or its log-transformed variant `log(a(x,t) - 0.5)`. The derived lengths
//! follow the usual convention for this expansion family:
//! `L_p = max(1, 2 L_c)` and `L = L_c / L_p`.
//!
//! Discretization is conservative finite differences on `K` interior nodes
//! with the coefficient evaluated at half-nodes, which keeps the system an
//! SPD M-matrix; the discrete `H^1_0` Gram matrix `(1/h) tridiag(-1, 2, -1)`
//! provides the energy norm used for error reporting.

use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::hilbert::InnerProduct;
use crate::linalg;

/// Baseline of the affine coefficient.
pub const COEFFICIENT_BASELINE: f64 = 10.0;
/// Shift inside the log-transformed variant.
pub const LOG_SHIFT: f64 = 0.5;
/// Half-width of the parameter cube.
pub const PARAM_BOUND: f64 = 1.732_050_807_568_877_2; // sqrt(3)

/// Which coefficient the problem uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientVariant {
    Affine,
    LogTransformed,
}

/// The parameterized diffusion coefficient.
#[derive(Debug, Clone)]
pub struct DiffusionCoefficient {
    d: usize,
    lc: f64,
    lp: f64,
    l: f64,
    variant: CoefficientVariant,
    amplitude_scale: f64,
    /// Amplitude of parameter `i` (1-based): entry 0 pairs with `t_1`,
    /// entry `i-1` is `zeta_i` for `i >= 2`.
    amplitudes: Vec<f64>,
}

impl DiffusionCoefficient {
    /// Builds the coefficient for `d` parameters at correlation length
    /// `lc`, certifying positivity over the closed parameter cube. The
    /// affine variant requires a positive worst-case lower bound; the
    /// log-transformed variant requires the bound to exceed
    /// `LOG_SHIFT + 1` so the transformed coefficient stays positive.
    pub fn new(d: usize, lc: f64, variant: CoefficientVariant) -> Result<Self> {
        Self::with_amplitude_scale(d, lc, variant, 1.0)
    }

    /// Same as [`new`](Self::new) with every fluctuation amplitude scaled;
    /// scale 0 gives the deterministic coefficient `a = 10`.
    pub fn with_amplitude_scale(
        d: usize,
        lc: f64,
        variant: CoefficientVariant,
        amplitude_scale: f64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("parametric dimension must be at least 1".into()));
        }
        if !(lc > 0.0 && lc.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "correlation length must be positive, got {lc}"
            )));
        }
        if !(amplitude_scale >= 0.0 && amplitude_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "amplitude scale must be nonnegative, got {amplitude_scale}"
            )));
        }
        let lp = 1.0f64.max(2.0 * lc);
        let l = lc / lp;
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut amplitudes = Vec::with_capacity(d);
        amplitudes.push((sqrt_pi * l / 2.0).sqrt() * amplitude_scale);
        for i in 2..=d {
            let k = (i / 2) as f64;
            let zeta = (sqrt_pi * l).sqrt()
                * (-(k * std::f64::consts::PI * l).powi(2) / 8.0).exp();
            amplitudes.push(zeta * amplitude_scale);
        }
        let coef = DiffusionCoefficient {
            d,
            lc,
            lp,
            l,
            variant,
            amplitude_scale,
            amplitudes,
        };
        let lower = coef.lower_bound();
        let required = match variant {
            CoefficientVariant::Affine => 0.0,
            CoefficientVariant::LogTransformed => LOG_SHIFT + 1.0,
        };
        if lower <= required {
            return Err(Error::NonPositiveCoefficient {
                lower_bound: lower,
                required,
            });
        }
        Ok(coef)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn variant(&self) -> CoefficientVariant {
        self.variant
    }

    pub fn correlation_length(&self) -> f64 {
        self.lc
    }

    pub fn derived_lengths(&self) -> (f64, f64) {
        (self.lp, self.l)
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Worst-case lower bound for the affine field over the closed cube,
    /// using `|theta_i| <= 1`.
    pub fn lower_bound(&self) -> f64 {
        let total: f64 = self.amplitudes.iter().map(|z| z.abs()).sum();
        COEFFICIENT_BASELINE - PARAM_BOUND * total
    }

    fn affine_value(&self, x: f64, t: &[f64]) -> f64 {
        let mut a = COEFFICIENT_BASELINE + t[0] * self.amplitudes[0];
        for i in 2..=self.d {
            let k = (i / 2) as f64;
            let phase = k * std::f64::consts::PI * x / self.lp;
            let theta = if i % 2 == 0 { phase.sin() } else { phase.cos() };
            a += self.amplitudes[i - 1] * theta * t[i - 1];
        }
        a
    }

    /// Evaluates the coefficient at spatial point `x in [0,1]` and
    /// parameter point `t`. Parameter coordinates outside the cube by at
    /// most `1e-12` are clamped; the result is checked positive.
    pub fn eval(&self, x: f64, t: &[f64]) -> f64 {
        assert_eq!(t.len(), self.d, "parameter dimension mismatch");
        assert!((0.0..=1.0).contains(&x), "spatial point {x} outside [0,1]");
        let mut clamped = Vec::new();
        let t = if t.iter().any(|&v| v.abs() > PARAM_BOUND) {
            for &v in t {
                assert!(
                    v.abs() <= PARAM_BOUND + 1e-12,
                    "parameter coordinate {v} outside (-sqrt(3), sqrt(3))"
                );
                clamped.push(v.clamp(-PARAM_BOUND, PARAM_BOUND));
            }
            clamped.as_slice()
        } else {
            t
        };
        let affine = self.affine_value(x, t);
        let value = match self.variant {
            CoefficientVariant::Affine => affine,
            CoefficientVariant::LogTransformed => (affine - LOG_SHIFT).ln(),
        };
        assert!(
            value > 0.0,
            "coefficient not positive at x = {x}, t = {t:?}: {value}"
        );
        value
    }
}

/// `(1/h) tridiag(-1, 2, -1)` on `K` interior nodes with `h = 1/(K+1)`:
/// the discrete `H^1_0` inner product `v^T M v = sum_edges (dv)^2 / h`.
pub fn h1_gram(k: usize) -> Array2<f64> {
    assert!(k >= 1, "at least one interior node required");
    let h = 1.0 / (k as f64 + 1.0);
    let mut m = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        m[[i, i]] = 2.0 / h;
        if i + 1 < k {
            m[[i, i + 1]] = -1.0 / h;
            m[[i + 1, i]] = -1.0 / h;
        }
    }
    m
}

/// Discrete `H^1_0` seminorm of interior values with zero boundary:
/// `sqrt(sum_edges (v_{k+1} - v_k)^2 / h)`.
pub fn discrete_h1_norm(v: &[f64], h: f64) -> f64 {
    let mut s = 0.0;
    let mut prev = 0.0;
    for &x in v {
        let d = x - prev;
        s += d * d;
        prev = x;
    }
    s += prev * prev; // last edge to the zero boundary
    (s / h).sqrt()
}

/// Lumped discrete `L^2` norm `sqrt(h * sum v^2)`.
pub fn discrete_l2_norm(v: &[f64], h: f64) -> f64 {
    let s: f64 = v.iter().map(|x| x * x).sum();
    (h * s).sqrt()
}

/// The discretized model problem.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    k: usize,
    h: f64,
    coefficient: DiffusionCoefficient,
    gram: Arc<InnerProduct>,
}

impl PdeProblem {
    pub fn new(k: usize, coefficient: DiffusionCoefficient) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("at least one interior node required".into()));
        }
        let gram = InnerProduct::explicit_spd(h1_gram(k))?;
        Ok(PdeProblem {
            k,
            h: 1.0 / (k as f64 + 1.0),
            coefficient,
            gram,
        })
    }

    pub fn interior_nodes(&self) -> usize {
        self.k
    }

    pub fn mesh_width(&self) -> f64 {
        self.h
    }

    pub fn coefficient(&self) -> &DiffusionCoefficient {
        &self.coefficient
    }

    /// Shared `H^1_0` inner product of the grid.
    pub fn energy_inner_product(&self) -> &Arc<InnerProduct> {
        &self.gram
    }

    /// Interior node coordinates `h, 2h, ..., Kh`.
    pub fn grid(&self) -> Vec<f64> {
        (1..=self.k).map(|i| i as f64 * self.h).collect()
    }

    /// Solves the conservative finite-difference system at parameter `t`:
    /// `[-a_{k-1/2} u_{k-1} + (a_{k-1/2} + a_{k+1/2}) u_k - a_{k+1/2} u_{k+1}] / h^2 = 1`
    /// with zero boundary values; returns the interior values.
    pub fn solve(&self, t: &[f64]) -> Array1<f64> {
        let k = self.k;
        let h = self.h;
        // coefficient at half nodes x = (i + 1/2) h for i = 0..=k
        let mut half = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let x = (i as f64 + 0.5) * h;
            half.push(self.coefficient.eval(x, t));
        }
        let h2 = h * h;
        let mut diag = Vec::with_capacity(k);
        let mut sub = Vec::with_capacity(k.saturating_sub(1));
        let mut sup = Vec::with_capacity(k.saturating_sub(1));
        for i in 0..k {
            diag.push((half[i] + half[i + 1]) / h2);
            if i + 1 < k {
                sup.push(-half[i + 1] / h2);
                sub.push(-half[i + 1] / h2);
            }
        }
        let rhs = vec![1.0; k];
        linalg::thomas_tridiagonal(&sub, &diag, &sup, &rhs)
    }
}

/// Linear interpolation of interior values from a coarse grid onto a finer
/// one; `(k_fine + 1)` must be a multiple of `(k_coarse + 1)`.
pub fn prolongate_linear(coarse: &[f64], k_fine: usize) -> Vec<f64> {
    let k_coarse = coarse.len();
    let ratio_num = k_fine + 1;
    let ratio_den = k_coarse + 1;
    assert!(
        ratio_num % ratio_den == 0,
        "fine grid {k_fine} is not nested in coarse grid {k_coarse}"
    );
    let value_at = |i: usize| -> f64 {
        if i == 0 || i == k_coarse + 1 {
            0.0
        } else {
            coarse[i - 1]
        }
    };
    let mut fine = Vec::with_capacity(k_fine);
    for j in 1..=k_fine {
        let num = j * ratio_den;
        let left = num / ratio_num;
        let frac = (num % ratio_num) as f64 / ratio_num as f64;
        fine.push(value_at(left) * (1.0 - frac) + value_at(left + 1) * frac);
    }
    fine
}

/// Writes `(x, value)` pairs as a two-column CSV with the given header.
pub fn save_xy_csv(path: &Path, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{},{}\n", header.0, header.1));
    for (x, v) in rows {
        out.push_str(&format!("{x},{v}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
