//! Benchmark integrands and their reference data.
//!
//! Every problem is an integrand `φ ≥ 0` on standard Gaussian space. Two of
//! them (the linear and the parabolic limit states) come with an exact record
//! of `E`, `m*` and `Σ*`; the credit-portfolio and Asian-payoff problems rely
//! on a brute-force oracle (see [`crate::oracle`]).

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::DenseSym;
use crate::special::{gamma66_from_normal_score, normal_pdf, normal_sf};

/// Whether `φ` is an event indicator (values in {0, 1}) or a general weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    Indicator,
    General,
}

/// Closed-form `E`, `m*` and `Σ*` for a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRecord {
    pub reference: f64,
    pub mean: Vec<f64>,
    pub cov: DenseSym,
}

pub type Integrand = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TestProblem {
    pub name: String,
    pub dim: usize,
    pub kind: PhiKind,
    phi: Integrand,
    pub analytic: Option<AnalyticRecord>,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl TestProblem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        kind: PhiKind,
        phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestProblem {
            name: name.into(),
            dim,
            kind,
            phi: Arc::new(phi),
            analytic: None,
        }
    }

    pub fn with_analytic(mut self, record: AnalyticRecord) -> Self {
        self.analytic = Some(record);
        self
    }

    #[inline]
    pub fn phi(&self, x: &[f64]) -> f64 {
        (self.phi)(x)
    }
}

fn indicator(event: bool) -> f64 {
    if event {
        1.0
    } else {
        0.0
    }
}

fn require_dim(name: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidConfig(format!(
            "problem `{name}` needs dimension at least {min}, got {n}"
        )));
    }
    Ok(())
}

/// Conditional mean `α` and variance `v` of a standard normal given `X ≥ 3`.
pub fn truncated_normal_moments() -> (f64, f64) {
    let alpha = normal_pdf(3.0) / normal_sf(3.0);
    (alpha, 1.0 + 3.0 * alpha - alpha * alpha)
}

/// `φ(x) = 1{Σxⱼ − 3√n ≥ 0}`.
pub fn sum_limit_state(n: usize) -> Result<TestProblem> {
    require_dim("sum", n, 1)?;
    let threshold = 3.0 * (n as f64).sqrt();
    let (alpha, v) = truncated_normal_moments();
    let unit = 1.0 / (n as f64).sqrt();
    let record = AnalyticRecord {
        reference: normal_sf(3.0),
        mean: vec![alpha * unit; n],
        cov: DenseSym::from_upper_fn(n, |i, j| {
            (v - 1.0) * unit * unit + if i == j { 1.0 } else { 0.0 }
        }),
    };
    Ok(TestProblem::new("sum", n, PhiKind::Indicator, move |x: &[f64]| {
        indicator(x.iter().sum::<f64>() - threshold >= 0.0)
    })
    .with_analytic(record))
}

/// Conditional moments of the parabolic limit state, by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicMoments {
    pub probability: f64,
    /// `E[X₁ | event]`.
    pub alpha: f64,
    /// Conditional variances of `X₁`, `X₂`, `X₃`.
    pub variances: [f64; 3],
}

/// Integrates out `x₁` in closed form and the even `(x₂, x₃)` plane by a
/// trapezoidal rule on `[0, 0.8]²`, where the integrand has decayed below
/// 1e-13 of its peak.
fn parabolic_quadrature() -> ParabolicMoments {
    const H: f64 = 1e-3;
    const STEPS: usize = 800;
    let mut e = 0.0;
    let mut m1 = 0.0;
    let mut s11 = 0.0;
    let mut s22 = 0.0;
    let mut s33 = 0.0;
    for i in 0..=STEPS {
        let a = i as f64 * H;
        let wa = if i == 0 || i == STEPS { 0.5 } else { 1.0 } * normal_pdf(a);
        for j in 0..=STEPS {
            let b = j as f64 * H;
            let wb = if j == 0 || j == STEPS { 0.5 } else { 1.0 } * normal_pdf(b);
            let w = wa * wb;
            let c = 1.0 + 25.0 * a * a + 30.0 * b * b;
            let tail = normal_sf(c);
            let dens = normal_pdf(c);
            e += w * tail;
            m1 += w * dens;
            s11 += w * (c * dens + tail);
            s22 += w * a * a * tail;
            s33 += w * b * b * tail;
        }
    }
    // The quarter-plane sums carry a common factor 4·H², which cancels in
    // every ratio below.
    let alpha = m1 / e;
    ParabolicMoments {
        probability: 4.0 * H * H * e,
        alpha,
        variances: [s11 / e - alpha * alpha, s22 / e, s33 / e],
    }
}

pub fn parabolic_moments() -> ParabolicMoments {
    static MOMENTS: OnceLock<ParabolicMoments> = OnceLock::new();
    *MOMENTS.get_or_init(parabolic_quadrature)
}

/// `φ(x) = 1{x₁ − 25x₂² − 30x₃² − 1 ≥ 0}`.
pub fn parabolic_limit_state(n: usize) -> Result<TestProblem> {
    require_dim("parabolic", n, 3)?;
    let moments = parabolic_moments();
    let mut mean = vec![0.0; n];
    mean[0] = moments.alpha;
    let mut diag = vec![1.0; n];
    diag[..3].copy_from_slice(&moments.variances);
    let record = AnalyticRecord {
        reference: moments.probability,
        mean,
        cov: DenseSym::diagonal(&diag),
    };
    Ok(TestProblem::new("parabolic", n, PhiKind::Indicator, |x: &[f64]| {
        indicator(x[0] - 25.0 * x[1] * x[1] - 30.0 * x[2] * x[2] - 1.0 >= 0.0)
    })
    .with_analytic(record))
}

/// Obligor correlation weight in the credit-portfolio model.
pub const PORTFOLIO_Q: f64 = 0.25;

/// Large-loss event of an `n`-obligor t-copula credit portfolio.
///
/// The Gaussian input is `(U, μ̃, η̃₁, …, η̃ₙ)` in dimension `n + 2`. Obligor `j`
/// defaults when `Ψⱼ = (qU + 3√(1−q²) η̃ⱼ) · μ^{−1/2} ≥ 0.5√n` with
/// `μ = F_Γ⁻¹(F_N(μ̃))` a Gamma(6, 6) draw, and `φ` flags more than `n/4`
/// defaults (strictly).
pub fn portfolio_loss(n: usize) -> Result<TestProblem> {
    require_dim("portfolio", n, 4)?;
    let threshold = 0.5 * (n as f64).sqrt();
    let level = 0.25 * n as f64;
    let idio = 3.0 * (1.0 - PORTFOLIO_Q * PORTFOLIO_Q).sqrt();
    Ok(TestProblem::new("portfolio", n + 2, PhiKind::Indicator, move |x: &[f64]| {
        let common = PORTFOLIO_Q * x[0];
        let scale = gamma66_from_normal_score(x[1]).powf(-0.5);
        let defaults = x[2..]
            .iter()
            .filter(|&&eta| (common + idio * eta) * scale >= threshold)
            .count();
        indicator(defaults as f64 - level > 0.0)
    }))
}

pub const ASIAN_S0: f64 = 50.0;
pub const ASIAN_RATE: f64 = 0.05;
pub const ASIAN_MATURITY: f64 = 0.5;
pub const ASIAN_VOLATILITY: f64 = 0.1;
pub const ASIAN_STRIKE: f64 = 55.0;

/// Discounted payoff of an arithmetic Asian call monitored at `n` dates
/// under Black–Scholes dynamics.
pub fn asian_payoff(n: usize) -> Result<TestProblem> {
    require_dim("asian", n, 1)?;
    let dt = ASIAN_MATURITY / n as f64;
    let drift = (ASIAN_RATE - 0.5 * ASIAN_VOLATILITY * ASIAN_VOLATILITY) * dt;
    let vol = ASIAN_VOLATILITY * dt.sqrt();
    let discount = (-ASIAN_RATE * ASIAN_MATURITY).exp();
    Ok(TestProblem::new("asian", n, PhiKind::General, move |x: &[f64]| {
        let mut log_ret = 0.0;
        let mut sum = 0.0;
        for &xk in x {
            log_ret += drift + vol * xk;
            sum += log_ret.exp();
        }
        let average = ASIAN_S0 * sum / x.len() as f64;
        discount * (average - ASIAN_STRIKE).max(0.0)
    }))
}

pub const PROBLEM_NAMES: [&str; 4] = ["sum", "parabolic", "portfolio", "asian"];

/// Smallest admissible size parameter for a registered problem.
pub fn min_dim(name: &str) -> Result<usize> {
    match name {
        "sum" | "asian" => Ok(1),
        "parabolic" => Ok(3),
        "portfolio" => Ok(4),
        other => Err(unknown(other)),
    }
}

fn unknown(name: &str) -> Error {
    Error::InvalidConfig(format!(
        "unknown problem `{name}` (expected one of {})",
        PROBLEM_NAMES.join(", ")
    ))
}

/// Registry lookup. For `portfolio`, `n` is the obligor count and the
/// Gaussian dimension is `n + 2`.
pub fn by_name(name: &str, n: usize) -> Result<TestProblem> {
    match name {
        "sum" => sum_limit_state(n),
        "parabolic" => parabolic_limit_state(n),
        "portfolio" => portfolio_loss(n),
        "asian" => asian_payoff(n),
        other => Err(unknown(other)),
    }
}
