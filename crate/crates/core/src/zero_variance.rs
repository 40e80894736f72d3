//! Samples from the zero-variance density `g* = φf/E` and the moment
//! estimates built from them.

use crate::error::{Error, Result};
use crate::gaussian::{LowRankCovariance, VARIANCE_FLOOR};
use crate::linalg::DenseSym;
use crate::problems::{PhiKind, TestProblem};
use crate::rng::RandomStream;

pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000_000;
pub const MIN_SIR_POOL: usize = 100_000;

/// Default SIR pool for a target sample of size `m`.
pub fn default_pool(m: usize) -> usize {
    MIN_SIR_POOL.max(200 * m)
}

/// A weighted sample approximating `g*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GStarSample {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Number of `φ` evaluations spent.
    pub proposals_used: u64,
    /// `(Σwᵢ²)⁻¹` of the SIR pool; `None` for exact samplers.
    pub effective_sample_size: Option<f64>,
}

impl GStarSample {
    /// Points with uniform weights `1/M`.
    pub fn uniform(points: Vec<Vec<f64>>, proposals_used: u64) -> Self {
        let w = 1.0 / points.len() as f64;
        GStarSample {
            weights: vec![w; points.len()],
            points,
            proposals_used,
            effective_sample_size: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| x == w)
    }
}

/// Exact sampling by rejection from the standard normal.
pub fn rejection_sample_gstar(
    problem: &TestProblem,
    m: usize,
    rng: &mut RandomStream,
    budget: u64,
) -> Result<GStarSample> {
    if problem.kind != PhiKind::Indicator {
        return Err(Error::InvalidConfig(format!(
            "rejection sampling needs an indicator integrand, `{}` is general",
            problem.name
        )));
    }
    let mut x = vec![0.0; problem.dim];
    let mut points = Vec::with_capacity(m);
    let mut proposals = 0u64;
    while points.len() < m {
        if proposals >= budget {
            return Err(Error::BudgetExhausted {
                accepted: points.len(),
                proposals,
                rate: points.len() as f64 / proposals.max(1) as f64,
            });
        }
        rng.fill_standard_normal(&mut x);
        proposals += 1;
        if problem.phi(&x) > 0.0 {
            points.push(x.clone());
        }
    }
    Ok(GStarSample::uniform(points, proposals))
}

/// Sampling importance resampling from a standard normal pool.
///
/// Only pool points with `φ > 0` are stored since the others can never be
/// resampled.
pub fn sir_sample_gstar(
    problem: &TestProblem,
    m: usize,
    pool: usize,
    rng: &mut RandomStream,
) -> Result<GStarSample> {
    if m == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    if pool < 10 * m {
        return Err(Error::InvalidConfig(format!(
            "SIR pool {pool} is smaller than 10 × {m}"
        )));
    }
    let mut x = vec![0.0; problem.dim];
    let mut support = Vec::new();
    let mut values = Vec::new();
    for _ in 0..pool {
        rng.fill_standard_normal(&mut x);
        let v = problem.phi(&x);
        if v > 0.0 {
            support.push(x.clone());
            values.push(v);
        }
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::IntegrandVanished);
    }
    let weights: Vec<f64> = values.iter().map(|v| v / total).collect();
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let picks = systematic_resample(&weights, m, rng.uniform());
    let points = picks.into_iter().map(|i| support[i].clone()).collect();
    let mut sample = GStarSample::uniform(points, pool as u64);
    sample.effective_sample_size = Some(ess);
    Ok(sample)
}

/// Indices drawn at positions `(j + u)/m` of the cumulative weights.
pub fn systematic_resample(weights: &[f64], m: usize, u: f64) -> Vec<usize> {
    let mut picks = Vec::with_capacity(m);
    let mut cumulative = weights[0];
    let mut i = 0;
    for j in 0..m {
        let position = (j as f64 + u) / m as f64;
        while cumulative < position && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        picks.push(i);
    }
    picks
}

/// Rejection for indicator problems, SIR otherwise.
pub fn sample_gstar(
    problem: &TestProblem,
    m: usize,
    rng: &mut RandomStream,
    budget: u64,
    pool: usize,
) -> Result<GStarSample> {
    match problem.kind {
        PhiKind::Indicator => rejection_sample_gstar(problem, m, rng, budget),
        PhiKind::General => sir_sample_gstar(problem, m, pool, rng),
    }
}

/// `Σᵢ wᵢ Xᵢ`.
pub fn empirical_mean(s: &GStarSample) -> Vec<f64> {
    let n = s.dim();
    let mut mean = vec![0.0; n];
    if s.is_uniform() {
        for x in &s.points {
            for (a, b) in mean.iter_mut().zip(x) {
                *a += b;
            }
        }
        let m = s.len() as f64;
        for a in mean.iter_mut() {
            *a /= m;
        }
    } else {
        for (x, w) in s.points.iter().zip(&s.weights) {
            for (a, b) in mean.iter_mut().zip(x) {
                *a += w * b;
            }
        }
    }
    mean
}

/// Weighted centred second moment, `(1/M) Σ (Xᵢ − m̂)(Xᵢ − m̂)ᵀ` for uniform weights.
pub fn empirical_cov(s: &GStarSample) -> DenseSym {
    let n = s.dim();
    let mean = empirical_mean(s);
    let uniform = s.is_uniform();
    let mut acc = vec![0.0; n * n];
    let mut y = vec![0.0; n];
    for (x, &w) in s.points.iter().zip(&s.weights) {
        for (yi, (xi, mi)) in y.iter_mut().zip(x.iter().zip(&mean)) {
            *yi = xi - mi;
        }
        let w = if uniform { 1.0 } else { w };
        for i in 0..n {
            let wyi = w * y[i];
            let row = &mut acc[i * n..(i + 1) * n];
            for j in i..n {
                row[j] += wyi * y[j];
            }
        }
    }
    let scale = if uniform { 1.0 / s.len() as f64 } else { 1.0 };
    DenseSym::from_upper_fn(n, |i, j| acc[i * n + j] * scale)
}

/// Identity corrected along `directions`, with variances `dᵢᵀ Σ̂ dᵢ`.
pub fn build_projected_cov(
    sigma_hat: &DenseSym,
    directions: Vec<Vec<f64>>,
) -> Result<LowRankCovariance> {
    let n = sigma_hat.dim();
    let placeholder = vec![1.0; directions.len()];
    let checked = LowRankCovariance::new(n, directions, placeholder)?;
    let directions = checked.directions().to_vec();
    let mut variances = Vec::with_capacity(directions.len());
    for (index, d) in directions.iter().enumerate() {
        let value = sigma_hat.quad_form(d);
        if !(value > VARIANCE_FLOOR) {
            return Err(Error::DegenerateVariance { index, value });
        }
        variances.push(value);
    }
    LowRankCovariance::new(n, directions, variances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigendecompose;
    use crate::problems::{sum_limit_state, truncated_normal_moments};

    fn constant(dim: usize, kind: PhiKind, c: f64) -> TestProblem {
        TestProblem::new("constant", dim, kind, move |_: &[f64]| c)
    }

    #[test]
    fn constant_indicator_accepts_everything() {
        let p = constant(3, PhiKind::Indicator, 1.0);
        let mut rng = RandomStream::from_seed(1);
        let s = rejection_sample_gstar(&p, 50, &mut rng, 1000).unwrap();
        assert_eq!(s.proposals_used, 50);
        assert_eq!(s.len(), 50);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejection_budget_is_reported() {
        let p = constant(2, PhiKind::Indicator, 0.0);
        let mut rng = RandomStream::from_seed(1);
        let err = rejection_sample_gstar(&p, 5, &mut rng, 100).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { accepted: 0, proposals: 100, .. }));
    }

    #[test]
    fn rejection_points_satisfy_the_event() {
        let n = 7;
        let p = sum_limit_state(n).unwrap();
        let mut rng = RandomStream::from_seed(2);
        let s = rejection_sample_gstar(&p, 100, &mut rng, DEFAULT_REJECTION_BUDGET).unwrap();
        for x in &s.points {
            assert!(x.iter().sum::<f64>() >= 3.0 * (n as f64).sqrt());
        }
        // 100 / 1.35e-3 ≈ 7.4e4 expected proposals.
        assert!(s.proposals_used > 40_000 && s.proposals_used < 120_000);
    }

    #[test]
    fn sir_with_constant_integrand_is_uniform() {
        let p = constant(2, PhiKind::General, 3.5);
        let mut rng = RandomStream::from_seed(3);
        let s = sir_sample_gstar(&p, 100, 1000, &mut rng).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(s.proposals_used, 1000);
        assert!((s.effective_sample_size.unwrap() - 1000.0).abs() < 1e-6);
        let mut distinct = s.points.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 100);
    }

    #[test]
    fn sir_errors() {
        let mut rng = RandomStream::from_seed(3);
        let p = constant(2, PhiKind::General, 0.0);
        assert_eq!(sir_sample_gstar(&p, 10, 100, &mut rng).unwrap_err(), Error::IntegrandVanished);
        assert!(sir_sample_gstar(&p, 10, 99, &mut rng).is_err());
    }

    #[test]
    fn systematic_resampling_follows_weights() {
        assert_eq!(systematic_resample(&[0.5, 0.0, 0.5], 4, 0.5), vec![0, 0, 2, 2]);
        assert_eq!(systematic_resample(&[0.25, 0.75], 4, 0.1), vec![0, 1, 1, 1]);
        assert_eq!(systematic_resample(&[1.0], 3, 0.99), vec![0, 0, 0]);
    }

    #[test]
    fn moments_of_small_samples() {
        let s = GStarSample::uniform(vec![vec![1.0, -2.0]], 1);
        assert_eq!(empirical_mean(&s), vec![1.0, -2.0]);

        let a = [0.5, -1.5, 2.0];
        let s = GStarSample::uniform(vec![a.iter().map(|x| -x).collect(), a.to_vec()], 2);
        let c = empirical_cov(&s);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.get(i, j), a[i] * a[j]);
            }
        }
    }

    #[test]
    fn weighted_and_uniform_paths_agree() {
        let mut rng = RandomStream::from_seed(4);
        let points: Vec<Vec<f64>> = (0..37)
            .map(|_| (0..5).map(|_| rng.standard_normal()).collect())
            .collect();
        let uniform = GStarSample::uniform(points.clone(), 37);
        let mut weighted = uniform.clone();
        weighted.weights[0] = f64::from_bits(weighted.weights[0].to_bits() + 1);
        weighted.weights[1] = f64::from_bits(weighted.weights[1].to_bits() - 1);
        let (mu, mw) = (empirical_mean(&uniform), empirical_mean(&weighted));
        for (a, b) in mu.iter().zip(&mw) {
            assert!((a - b).abs() < 1e-13);
        }
        let d = empirical_cov(&uniform).frobenius_distance(&empirical_cov(&weighted));
        assert!(d < 1e-13);
    }

    #[test]
    fn toy_one_mean_along_the_diagonal() {
        let n = 5;
        let m = 500;
        let p = sum_limit_state(n).unwrap();
        let mut rng = RandomStream::from_seed(5);
        let s = rejection_sample_gstar(&p, m, &mut rng, DEFAULT_REJECTION_BUDGET).unwrap();
        let (alpha, v) = truncated_normal_moments();
        let mean = empirical_mean(&s);
        let target = alpha / (n as f64).sqrt();
        let err: f64 = mean.iter().map(|x| (x - target).powi(2)).sum::<f64>().sqrt();
        let trace = n as f64 - 1.0 + v;
        assert!(err <= 5.0 * (trace / m as f64).sqrt());
    }

    #[test]
    fn projected_cov_cases() {
        let n = 4;
        let id = DenseSym::identity(n);
        let c = build_projected_cov(&id, vec![vec![0.5; n]]).unwrap();
        assert!((c.variances()[0] - 1.0).abs() < 1e-15);

        let sigma = DenseSym::from_upper_fn(n, |i, j| if i == j { 0.0 } else { 0.0 });
        assert!(matches!(
            build_projected_cov(&sigma, vec![vec![0.5; n]]),
            Err(Error::DegenerateVariance { index: 0, .. })
        ));

        let mut rng = RandomStream::from_seed(6);
        let a: Vec<f64> = (0..n * n).map(|_| rng.standard_normal()).collect();
        let sigma = DenseSym::from_upper_fn(n, |i, j| {
            (0..n).map(|r| a[i * n + r] * a[j * n + r]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }
        });
        let spectrum = sym_eigendecompose(&sigma).unwrap();
        let dirs = spectrum.pairs.iter().map(|p| p.direction.clone()).collect();
        let c = build_projected_cov(&sigma, dirs).unwrap();
        assert!(c.to_dense().frobenius_distance(&sigma) < 1e-8);
    }
}
