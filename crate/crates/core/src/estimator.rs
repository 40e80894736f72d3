//! Importance-sampling estimates and replication statistics.

use crate::error::{Error, Result};
use crate::gaussian::GaussianLaw;
use crate::problems::TestProblem;
use crate::rng::RandomStream;

/// `(1/N) Σ φ(Xᵢ) f(Xᵢ)/g(Xᵢ)` with `Xᵢ ~ g`.
///
/// Weights are exponentiated from log space and never clipped.
pub fn is_estimate(
    problem: &TestProblem,
    g: &GaussianLaw,
    n_samples: usize,
    rng: &mut RandomStream,
) -> f64 {
    let n = g.dim();
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut sum = 0.0;
    for _ in 0..n_samples {
        g.sample_into(rng, &mut z, &mut x);
        let v = problem.phi(&x);
        if v != 0.0 {
            sum += v * g.likelihood_ratio_log(&x).exp();
        }
    }
    sum / n_samples as f64
}

/// Plain Monte Carlo mean of `φ` under the standard normal and its standard error.
pub fn crude_mc_estimate(
    problem: &TestProblem,
    n_samples: u64,
    rng: &mut RandomStream,
) -> (f64, f64) {
    let mut x = vec![0.0; problem.dim];
    let mut acc = MomentAccumulator::default();
    for _ in 0..n_samples {
        rng.fill_standard_normal(&mut x);
        acc.push(problem.phi(&x));
    }
    acc.mean_and_stderr()
}

/// Running sums for a mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean_and_stderr(&self) -> (f64, f64) {
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        (mean, (var / n).sqrt())
    }
}

/// Summary of `R` replicated estimates against a reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub estimates: Vec<f64>,
    pub reference: f64,
    pub mean: f64,
    /// `(mean − E)/E`.
    pub relative_bias: f64,
    /// `√((1/R) Σ (Êᵢ − E)²) / E`, deviations about `E` rather than the mean.
    pub coefficient_of_variation: f64,
    pub mean_partial_kl: f64,
    /// `(mean_partial_kl − D′(Σ*)) / D′(Σ*)`, NaN unless `D′(Σ*) > 0`.
    pub kl_relative_error: f64,
}

pub fn run_statistics(
    estimates: &[f64],
    reference: f64,
    kl_values: &[f64],
    kl_star: f64,
) -> Result<RunStatistics> {
    if !(reference > 0.0) {
        return Err(Error::domain("run_statistics", format!("reference {reference} must be positive")));
    }
    if estimates.is_empty() || kl_values.is_empty() {
        return Err(Error::domain("run_statistics", "empty estimate or KL list"));
    }
    let r = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let ms = estimates.iter().map(|e| (e - reference).powi(2)).sum::<f64>() / r;
    let mean_partial_kl = kl_values.iter().sum::<f64>() / kl_values.len() as f64;
    Ok(RunStatistics {
        estimates: estimates.to_vec(),
        reference,
        mean,
        relative_bias: (mean - reference) / reference,
        coefficient_of_variation: ms.sqrt() / reference,
        mean_partial_kl,
        kl_relative_error: if kl_star > 0.0 {
            (mean_partial_kl - kl_star) / kl_star
        } else {
            f64::NAN
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::LowRankCovariance;
    use crate::problems::{sum_limit_state, PhiKind};

    #[test]
    fn standard_proposal_is_crude_frequency() {
        let p = sum_limit_state(3).unwrap();
        let g = GaussianLaw::standard(3);
        let mut a = RandomStream::from_seed(1);
        let mut b = RandomStream::from_seed(1);
        let is = is_estimate(&p, &g, 20_000, &mut a);
        let (mc, _) = crude_mc_estimate(&p, 20_000, &mut b);
        assert_eq!(is, mc);
    }

    #[test]
    fn unit_integrand_has_unit_mean() {
        let p = TestProblem::new("one", 4, PhiKind::Indicator, |_: &[f64]| 1.0);
        let d = vec![0.5, 0.5, 0.5, 0.5];
        let g = GaussianLaw::new(vec![0.3, 0.0, -0.2, 0.1], LowRankCovariance::new(4, vec![d], vec![1.6]).unwrap())
            .unwrap();
        let mut rng = RandomStream::from_seed(2);
        let n = 100_000;
        let mut acc = MomentAccumulator::default();
        let mut z = vec![0.0; 4];
        let mut x = vec![0.0; 4];
        for _ in 0..n {
            g.sample_into(&mut rng, &mut z, &mut x);
            acc.push(g.likelihood_ratio_log(&x).exp());
        }
        let (mean, se) = acc.mean_and_stderr();
        assert!((mean - 1.0).abs() <= 5.0 * se, "{mean} ± {se}");
        let mut rng = RandomStream::from_seed(3);
        let est = is_estimate(&p, &g, 10_000, &mut rng);
        assert!((est - 1.0).abs() < 0.1);
    }

    #[test]
    fn statistics_of_exact_estimates() {
        let s = run_statistics(&[2.0, 2.0, 2.0], 2.0, &[1.0, 3.0], 2.0).unwrap();
        assert_eq!(s.relative_bias, 0.0);
        assert_eq!(s.coefficient_of_variation, 0.0);
        assert_eq!(s.mean_partial_kl, 2.0);
        assert_eq!(s.kl_relative_error, 0.0);
    }

    #[test]
    fn symmetric_pair_has_ten_percent_cov() {
        let e = 1.35e-3;
        let s = run_statistics(&[0.9 * e, 1.1 * e], e, &[1.0], 1.0).unwrap();
        assert!(s.relative_bias.abs() < 1e-12);
        assert!((s.coefficient_of_variation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn table_row_bias() {
        let s = run_statistics(&[1.002e-3], 1.35e-3, &[1.0], 1.0).unwrap();
        assert!((s.relative_bias * 100.0 + 25.8).abs() < 0.1);
    }

    #[test]
    fn invalid_reference() {
        assert!(run_statistics(&[1.0], 0.0, &[1.0], 1.0).is_err());
        assert!(run_statistics(&[], 1.0, &[1.0], 1.0).is_err());
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs = [0.0, 1.0, 1.0, 0.0, 1.0];
        let mut whole = MomentAccumulator::default();
        let mut left = MomentAccumulator::default();
        let mut right = MomentAccumulator::default();
        for (i, &x) in xs.iter().enumerate() {
            whole.push(x);
            if i < 2 { left.push(x) } else { right.push(x) }
        }
        left.merge(&right);
        assert_eq!(left, whole);
        let (m, se) = whole.mean_and_stderr();
        assert_eq!(m, 0.6);
        assert!((se - (0.3f64 / 5.0).sqrt()).abs() < 1e-15);
    }
}
