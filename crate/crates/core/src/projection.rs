//! Optimal low-rank projection of a covariance in partial-KL sense.
//!
//! All KL quantities here use the partial convention
//! `D′(Σ) = log det Σ + tr(Σ*Σ⁻¹)`: no ½ factor and none of the terms that do
//! not depend on `Σ`. It is the full divergence up to an affine change, so it
//! ranks candidates identically but must not be read as a KL value itself.

use crate::error::{Error, Result};
use crate::gaussian::{DenseCovariance, LowRankCovariance, VARIANCE_FLOOR};
use crate::linalg::{dot, DenseSym, Eigenpair, Spectrum};

/// `ℓ(x) = log x − x + 1`, the per-direction contribution to the partial KL.
pub fn ell(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ell", format!("argument {x:e} is not in (0, ∞)")));
    }
    Ok(x.ln() - x + 1.0)
}

/// Eigenpairs sorted by increasing `ℓ(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllOrderedSpectrum {
    pairs: Vec<Eigenpair>,
    ells: Vec<f64>,
}

impl EllOrderedSpectrum {
    pub fn pairs(&self) -> &[Eigenpair] {
        &self.pairs
    }

    pub fn ell_values(&self) -> &[f64] {
        &self.ells
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }
}

/// Ranks eigenpairs in increasing `ℓ`-order.
///
/// Ties in `ℓ` go to the smaller eigenvalue, then to the earlier index.
/// Eigenvalues at or below `1e-12` are a domain error.
pub fn ell_order(s: &Spectrum) -> Result<EllOrderedSpectrum> {
    let mut keyed = Vec::with_capacity(s.dim());
    for (index, pair) in s.pairs.iter().enumerate() {
        if !(pair.value > VARIANCE_FLOOR) {
            return Err(Error::domain(
                "ell_order",
                format!("eigenvalue {:e} at index {index} is not positive", pair.value),
            ));
        }
        keyed.push((ell(pair.value)?, pair.value, index));
    }
    keyed.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(EllOrderedSpectrum {
        ells: keyed.iter().map(|k| k.0).collect(),
        pairs: keyed.into_iter().map(|k| s.pairs[k.2].clone()).collect(),
    })
}

/// `Σ*_k = I + Σ_{i≤k} (λᵢ − 1) dᵢdᵢᵀ` over the first `k` `ℓ`-ordered pairs.
pub fn optimal_projection(s: &EllOrderedSpectrum, k: usize) -> Result<LowRankCovariance> {
    let n = s.dim();
    if k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let head = &s.pairs[..k];
    LowRankCovariance::new(
        n,
        head.iter().map(|p| p.direction.clone()).collect(),
        head.iter().map(|p| p.value).collect(),
    )
}

/// Index of the largest increment of the `ℓ`-sequence, in `1..=n−1`.
///
/// Ties go to the smallest index, so a spectrum with no gap at all yields 1.
pub fn choose_k(s: &EllOrderedSpectrum) -> Result<usize> {
    let n = s.dim();
    if n < 2 {
        return Err(Error::domain("choose_k", format!("need at least two eigenvalues, got {n}")));
    }
    let mut best = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for (i, w) in s.ells.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            best = i + 1;
        }
    }
    Ok(best)
}

/// False when every increment of the `ℓ`-sequence is numerically zero, in
/// which case `choose_k` falls back to 1 without evidence for it.
pub fn has_informative_gap(s: &EllOrderedSpectrum) -> bool {
    s.ells.windows(2).any(|w| w[1] - w[0] > 1e-12)
}

/// `ψ(x) = xᵀΣ*x / ‖x‖²`.
pub fn psi(x: &[f64], sigma_star: &DenseSym) -> f64 {
    sigma_star.quad_form(x) / dot(x, x)
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: b,
            found: a,
        });
    }
    Ok(())
}

/// `D′(Σ) = log det Σ + tr(Σ*Σ⁻¹)` through the spectral factors of `Σ`.
pub fn partial_kl_factored(sigma: &DenseCovariance, sigma_star: &DenseSym) -> Result<f64> {
    check_dims(sigma.dim(), sigma_star.dim())?;
    let trace: f64 = sigma
        .spectrum()
        .pairs
        .iter()
        .map(|p| sigma_star.quad_form(&p.direction) / p.value)
        .sum();
    Ok(sigma.log_det() + trace)
}

/// `D′(Σ)` for a dense positive-definite `Σ`.
pub fn partial_kl_dense(sigma: &DenseSym, sigma_star: &DenseSym) -> Result<f64> {
    check_dims(sigma.dim(), sigma_star.dim())?;
    partial_kl_factored(&DenseCovariance::new(sigma.clone())?, sigma_star)
}

/// `D′` in closed form for `Σ ∈ L_{n,k}`:
/// `Σᵢ [log vᵢ + (1/vᵢ − 1) ψ(dᵢ)] + tr(Σ*)`.
pub fn partial_kl_lowrank(c: &LowRankCovariance, sigma_star: &DenseSym) -> Result<f64> {
    check_dims(c.dim(), sigma_star.dim())?;
    let head: f64 = c
        .directions()
        .iter()
        .zip(c.variances())
        .map(|(d, v)| v.ln() + (1.0 / v - 1.0) * psi(d, sigma_star))
        .sum();
    Ok(head + sigma_star.trace())
}

/// `(D′(Σ) − D′(Σ*)) / D′(Σ*)`.
pub fn kl_relative_error(d_sigma: f64, d_star: f64) -> Result<f64> {
    if !(d_star > 0.0) {
        return Err(Error::domain(
            "kl_relative_error",
            format!("reference divergence {d_star} must be positive"),
        ));
    }
    Ok((d_sigma - d_star) / d_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigendecompose;

    fn spectrum_of(values: &[f64]) -> Spectrum {
        let n = values.len();
        Spectrum {
            pairs: values
                .iter()
                .enumerate()
                .map(|(i, &value)| {
                    let mut direction = vec![0.0; n];
                    direction[i] = 1.0;
                    Eigenpair { value, direction }
                })
                .collect(),
        }
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell(1.0).unwrap(), 0.0);
        assert!((ell(std::f64::consts::E).unwrap() - (2.0 - std::f64::consts::E)).abs() < 1e-15);
        assert!((ell(0.0705).unwrap() - (0.0705f64.ln() + 0.9295)).abs() < 1e-15);
        assert!((ell(0.0705).unwrap() + 1.722).abs() < 1e-3);
        assert!(ell(0.0).is_err());
        assert!(ell(-1.0).is_err());
    }

    #[test]
    fn ell_shape_on_grid() {
        let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.01).collect();
        for w in grid.windows(2) {
            let (a, b) = (ell(w[0]).unwrap(), ell(w[1]).unwrap());
            if w[1] <= 1.0 {
                assert!(b > a);
            } else if w[0] >= 1.0 {
                assert!(b < a);
            }
            assert!(a <= 0.0);
        }
    }

    #[test]
    fn ell_order_ties_and_mixed_sides() {
        let s = ell_order(&spectrum_of(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(s.pairs()[0].direction, vec![1.0, 0.0, 0.0]);
        assert_eq!(s.pairs()[2].direction, vec![0.0, 0.0, 1.0]);

        let mut values = vec![1.0; 6];
        values[0] = 0.278;
        values[3] = 0.009;
        values[5] = 0.0075;
        let s = ell_order(&spectrum_of(&values)).unwrap();
        assert_eq!(&s.values()[..4], &[0.0075, 0.009, 0.278, 1.0]);
        assert_eq!(choose_k(&s).unwrap(), 2);
    }

    #[test]
    fn ell_order_rejects_nonpositive() {
        let err = ell_order(&spectrum_of(&[2.0, 1e-13, 1.0])).unwrap_err();
        match err {
            Error::Domain { detail, .. } => assert!(detail.contains("index 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn choose_k_small_cases() {
        let s = ell_order(&spectrum_of(&[0.5, 1.0])).unwrap();
        assert_eq!(choose_k(&s).unwrap(), 1);
        let s = ell_order(&spectrum_of(&[0.0705, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(choose_k(&s).unwrap(), 1);
        let s = ell_order(&spectrum_of(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(choose_k(&s).unwrap(), 1);
        assert!(!has_informative_gap(&s));
        assert!(choose_k(&ell_order(&spectrum_of(&[2.0])).unwrap()).is_err());
    }

    #[test]
    fn projection_bounds() {
        let s = ell_order(&spectrum_of(&[0.5, 2.0, 1.0])).unwrap();
        assert_eq!(optimal_projection(&s, 0).unwrap(), LowRankCovariance::identity(3));
        assert!(matches!(optimal_projection(&s, 4), Err(Error::KOutOfRange { k: 4, n: 3 })));
        let full = optimal_projection(&s, 3).unwrap().to_dense();
        assert!(full.frobenius_distance(&DenseSym::diagonal(&[0.5, 2.0, 1.0])) < 1e-15);
    }

    #[test]
    fn partial_kl_identity_and_diagonal() {
        let i = DenseSym::identity(5);
        assert!((partial_kl_dense(&i, &i).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(partial_kl_lowrank(&LowRankCovariance::identity(5), &i).unwrap(), 5.0);

        let mut diag = vec![1.0; 30];
        diag[0] = 0.278;
        diag[1] = 0.009;
        diag[2] = 0.0075;
        let star = DenseSym::diagonal(&diag);
        let d = partial_kl_dense(&star, &star).unwrap();
        assert!((d - 19.10).abs() < 0.03, "{d}");
    }

    #[test]
    fn kl_relative_error_values() {
        assert_eq!(kl_relative_error(3.0, 3.0).unwrap(), 0.0);
        assert!((kl_relative_error(39.25, 37.35).unwrap() - 0.0509).abs() < 1e-4);
        assert!((kl_relative_error(111.91, 97.35).unwrap() - 0.1496).abs() < 1e-4);
        assert!(kl_relative_error(1.0, 0.0).is_err());
    }

    #[test]
    fn psi_of_eigenvector_is_eigenvalue() {
        let a = DenseSym::from_upper_fn(4, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 1.0 } else { 0.0 });
        let s = sym_eigendecompose(&a).unwrap();
        for p in &s.pairs {
            assert!((psi(&p.direction, &a) - p.value).abs() < 1e-10);
        }
    }

    #[test]
    fn ell_form_at_optimal_variances() {
        let a = DenseSym::from_upper_fn(4, |i, j| if i == j { 1.0 + i as f64 * 0.3 } else { 0.1 });
        let d0 = crate::linalg::normalized(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let d1 = crate::linalg::normalized(&[1.0, -1.0, 1.0, 0.0]).unwrap();
        let vs: Vec<f64> = [&d0, &d1].iter().map(|d| psi(d, &a)).collect();
        let c = LowRankCovariance::new(4, vec![d0, d1], vs.clone()).unwrap();
        let expected: f64 = vs.iter().map(|v| ell(*v).unwrap()).sum::<f64>() + a.trace();
        assert!((partial_kl_lowrank(&c, &a).unwrap() - expected).abs() < 1e-12);
    }
}
