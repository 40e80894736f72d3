//! Gaussian laws with dense or low-rank-plus-identity covariance.
//!
//! A [`LowRankCovariance`] stores `Σ = I + Σᵢ (vᵢ − 1) dᵢdᵢᵀ` through its `k`
//! orthonormal directions, so determinant, inverse quadratic form, density and
//! square root all cost `O(nk)` instead of `O(n³)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sym_eigendecompose, DenseSym, Spectrum};
use crate::rng::RandomStream;

/// Smallest admissible variance or eigenvalue of a covariance.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Orthonormality defects up to this size are accepted as rounding noise.
pub const ORTHO_EXACT_TOL: f64 = 1e-10;
/// Orthonormality defects up to this size are repaired by Gram–Schmidt.
pub const ORTHO_REPAIR_TOL: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// `Σ = Iₙ + Σᵢ (vᵢ − 1) dᵢdᵢᵀ` with orthonormal `dᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankCovariance {
    n: usize,
    directions: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl LowRankCovariance {
    pub fn identity(n: usize) -> Self {
        LowRankCovariance {
            n,
            directions: Vec::new(),
            variances: Vec::new(),
        }
    }

    /// Validates and, if needed, repairs the direction set.
    ///
    /// Directions whose norms or pairwise products deviate from orthonormality
    /// by more than `ORTHO_EXACT_TOL` but at most `ORTHO_REPAIR_TOL` are
    /// re-orthonormalized; larger deviations are rejected. Variances below
    /// `VARIANCE_FLOOR` are rejected.
    pub fn new(n: usize, directions: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("LowRankCovariance::new", "dimension must be at least 1"));
        }
        if directions.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                expected: directions.len(),
                found: variances.len(),
            });
        }
        if directions.len() > n {
            return Err(Error::KOutOfRange {
                k: directions.len(),
                n,
            });
        }
        for (index, &value) in variances.iter().enumerate() {
            if !(value >= VARIANCE_FLOOR) || !value.is_finite() {
                return Err(Error::DegenerateVariance { index, value });
            }
        }
        for d in &directions {
            if d.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.len(),
                });
            }
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDirections("non-finite coordinate".into()));
            }
        }

        let mut worst: f64 = 0.0;
        for (i, di) in directions.iter().enumerate() {
            worst = worst.max((norm(di) - 1.0).abs());
            for dj in &directions[i + 1..] {
                worst = worst.max(dot(di, dj).abs());
            }
        }
        let directions = if worst <= ORTHO_EXACT_TOL {
            directions
        } else if worst <= ORTHO_REPAIR_TOL {
            gram_schmidt(directions)
        } else {
            return Err(Error::InvalidDirections(format!(
                "orthonormality defect {worst:e} exceeds {ORTHO_REPAIR_TOL:e}"
            )));
        };

        Ok(LowRankCovariance {
            n,
            directions,
            variances,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn to_dense(&self) -> DenseSym {
        DenseSym::from_upper_fn(self.n, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + self
                .directions
                .iter()
                .zip(&self.variances)
                .map(|(d, v)| (v - 1.0) * d[i] * d[j])
                .sum::<f64>()
        })
    }

    /// `log det Σ = Σᵢ log vᵢ`.
    pub fn log_det(&self) -> f64 {
        self.variances.iter().map(|v| v.ln()).sum()
    }

    /// `yᵀΣ⁻¹y = yᵀy + Σᵢ (1/vᵢ − 1)(dᵢᵀy)²`.
    pub fn inv_quad(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.n);
        let mut q = dot(y, y);
        for (d, v) in self.directions.iter().zip(&self.variances) {
            let p = dot(d, y);
            q += (1.0 / v - 1.0) * p * p;
        }
        q
    }

    /// `out = A z` with `A = I + Σᵢ (√vᵢ − 1) dᵢdᵢᵀ` the symmetric square root.
    pub fn sqrt_apply(&self, z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(z);
        for (d, v) in self.directions.iter().zip(&self.variances) {
            let c = (v.sqrt() - 1.0) * dot(d, z);
            for (o, di) in out.iter_mut().zip(d) {
                *o += c * di;
            }
        }
    }
}

fn gram_schmidt(mut directions: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for i in 0..directions.len() {
        let (done, rest) = directions.split_at_mut(i);
        let di = &mut rest[0];
        for dj in done.iter() {
            let p = dot(di, dj);
            for (a, b) in di.iter_mut().zip(dj) {
                *a -= p * b;
            }
        }
        let nrm = norm(di);
        for a in di.iter_mut() {
            *a /= nrm;
        }
    }
    directions
}

/// Dense positive-definite covariance together with its spectral factors.
#[derive(Debug, Clone)]
pub struct DenseCovariance {
    matrix: DenseSym,
    spectrum: Spectrum,
    log_det: f64,
    sqrt: DenseSym,
}

impl DenseCovariance {
    /// Accepts `matrix` only if every eigenvalue exceeds `VARIANCE_FLOOR`.
    pub fn new(matrix: DenseSym) -> Result<Self> {
        let spectrum = sym_eigendecompose(&matrix)?;
        let min_eigenvalue = spectrum
            .pairs
            .iter()
            .map(|p| p.value)
            .fold(f64::INFINITY, f64::min);
        if !(min_eigenvalue > VARIANCE_FLOOR) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
        let log_det = spectrum.pairs.iter().map(|p| p.value.ln()).sum();
        let sqrt = DenseSym::from_upper_fn(matrix.dim(), |i, j| {
            spectrum
                .pairs
                .iter()
                .map(|p| p.value.sqrt() * p.direction[i] * p.direction[j])
                .sum()
        });
        Ok(DenseCovariance {
            matrix,
            spectrum,
            log_det,
            sqrt,
        })
    }

    pub fn matrix(&self) -> &DenseSym {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn inv_quad(&self, y: &[f64]) -> f64 {
        self.spectrum
            .pairs
            .iter()
            .map(|p| {
                let c = dot(&p.direction, y);
                c * c / p.value
            })
            .sum()
    }

    pub fn sqrt_apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.sqrt.row(i), z);
        }
    }
}

#[derive(Debug, Clone)]
pub enum Covariance {
    Dense(DenseCovariance),
    LowRank(LowRankCovariance),
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::Dense(c) => c.dim(),
            Covariance::LowRank(c) => c.dim(),
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            Covariance::Dense(c) => c.log_det(),
            Covariance::LowRank(c) => c.log_det(),
        }
    }

    pub fn inv_quad(&self, y: &[f64]) -> f64 {
        match self {
            Covariance::Dense(c) => c.inv_quad(y),
            Covariance::LowRank(c) => c.inv_quad(y),
        }
    }

    fn sqrt_apply(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Covariance::Dense(c) => c.sqrt_apply(z, out),
            Covariance::LowRank(c) => c.sqrt_apply(z, out),
        }
    }

    pub fn to_dense(&self) -> DenseSym {
        match self {
            Covariance::Dense(c) => c.matrix().clone(),
            Covariance::LowRank(c) => c.to_dense(),
        }
    }
}

impl From<LowRankCovariance> for Covariance {
    fn from(c: LowRankCovariance) -> Self {
        Covariance::LowRank(c)
    }
}

impl From<DenseCovariance> for Covariance {
    fn from(c: DenseCovariance) -> Self {
        Covariance::Dense(c)
    }
}

/// The Gaussian density `g_{m,Σ}`.
#[derive(Debug, Clone)]
pub struct GaussianLaw {
    mean: Vec<f64>,
    cov: Covariance,
}

impl GaussianLaw {
    pub fn new(mean: Vec<f64>, cov: impl Into<Covariance>) -> Result<Self> {
        let cov = cov.into();
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        Ok(GaussianLaw { mean, cov })
    }

    /// Dense covariance; rejected unless positive definite.
    pub fn with_dense(mean: Vec<f64>, cov: DenseSym) -> Result<Self> {
        Self::new(mean, DenseCovariance::new(cov)?)
    }

    pub fn standard(n: usize) -> Self {
        GaussianLaw {
            mean: vec![0.0; n],
            cov: LowRankCovariance::identity(n).into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }

    fn centered_quad(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        self.cov.inv_quad(&y)
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        -(self.dim() as f64) * HALF_LN_2PI - 0.5 * self.cov.log_det() - 0.5 * self.centered_quad(x)
    }

    /// `log f(x) − log g(x)` with `f` the standard normal density.
    pub fn likelihood_ratio_log(&self, x: &[f64]) -> f64 {
        0.5 * (self.cov.log_det() + self.centered_quad(x) - dot(x, x))
    }

    /// Writes one draw `m + A z` into `out`, using `z` as scratch for the noise.
    pub fn sample_into(&self, rng: &mut RandomStream, z: &mut [f64], out: &mut [f64]) {
        rng.fill_standard_normal(z);
        self.cov.sqrt_apply(z, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }

    pub fn sample(&self, rng: &mut RandomStream, count: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut z = vec![0.0; n];
        (0..count)
            .map(|_| {
                let mut x = vec![0.0; n];
                self.sample_into(rng, &mut z, &mut x);
                x
            })
            .collect()
    }
}

/// Standard normal log-density in dimension `x.len()`.
pub fn standard_log_density(x: &[f64]) -> f64 {
    -(x.len() as f64) * 0.5 * (2.0 * PI).ln() - 0.5 * dot(x, x)
}
