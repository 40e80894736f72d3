//! Normal and Gamma(6, 6) distribution functions in double precision.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Shape and rate of the Gamma(6, 6) law (mean 1).
pub const GAMMA_SHAPE: f64 = 6.0;
pub const GAMMA_RATE: f64 = 6.0;
const LN_GAMMA_SHAPE: f64 = 4.787_491_742_782_046; // ln 5!

/// `erf(x)` for `0 ≤ x < 3` by the all-positive series
/// `erf x = 2/√π · e^{−x²} Σ (2x²)ⁿ x / (2n+1)!!`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// `erfc(x)` for `x ≥ 2` by the Laplace continued fraction, modified Lentz.
fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc x = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64 * 0.5;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * PI.sqrt())
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else if x > 27.3 {
        0.0
    } else {
        erfc_continued_fraction(x)
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Acklam's rational approximation, about 1e-9 relative accuracy.
fn quantile_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("normal_quantile", format!("probability {p} not in (0, 1)")));
    }
    let mut x = quantile_seed(p);
    // Halley refinement; the lower-tail residual is formed from the upper
    // tail when x > 0 so that it keeps full relative precision.
    for _ in 0..2 {
        let e = if x <= 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_sf(x)
        };
        let u = e * SQRT_2PI * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// Regularized lower incomplete gamma `P(a, y)` by its power series; `y < a + 1`.
fn lower_gamma_series(a: f64, y: f64, ln_gamma_a: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..1000 {
        ap += 1.0;
        del *= y / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-y + a * y.ln() - ln_gamma_a).exp()
}

/// Regularized upper incomplete gamma `Q(a, y)` by continued fraction; `y ≥ a + 1`.
fn upper_gamma_cf(a: f64, y: f64, ln_gamma_a: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = y + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-y + a * y.ln() - ln_gamma_a).exp() * h
}

fn check_gamma_arg(function: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::domain(function, format!("argument {x} must be nonnegative")));
    }
    Ok(())
}

/// CDF of Gamma(shape 6, rate 6).
pub fn gamma66_cdf(x: f64) -> Result<f64> {
    check_gamma_arg("gamma66_cdf", x)?;
    let y = GAMMA_RATE * x;
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(1.0);
    }
    Ok(if y < GAMMA_SHAPE + 1.0 {
        lower_gamma_series(GAMMA_SHAPE, y, LN_GAMMA_SHAPE)
    } else {
        1.0 - upper_gamma_cf(GAMMA_SHAPE, y, LN_GAMMA_SHAPE)
    })
}

/// Survival function `1 − F(x)` of Gamma(6, 6), accurate in the upper tail.
pub fn gamma66_sf(x: f64) -> Result<f64> {
    check_gamma_arg("gamma66_sf", x)?;
    let y = GAMMA_RATE * x;
    if y == 0.0 {
        return Ok(1.0);
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    Ok(if y < GAMMA_SHAPE + 1.0 {
        1.0 - lower_gamma_series(GAMMA_SHAPE, y, LN_GAMMA_SHAPE)
    } else {
        upper_gamma_cf(GAMMA_SHAPE, y, LN_GAMMA_SHAPE)
    })
}

pub fn gamma66_pdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = GAMMA_RATE * x;
    (GAMMA_RATE.ln() + (GAMMA_SHAPE - 1.0) * y.ln() - y - LN_GAMMA_SHAPE).exp()
}

/// Wilson–Hilferty starting point for the Gamma(6, 6) quantile at normal score `z`.
fn gamma66_seed(z: f64, small_p: f64) -> f64 {
    let c = 1.0 / (9.0 * GAMMA_SHAPE);
    let wh = (1.0 - c + z * c.sqrt()).powi(3);
    if wh > 0.05 {
        wh
    } else {
        // P(6, y) ≈ y⁶/720 for small y.
        (720.0 * small_p).powf(1.0 / GAMMA_SHAPE) / GAMMA_RATE
    }
}

/// Bracketed Newton solve of `residual(x) = 0` for an increasing residual.
fn bracketed_newton(mut x: f64, residual: impl Fn(f64) -> f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    for _ in 0..300 {
        let r = residual(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = gamma66_pdf(x);
        let mut next = x - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        if (next - x).abs() <= 1e-14 * x {
            return next;
        }
        x = next;
    }
    x
}

/// Quantile of Gamma(6, 6): the `x` with `F(x) = p`.
pub fn gamma66_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("gamma66_quantile", format!("probability {p} not in (0, 1)")));
    }
    if p > 0.5 {
        return gamma66_quantile_upper(1.0 - p);
    }
    let z = normal_quantile(p)?;
    let x0 = gamma66_seed(z, p);
    Ok(bracketed_newton(x0, |x| gamma66_cdf(x).unwrap_or(0.0) - p))
}

/// Upper-tail quantile of Gamma(6, 6): the `x` with `1 − F(x) = q`.
pub fn gamma66_quantile_upper(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(
            "gamma66_quantile_upper",
            format!("probability {q} not in (0, 1)"),
        ));
    }
    if q > 0.5 {
        return gamma66_quantile(1.0 - q);
    }
    let z = -normal_quantile(q)?;
    let x0 = gamma66_seed(z, 1.0 - q);
    Ok(bracketed_newton(x0, |x| q - gamma66_sf(x).unwrap_or(1.0)))
}

/// `F_Γ⁻¹(F_N(z))`, evaluated through whichever tail keeps precision.
///
/// Extreme scores map to the limits `0` and `+∞` instead of erroring.
pub fn gamma66_from_normal_score(z: f64) -> f64 {
    if z <= 0.0 {
        let p = normal_cdf(z);
        if p <= 0.0 {
            0.0
        } else {
            gamma66_quantile(p).unwrap_or(0.0)
        }
    } else {
        let q = normal_sf(z);
        if q <= 0.0 {
            f64::INFINITY
        } else {
            gamma66_quantile_upper(q).unwrap_or(f64::INFINITY)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 40-digit arbitrary-precision evaluations.
    const NORMAL_CDF: [(f64, f64); 12] = [
        (-8.0, 6.220_960_574_271_784e-16),
        (-6.0, 9.865_876_450_376_981e-10),
        (-5.0, 2.866_515_718_791_939e-7),
        (-3.0, 1.349_898_031_630_094_5e-3),
        (-2.0, 2.275_013_194_817_920_7e-2),
        (-1.5, 6.680_720_126_885_807e-2),
        (-1.0, 0.158_655_253_931_457_05),
        (-0.5, 0.308_537_538_725_986_9),
        (0.25, 0.598_706_325_682_923_7),
        (1.0, 0.841_344_746_068_542_9),
        (2.5, 0.993_790_334_674_223_9),
        (4.0, 0.999_968_328_758_166_9),
    ];

    #[test]
    fn normal_cdf_matches_reference() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for (x, expected) in NORMAL_CDF {
            let got = normal_cdf(x);
            assert!(
                ((got - expected) / expected).abs() <= 1e-12,
                "x={x}: {got:e} vs {expected:e}"
            );
        }
        assert!((normal_cdf(-3.0) - 1.3499e-3).abs() < 5e-8);
    }

    #[test]
    fn normal_tails_are_symmetric() {
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            let s = normal_cdf(x) + normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-15, "x={x}");
            assert_eq!(normal_sf(x), normal_cdf(-x));
        }
    }

    #[test]
    fn normal_quantile_reference_and_domain() {
        for (p, expected) in [
            (1e-10, -6.361_340_902_404_056),
            (0.025, -1.959_963_984_540_054),
            (0.3, -0.524_400_512_708_040_8),
        ] {
            assert!((normal_quantile(p).unwrap() - expected).abs() < 1e-12);
        }
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err());
        }
    }

    #[test]
    fn normal_round_trip() {
        for i in -600..=600 {
            let x = i as f64 * 0.01;
            let back = normal_quantile(normal_cdf(x)).unwrap();
            // Above ~5 the CDF itself is quantized to 2⁻⁵³ near one, which
            // bounds how well any inverse can recover x.
            let conditioning = f64::EPSILON / normal_pdf(x);
            let tol = if x <= 5.0 { 1e-9 } else { 1e-9 + conditioning };
            assert!((back - x).abs() <= tol, "x={x}: {back}");
        }
    }

    /// `P(Γ(6,6) ≤ x) = 1 − e^{−6x} Σ_{j<6} (6x)ʲ/j!` for integer shape.
    fn poisson_sum_cdf(x: f64) -> f64 {
        let y = 6.0 * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..6 {
            term *= y / j as f64;
            sum += term;
        }
        1.0 - (-y).exp() * sum
    }

    #[test]
    fn gamma_cdf_matches_poisson_sum() {
        for i in 1..=400 {
            let x = i as f64 * 0.02;
            assert!((gamma66_cdf(x).unwrap() - poisson_sum_cdf(x)).abs() <= 1e-12, "x={x}");
        }
        assert!((gamma66_cdf(1.0).unwrap() - 0.5543).abs() < 1e-4);
        assert_eq!(gamma66_cdf(0.0).unwrap(), 0.0);
        assert!(gamma66_cdf(-1.0).is_err());
    }

    #[test]
    fn gamma_tails_match_reference() {
        for (x, lower, upper) in [
            (0.01, 6.155_337_413_967_304e-11, 0.999_999_999_938_446_6),
            (0.2, 1.500_225_098_229_991_2e-3, 0.998_499_774_901_770_0),
            (3.0, 0.999_676_006_548_898_8, 3.239_934_511_011_696e-4),
            (5.0, 0.999_999_977_426_512_5, 2.257_348_746_396_284e-8),
        ] {
            let l = gamma66_cdf(x).unwrap();
            let u = gamma66_sf(x).unwrap();
            assert!(((l - lower) / lower).abs() < 1e-12, "cdf({x}) = {l:e}");
            assert!(((u - upper) / upper).abs() < 1e-12, "sf({x}) = {u:e}");
        }
    }

    #[test]
    fn gamma_quantile_inverse_pairs() {
        for p in [0.01, 0.5, 0.99] {
            let x = gamma66_quantile(p).unwrap();
            assert!((gamma66_cdf(x).unwrap() - p).abs() <= 1e-10);
        }
        for x in [0.2, 1.0, 3.0] {
            let back = gamma66_quantile(gamma66_cdf(x).unwrap()).unwrap();
            assert!((back - x).abs() <= 1e-8, "x={x}: {back}");
        }
        assert!((gamma66_quantile(0.5).unwrap() - 0.945_026_864_785_345).abs() < 1e-12);
        assert!((gamma66_quantile(0.01).unwrap() - 0.297_547_414_217_032_6).abs() < 1e-12);
        assert!((gamma66_quantile(0.99).unwrap() - 2.184_747_275_461_320_6).abs() < 1e-12);
        assert!(gamma66_quantile(0.0).is_err());
        assert!(gamma66_quantile(1.0).is_err());
    }

    #[test]
    fn gamma_from_extreme_scores() {
        assert_eq!(gamma66_from_normal_score(-40.0), 0.0);
        assert_eq!(gamma66_from_normal_score(40.0), f64::INFINITY);
        for z in [-8.0, -3.0, -0.1, 0.0, 0.1, 3.0, 8.0] {
            let x = gamma66_from_normal_score(z);
            let (lhs, rhs) = if z <= 0.0 {
                (gamma66_cdf(x).unwrap(), normal_cdf(z))
            } else {
                (gamma66_sf(x).unwrap(), normal_sf(z))
            };
            assert!(((lhs - rhs) / rhs).abs() < 1e-10, "z={z}");
        }
    }
}
