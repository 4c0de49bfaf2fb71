//! Special functions used throughout the crate: the standard normal tail,
//! log-space gamma ratios, absolute Gaussian moments and the modified Bessel
//! function `K0`.
//!
//! All functions are pure and thread-safe.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{MathError, Result};

/// `1 / sqrt(2 pi)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

/// Beyond this abscissa the tail is evaluated as density times Mills ratio.
const FAR_TAIL: f64 = 8.0;

/// `exp(-t^2 / 2)` with the rounding error of `t * t` compensated.
fn exp_neg_half_square(t: f64) -> f64 {
    let sq = t * t;
    let lo = t.mul_add(t, -sq);
    (-0.5 * sq).exp() * (-0.5 * lo).exp()
}

/// Standard normal density.
pub fn normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * exp_neg_half_square(t)
}

/// Mills ratio `Φ̄(t)/φ(t)` by the Laplace continued fraction, for `t > 0`
/// (used only in the far tail, where it converges in a few dozen terms).
fn mills_ratio(t: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = t;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = t + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = t + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Upper tail `Φ̄(t) = P[η > t]` of the standard normal distribution.
pub fn normal_tail(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t > FAR_TAIL {
        normal_pdf(t) * mills_ratio(t)
    } else if t < -FAR_TAIL {
        1.0 - normal_pdf(-t) * mills_ratio(-t)
    } else {
        0.5 * libm::erfc(t * FRAC_1_SQRT_2)
    }
}

/// Standard normal distribution function `Φ(t)`.
pub fn normal_cdf(t: f64) -> f64 {
    normal_tail(-t)
}

/// `ln Φ̄(t)`, accurate also where `Φ̄(t)` underflows.
pub fn ln_normal_tail(t: f64) -> f64 {
    if t > FAR_TAIL {
        let sq = t * t;
        let lo = t.mul_add(t, -sq);
        INV_SQRT_2PI.ln() - 0.5 * sq - 0.5 * lo + mills_ratio(t).ln()
    } else {
        normal_tail(t).ln()
    }
}

/// Bound on `∫_t^∞ s^j φ(s) ds` for `t > 0`, from one integration by parts.
pub fn gaussian_power_tail_bound(j: i32, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let head = t.powi(j - 1) * normal_pdf(t);
    if j <= 1 {
        head
    } else {
        let denom = 1.0 - f64::from(j - 1) / (t * t);
        if denom > 0.0 {
            head / denom
        } else {
            f64::INFINITY
        }
    }
}

/// Stirling correction `ln Γ(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)]` for `x >= 10`.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 * (1.0 / 156.0)))))))
}

/// `ln Γ(a) - ln Γ(b)` without forming either gamma value.
///
/// For large, close arguments the result is assembled from a `ln_1p` of the
/// relative difference so the ratio keeps full relative precision.
pub fn log_gamma_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(MathError::invalid(format!(
            "gamma ratio needs positive finite arguments, got ({a}, {b})"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if a >= 10.0 && b >= 10.0 {
        let d = a - b;
        let main = (b - 0.5) * (d / b).ln_1p() + d * a.ln() - d;
        return Ok(main + stirling_correction(a) - stirling_correction(b));
    }
    Ok(libm::lgamma(a) - libm::lgamma(b))
}

/// Absolute moment `E|η|^k = 2^{k/2} Γ((k+1)/2) / sqrt(pi)` of a standard normal.
///
/// Built from the recurrence `m_k = (k - 1) m_{k-2}`, which is exact for even `k`.
pub fn gaussian_abs_moment(k: u32) -> f64 {
    let mut m = if k % 2 == 0 { 1.0 } else { (2.0 / PI).sqrt() };
    let mut j = if k % 2 == 0 { 2 } else { 3 };
    while j <= k {
        m *= f64::from(j - 1);
        j += 2;
    }
    m
}

/// `e^z K0(z)` from `∫_0^∞ exp(-z (cosh t - 1)) dt`.
///
/// The integrand is analytic and even in `t`, so the trapezoid rule converges
/// geometrically. With step `h = min(1/8, 1/(2 sqrt z))` the discretization
/// error is below `exp(-min(π²/h, 2π²/(h² z)))`, i.e. under `e^{-78}`.
/// The sum stops where the remaining tail is below `1e-17` of the value.
pub fn bessel_k0_scaled(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(MathError::invalid(format!("K0 needs z > 0, got {z}")));
    }
    let h = 0.125f64.min(0.5 / z.sqrt());
    // cosh t - 1 = 2 sinh^2(t/2)
    let f = |t: f64| {
        let s = (0.5 * t).sinh();
        (-2.0 * z * s * s).exp()
    };
    let mut sum = 0.5 * f(0.0);
    let mut k = 1u32;
    loop {
        let t = f64::from(k) * h;
        let v = f(t);
        sum += v;
        // beyond t the integrand decays at least like exp(-z sinh(t) (s - t))
        let tail = v / (z * t.sinh() * h);
        if tail <= 1e-17 * sum || k > 100_000 {
            break;
        }
        k += 1;
    }
    Ok(h * sum)
}

/// Modified Bessel function of the second kind `K0(z) = ∫_0^∞ e^{-z cosh t} dt`, `z > 0`.
pub fn bessel_k0(z: f64) -> Result<f64> {
    Ok((-z).exp() * bessel_k0_scaled(z)?)
}
