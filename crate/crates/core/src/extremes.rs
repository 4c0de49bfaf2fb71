//! Expected maxima of independent standard Gaussians by quadrature:
//! `A_n = E max |η_i|` over `n` variables and `B_m = E max η_i` over `m`
//! variables, the centering sequences `u_n` and `t_n`, and the comparison
//! between `A_n` and `B_{2n}`.

use crate::error::{Estimate, MathError, Result};
use crate::quadrature::{integrate_pieces, QuadratureConfig};
use crate::special::{gaussian_power_tail_bound, ln_normal_tail, normal_pdf, normal_tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtremeKind {
    /// `E max{η_1, ..., η_n}`
    Max,
    /// `E max{|η_1|, ..., |η_n|}`
    MaxAbs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeValueResult {
    pub n: u64,
    pub kind: ExtremeKind,
    pub value: f64,
    pub abs_error_bound: f64,
}

impl ExtremeValueResult {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.value, self.abs_error_bound)
    }
}

/// Centering sequence `u_n = sqrt(2 ln n) - (ln ln n / 2 + ln(2 sqrt(pi))) / sqrt(2 ln n)`.
pub fn u_sequence(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(MathError::invalid(format!("u_n needs n >= 2, got {n}")));
    }
    let l = (n as f64).ln();
    let s = (2.0 * l).sqrt();
    let c = 0.5 * l.ln() + (2.0 * std::f64::consts::PI.sqrt()).ln();
    Ok(s - c / s)
}

/// Solve `Φ̄(t) = p` for `p ∈ (0, 1)`: bisection down to a short bracket,
/// then Newton steps on `ln Φ̄`, kept inside the bracket.
pub fn normal_upper_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MathError::invalid(format!("tail probability must lie in (0,1), got {p}")));
    }
    let target = p.ln();
    let g = |t: f64| ln_normal_tail(t) - target;
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    if g(hi) > 0.0 {
        return Err(MathError::Numerical(format!("tail probability {p:e} below representable range")));
    }
    while hi - lo > 1e-2 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..50 {
        let gt = g(t);
        if gt == 0.0 {
            break;
        }
        if gt > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        // d/dt ln Φ̄(t) = -φ(t)/Φ̄(t)
        let slope = -(normal_pdf(t).ln() - ln_normal_tail(t)).exp();
        let mut next = t - gt / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - t).abs();
        t = next;
        if step < 1e-15 * t.abs().max(1.0) {
            break;
        }
    }
    Ok(t)
}

/// `t_n` with `Φ̄(t_n) = 1/(2n)`.
pub fn solve_t_n(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(MathError::invalid("t_n needs n >= 1"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    normal_upper_quantile(0.5 / n as f64)
}

/// `F_n(t) = P[max |η_i| <= t] = (1 - 2Φ̄(t))^n`, `t >= 0`.
pub fn cdf_max_abs(n: u64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(MathError::invalid(format!("F_n is defined for t >= 0, got {t}")));
    }
    Ok((n as f64 * (-2.0 * normal_tail(t)).ln_1p()).exp())
}

/// `G_m(t) = P[max η_i <= t] = (1 - Φ̄(t))^m`.
pub fn cdf_max(m: u64, t: f64) -> f64 {
    (m as f64 * (-normal_tail(t)).ln_1p()).exp()
}

/// `1 - F_n(t)` without cancellation.
fn survival_max_abs(n: f64, t: f64) -> f64 {
    -(n * (-2.0 * normal_tail(t)).ln_1p()).exp_m1()
}

/// `1 - G_m(t)` without cancellation.
fn survival_max(m: f64, t: f64) -> f64 {
    -(m * (-normal_tail(t)).ln_1p()).exp_m1()
}

/// `Φ̄(t)^m`, evaluated in log space.
fn tail_power(m: f64, t: f64) -> f64 {
    (m * ln_normal_tail(t)).exp()
}

/// Truncation point `T` with `multiplicity · Φ̄(T) = eps`.
pub(crate) fn truncation_point(multiplicity: f64, eps: f64) -> Result<f64> {
    let p = (eps / multiplicity).min(0.25);
    normal_upper_quantile(p)
}

/// Breakpoints on `[0, cut]` that bracket the bulk of a maximum of `count`
/// Gaussians, so the adaptive rule starts near the transition.
fn bulk_breaks(count: f64, cut: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    if count > 1.0 {
        let center = normal_upper_quantile((0.5 / count).min(0.25)).unwrap_or(1.0);
        for x in [center - 1.0, center, center + 1.0] {
            if x > 0.0 && x < cut {
                breaks.push(x);
            }
        }
    }
    breaks.push(cut);
    breaks.dedup();
    breaks
}

/// `E[(max |η_i|)^k] = ∫_0^∞ k t^{k-1} (1 - F_n(t)) dt`.
pub fn max_abs_moment(n: u64, k: u32, cfg: &QuadratureConfig) -> Result<Estimate> {
    if n < 1 || k < 1 {
        return Err(MathError::invalid("max_abs_moment needs n >= 1 and k >= 1"));
    }
    let nf = n as f64;
    let kf = f64::from(k);
    let cut = truncation_point(2.0 * nf, cfg.trunc_eps)?;
    let breaks = bulk_breaks(2.0 * nf, cut);
    let body = integrate_pieces(
        |t| kf * t.powi(k as i32 - 1) * survival_max_abs(nf, t),
        &breaks,
        cfg,
    )?;
    // 1 - F_n <= 2nΦ̄ and t^{k-1}Φ̄(t) <= t^{k-2}φ(t)
    let tail = 2.0 * nf * kf * gaussian_power_tail_bound(k as i32 - 2, cut);
    Ok(Estimate::new(body.value, body.error + tail))
}

/// `A_n = E max{|η_1|, ..., |η_n|}`.
pub fn expected_max_abs(n: u64, cfg: &QuadratureConfig) -> Result<ExtremeValueResult> {
    let est = max_abs_moment(n, 1, cfg)?;
    Ok(ExtremeValueResult {
        n,
        kind: ExtremeKind::MaxAbs,
        value: est.value,
        abs_error_bound: est.error,
    })
}

/// Positive part `∫_0^∞ (1 - G_m)` and negative-part correction `∫_0^∞ Φ̄^m`
/// of `E max{η_1, ..., η_m}`.
pub fn expected_max_parts(m: u64, cfg: &QuadratureConfig) -> Result<(Estimate, Estimate)> {
    if m < 1 {
        return Err(MathError::invalid("expected_max needs m >= 1"));
    }
    let mf = m as f64;
    let cut = truncation_point(mf, cfg.trunc_eps)?;
    let breaks = bulk_breaks(mf, cut);
    let positive = integrate_pieces(|t| survival_max(mf, t), &breaks, cfg)?;
    let correction = integrate_pieces(|t| tail_power(mf, t), &[0.0, 1.0, cut], cfg)?;
    // Both tails are dominated by m ∫_T^∞ Φ̄ <= m φ(T)/T^2.
    let tail = mf * gaussian_power_tail_bound(-1, cut);
    let correction_tail = gaussian_power_tail_bound(-1, cut);
    let correction = Estimate::new(correction.value, correction.error + correction_tail);
    let bound = 2f64.powf(-mf / 2.0);
    if correction.value > bound + correction.error {
        return Err(MathError::Numerical(format!(
            "negative-part correction {} exceeds 2^(-m/2) = {bound:e}",
            correction.value
        )));
    }
    Ok((Estimate::new(positive.value, positive.error + tail), correction))
}

/// `B_m = E max{η_1, ..., η_m}`, including the negative-part correction.
pub fn expected_max(m: u64, cfg: &QuadratureConfig) -> Result<ExtremeValueResult> {
    let (positive, correction) = expected_max_parts(m, cfg)?;
    Ok(ExtremeValueResult {
        n: m,
        kind: ExtremeKind::Max,
        value: positive.value - correction.value,
        abs_error_bound: positive.error + correction.error,
    })
}

/// `A_n - B_{2n}` from `∫ (G_{2n} - F_n) + ∫ Φ̄^{2n}` with the integrand
/// `G_{2n} - F_n = F_n · expm1(n ln(1 + r^2/(1 - 2r)))`, `r = Φ̄(t)`, which
/// keeps full relative precision where the two maxima nearly coincide.
pub fn max_abs_minus_max(n: u64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if n < 1 {
        return Err(MathError::invalid("max_abs_minus_max needs n >= 1"));
    }
    let nf = n as f64;
    let integrand = |t: f64| {
        let r = normal_tail(t);
        let f = (nf * (-2.0 * r).ln_1p()).exp();
        if f == 0.0 {
            return (2.0 * nf * (-r).ln_1p()).exp();
        }
        f * (nf * (r * r / (1.0 - 2.0 * r)).ln_1p()).exp_m1()
    };
    let cut = truncation_point(2.0 * nf, cfg.trunc_eps)?;
    let breaks = bulk_breaks(2.0 * nf, cut);
    // The difference is tiny in absolute terms; control it relatively.
    let rel_cfg = QuadratureConfig {
        abs_tol: 0.0,
        ..*cfg
    };
    let body = integrate_pieces(integrand, &breaks, &rel_cfg)?;
    let correction = integrate_pieces(|t| tail_power(2.0 * nf, t), &[0.0, 1.0, cut], cfg)?;
    // G - F <= n Φ̄^2 (1-Φ̄)^{2n-2} <= n Φ̄^2, and ∫_T^∞ Φ̄^2 <= Φ̄(T) φ(T)/T^2.
    let tail = nf * normal_tail(cut) * gaussian_power_tail_bound(-1, cut)
        + gaussian_power_tail_bound(-1, cut) * normal_tail(cut).powf(2.0 * nf - 1.0);
    Ok(Estimate::new(
        body.value + correction.value,
        body.error + correction.error + tail,
    ))
}

/// Expected maximum of `n` centered unit-variance Gaussians is at most `sqrt(2 ln n)`.
pub fn emax_upper_bound(n: u64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    (2.0 * (n as f64).ln()).sqrt()
}

/// Both sides of `B_{2n} <= A_n <= sqrt(2n/(2n-1)) B_{2n}` for one `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub n: u64,
    /// `E max{|η_1|, ..., |η_n|}`
    pub a_n: f64,
    /// `E max{η_1, ..., η_{2n}}`
    pub b_2n: f64,
    pub ratio: f64,
    pub slepian_ok: bool,
    pub upper_ok: bool,
    /// `8 n ln n (a_n/b_2n - 1)`, defined for `n >= 2`.
    pub gap_normalized: Option<f64>,
    /// `a_n - b_2n` from the cancellation-free integrand.
    pub difference: f64,
    /// Sum of the absolute error bounds used as slack in both checks.
    pub slack: f64,
}

impl ComparisonReport {
    /// The upper side holds with equality (within slack) only at `n = 1`.
    pub fn upper_is_tight(&self) -> bool {
        let upper = self.upper_factor() * self.b_2n;
        (upper - self.a_n).abs() <= self.slack.max(1e-14)
    }

    pub fn upper_factor(&self) -> f64 {
        let m = 2.0 * self.n as f64;
        (m / (m - 1.0)).sqrt()
    }
}

pub fn comparison_report(n: u64, cfg: &QuadratureConfig) -> Result<ComparisonReport> {
    if n < 1 {
        return Err(MathError::invalid("comparison_report needs n >= 1"));
    }
    let a = expected_max_abs(n, cfg)?;
    let b = expected_max(2 * n, cfg)?;
    let diff = max_abs_minus_max(n, cfg)?;
    let m = 2.0 * n as f64;
    let factor = (m / (m - 1.0)).sqrt();
    let slack = a.abs_error_bound + factor * b.abs_error_bound;
    let gap_normalized = (n >= 2).then(|| {
        let nf = n as f64;
        8.0 * nf * nf.ln() * diff.value / b.value
    });
    Ok(ComparisonReport {
        n,
        a_n: a.value,
        b_2n: b.value,
        ratio: a.value / b.value,
        slepian_ok: b.value <= a.value + slack,
        upper_ok: a.value <= factor * b.value + slack,
        gap_normalized,
        difference: diff.value,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn u_n_examples() {
        assert!(u_sequence(1).is_err());
        let l2 = 2f64.ln();
        let direct = (2.0 * l2).sqrt() - (0.5 * l2.ln() + (2.0 * PI.sqrt()).ln()) / (2.0 * l2).sqrt();
        assert_eq!(u_sequence(2).unwrap(), direct);
        // 40-digit evaluation of the defining expression at n = 100.
        assert!((u_sequence(100).unwrap() - 2.366_254_792_906_394).abs() < 1e-12);
    }

    #[test]
    fn u_n_defining_relation() {
        let u = u_sequence(1_000_000).unwrap();
        let rel = (2.0 * PI).sqrt() * u * (0.5 * u * u).exp() / 1e6;
        assert!((rel - 1.0).abs() < 0.05, "{rel}");
    }

    #[test]
    fn t_n_examples() {
        assert_eq!(solve_t_n(1).unwrap(), 0.0);
        assert!((solve_t_n(2).unwrap() - 0.674_489_750_196_081_7).abs() < 1e-12);
        let t = solve_t_n(10_000).unwrap();
        assert!((normal_tail(t) - 5e-5).abs() < 1e-12);
    }

    #[test]
    fn quantile_is_accurate_far_out() {
        for &p in &[1e-3, 1e-10, 1e-30, 1e-100, 1e-300] {
            let t = normal_upper_quantile(p).unwrap();
            let back = normal_tail(t);
            assert!(((back - p) / p).abs() < 1e-12, "p={p:e}");
        }
        assert!(normal_upper_quantile(0.0).is_err());
        assert!(normal_upper_quantile(1.0).is_err());
    }

    #[test]
    fn distribution_functions() {
        assert_eq!(cdf_max_abs(7, 0.0).unwrap(), 0.0);
        assert!(cdf_max_abs(1, -0.1).is_err());
        let t = 1.3;
        assert!((cdf_max_abs(1, t).unwrap() - (1.0 - 2.0 * normal_tail(t))).abs() < 1e-15);
        assert!((cdf_max_abs(2, 1.0).unwrap() - 0.466_064_942_674_392_27).abs() < 1e-14);
        assert!((cdf_max(1, 0.0) - 0.5).abs() < 1e-16);
        assert!((cdf_max(2, 0.0) - 0.25).abs() < 1e-16);
        assert!((cdf_max(4, 2.0) - (1.0 - normal_tail(2.0)).powi(4)).abs() < 1e-15);
    }

    #[test]
    fn max_abs_small_n() {
        let a1 = expected_max_abs(1, &cfg()).unwrap();
        assert!((a1.value - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!(a1.abs_error_bound < 1e-10);
    }

    #[test]
    fn max_small_m() {
        assert!(expected_max(1, &cfg()).unwrap().value.abs() < 1e-15);
        let b2 = expected_max(2, &cfg()).unwrap();
        assert!((b2.value - 1.0 / PI.sqrt()).abs() < 1e-12);
        let b3 = expected_max(3, &cfg()).unwrap();
        assert!((b3.value - 1.5 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bracket_at_large_n() {
        let a = expected_max_abs(10_000, &cfg()).unwrap().value;
        let u = u_sequence(20_000).unwrap();
        assert!(a > u && a < u + 1.0);
    }

    #[test]
    fn correction_is_below_geometric_bound() {
        for m in [1, 2, 5, 20, 100] {
            let (_, c) = expected_max_parts(m, &cfg()).unwrap();
            assert!(c.value <= 2f64.powf(-(m as f64) / 2.0));
        }
    }

    #[test]
    fn difference_matches_separate_integrals() {
        for n in [1, 2, 10, 100] {
            let a = expected_max_abs(n, &cfg()).unwrap().value;
            let b = expected_max(2 * n, &cfg()).unwrap().value;
            let d = max_abs_minus_max(n, &cfg()).unwrap().value;
            assert!((a - b - d).abs() < 1e-11, "n={n}: {} vs {d}", a - b);
        }
    }

    #[test]
    fn n_one_is_tight() {
        let r = comparison_report(1, &cfg()).unwrap();
        assert!(r.slepian_ok && r.upper_ok);
        assert!(r.upper_is_tight());
        assert!((r.ratio - 2f64.sqrt()).abs() < 1e-10);
        assert!(r.gap_normalized.is_none());
    }

    #[test]
    fn upper_bound_sqrt_two_log() {
        assert_eq!(emax_upper_bound(1), 0.0);
        assert!((emax_upper_bound(2) - 1.177_410_022_515_474_6).abs() < 1e-15);
        let b = expected_max(2, &cfg()).unwrap().value;
        assert!(b <= emax_upper_bound(2));
    }
}
