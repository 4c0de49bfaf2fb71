//! Limit laws of the standardized random widths and Kolmogorov–Smirnov fits.
//!
//! * cube: `W − sqrt(2n/π)` is asymptotically normal with variance `(π−3)/π`;
//! * simplex: `sqrt(2n ln n)(W − 2u_n/sqrt(n))` tends to the sum of two
//!   independent Gumbel variables;
//! * crosspolytope: `sqrt(2n ln n)(W − 2u_{2n}/sqrt(n))` tends to twice a Gumbel variable.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{MathError, Result};
use crate::extremes::u_sequence;
use crate::monte_carlo::{sample_widths, McConfig};
use crate::quadrature::{integrate_pieces, QuadratureConfig};
use crate::special::{bessel_k0_scaled, normal_cdf, EULER_GAMMA};
use crate::widths::{PolytopeKind, RegularPolytope};

/// Constants of the bivariate CLT behind the cube limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltConstants {
    pub mu: f64,
    pub sigma2: f64,
    pub v2: f64,
    pub r: f64,
    pub limit_var: f64,
    pub euler_gamma: f64,
}

impl Default for CltConstants {
    fn default() -> Self {
        Self {
            mu: (2.0 / PI).sqrt(),
            sigma2: (PI - 2.0) / PI,
            v2: 2.0,
            r: 1.0 / (PI - 2.0).sqrt(),
            limit_var: (PI - 3.0) / PI,
            euler_gamma: EULER_GAMMA,
        }
    }
}

impl CltConstants {
    /// `σ² + μ² v²/4 − μ sqrt(σ² v²) r`, which equals `limit_var`.
    pub fn variance_from_components(&self) -> f64 {
        self.sigma2 + self.mu * self.mu * self.v2 / 4.0 - self.mu * (self.sigma2 * self.v2).sqrt() * self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitLaw {
    /// `N(0, (π−3)/π)`
    NormalLimitVar,
    /// `exp(−exp(−x))`
    Gumbel,
    /// Law of `2G`, `exp(−exp(−x/2))`
    TwoGumbel,
    /// Law of `G_1 + G_2`, density `2 e^{−x} K0(2 e^{−x/2})`
    GumbelSum,
}

impl LimitLaw {
    pub fn name(self) -> &'static str {
        match self {
            Self::NormalLimitVar => "normal",
            Self::Gumbel => "gumbel",
            Self::TwoGumbel => "two-gumbel",
            Self::GumbelSum => "gumbel-sum",
        }
    }

    /// Limit law of the standardized width of a family.
    pub fn for_family(kind: PolytopeKind) -> Self {
        match kind {
            PolytopeKind::Cube => Self::NormalLimitVar,
            PolytopeKind::SimplexS | PolytopeKind::SimplexT => Self::GumbelSum,
            PolytopeKind::Crosspolytope => Self::TwoGumbel,
        }
    }
}

pub fn standardize_cube(w: f64, n: usize) -> f64 {
    w - (2.0 * n as f64 / PI).sqrt()
}

fn gumbel_scale(n: usize) -> f64 {
    let nf = n as f64;
    (2.0 * nf * nf.ln()).sqrt()
}

pub fn standardize_simplex(w: f64, n: usize) -> Result<f64> {
    let u = u_sequence(n as u64)?;
    Ok(gumbel_scale(n) * (w - 2.0 * u / (n as f64).sqrt()))
}

pub fn standardize_cross(w: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(MathError::invalid("crosspolytope standardization needs n >= 2"));
    }
    let u = u_sequence(2 * n as u64)?;
    Ok(gumbel_scale(n) * (w - 2.0 * u / (n as f64).sqrt()))
}

/// Standardization matching [`LimitLaw::for_family`]. Simplex-t widths use
/// the simplex centering; the two differ by `O(ln n / n)` after scaling.
pub fn standardize(p: RegularPolytope, w: f64) -> Result<f64> {
    match p.kind() {
        PolytopeKind::Cube => Ok(standardize_cube(w, p.n())),
        PolytopeKind::SimplexS | PolytopeKind::SimplexT => standardize_simplex(w, p.n()),
        PolytopeKind::Crosspolytope => standardize_cross(w, p.n()),
    }
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// `2 e^{−x} K0(2 e^{−x/2})`, written as `z²/2 · e^{−z} (e^z K0(z))` with `z = 2e^{−x/2}`.
pub fn gumbel_sum_density(x: f64) -> Result<f64> {
    let ln_z = std::f64::consts::LN_2 - 0.5 * x;
    let z = ln_z.exp();
    if z > 745.0 {
        return Ok(0.0);
    }
    let log_front = 2.0 * ln_z - std::f64::consts::LN_2 - z;
    Ok(log_front.exp() * bessel_k0_scaled(z)?)
}

const GUMBEL_SUM_LOWER: f64 = -10.0;
const GUMBEL_SUM_UPPER_SPAN: f64 = 80.0;

fn density_integral(a: f64, b: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let failed = std::cell::Cell::new(None);
    let f = |x: f64| match gumbel_sum_density(x) {
        Ok(v) => v,
        Err(e) => {
            failed.set(Some(e));
            0.0
        }
    };
    let mut breaks = vec![a];
    for m in [-2.0, 0.0, 2.0, 6.0, 15.0] {
        if m > a && m < b {
            breaks.push(m);
        }
    }
    breaks.push(b);
    let est = integrate_pieces(f, &breaks, cfg)?;
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok((est.value, est.error))
}

fn gumbel_sum_cfg() -> QuadratureConfig {
    QuadratureConfig::default().with_tolerances(1e-12, 1e-12)
}

/// `P[G_1 + G_2 <= x]` with an absolute error bound.
///
/// Left of the median the density is integrated from `min(x, −10) − 1`
/// (the neglected mass is below `e^{−290}`); right of it the complement is
/// integrated up to `x + 80`, beyond which the mass is at most `2e^{−40}`
/// by a union bound.
pub fn gumbel_sum_cdf_with_error(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(MathError::invalid("limit_cdf needs a finite abscissa"));
    }
    let cfg = gumbel_sum_cfg();
    if x <= 0.0 {
        let lower = x.min(GUMBEL_SUM_LOWER) - 1.0;
        if x <= lower {
            return Ok((0.0, 0.0));
        }
        let (v, e) = density_integral(lower, x, &cfg)?;
        Ok((v.clamp(0.0, 1.0), e + 1e-300))
    } else {
        let upper = x + GUMBEL_SUM_UPPER_SPAN;
        let (v, e) = density_integral(x, upper, &cfg)?;
        let tail = 2.0 * (-0.5 * upper).exp();
        Ok(((1.0 - v).clamp(0.0, 1.0), e + tail))
    }
}

pub fn limit_cdf(law: LimitLaw, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(MathError::invalid("limit_cdf needs a finite abscissa"));
    }
    Ok(match law {
        LimitLaw::Gumbel => gumbel_cdf(x),
        LimitLaw::TwoGumbel => gumbel_cdf(0.5 * x),
        LimitLaw::NormalLimitVar => normal_cdf(x / CltConstants::default().limit_var.sqrt()),
        LimitLaw::GumbelSum => {
            if x == f64::INFINITY {
                1.0
            } else if x == f64::NEG_INFINITY {
                0.0
            } else {
                gumbel_sum_cdf_with_error(x)?.0
            }
        }
    })
}

/// `limit_cdf` at every point of an ascending sample.
///
/// For the GumbelSum law the CDF is evaluated once at the first point and
/// then accumulated over consecutive gaps, so each density piece is
/// integrated only once.
pub fn cdf_many(law: LimitLaw, sorted: &[f64]) -> Result<Vec<f64>> {
    check_sorted(sorted)?;
    if law != LimitLaw::GumbelSum {
        return sorted.iter().map(|&x| limit_cdf(law, x)).collect();
    }
    if sorted.is_empty() {
        return Ok(Vec::new());
    }
    let cfg = gumbel_sum_cfg();
    let first = limit_cdf(law, sorted[0])?;
    let gaps: Vec<f64> = sorted
        .par_windows(2)
        .map(|w| {
            if w[1] > w[0] {
                density_integral(w[0], w[1], &cfg).map(|(v, _)| v)
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = Vec::with_capacity(sorted.len());
    let mut acc = first;
    out.push(acc);
    for g in gaps {
        acc += g;
        out.push(acc.clamp(0.0, 1.0));
    }
    Ok(out)
}

fn check_sorted(sample: &[f64]) -> Result<()> {
    if sample.iter().any(|x| x.is_nan()) {
        return Err(MathError::invalid("sample contains NaN"));
    }
    if sample.windows(2).any(|w| w[1] < w[0]) {
        return Err(MathError::invalid("sample must be sorted ascending"));
    }
    Ok(())
}

/// `sup_x |F_m(x) − F(x)|` for the empirical CDF `F_m` of the sorted sample.
pub fn ks_statistic(sorted: &[f64], law: LimitLaw) -> Result<f64> {
    if sorted.is_empty() {
        return Err(MathError::invalid("KS statistic needs a nonempty sample"));
    }
    let cdf = cdf_many(law, sorted)?;
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        // ties form a single jump
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf[i];
        d = d.max(f - i as f64 / m).max((j + 1) as f64 / m - f);
        i = j + 1;
    }
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitFit {
    pub law: LimitLaw,
    pub sample_size: usize,
    pub n: usize,
    pub ks_distance: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Samples widths of `p`, standardizes them and measures the KS distance to the family's limit law.
pub fn fit_limit(p: RegularPolytope, cfg: &McConfig) -> Result<LimitFit> {
    if matches!(p.kind(), PolytopeKind::Crosspolytope) && p.n() < 2 {
        return Err(MathError::invalid("crosspolytope limit needs n >= 2"));
    }
    let widths = sample_widths(p, cfg)?;
    let mut z = widths
        .iter()
        .map(|&w| standardize(p, w))
        .collect::<Result<Vec<f64>>>()?;
    let mut acc = crate::monte_carlo::Welford::default();
    z.iter().for_each(|&v| acc.push(v));
    z.sort_by(f64::total_cmp);
    let law = LimitLaw::for_family(p.kind());
    Ok(LimitFit {
        law,
        sample_size: z.len(),
        n: p.n(),
        ks_distance: ks_statistic(&z, law)?,
        mean: acc.mean,
        variance: acc.variance(),
    })
}
