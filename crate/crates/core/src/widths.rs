//! Moments `E[W_K^k]` of the random projection width and the first intrinsic
//! volume `V1` of the regular cube, simplex and crosspolytope.
//!
//! Each moment is the corresponding Gaussian moment (range, or supremum for
//! symmetric bodies) times a chi moment correction `Γ(d/2)/Γ((d+k)/2)`,
//! which is always carried in log space.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Estimate, MathError, Result};
use crate::extremes::{
    expected_max, expected_max_abs, max_abs_minus_max, max_abs_moment, truncation_point,
};
use crate::quadrature::{integrate_pieces, QuadratureConfig};
use crate::special::{gaussian_power_tail_bound, log_gamma_ratio, normal_pdf, normal_tail};

/// Number of combined error units two routes may differ by.
pub const ROUTE_AGREEMENT_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolytopeKind {
    /// `Q_n = [-1/2, 1/2]^n`
    Cube,
    /// `S_{n-1} = conv(e_1, ..., e_n) ⊂ R^n`
    SimplexS,
    /// Regular simplex with `n` vertices inscribed in the unit sphere of `R^{n-1}`
    SimplexT,
    /// `C_n = conv(±e_1, ..., ±e_n)`
    Crosspolytope,
}

impl PolytopeKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cube => "cube",
            Self::SimplexS => "simplex-s",
            Self::SimplexT => "simplex-t",
            Self::Crosspolytope => "cross",
        }
    }
}

impl std::str::FromStr for PolytopeKind {
    type Err = MathError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Self::Cube),
            "simplex-s" => Ok(Self::SimplexS),
            "simplex-t" => Ok(Self::SimplexT),
            "cross" | "crosspolytope" => Ok(Self::Crosspolytope),
            other => Err(MathError::invalid(format!("unknown polytope family '{other}'"))),
        }
    }
}

/// One member of a regular family, indexed by the family parameter `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegularPolytope {
    kind: PolytopeKind,
    n: usize,
}

impl RegularPolytope {
    pub fn new(kind: PolytopeKind, n: usize) -> Result<Self> {
        let min = match kind {
            PolytopeKind::Cube | PolytopeKind::Crosspolytope => 1,
            PolytopeKind::SimplexS | PolytopeKind::SimplexT => 2,
        };
        if n < min {
            return Err(MathError::invalid(format!(
                "{} needs n >= {min}, got {n}",
                kind.name()
            )));
        }
        Ok(Self { kind, n })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(PolytopeKind::Cube, n)
    }

    pub fn simplex_s(n: usize) -> Result<Self> {
        Self::new(PolytopeKind::SimplexS, n)
    }

    pub fn simplex_t(n: usize) -> Result<Self> {
        Self::new(PolytopeKind::SimplexT, n)
    }

    pub fn cross(n: usize) -> Result<Self> {
        Self::new(PolytopeKind::Crosspolytope, n)
    }

    pub fn kind(&self) -> PolytopeKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the space the random direction is drawn from.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            PolytopeKind::SimplexT => self.n - 1,
            _ => self.n,
        }
    }
}

impl fmt::Display for RegularPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={})", self.kind.name(), self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Self::ClosedForm => "closed",
            Self::Quadrature => "quadrature",
            Self::MonteCarlo => "mc",
        }
    }
}

/// A value of `E[W^k]` with the route that produced it. `error` is an
/// absolute bound for the deterministic routes and a standard error for
/// Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub polytope: RegularPolytope,
    pub k: u32,
    pub value: f64,
    pub route: Route,
    pub error: f64,
}

impl MomentEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.value, self.error)
    }

    /// Agreement within [`ROUTE_AGREEMENT_SLACK`] combined error units.
    pub fn agrees_with(&self, other: &MomentEstimate) -> bool {
        self.estimate().agrees_with(&other.estimate(), ROUTE_AGREEMENT_SLACK)
    }
}

/// `V1 = sqrt(pi) Γ((d+1)/2)/Γ(d/2) · mean width` in ambient dimension `d`.
pub fn v1_from_mean_width(dim: usize, mean_width: f64) -> Result<f64> {
    if dim < 1 {
        return Err(MathError::invalid("dimension must be at least 1"));
    }
    let d = dim as f64;
    let lr = log_gamma_ratio((d + 1.0) / 2.0, d / 2.0)?;
    Ok(PI.sqrt() * lr.exp() * mean_width)
}

/// `ln(Γ(d/2)/Γ((d+k)/2))`
fn log_chi_factor(dim: usize, k: u32) -> Result<f64> {
    let d = dim as f64;
    log_gamma_ratio(d / 2.0, (d + f64::from(k)) / 2.0)
}

/// Closed forms of `E[W_{Q_n}^k]` for `k = 1..4`.
pub fn width_moment_cube(n: usize, k: u32) -> Result<MomentEstimate> {
    let polytope = RegularPolytope::cube(n)?;
    let nf = n as f64;
    let value = match k {
        1 => nf * log_gamma_ratio(nf / 2.0, (nf + 1.0) / 2.0)?.exp() / PI.sqrt(),
        2 => 1.0 + 2.0 * (nf - 1.0) / PI,
        3 => {
            let poly = nf * (2.0 * nf * nf + (3.0 * PI - 6.0) * nf + 4.0 - PI);
            0.5 * log_gamma_ratio(nf / 2.0, (nf + 3.0) / 2.0)?.exp() * poly / (PI * PI.sqrt())
        }
        4 => {
            let poly = ((4.0 * nf + (12.0 * PI - 24.0)) * nf + (44.0 - 20.0 * PI + 3.0 * PI * PI)) * nf
                + 8.0 * PI
                - 24.0;
            poly / ((nf + 2.0) * PI * PI)
        }
        _ => {
            return Err(MathError::invalid(format!(
                "no closed form for cube moment k={k}; use the Monte Carlo route"
            )))
        }
    };
    Ok(MomentEstimate {
        polytope,
        k,
        value,
        route: Route::ClosedForm,
        error: 4.0 * f64::EPSILON * value,
    })
}

/// `E[W_{C_n}^k] = 2^{k/2} Γ(n/2)/Γ((n+k)/2) E[(max |η_i|)^k]`.
pub fn width_moment_cross(n: usize, k: u32, cfg: &QuadratureConfig) -> Result<MomentEstimate> {
    let polytope = RegularPolytope::cross(n)?;
    if k < 1 {
        return Err(MathError::invalid("moment order must be at least 1"));
    }
    let m = max_abs_moment(n as u64, k, cfg)?;
    let log_pref = 0.5 * f64::from(k) * 2f64.ln() + log_chi_factor(n, k)?;
    let pref = log_pref.exp();
    Ok(MomentEstimate {
        polytope,
        k,
        value: (log_pref + m.value.ln()).exp(),
        route: Route::Quadrature,
        error: pref * m.error,
    })
}

/// `P[max η_i - min η_i > t] = n ∫ φ(x) [Φ̄(x)^{n-1} - (Φ̄(x) - Φ̄(x+t))^{n-1}] dx`.
///
/// The bracket is written as `-a^{n-1} expm1((n-1) ln(1 - b/a))` so it keeps
/// relative precision when the range exceedance probability is small.
pub fn range_survival(n: usize, t: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if n < 2 {
        return Err(MathError::invalid("the range needs n >= 2"));
    }
    if t <= 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let power = (n - 1) as f64;
    let inner = |x: f64| {
        let a = normal_tail(x);
        if a == 0.0 {
            return 0.0;
        }
        let b = normal_tail(x + t);
        let bracket = -(a.ln() * power).exp() * (power * (-b / a).ln_1p()).exp_m1();
        normal_pdf(x) * bracket
    };
    // The minimum sits near -sqrt(2 ln n); the integrand is negligible outside [-10, 10].
    let est = integrate_pieces(inner, &[-10.0, -4.0, -2.0, 0.0, 2.0, 10.0], cfg)?;
    let nf = n as f64;
    let truncated = 2.0 * nf * normal_tail(10.0);
    Ok(Estimate::new(
        (nf * est.value).min(1.0),
        nf * est.error + truncated,
    ))
}

/// `E[(max η_i - min η_i)^k] = ∫_0^∞ k t^{k-1} P[range > t] dt` by nested quadrature.
pub fn range_moment(n: usize, k: u32, cfg: &QuadratureConfig) -> Result<Estimate> {
    if n < 2 || k < 1 {
        return Err(MathError::invalid("range_moment needs n >= 2 and k >= 1"));
    }
    let nf = n as f64;
    let kf = f64::from(k);
    // P[range > t] <= 2n Φ̄(t/2)
    let half_cut = truncation_point(2.0 * nf, cfg.trunc_eps)?;
    let cut = 2.0 * half_cut;
    let inner_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol * 1e-2,
        rel_tol: cfg.rel_tol,
        ..*cfg
    };
    let inner_error = std::cell::Cell::new(0.0f64);
    let inner_failed = std::cell::Cell::new(None);
    let integrand = |t: f64| match range_survival(n, t, &inner_cfg) {
        Ok(s) => {
            let w = kf * t.powi(k as i32 - 1);
            inner_error.set(inner_error.get().max(s.error * w));
            w * s.value
        }
        Err(e) => {
            inner_failed.set(Some(e));
            0.0
        }
    };
    let typical = 2.0 * crate::extremes::normal_upper_quantile((0.5 / nf).min(0.25))?;
    let mut breaks = vec![0.0];
    for x in [typical - 2.0, typical, typical + 2.0] {
        if x > 0.0 && x < cut {
            breaks.push(x);
        }
    }
    breaks.push(cut);
    let outer = integrate_pieces(integrand, &breaks, cfg)?;
    if let Some(e) = inner_failed.take() {
        return Err(e);
    }
    let tail = 2.0 * nf * kf * 2f64.powi(k as i32) * gaussian_power_tail_bound(k as i32 - 2, half_cut);
    Ok(Estimate::new(
        outer.value,
        outer.error + inner_error.get() * cut + tail,
    ))
}

fn simplex_moment(
    polytope: RegularPolytope,
    k: u32,
    log_pref: f64,
    cfg: &QuadratureConfig,
) -> Result<MomentEstimate> {
    if k < 1 {
        return Err(MathError::invalid("moment order must be at least 1"));
    }
    let r = range_moment(polytope.n(), k, cfg)?;
    Ok(MomentEstimate {
        polytope,
        k,
        value: (log_pref + r.value.ln()).exp(),
        route: Route::Quadrature,
        error: log_pref.exp() * r.error,
    })
}

/// `E[W_{S_{n-1}}^k] = 2^{-k/2} Γ(n/2)/Γ((n+k)/2) E[range^k]`.
pub fn width_moment_simplex_s(n: usize, k: u32, cfg: &QuadratureConfig) -> Result<MomentEstimate> {
    let p = RegularPolytope::simplex_s(n)?;
    let log_pref = -0.5 * f64::from(k) * 2f64.ln() + log_chi_factor(n, k)?;
    simplex_moment(p, k, log_pref, cfg)
}

/// `E[W_{T_{n-1}}^k] = 2^{-k/2} Γ((n-1)/2)/Γ((n-1+k)/2) (n/(n-1))^{k/2} E[range^k]`.
pub fn width_moment_simplex_t(n: usize, k: u32, cfg: &QuadratureConfig) -> Result<MomentEstimate> {
    let p = RegularPolytope::simplex_t(n)?;
    let nf = n as f64;
    let log_pref = 0.5 * f64::from(k) * ((nf / (nf - 1.0)).ln() - 2f64.ln()) + log_chi_factor(n - 1, k)?;
    simplex_moment(p, k, log_pref, cfg)
}

/// Deterministic route for any family: closed form for the cube, quadrature otherwise.
pub fn width_moment(p: RegularPolytope, k: u32, cfg: &QuadratureConfig) -> Result<MomentEstimate> {
    match p.kind() {
        PolytopeKind::Cube => width_moment_cube(p.n(), k),
        PolytopeKind::SimplexS => width_moment_simplex_s(p.n(), k, cfg),
        PolytopeKind::SimplexT => width_moment_simplex_t(p.n(), k, cfg),
        PolytopeKind::Crosspolytope => width_moment_cross(p.n(), k, cfg),
    }
}

/// `V1(K) = sqrt(2 pi) E sup_K <η, x>`, specialised per family.
pub fn sudakov_v1(p: RegularPolytope, cfg: &QuadratureConfig) -> Result<Estimate> {
    let n = p.n();
    let nf = n as f64;
    let s2pi = (2.0 * PI).sqrt();
    match p.kind() {
        PolytopeKind::Cube => Ok(Estimate::exact(nf)),
        PolytopeKind::SimplexS => {
            let b = expected_max(n as u64, cfg)?;
            Ok(Estimate::new(s2pi * b.value, s2pi * b.abs_error_bound))
        }
        PolytopeKind::SimplexT => {
            let b = expected_max(n as u64, cfg)?;
            let f = s2pi * (nf / (nf - 1.0)).sqrt();
            Ok(Estimate::new(f * b.value, f * b.abs_error_bound))
        }
        PolytopeKind::Crosspolytope => {
            let a = expected_max_abs(n as u64, cfg)?;
            Ok(Estimate::new(s2pi * a.value, s2pi * a.abs_error_bound))
        }
    }
}

/// `(V1(T_{2n-1})/V1(C_n) - 1) · 4n`, formed from the cancellation-free
/// difference `A_n - B_{2n}` so the ratio keeps its small excess over one.
pub fn cross_simplex_normalized_gap(n: usize, cfg: &QuadratureConfig) -> Result<Estimate> {
    if n < 1 {
        return Err(MathError::invalid("n must be at least 1"));
    }
    let nf = n as f64;
    let a = expected_max_abs(n as u64, cfg)?;
    let d = max_abs_minus_max(n as u64, cfg)?;
    // ratio = s (1 - D/A) with s = sqrt(2n/(2n-1))
    let s_minus_one = (0.5 * (1.0 / (2.0 * nf - 1.0)).ln_1p()).exp_m1();
    let s = 1.0 + s_minus_one;
    let excess = s_minus_one - s * d.value / a.value;
    let err = s * (d.error / a.value + d.value * a.abs_error_bound / (a.value * a.value));
    Ok(Estimate::new(4.0 * nf * excess, 4.0 * nf * err))
}
