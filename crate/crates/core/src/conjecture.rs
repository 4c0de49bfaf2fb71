//! Numerical probes of the mean-width conjecture: among `n` unit vectors,
//! `E max <η, y_i>` is largest for the vertices of a regular simplex, where
//! it equals `sqrt(n/(n-1)) E max` of `n` independent standard normals.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Estimate, MathError, Result};
use crate::extremes::{expected_max, expected_max_abs};
use crate::gram::{normalize_rows, GramConfiguration};
use crate::monte_carlo::{chunk_rng, derive_seed, fill_normal, map_chunks, merge_all, sample_correlated_max, McConfig, Welford};
use crate::quadrature::QuadratureConfig;

/// Frobenius radius inside which a Gram matrix counts as the regular simplex.
pub const NEAR_REGULAR_TOL: f64 = 1e-9;
/// Standard errors by which an estimate may exceed a bound before it is reported.
pub const BOUND_SLACK: f64 = 4.0;
/// Standard errors by which a search result may exceed the regular value before it is a finding.
pub const FINDING_SLACK: f64 = 5.0;

const TAG_INIT: u64 = 1;
const TAG_BATCH: u64 = 2;
const TAG_EVAL: u64 = 3;

pub fn regular_simplex_gram(n: usize) -> Result<GramConfiguration> {
    GramConfiguration::regular_simplex(n)
}

/// `sqrt(n/(n-1)) E max` of `n` independent standard normals.
pub fn regular_emax(n: usize, cfg: &QuadratureConfig) -> Result<Estimate> {
    if n < 2 {
        return Err(MathError::invalid("the regular simplex needs n >= 2"));
    }
    let b = expected_max(n as u64, cfg)?;
    let f = (n as f64 / (n as f64 - 1.0)).sqrt();
    Ok(Estimate::new(f * b.value, f * b.abs_error_bound))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub n: usize,
    pub estimate: Estimate,
    pub bound: f64,
    /// `estimate <= bound + 4 stderr`
    pub holds: bool,
    /// Gram within Frobenius `1e-9` of the regular simplex.
    pub near_regular: bool,
    /// `|estimate - bound| <= 4 stderr`
    pub equality_consistent: bool,
}

pub fn conjecture_bound_check(g: &GramConfiguration, cfg: &McConfig) -> Result<BoundCheck> {
    let n = g.n();
    let bound = regular_emax(n, &QuadratureConfig::default())?.value;
    conjecture_bound_check_against(g, bound, cfg)
}

/// As [`conjecture_bound_check`] with a precomputed regular value.
pub fn conjecture_bound_check_against(g: &GramConfiguration, bound: f64, cfg: &McConfig) -> Result<BoundCheck> {
    let n = g.n();
    if n < 2 {
        return Err(MathError::invalid("the bound needs n >= 2"));
    }
    let estimate = sample_correlated_max(g, cfg)?;
    let slack = BOUND_SLACK * estimate.error;
    let near_regular = g.frobenius_distance(&regular_simplex_gram(n)?) <= NEAR_REGULAR_TOL;
    Ok(BoundCheck {
        n,
        estimate,
        bound,
        holds: estimate.value <= bound + slack,
        near_regular,
        equality_consistent: (estimate.value - bound).abs() <= slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartKind {
    /// Independent uniform points on the sphere.
    Random,
    /// Every point equal to the first coordinate vector.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub iterations: usize,
    pub step: f64,
    pub start: StartKind,
    /// Fresh samples used to evaluate the winning configuration.
    pub eval_samples: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            iterations: 1500,
            step: 0.5,
            start: StartKind::Random,
            eval_samples: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub index: usize,
    /// Batch objective `sqrt(2π) E max` at the start and at the returned configuration.
    pub initial_value: f64,
    pub final_value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_gram: GramConfiguration,
    /// `sqrt(2π) E max` for the best configuration, from fresh samples.
    pub best_value: f64,
    pub best_stderr: f64,
    /// `sqrt(2π) sqrt(n/(n-1)) E max_n`
    pub regular_value: f64,
    pub regular_error: f64,
    pub gap: f64,
    pub restarts_used: usize,
    pub restarts: Vec<RestartReport>,
}

impl SearchResult {
    /// Gap above the regular value beyond [`FINDING_SLACK`] standard errors.
    pub fn is_finding(&self) -> bool {
        self.gap > FINDING_SLACK * (self.best_stderr + self.regular_error)
    }

    pub fn gap_in_stderr(&self) -> f64 {
        self.gap / (self.best_stderr + self.regular_error).max(f64::MIN_POSITIVE)
    }
}

/// Common random number batch, `samples × n` row major.
fn crn_batch(n: usize, cfg: &McConfig) -> Result<Vec<f64>> {
    let parts = map_chunks(cfg, |rng, len| {
        let mut v = vec![0.0; n * len as usize];
        fill_normal(rng, &mut v);
        v
    })?;
    Ok(parts.concat())
}

/// Batch mean of `max_i <η, y_i>` and the subgradient (argmax row times η,
/// lowest index on ties).
fn batch_objective(y: &DMatrix<f64>, batch: &[f64], grad: Option<&mut DMatrix<f64>>) -> f64 {
    let n = y.nrows();
    let d = y.ncols();
    let count = batch.len() / d;
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..d).map(move |j| (i, j))).map(|ij| y[ij]).collect();
    let mut g = vec![0.0; n * d];
    let want_grad = grad.is_some();
    let mut total = 0.0;
    for eta in batch.chunks_exact(d) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, row) in rows.chunks_exact(d).enumerate() {
            let s: f64 = row.iter().zip(eta).map(|(a, b)| a * b).sum();
            if s > best {
                best = s;
                arg = i;
            }
        }
        total += best;
        if want_grad {
            for (gj, e) in g[arg * d..(arg + 1) * d].iter_mut().zip(eta) {
                *gj += e;
            }
        }
    }
    if let Some(out) = grad {
        for i in 0..n {
            for j in 0..d {
                out[(i, j)] = g[i * d + j] / count as f64;
            }
        }
    }
    total / count as f64
}

fn initial_points(n: usize, start: StartKind, seed: u64, restart: usize) -> Result<DMatrix<f64>> {
    match start {
        StartKind::Degenerate => Ok(DMatrix::from_fn(n, n, |_, j| if j == 0 { 1.0 } else { 0.0 })),
        StartKind::Random => {
            let mut rng = chunk_rng(derive_seed(seed, TAG_INIT), restart as u64);
            loop {
                let mut v = vec![0.0; n * n];
                fill_normal(&mut rng, &mut v);
                let mut y = DMatrix::from_row_slice(n, n, &v);
                if normalize_rows(&mut y).is_ok() {
                    return Ok(y);
                }
            }
        }
    }
}

fn run_restart(
    n: usize,
    index: usize,
    batch: &[f64],
    seed: u64,
    opts: &SearchOptions,
) -> Result<(DMatrix<f64>, RestartReport)> {
    let scale = (2.0 * PI).sqrt();
    let mut y = initial_points(n, opts.start, seed, index)?;
    let mut grad = DMatrix::zeros(n, n);
    let initial_value = scale * batch_objective(&y, batch, None);
    let mut avg = DMatrix::zeros(n, n);
    let average_from = opts.iterations / 2 + 1;
    for iter in 1..=opts.iterations {
        batch_objective(&y, batch, Some(&mut grad));
        y += &grad * (opts.step / (iter as f64).sqrt());
        normalize_rows(&mut y)?;
        if iter >= average_from {
            avg += &y;
        }
    }
    let last = y;
    let mut y = if opts.iterations == 0 { last.clone() } else { avg };
    if normalize_rows(&mut y).is_err() {
        y = last.clone();
    }
    let final_value = scale * batch_objective(&y, batch, None);
    let moved = GramConfiguration::from_points(&y)?.frobenius_distance(&GramConfiguration::from_points(&last)?);
    Ok((
        y,
        RestartReport {
            index,
            initial_value,
            final_value,
            converged: moved <= 0.05,
        },
    ))
}

/// Maximizes the batch estimate of `E max <η, y_i>` over `n` points on the
/// sphere by projected subgradient ascent from `restarts` starts.
///
/// `cfg.samples` sets the common batch size. The winner is re-evaluated on an
/// independent stream so `best_value` is not biased by the selection.
pub fn optimize_configuration_with(
    n: usize,
    restarts: usize,
    cfg: &McConfig,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if !(2..=12).contains(&n) {
        return Err(MathError::invalid(format!("search needs 2 <= n <= 12, got {n}")));
    }
    if restarts == 0 {
        return Err(MathError::invalid("restarts must be at least 1"));
    }
    let batch_cfg = cfg.derived(TAG_BATCH);
    let batch = crn_batch(n, &batch_cfg)?;
    let runs = (0..restarts)
        .into_par_iter()
        .map(|r| run_restart(n, r, &batch, cfg.seed, opts))
        .collect::<Result<Vec<_>>>()?;
    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, (_, rep))| {
            if rep.final_value > bv {
                (i, rep.final_value)
            } else {
                (bi, bv)
            }
        });
    let best_gram = GramConfiguration::from_points(&runs[best_idx].0)?;
    let eval_cfg = McConfig {
        samples: opts.eval_samples,
        ..cfg.derived(TAG_EVAL)
    };
    let eval = sample_correlated_max(&best_gram, &eval_cfg)?;
    let scale = (2.0 * PI).sqrt();
    let reg = regular_emax(n, &QuadratureConfig::default())?;
    let best_value = scale * eval.value;
    let regular_value = scale * reg.value;
    Ok(SearchResult {
        best_gram,
        best_value,
        best_stderr: scale * eval.error,
        regular_value,
        regular_error: scale * reg.error,
        gap: best_value - regular_value,
        restarts_used: restarts,
        restarts: runs.into_iter().map(|(_, r)| r).collect(),
    })
}

pub fn optimize_configuration(n: usize, restarts: usize, cfg: &McConfig) -> Result<SearchResult> {
    optimize_configuration_with(n, restarts, cfg, &SearchOptions::default())
}

/// Covariance family on `2n` coordinates: variance `2n/(t+2n-1)` and pair
/// covariance `-2nt/(t+2n-1)` within each pair `(2i-1, 2i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationFamily {
    pub n: usize,
    pub t: f64,
}

impl InterpolationFamily {
    pub fn new(n: usize, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(MathError::invalid("n must be at least 1"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(MathError::invalid(format!("t must lie in [0, 1], got {t}")));
        }
        Ok(Self { n, t })
    }

    pub fn variance(&self) -> f64 {
        let n2 = 2.0 * self.n as f64;
        n2 / (self.t + n2 - 1.0)
    }

    pub fn pair_covariance(&self) -> f64 {
        -self.t * self.variance()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let m = 2 * self.n;
        let (v, c) = (self.variance(), self.pair_covariance());
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                v
            } else if i / 2 == j / 2 {
                c
            } else {
                0.0
            }
        })
    }

    /// Coefficients `(sqrt(s) α, sqrt(s) β)` with `ξ_{2i-1} = sqrt(s)(α a + β b)`,
    /// `ξ_{2i} = sqrt(s)(α a − β b)` for independent standard `a, b`.
    fn mixing(&self) -> (f64, f64) {
        let rs = self.variance().sqrt();
        (rs * (0.5 * (1.0 - self.t)).sqrt(), rs * (0.5 * (1.0 + self.t)).sqrt())
    }

    /// `max_k ξ_k` for one draw of the pair coordinates.
    fn max_of(&self, a: &[f64], b: &[f64]) -> f64 {
        let (p, q) = self.mixing();
        a.iter()
            .zip(b)
            .fold(f64::NEG_INFINITY, |m, (&x, &y)| m.max(p * x + q * y.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    /// `φ(t) − φ(previous t)` on the same draws, with its paired standard error.
    pub step_from_previous: Option<Estimate>,
}

/// `φ(t) = E max ξ(t)` on a grid, all nodes on the same Gaussian draws.
pub fn interpolation_emax_curve(n: usize, grid: &[f64], cfg: &McConfig) -> Result<Vec<CurvePoint>> {
    if grid.is_empty() {
        return Err(MathError::invalid("grid must be nonempty"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(MathError::invalid("grid must be sorted ascending"));
    }
    let fams = grid
        .iter()
        .map(|&t| InterpolationFamily::new(n, t))
        .collect::<Result<Vec<_>>>()?;
    let k = fams.len();
    let parts = map_chunks(cfg, |rng, len| {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut level = vec![Welford::default(); k];
        let mut step = vec![Welford::default(); k];
        let mut vals = vec![0.0; k];
        for _ in 0..len {
            fill_normal(rng, &mut a);
            fill_normal(rng, &mut b);
            for (j, f) in fams.iter().enumerate() {
                vals[j] = f.max_of(&a, &b);
                level[j].push(vals[j]);
                if j > 0 {
                    step[j].push(vals[j] - vals[j - 1]);
                }
            }
        }
        (level, step)
    })?;
    Ok((0..k)
        .map(|j| {
            let lv = merge_all(&parts.iter().map(|p| p.0[j]).collect::<Vec<_>>());
            let st = merge_all(&parts.iter().map(|p| p.1[j]).collect::<Vec<_>>());
            CurvePoint {
                t: grid[j],
                value: lv.mean,
                stderr: lv.std_error(),
                step_from_previous: (j > 0).then(|| st.estimate()),
            }
        })
        .collect())
}

/// Endpoint values `φ(0) = sqrt(2n/(2n-1)) E max_{2n}` and `φ(1) = E max_n |η_i|`.
pub fn interpolation_endpoints(n: usize, cfg: &QuadratureConfig) -> Result<(Estimate, Estimate)> {
    if n == 0 {
        return Err(MathError::invalid("n must be at least 1"));
    }
    let nf = n as f64;
    let b = expected_max(2 * n as u64, cfg)?;
    let f = (2.0 * nf / (2.0 * nf - 1.0)).sqrt();
    let a = expected_max_abs(n as u64, cfg)?;
    Ok((
        Estimate::new(f * b.value, f * b.abs_error_bound),
        a.estimate(),
    ))
}

/// `(1/β) ln Σ e^{β x_i}` (shifted by the maximum) together with `max x_i`.
pub fn softmax_bound(x: &[f64], beta: f64) -> Result<(f64, f64)> {
    if x.is_empty() {
        return Err(MathError::invalid("softmax needs a nonempty input"));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(MathError::invalid("beta must be positive and finite"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(MathError::invalid("softmax input must be finite"));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = x.iter().map(|v| (beta * (v - max)).exp()).sum();
    Ok((max + s.ln() / beta, max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_covariance_endpoints() {
        let f1 = InterpolationFamily::new(3, 1.0).unwrap();
        assert_eq!(f1.variance(), 1.0);
        assert_eq!(f1.pair_covariance(), -1.0);
        let f0 = InterpolationFamily::new(3, 0.0).unwrap();
        assert!((f0.variance() - 6.0 / 5.0).abs() < 1e-15);
        assert_eq!(f0.pair_covariance(), 0.0);
        assert!(InterpolationFamily::new(3, 1.5).is_err());
        let c = InterpolationFamily::new(2, 0.4).unwrap().covariance();
        assert_eq!(c[(0, 2)], 0.0);
        assert!(c[(0, 1)] < 0.0);
    }

    #[test]
    fn mixing_reproduces_covariance() {
        let f = InterpolationFamily::new(4, 0.3).unwrap();
        let (p, q) = f.mixing();
        assert!((p * p + q * q - f.variance()).abs() < 1e-15);
        assert!((p * p - q * q - f.pair_covariance()).abs() < 1e-15);
    }

    #[test]
    fn softmax_examples() {
        let (s, m) = softmax_bound(&[0.0, 0.0], 1.0).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-15 && m == 0.0);
        let (s, m) = softmax_bound(&[5.0, 0.0], 10.0).unwrap();
        assert!(s >= 5.0 && s <= 5.0 + 2f64.ln() / 10.0 && m == 5.0);
        let (s, _) = softmax_bound(&[1.0, 2.0, 3.0], 1e4).unwrap();
        assert!(s >= 3.0 && s - 3.0 <= 3f64.ln() / 1e4);
        let (s, _) = softmax_bound(&[1e308, 1e308], 10.0).unwrap();
        assert!(s.is_finite());
        assert!(softmax_bound(&[], 1.0).is_err());
        assert!(softmax_bound(&[1.0], 0.0).is_err());
    }

    #[test]
    fn batch_subgradient_matches_finite_difference_direction() {
        let mut y = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.6, 0.8]);
        normalize_rows(&mut y).unwrap();
        let batch = crn_batch(2, &McConfig::new(4, 20_000)).unwrap();
        let mut g = DMatrix::zeros(2, 2);
        let f0 = batch_objective(&y, &batch, Some(&mut g));
        let h = 1e-6;
        let mut yp = y.clone();
        yp[(0, 1)] += h;
        let fd = (batch_objective(&yp, &batch, None) - f0) / h;
        assert!((fd - g[(0, 1)]).abs() < 1e-2, "{fd} vs {}", g[(0, 1)]);
    }

    #[test]
    fn antipodal_pair_is_the_optimum_for_two_points() {
        let cfg = McConfig::new(17, 20_000);
        let opts = SearchOptions {
            eval_samples: 50_000,
            ..SearchOptions::default()
        };
        let r = optimize_configuration_with(2, 4, &cfg, &opts).unwrap();
        assert!((r.best_gram.matrix()[(0, 1)] + 1.0).abs() < 1e-2);
        assert!((r.regular_value - 2.0).abs() < 1e-10);
        assert!((r.best_value - 2.0).abs() < 5.0 * r.best_stderr + 1e-3);
        assert!(!r.is_finding());
    }

    #[test]
    fn degenerate_start_escapes() {
        let cfg = McConfig::new(5, 20_000);
        let opts = SearchOptions {
            start: StartKind::Degenerate,
            eval_samples: 20_000,
            ..SearchOptions::default()
        };
        let r = optimize_configuration_with(3, 1, &cfg, &opts).unwrap();
        let rep = &r.restarts[0];
        assert!(rep.initial_value.abs() < 0.05);
        assert!(rep.final_value > rep.initial_value + 1.0);
    }

    #[test]
    fn search_argument_checks() {
        let cfg = McConfig::new(1, 100);
        assert!(optimize_configuration(1, 1, &cfg).is_err());
        assert!(optimize_configuration(13, 1, &cfg).is_err());
        assert!(optimize_configuration(3, 0, &cfg).is_err());
    }
}
