//! Seeded, thread-count independent Monte Carlo for random widths and for
//! maxima of correlated Gaussian vectors.
//!
//! Samples are split into fixed chunks. Chunk `c` draws from its own ChaCha8
//! stream `c` of the configured seed, keeps a Welford accumulator, and the
//! accumulators are merged pairwise in chunk order. The result therefore
//! depends only on `(seed, samples, chunk_size)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Estimate, MathError, Result};
use crate::gram::GramConfiguration;
use crate::widths::{MomentEstimate, PolytopeKind, RegularPolytope, Route};

pub const DEFAULT_CHUNK_SIZE: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    pub chunk_size: u64,
}

impl McConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        Self {
            seed,
            samples,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(self, chunk_size: u64) -> Self {
        Self { chunk_size, ..self }
    }

    /// Same sizes on an unrelated stream family.
    pub fn derived(self, tag: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, tag),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(MathError::invalid("samples must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(MathError::invalid("chunk_size must be at least 1"));
        }
        Ok(())
    }

    pub fn chunk_count(&self) -> u64 {
        self.samples.div_ceil(self.chunk_size)
    }

    fn chunk_len(&self, chunk: u64) -> u64 {
        let start = chunk * self.chunk_size;
        self.chunk_size.min(self.samples - start)
    }
}

/// SplitMix64 finalizer applied to `seed + tag`, used to separate stream families.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one chunk: stream `stream` of the seed.
pub fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f(rng, len)` for every chunk in parallel and returns results in chunk order.
pub fn map_chunks<T, F>(cfg: &McConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    cfg.validate()?;
    Ok((0..cfg.chunk_count())
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c);
            f(&mut rng, cfg.chunk_len(c))
        })
        .collect())
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Welford) -> Welford {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        let mean = if delta == 0.0 {
            self.mean
        } else {
            self.mean + delta * nb / count as f64
        };
        let m2 = self.m2 + other.m2 + delta * delta * na * nb / count as f64;
        Welford { count, mean, m2 }
    }

    /// Unbiased sample variance; zero for fewer than two points.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.mean, self.std_error())
    }
}

/// Pairwise merge in fixed order.
pub fn merge_all(parts: &[Welford]) -> Welford {
    match parts.len() {
        0 => Welford::default(),
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            merge_all(l).merge(&merge_all(r))
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = normal(rng);
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Uniform point on the unit sphere of `R^dim`.
pub fn sample_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(MathError::invalid("dimension must be at least 1"));
    }
    let mut v = vec![0.0; dim];
    loop {
        fill_normal(rng, &mut v);
        let r = norm(&v);
        if r > 0.0 {
            v.iter_mut().for_each(|x| *x /= r);
            return Ok(v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthSample {
    pub polytope: RegularPolytope,
    pub value: f64,
}

/// Width of `p` in the direction `η/|η|`, with `η` standard Gaussian in `R^n`.
/// Returns `None` on a degenerate draw.
fn width_from_gaussian(kind: PolytopeKind, eta: &[f64]) -> Option<f64> {
    let w = match kind {
        PolytopeKind::Cube => {
            let r = norm(eta);
            eta.iter().map(|x| x.abs()).sum::<f64>() / r
        }
        PolytopeKind::Crosspolytope => {
            let r = norm(eta);
            2.0 * eta.iter().fold(0.0f64, |m, x| m.max(x.abs())) / r
        }
        PolytopeKind::SimplexS => {
            let (lo, hi) = min_max(eta);
            (hi - lo) / norm(eta)
        }
        PolytopeKind::SimplexT => {
            let n = eta.len() as f64;
            let mean = eta.iter().sum::<f64>() / n;
            let centered = eta.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt();
            let (lo, hi) = min_max(eta);
            (n / (n - 1.0)).sqrt() * (hi - lo) / centered
        }
    };
    (w.is_finite() && w > 0.0).then_some(w)
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn draw_width<R: Rng + ?Sized>(p: RegularPolytope, rng: &mut R, buf: &mut [f64]) -> f64 {
    loop {
        fill_normal(rng, buf);
        if let Some(w) = width_from_gaussian(p.kind(), buf) {
            return w;
        }
    }
}

/// One random width of `p`.
pub fn sample_width<R: Rng + ?Sized>(p: RegularPolytope, rng: &mut R) -> WidthSample {
    let mut buf = vec![0.0; p.n()];
    WidthSample {
        polytope: p,
        value: draw_width(p, rng, &mut buf),
    }
}

/// All `cfg.samples` widths, in deterministic order.
pub fn sample_widths(p: RegularPolytope, cfg: &McConfig) -> Result<Vec<f64>> {
    let chunks = map_chunks(cfg, |rng, len| {
        let mut buf = vec![0.0; p.n()];
        (0..len).map(|_| draw_width(p, rng, &mut buf)).collect::<Vec<f64>>()
    })?;
    Ok(chunks.concat())
}

/// `E[W^k]` for every `k` in `ks`, all from the same draws.
pub fn estimate_moments(p: RegularPolytope, ks: &[u32], cfg: &McConfig) -> Result<Vec<MomentEstimate>> {
    if ks.iter().any(|&k| k == 0) {
        return Err(MathError::invalid("moment order must be at least 1"));
    }
    let parts = map_chunks(cfg, |rng, len| {
        let mut buf = vec![0.0; p.n()];
        let mut acc = vec![Welford::default(); ks.len()];
        for _ in 0..len {
            let w = draw_width(p, rng, &mut buf);
            for (a, &k) in acc.iter_mut().zip(ks) {
                a.push(w.powi(k as i32));
            }
        }
        acc
    })?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let col: Vec<Welford> = parts.iter().map(|a| a[j]).collect();
            let m = merge_all(&col);
            MomentEstimate {
                polytope: p,
                k,
                value: m.mean,
                route: Route::MonteCarlo,
                error: m.std_error(),
            }
        })
        .collect())
}

/// Sample mean of `W^k` with its standard error.
pub fn estimate_moment(p: RegularPolytope, k: u32, cfg: &McConfig) -> Result<MomentEstimate> {
    Ok(estimate_moments(p, &[k], cfg)?.remove(0))
}

/// `E max ξ_i` for `ξ ~ N(0, gram)` by sampling `ξ = G^{1/2} η`.
pub fn sample_correlated_max(gram: &GramConfiguration, cfg: &McConfig) -> Result<Estimate> {
    let root = gram.sqrt_factor()?;
    let n = gram.n();
    let parts = map_chunks(cfg, |rng, len| {
        let mut eta = vec![0.0; n];
        let mut acc = Welford::default();
        for _ in 0..len {
            fill_normal(rng, &mut eta);
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                let mut s = 0.0;
                for (j, e) in eta.iter().enumerate() {
                    s += root[(i, j)] * e;
                }
                best = best.max(s);
            }
            acc.push(best);
        }
        acc
    })?;
    Ok(merge_all(&parts).estimate())
}
