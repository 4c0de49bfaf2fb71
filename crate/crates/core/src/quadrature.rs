//! Globally adaptive Gauss–Kronrod (10/21 point) integration on finite intervals.
//!
//! Every integral in this crate is reduced to a finite interval by an explicit
//! truncation with a separately bounded tail, so no infinite-range transform
//! is needed here.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Estimate, MathError, Result};

/// Tolerances and budgets for the deterministic integration routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Target absolute error of a single integral.
    pub abs_tol: f64,
    /// Target relative error of a single integral.
    pub rel_tol: f64,
    /// Maximum number of subintervals before giving up.
    pub max_subintervals: usize,
    /// Truncation level: semi-infinite integrals stop where the integrand
    /// is below this value (times the relevant multiplicity).
    pub trunc_eps: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_subintervals: 4000,
            trunc_eps: 1e-16,
        }
    }
}

impl QuadratureConfig {
    /// Same budgets with different tolerances.
    pub fn with_tolerances(self, abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..self
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_322_012,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let resabs = {
        let mut s = WGK[10] * fc.abs();
        for j in 0..10 {
            s += WGK[j] * (fv1[j].abs() + fv2[j].abs());
        }
        s * half.abs()
    };
    resasc *= half.abs();
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    integrate_pieces(f, &[a, b], cfg)
}

/// Integrate `f` over `[breaks[0], breaks[last]]`, seeding the adaptive
/// refinement with the given breakpoints (ascending).
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(MathError::invalid("integration needs at least two breakpoints"));
    }
    if breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| w[1] < w[0]) {
        return Err(MathError::invalid("breakpoints must be finite and ascending"));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let s = kronrod21(&f, w[0], w[1]);
            total += s.value;
            total_err += s.error;
            heap.push(s);
        }
    }
    // Segments too narrow to split further keep their error in `frozen_err`.
    let mut frozen_err = 0.0;
    let mut frozen_val = 0.0;
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err + frozen_err <= target {
            break;
        }
        if heap.len() >= cfg.max_subintervals {
            return Err(MathError::QuadratureBudget {
                estimate: total + frozen_val,
                error: total_err + frozen_err,
                requested: target,
                intervals: heap.len(),
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-15 * worst.a.abs().max(worst.b.abs()) {
            total -= worst.value;
            total_err -= worst.error;
            frozen_val += worst.value;
            frozen_err += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod21(&f, worst.a, mid);
        let right = kronrod21(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum from scratch so the result does not carry incremental drift.
    let value: f64 = heap.iter().map(|s| s.value).sum::<f64>() + frozen_val;
    let error: f64 = heap.iter().map(|s| s.error).sum::<f64>() + frozen_err;
    if !value.is_finite() {
        return Err(MathError::Numerical("integrand produced a non-finite value".into()));
    }
    Ok(Estimate::new(value, error))
}
