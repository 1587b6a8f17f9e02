//! Adaptive Gauss–Kronrod (10/21) quadrature for complex-valued integrands
//! and the shared tolerance configuration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Tolerances and mesh knobs shared by every quadrature-backed operation.
///
/// `None` for the Laplace cutoff, Hankel radius or ray length means "derive
/// from the parameters" (see the `qstar` module).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub laplace_cutoff: Option<f64>,
    pub hankel_radius: Option<f64>,
    pub hankel_ray_length: Option<f64>,
    /// Chebyshev degree per panel of the method-of-steps solver.
    pub cheb_degree: usize,
    /// Geometric grading ratio toward singular panel endpoints.
    pub grading_ratio: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 4000,
            laplace_cutoff: None,
            hankel_radius: None,
            hankel_ray_length: None,
            cheb_degree: 16,
            grading_ratio: 0.25,
        }
    }
}

impl QuadratureConfig {
    /// Looser tolerances, as used by the command line by default.
    pub fn cli_default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::validation("tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::validation("max_subdivisions must be positive"));
        }
        if let Some(r) = self.hankel_radius {
            if !(r > 0.0) {
                return Err(Error::validation("hankel_radius must be positive"));
            }
            if let Some(l) = self.hankel_ray_length {
                if !(l > r) {
                    return Err(Error::validation("hankel_ray_length must exceed hankel_radius"));
                }
            }
        }
        if self.cheb_degree < 4 {
            return Err(Error::validation("cheb_degree must be at least 4"));
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(Error::validation("grading_ratio must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
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
    0.123_491_976_262_065_851_077_600_525_478_306,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], …, XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Segment {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
    /// Rounding floor `50 ε ∫|f|` of the rule on this segment.
    floor: f64,
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

fn gk21<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = C64::new(0.0, 0.0);
    let mut abs_sum = fc.norm() * WGK[10];
    let mut samples = [(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); 10];
    for (k, sample) in samples.iter_mut().enumerate() {
        let dx = half * XGK[k];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += (f1 + f2) * WGK[k];
        abs_sum += (f1.norm() + f2.norm()) * WGK[k];
        if k % 2 == 1 {
            gauss += (f1 + f2) * WG[k / 2];
        }
        *sample = (f1, f2);
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (fc - mean).norm();
    for (k, (f1, f2)) in samples.iter().enumerate() {
        asc += WGK[k] * ((f1 - mean).norm() + (f2 - mean).norm());
    }
    let value = kronrod * half;
    let resasc = asc * half.abs();
    let resabs = abs_sum * half.abs();
    let diff = ((kronrod - gauss) * half).norm();
    let mut err = diff;
    if resasc != 0.0 && diff != 0.0 {
        err = resasc * (200.0 * diff / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (value, err, floor)
}

/// Adaptive integration of `f` over `[a, b]`, bisecting the segment with
/// the largest error estimate until
/// `error ≤ max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    integrate_breaks(&mut f, &[a, b], abs_tol, rel_tol, max_subdivisions)
}

/// Like [`integrate`] but starting from the segments delimited by the
/// sorted list `points`.
pub fn integrate_breaks<F: FnMut(f64) -> C64>(
    f: &mut F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let mut total_floor = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error, floor) = gk21(f, w[0], w[1]);
        total += value;
        total_err += error;
        total_floor += floor;
        heap.push(Segment { a: w[0], b: w[1], value, error, floor });
    }
    let mut count = heap.len();
    // Error held by segments too short to bisect.
    let mut stuck = 0.0;
    loop {
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::Accuracy {
                msg: "integrand produced a non-finite value".into(),
                best_re: total.re,
                best_im: total.im,
                est_error: f64::INFINITY,
            });
        }
        // A tolerance below the rounding floor of the rule is unreachable.
        let tol = abs_tol.max(rel_tol * total.norm()).max(2.0 * total_floor);
        if total_err <= tol {
            break;
        }
        if count >= max_subdivisions {
            return Err(Error::Accuracy {
                msg: format!("no convergence after {count} subdivisions"),
                best_re: total.re,
                best_im: total.im,
                est_error: total_err,
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in floating point.
            total_err -= worst.error;
            stuck += worst.error;
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        let (v1, e1, r1) = gk21(f, worst.a, mid);
        let (v2, e2, r2) = gk21(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_floor += r1 + r2 - worst.floor;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1, floor: r1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2, floor: r2 });
        count += 1;
    }
    // Re-sum to shed accumulated update drift.
    let value: C64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum::<f64>() + stuck;
    Ok(QuadResult { value, error })
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<(f64, f64)> {
    let r = integrate(|x| C64::new(f(x), 0.0), a, b, abs_tol, rel_tol, max_subdivisions)?;
    Ok((r.value.re, r.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_are_exact_for_polynomials() {
        // Kronrod 21 is exact through degree 31, Gauss 10 through 19.
        let mut f = |x: f64| C64::new(x.powi(19) + 3.0 * x.powi(6), 0.0);
        let (k, _, _) = gk21(&mut f, 0.0, 1.0);
        assert!((k.re - (1.0 / 20.0 + 3.0 / 7.0)).abs() < 1e-15);
        let mut g = |x: f64| C64::new(x.powi(30), 0.0);
        let (k, _, _) = gk21(&mut g, -1.0, 1.0);
        assert!((k.re - 2.0 / 31.0).abs() < 1e-15);
        let gauss: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((gauss - 2.0).abs() < 1e-15);
        let kronrod: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((kronrod - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_and_singular_integrands() {
        let (v, _) = integrate_real(|x| x.exp(), 0.0, 2.0, 1e-13, 1e-13, 100).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
        let (v, _) = integrate_real(|x| x.powf(-0.5), 0.0, 1.0, 1e-12, 1e-12, 500).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let r = integrate(|x| C64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, 1e-13, 1e-13, 100)
            .unwrap();
        assert!((r.value - C64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate_real(|x| 1.0 / x, 0.0, 1.0, 1e-14, 1e-14, 20).unwrap_err();
        assert!(matches!(err, Error::Accuracy { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig { hankel_radius: Some(2.0), hankel_ray_length: Some(1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig { abs_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
