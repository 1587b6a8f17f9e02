//! Non-canonical solutions of `(u q)' = κ q(u) − κ q(u + 1)`: exact
//! piecewise-polynomial forward extension, sign-change counting, and the
//! well-posed backward integration of the general advanced equation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cheb::{cumulative_integral, lobatto_points, ChebPiece};
use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::C64;

/// Polynomial on `[a, b)` in powers of `u − a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyPiece {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl PolyPiece {
    pub fn eval(&self, u: f64) -> f64 {
        let s = u - self.a;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn eval_derivative(&self, u: f64) -> f64 {
        let s = u - self.a;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePoly {
    pub pieces: Vec<PolyPiece>,
    pub degree: usize,
}

impl PiecewisePoly {
    pub fn new(pieces: Vec<PolyPiece>) -> Result<Self> {
        let first = pieces.first().ok_or_else(|| Error::validation("no pieces"))?;
        let degree = first.coeffs.len().saturating_sub(1);
        for p in &pieces {
            if p.coeffs.len() != degree + 1 || !(p.b > p.a) {
                return Err(Error::validation("pieces must share a degree and have b > a"));
            }
        }
        for w in pieces.windows(2) {
            if (w[1].a - w[0].b).abs() > 1e-12 * w[0].b.abs().max(1.0) {
                return Err(Error::validation("pieces must abut"));
            }
        }
        Ok(PiecewisePoly { pieces, degree })
    }

    pub fn single(a: f64, b: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(vec![PolyPiece { a, b, coeffs }])
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].a
    }

    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].b
    }

    fn piece(&self, u: f64) -> &PolyPiece {
        let i = self.pieces.partition_point(|p| p.b <= u).min(self.pieces.len() - 1);
        &self.pieces[i]
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.piece(u).eval(u)
    }

    pub fn eval_derivative(&self, u: f64) -> f64 {
        self.piece(u).eval_derivative(u)
    }

    /// Left limit: at a junction, the piece ending there.
    pub fn eval_left(&self, u: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.b < u).min(self.pieces.len() - 1);
        self.pieces[i].eval(u)
    }

    /// Coefficient-wise sum; both operands must share the piece layout.
    pub fn add(&self, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        if self.pieces.len() != other.pieces.len() || self.degree != other.degree {
            return Err(Error::validation("piece layouts differ"));
        }
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(p, q)| PolyPiece {
                a: p.a,
                b: p.b,
                coeffs: p.coeffs.iter().zip(&q.coeffs).map(|(x, y)| x + y).collect(),
            })
            .collect();
        PiecewisePoly::new(pieces)
    }

    /// Least-squares fit of `f` by `n_pieces` equal polynomial pieces of the
    /// given degree on `[a, b]`. Returns the fit and its max error on a fine
    /// check grid.
    pub fn fit<F: Fn(f64) -> f64>(
        f: F,
        a: f64,
        b: f64,
        n_pieces: usize,
        degree: usize,
    ) -> Result<(PiecewisePoly, f64)> {
        if !(b > a) || n_pieces == 0 {
            return Err(Error::validation("fit needs b > a and at least one piece"));
        }
        let width = (b - a) / n_pieces as f64;
        let mut pieces = Vec::with_capacity(n_pieces);
        let mut max_err: f64 = 0.0;
        for i in 0..n_pieces {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == n_pieces { b } else { lo + width };
            let coeffs = lsq_poly(&f, lo, hi, degree)?;
            let piece = PolyPiece { a: lo, b: hi, coeffs };
            for k in 0..=200 {
                let u = lo + (hi - lo) * k as f64 / 200.0;
                max_err = max_err.max((piece.eval(u) - f(u)).abs());
            }
            pieces.push(piece);
        }
        Ok((PiecewisePoly::new(pieces)?, max_err))
    }
}

fn lsq_poly<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, degree: usize) -> Result<Vec<f64>> {
    // Fit in t = (u − a)/(b − a) ∈ [0, 1], then rescale to powers of u − a.
    let nodes = lobatto_points(4 * degree + 8, 0.0, 1.0);
    let h = b - a;
    let vander = DMatrix::from_fn(nodes.len(), degree + 1, |i, k| nodes[i].powi(k as i32));
    let rhs = DVector::from_iterator(nodes.len(), nodes.iter().map(|t| f(a + h * t)));
    let sol = vander
        .svd(true, true)
        .solve(&rhs, 1e-15)
        .map_err(|e| Error::validation(format!("least-squares fit failed: {e}")))?;
    Ok(sol.iter().enumerate().map(|(k, c)| c / h.powi(k as i32)).collect())
}

/// `s^4 (1 − s)^4` with `s = u − T` on `[T, T + 1]`.
pub fn bump_seed(t: f64) -> PiecewisePoly {
    // (s − s^2)^4 = s^4 − 4 s^5 + 6 s^6 − 4 s^7 + s^8
    PiecewisePoly::single(t, t + 1.0, vec![0.0, 0.0, 0.0, 0.0, 1.0, -4.0, 6.0, -4.0, 1.0])
        .expect("fixed layout")
}

/// Extends a solution of `(u q)' = κ q(u) − κ q(u + 1)` from its last unit
/// piece through `q(u + 1) = ((κ − 1) q(u) − u q'(u))/κ`. The result holds
/// the seed followed by `steps` new pieces.
pub fn forward_extend(kappa: f64, seed: &PiecewisePoly, steps: usize) -> Result<PiecewisePoly> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::validation(format!("kappa must be positive, got {kappa}")));
    }
    if steps < 1 {
        return Err(Error::validation("steps must be at least 1"));
    }
    if !(seed.start() > 0.0) {
        return Err(Error::validation("seed must live on u > 0"));
    }
    let last = &seed.pieces[seed.pieces.len() - 1];
    if ((last.b - last.a) - 1.0).abs() > 1e-12 {
        return Err(Error::validation("the last seed piece must have unit length"));
    }
    let mut pieces = seed.pieces.clone();
    for step in 1..=steps {
        let prev = &pieces[pieces.len() - 1];
        let l = prev.a;
        let c = &prev.coeffs;
        let d = c.len() - 1;
        let next: Vec<f64> = (0..=d)
            .map(|k| {
                let up = if k < d { c[k + 1] } else { 0.0 };
                ((kappa - 1.0) * c[k] - l * (k + 1) as f64 * up - k as f64 * c[k]) / kappa
            })
            .collect();
        if next.iter().any(|x| !x.is_finite() || x.abs() > 1e300) {
            return Err(Error::Overflow(format!(
                "coefficients overflow at extension step {step}; last valid step {}",
                step - 1
            )));
        }
        pieces.push(PolyPiece { a: prev.b, b: prev.b + 1.0, coeffs: next });
    }
    PiecewisePoly::new(pieces)
}

pub const SAMPLES_PER_UNIT: usize = 256;

/// Strict sign alternations of `q` on `[a, b]`: a uniform grid of
/// `SAMPLES_PER_UNIT` points per unit, refined with the local extrema of
/// each piece so root pairs closer than the grid are still seen.
pub fn sign_changes(q: &PiecewisePoly, a: f64, b: f64) -> usize {
    let n = (((b - a) * SAMPLES_PER_UNIT as f64).ceil() as usize).max(1);
    let mut xs: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    let base = xs.clone();
    for w in base.windows(2) {
        let (d0, d1) = (q.eval_derivative(w[0]), q.eval_derivative(w[1]));
        if d0 * d1 < 0.0 {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if q.eval_derivative(mid) * d0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            xs.push(0.5 * (lo + hi));
        }
    }
    for p in &q.pieces {
        if p.a > a && p.a < b {
            xs.push(p.a);
        }
    }
    xs.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = 0.0f64;
    for x in xs {
        let v = if x == b { q.eval_left(x) } else { q.eval(x) };
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationReport {
    pub interval_start: Vec<f64>,
    pub interval_max: Vec<f64>,
    pub sign_changes: Vec<usize>,
    /// First interval index (0 = seed) from which every later interval has a
    /// sign change.
    pub first_persistent_sign_change: Option<usize>,
    /// `ln max |q|` per interval.
    pub growth_exponents: Vec<f64>,
}

impl OscillationReport {
    /// First interval index from which every later interval has
    /// `max |q| > e^{λ u}` with `u` its right end.
    pub fn exceedance_start(&self, lambda: f64) -> Option<usize> {
        let above = |i: usize| self.growth_exponents[i] > lambda * (self.interval_start[i] + 1.0);
        let n = self.interval_max.len();
        match (0..n).rposition(|i| !above(i)) {
            None => Some(0),
            Some(i) if i + 1 < n => Some(i + 1),
            Some(_) => None,
        }
    }
}

pub fn oscillation_report(q: &PiecewisePoly) -> OscillationReport {
    let mut interval_start = Vec::new();
    let mut interval_max = Vec::new();
    let mut changes = Vec::new();
    for p in &q.pieces {
        let max = (0..=SAMPLES_PER_UNIT)
            .map(|k| p.eval(p.a + (p.b - p.a) * k as f64 / SAMPLES_PER_UNIT as f64).abs())
            .fold(0.0, f64::max);
        interval_start.push(p.a);
        interval_max.push(max);
        changes.push(sign_changes(q, p.a, p.b));
    }
    let first_persistent_sign_change = match changes.iter().rposition(|&c| c == 0) {
        None => Some(0),
        Some(i) if i + 1 < changes.len() => Some(i + 1),
        Some(_) => None,
    };
    let growth_exponents = interval_max.iter().map(|m| m.ln()).collect();
    OscillationReport {
        interval_start,
        interval_max,
        sign_changes: changes,
        first_persistent_sign_change,
        growth_exponents,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalCheck {
    pub fit_error: f64,
    /// Max `|q − A q*|` on each extended interval.
    pub step_errors: Vec<f64>,
    /// `step_errors / fit_error`.
    pub amplification: Vec<f64>,
    pub sign_changes: Vec<usize>,
}

/// Seeds the κ-equation with a degree-`degree` least-squares fit of
/// `scale · q*` on `[T, T + 1]`, extends `steps` intervals and compares
/// with `scale · q*` there.
pub fn canonical_consistency(
    kappa: f64,
    t: f64,
    degree: usize,
    steps: usize,
    scale: f64,
    cfg: &crate::quad::QuadratureConfig,
) -> Result<(PiecewisePoly, CanonicalCheck)> {
    let params = crate::params::preset(crate::params::Preset::Iwaniec { kappa })?;
    let target = |u: f64| -> Result<f64> { Ok(scale * crate::qstar::qstar_value(&params, u, cfg)?.re) };
    target(t)?;
    let (seed, fit_error) =
        PiecewisePoly::fit(|u| target(u).unwrap_or(f64::NAN), t, t + 1.0, 1, degree)?;
    let q = forward_extend(kappa, &seed, steps)?;
    let mut step_errors = Vec::with_capacity(steps);
    let mut changes = Vec::with_capacity(steps);
    for k in 1..=steps {
        let piece = &q.pieces[k];
        let mut err: f64 = 0.0;
        for i in 0..=SAMPLES_PER_UNIT {
            let u = piece.a + (piece.b - piece.a) * i as f64 / SAMPLES_PER_UNIT as f64;
            err = err.max((piece.eval(u) - target(u)?).abs());
        }
        step_errors.push(err);
        changes.push(sign_changes(&q, piece.a, piece.b));
    }
    let amplification = step_errors.iter().map(|e| e / fit_error).collect();
    Ok((q, CanonicalCheck { fit_error, step_errors, amplification, sign_changes: changes }))
}

/// Solution of the advanced equation continued to the left of a seed.
#[derive(Debug, Clone)]
pub struct BackwardSolution {
    seed: PiecewisePoly,
    /// Ascending in `u`; the last piece ends at the seed start.
    pieces: Vec<ChebPiece>,
}

impl BackwardSolution {
    pub fn start(&self) -> f64 {
        self.pieces.first().map_or(self.seed.start(), |p| p.a)
    }

    pub fn eval(&self, u: f64) -> C64 {
        if u >= self.seed.start() || self.pieces.is_empty() {
            return C64::new(self.seed.eval(u), 0.0);
        }
        let i = self.pieces.partition_point(|p| p.b < u).min(self.pieces.len() - 1);
        self.pieces[i].eval(u)
    }

    /// `(u, q(u))` at `n + 1` equispaced points of `[start, T]`.
    pub fn samples(&self, n: usize) -> Vec<(f64, C64)> {
        let (a, b) = (self.start(), self.seed.start());
        (0..=n)
            .map(|k| {
                let u = a + (b - a) * k as f64 / n.max(1) as f64;
                (u, self.eval(u))
            })
            .collect()
    }
}

const BACKWARD_DEGREE: usize = 24;

/// Integrates `(u^{−α_0} q)' = u^{−α_0−1} Σ_{j≥1} α_j q(u + v_j)` leftwards
/// from a seed on `[T, T + v_m]`, `steps` steps of length `h ≤ v_1`.
pub fn backward_extend(
    params: &DdeParams,
    seed: &PiecewisePoly,
    h: f64,
    steps: usize,
) -> Result<BackwardSolution> {
    let t = seed.start();
    if !(h > 0.0 && h <= params.v1() * (1.0 + 1e-12)) {
        return Err(Error::validation(format!("step h must satisfy 0 < h <= v_1, got {h}")));
    }
    if seed.end() < t + params.v_max() - 1e-12 {
        return Err(Error::validation("seed must cover [T, T + v_m]"));
    }
    if !(t - steps as f64 * h > 0.0) {
        return Err(Error::domain(format!(
            "backward extension from T = {t} with {steps} steps of {h} reaches u <= 0"
        )));
    }
    let alpha0 = params.alpha0();
    let mut sol = BackwardSolution { seed: seed.clone(), pieces: Vec::new() };
    let mut right = t;
    for _ in 0..steps {
        let left = right - h;
        let nodes = lobatto_points(BACKWARD_DEGREE, left, right);
        let g: Vec<C64> = nodes
            .iter()
            .map(|&x| {
                let forward: C64 =
                    params.shifted_terms().map(|(alpha, v)| alpha * sol.eval(x + v)).sum();
                (-(alpha0 + 1.0) * x.ln()).exp() * forward
            })
            .collect();
        let cum = cumulative_integral(&g, left, right);
        let total = cum[BACKWARD_DEGREE];
        let anchor = (-alpha0 * right.ln()).exp() * sol.eval(right);
        let values = nodes
            .iter()
            .zip(&cum)
            .map(|(&x, c)| (alpha0 * x.ln()).exp() * (anchor - (total - c)))
            .collect();
        sol.pieces.insert(0, ChebPiece::new(left, right, values));
        right = left;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{preset, Preset};
    use crate::qstar::qstar_value;
    use crate::quad::QuadratureConfig;

    #[test]
    fn zero_seed_stays_zero() {
        let seed = PiecewisePoly::single(5.0, 6.0, vec![0.0; 9]).unwrap();
        let q = forward_extend(1.0, &seed, 6).unwrap();
        assert!(q.pieces.iter().all(|p| p.coeffs.iter().all(|&c| c == 0.0)));
        assert_eq!(q.degree, 8);
        assert_eq!(q.pieces.len(), 7);
    }

    #[test]
    fn extension_satisfies_equation() {
        let kappa = 1.7;
        let q = forward_extend(kappa, &bump_seed(3.0), 3).unwrap();
        for u in [3.2, 4.5, 5.9] {
            let h = 1e-6;
            let lhs = ((u + h) * q.eval(u + h) - (u - h) * q.eval(u - h)) / (2.0 * h);
            let rhs = kappa * q.eval(u) - kappa * q.eval(u + 1.0);
            assert!((lhs - rhs).abs() < 1e-5 * rhs.abs().max(1.0), "{u}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn bump_seed_is_continuous_across_junctions() {
        // Order-4 vanishing at both ends carries continuity through three
        // junctions; the fourth jumps.
        let q = forward_extend(1.0, &bump_seed(5.0), 4).unwrap();
        let jump = q.pieces[4].eval(10.0) - q.pieces[3].eval(10.0);
        assert!(jump.abs() > 1.0);
        for w in q.pieces[..4].windows(2) {
            let left = w[0].eval(w[0].b);
            let right = w[1].eval(w[1].a);
            let scale: f64 = w[0].coeffs.iter().map(|c| c.abs()).sum();
            assert!((left - right).abs() <= 1e-13 * scale.max(1.0), "{left} {right}");
        }
    }

    #[test]
    fn linearity() {
        let a = bump_seed(5.0);
        let b = PiecewisePoly::single(5.0, 6.0, (0..9).map(|k| 0.3 / (k + 1) as f64).collect()).unwrap();
        let sum = forward_extend(1.0, &a.add(&b).unwrap(), 5).unwrap();
        let split = forward_extend(1.0, &a, 5)
            .unwrap()
            .add(&forward_extend(1.0, &b, 5).unwrap())
            .unwrap();
        for (p, q) in sum.pieces.iter().zip(&split.pieces) {
            let scale = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for (x, y) in p.coeffs.iter().zip(&q.coeffs) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(forward_extend(1.0, &bump_seed(5.0), 0), Err(Error::Validation(_))));
        assert!(matches!(forward_extend(0.0, &bump_seed(5.0), 1), Err(Error::Validation(_))));
    }

    #[test]
    fn overflow_reports_step() {
        let seed = PiecewisePoly::single(1e10, 1e10 + 1.0, vec![1e299, 1e299]).unwrap();
        match forward_extend(1.0, &seed, 5) {
            Err(Error::Overflow(msg)) => assert!(msg.contains("last valid step 0"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sign_change_counts() {
        let line = PiecewisePoly::single(2.0, 4.0, vec![-1.0, 1.0]).unwrap();
        assert_eq!(sign_changes(&line, 2.0, 4.0), 1);
        assert_eq!(sign_changes(&bump_seed(5.0), 5.0, 6.0), 0);
        // Two roots 1e-4 apart, closer than the sampling grid.
        let pair = PiecewisePoly::single(0.0, 1.0, vec![0.25005, -1.0001, 1.0]).unwrap();
        assert_eq!(sign_changes(&pair, 0.0, 1.0), 2);
    }

    #[test]
    fn bump_extension_oscillates_and_grows() {
        let q = forward_extend(1.0, &bump_seed(5.0), 8).unwrap();
        let r = oscillation_report(&q);
        assert_eq!(r.sign_changes[0], 0);
        let k = r.first_persistent_sign_change.unwrap();
        assert!(k <= 8, "{r:?}");
        assert!(r.sign_changes[6] >= 1);
        assert!(r.exceedance_start(2.0).is_some(), "{:?}", r.growth_exponents);
        assert!(r.exceedance_start(4.0).is_none());
    }

    #[test]
    fn junction_jumps_are_not_sign_changes() {
        let q = PiecewisePoly::new(vec![
            PolyPiece { a: 1.0, b: 2.0, coeffs: vec![1.0, 0.0] },
            PolyPiece { a: 2.0, b: 3.0, coeffs: vec![-1.0, 0.0] },
        ])
        .unwrap();
        assert_eq!(sign_changes(&q, 1.0, 2.0), 0);
        assert_eq!(sign_changes(&q, 1.0, 3.0), 1);
    }

    #[test]
    fn backward_reproduces_qstar() {
        let p = preset(Preset::Iwaniec { kappa: 1.0 }).unwrap();
        let cfg = QuadratureConfig::default();
        let qs = |u: f64| qstar_value(&p, u, &cfg).unwrap().re;
        let (seed, fit_err) = PiecewisePoly::fit(qs, 5.0, 6.0, 4, 12).unwrap();
        assert!(fit_err < 1e-12, "{fit_err}");
        let sol = backward_extend(&p, &seed, 0.1, 30).unwrap();
        assert!((sol.start() - 2.0).abs() < 1e-9);
        for (u, v) in sol.samples(30) {
            assert!((v.re - qs(u)).abs() < 1e-6, "{u}: {v} vs {}", qs(u));
        }
    }

    #[test]
    fn backward_zero_and_domain() {
        let p = preset(Preset::Iwaniec { kappa: 1.0 }).unwrap();
        let zero = PiecewisePoly::single(5.0, 6.0, vec![0.0; 5]).unwrap();
        let sol = backward_extend(&p, &zero, 0.1, 10).unwrap();
        assert!(sol.samples(10).iter().all(|(_, v)| v.norm() == 0.0));
        assert!(matches!(backward_extend(&p, &zero, 0.5, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn canonical_seed_stays_positive() {
        let cfg = QuadratureConfig::default();
        let (_, c) = canonical_consistency(1.0, 5.0, 8, 3, 1.0, &cfg).unwrap();
        assert!(c.fit_error < 1e-10);
        assert_eq!(c.sign_changes, vec![0, 0, 0]);
        // Each step maps the fit error e to −u e'/κ, so the residual of a
        // degree-8 fit is amplified by roughly 2 (d + 1)^2 u per step.
        assert!(c.amplification[0] > 10.0 && c.amplification[0] < 1e4, "{c:?}");
        assert!(c.step_errors[2] < 1e-3, "{c:?}");
    }
}
