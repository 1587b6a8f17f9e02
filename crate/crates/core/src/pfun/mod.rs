//! The solution `p(u, a, b)` of the retarded equation
//! `(u p(u))' = −Σ_j α_j p(u − v_j)` fixed by `p = 0` on `u ≤ 0`,
//! `p(u) = C_0 u^{−a}/Γ(1 − a)` on `(0, v_1]`, continuity for `u > 0` when
//! `Re a < 1`, `p(u, a + 1, b) = p'(u, a, b)` and left-continuity.
//!
//! [`solve_p`] marches `u^a p(u) = L^a p(L) − ∫_L^u t^{a−1} Σ_{j≥1} α_j p(t − v_j) dt`
//! across panels delimited by the sums `Σ n_j v_j`. [`PFunction`] adds
//! the lift to `Re a ≥ 1`.

mod discont;
mod laplace;
mod lift;

pub use discont::{discontinuities, measure_jumps, DiscontinuityKind, DiscontinuityReport};
pub use laplace::{p_laplace_check, LaplaceCheck};
pub use lift::{lift_a, solve_p_any, PFunction};

use serde::{Deserialize, Serialize};

use crate::cheb::{coeffs_from_values, cumulative_integral, lobatto_points, tail_ratio, ChebPiece};
use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::quad::QuadratureConfig;
use crate::special::rgamma_c;
use crate::C64;

/// Which one-sided limit to take at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

const MAX_BREAKPOINTS: usize = 10_000;
const MAX_SPLIT_DEPTH: usize = 10;

/// All sums `Σ n_j v_j ≤ upper` (`n_j ≥ 0`), ascending, including 0.
/// Points closer than `1e−12·max(1, upper)` are merged. Truncated at
/// 10⁴ points with a warning.
pub fn breakpoints(shifts: &[f64], upper: f64) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let tol = 1e-12 * upper.max(1.0);
    let mut out: Vec<f64> = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(ordered(0.0)));
    while let Some(Reverse(x)) = heap.pop() {
        let x = x.0;
        if x > upper + tol {
            break;
        }
        if let Some(&last) = out.last() {
            if x - last <= tol {
                continue;
            }
        }
        out.push(x);
        if out.len() >= MAX_BREAKPOINTS {
            log::warn!("breakpoint set truncated at {MAX_BREAKPOINTS} points below u = {x}");
            break;
        }
        for &v in shifts.iter().filter(|v| **v > 0.0) {
            heap.push(Reverse(ordered(x + v)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Ord64(f64);
impl Eq for Ord64 {}
impl Ord for Ord64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
fn ordered(x: f64) -> Ord64 {
    Ord64(x)
}

/// One marching panel `(left, right]`.
///
/// Inside, `p` is stored as a function of `σ ∈ [0, 1]` with
/// `u = left + (right − left)·σ^power`, on Chebyshev pieces graded toward
/// `σ = 0`. The first panel `(0, v_1]` is stored in closed form.
#[derive(Debug, Clone)]
pub struct Panel {
    pub left: f64,
    pub right: f64,
    power: f64,
    pieces: Vec<ChebPiece>,
}

impl Panel {
    pub fn is_closed_form(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    fn sigma(&self, u: f64) -> f64 {
        let x = ((u - self.left) / (self.right - self.left)).clamp(0.0, 1.0);
        if self.power == 1.0 {
            x
        } else {
            x.powf(1.0 / self.power)
        }
    }

    fn piece_at(&self, sigma: f64) -> &ChebPiece {
        let i = self.pieces.partition_point(|p| p.b < sigma);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }
}

/// `p(u, a, b)` on `(0, U]` for `Re a < 1`, left-continuous, zero for
/// `u ≤ 0`.
#[derive(Debug, Clone)]
pub struct PiecewiseSolution {
    params: DdeParams,
    horizon: f64,
    breakpoints: Vec<f64>,
    panels: Vec<Panel>,
    /// `C_0/Γ(1 − a)`.
    initial: C64,
}

/// `a` is a non-positive integer, so the initial data is a polynomial and
/// every panel is analytic up to its ends.
fn smooth_initial(a: C64) -> bool {
    let r = a.re.round();
    r <= 0.0 && (a.re - r).abs() < 1e-12 && a.im.abs() < 1e-12
}

fn closed_form(initial: C64, a: C64, u: f64) -> C64 {
    if initial == C64::new(0.0, 0.0) {
        return initial;
    }
    initial * (-a * u.ln()).exp()
}

/// `lim_{u→0+} C_0 u^{−a}/Γ(1 − a)`: zero when `Re a < 0` (or the
/// coefficient vanishes), `C_0` at `a = 0`, infinite when `Re a > 0`,
/// undefined (NaN) on `Re a = 0`, `a ≠ 0`.
fn closed_form_at_zero(initial: C64, a: C64) -> C64 {
    if initial == C64::new(0.0, 0.0) || a.re < 0.0 {
        C64::new(0.0, 0.0)
    } else if a == C64::new(0.0, 0.0) {
        initial
    } else if a.re > 0.0 {
        C64::new(f64::INFINITY, 0.0)
    } else {
        C64::new(f64::NAN, f64::NAN)
    }
}

impl PiecewiseSolution {
    pub fn params(&self) -> &DdeParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Panel boundaries: the sums `Σ n_j v_j ≤ U`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Index of the panel containing `u` (left-continuous convention).
    pub fn panel_index(&self, u: f64) -> Option<usize> {
        if !(u > 0.0 && u <= self.horizon) {
            return None;
        }
        let i = self.panels.partition_point(|p| p.right < u);
        (i < self.panels.len()).then_some(i)
    }

    /// `p(u)`, left-continuous. NaN beyond the horizon.
    pub fn eval(&self, u: f64) -> C64 {
        self.eval_side(u, Side::Left)
    }

    /// One-sided value. Only `u = 0` distinguishes the sides, since `p`
    /// is continuous on `(0, ∞)`.
    pub fn eval_side(&self, u: f64, side: Side) -> C64 {
        self.try_eval(u, side).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    pub fn try_eval(&self, u: f64, side: Side) -> Result<C64> {
        if u.is_nan() {
            return Err(Error::validation("u is NaN"));
        }
        let a = self.params.a();
        if u < 0.0 || (u == 0.0 && side == Side::Left) {
            return Ok(C64::new(0.0, 0.0));
        }
        if u == 0.0 {
            return Ok(closed_form_at_zero(self.initial, a));
        }
        if u <= self.params.v1() {
            return Ok(closed_form(self.initial, a, u));
        }
        if u > self.horizon {
            return Err(Error::Horizon {
                msg: format!("p requested at u = {u} beyond the horizon {}", self.horizon),
                required: u,
            });
        }
        let panel = &self.panels[self.panels.partition_point(|p| p.right < u)];
        let s = panel.sigma(u);
        Ok(panel.piece_at(s).eval(s))
    }

    /// `p'(u)` from the panel interpolants (left-sided at panel ends).
    pub fn eval_derivative(&self, u: f64) -> C64 {
        let a = self.params.a();
        if u <= 0.0 || u > self.horizon {
            return if u <= 0.0 { C64::new(0.0, 0.0) } else { C64::new(f64::NAN, f64::NAN) };
        }
        if u <= self.params.v1() {
            return -a * closed_form(self.initial, a, u) / u;
        }
        let panel = &self.panels[self.panels.partition_point(|p| p.right < u)];
        let s = panel.sigma(u);
        let h = panel.right - panel.left;
        let ds_du = if panel.power == 1.0 {
            1.0 / h
        } else {
            s.powf(1.0 - panel.power) / (panel.power * h)
        };
        panel.piece_at(s).eval_derivative(s) * ds_du
    }

    /// `p(base + δ)` for an image point approached from the right.
    /// Keeps full resolution of small `δ` when `base = 0`.
    fn eval_offset(&self, base: f64, delta: f64) -> C64 {
        let a = self.params.a();
        if base == 0.0 {
            if delta == 0.0 {
                return closed_form_at_zero(self.initial, a);
            }
            return closed_form(self.initial, a, delta);
        }
        let x = base + delta;
        if x <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        if base >= self.params.v1() && x <= self.horizon {
            // When base is a panel start, locate base + δ through σ so that
            // δ below the spacing of floats near base is still resolved.
            let i = self.panels.partition_point(|p| p.right <= base);
            if let Some(panel) = self.panels.get(i) {
                if (panel.left - base).abs() <= 1e-12 * base.max(1.0) && delta < panel.right - panel.left {
                    let h = panel.right - panel.left;
                    let s = if panel.power == 1.0 {
                        delta / h
                    } else {
                        (delta / h).powf(1.0 / panel.power)
                    };
                    return panel.piece_at(s).eval(s);
                }
            }
        }
        self.eval_side(x, Side::Left)
    }

    /// Residual `(u p(u))' + Σ_j α_j p(u − v_j)` of the differential
    /// equation, using the interpolant derivative.
    pub fn residual(&self, u: f64) -> C64 {
        let mut r = self.eval(u) + self.eval_derivative(u) * u;
        for (alpha, v) in self.params.alphas().iter().zip(self.params.shifts()) {
            r += alpha * self.eval(u - v);
        }
        r
    }
}

/// Method-of-steps construction of `p(u, a, b)` on `(0, U]`.
///
/// Requires `Re a < 1`; use [`solve_p_any`] (lifting) otherwise. For
/// `U ≤ v_1` the closed-form initial segment alone is returned.
pub fn solve_p(params: &DdeParams, horizon: f64, cfg: &QuadratureConfig) -> Result<PiecewiseSolution> {
    cfg.validate()?;
    let a = params.a();
    if !(a.re < 1.0) {
        return Err(Error::domain(format!(
            "Re(a) = {} >= 1: solve the base problem with a - n and lift (lift_a / solve_p_any)",
            a.re
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::validation(format!("horizon must be positive and finite, got {horizon}")));
    }
    let v1 = params.v1();
    let initial = params.c0() * rgamma_c(1.0 - a);
    let first = Panel { left: 0.0, right: v1.min(horizon), power: 1.0, pieces: Vec::new() };
    let mut sol = PiecewiseSolution {
        params: params.clone(),
        horizon,
        breakpoints: vec![0.0],
        panels: vec![first],
        initial,
    };
    if horizon <= v1 {
        log::info!("horizon {horizon} <= v_1 = {v1}: closed-form initial segment only");
        return Ok(sol);
    }
    let mut bps = breakpoints(params.shifts(), horizon);
    if horizon - bps.last().unwrap() > 1e-12 * horizon {
        bps.push(horizon);
    } else {
        *bps.last_mut().unwrap() = horizon;
    }
    sol.breakpoints = bps.clone();

    let singular = !smooth_initial(a);
    let power = if singular && a.re > 0.0 { 1.0 / (1.0 - a.re) } else { 1.0 };
    let degree = cfg.cheb_degree;
    let split_tol = (0.1 * cfg.rel_tol).max(1e-14);
    let ratio = cfg.grading_ratio;

    let start = bps.iter().position(|&x| x >= v1 * (1.0 - 1e-15)).unwrap();
    for w in bps[start..].windows(2) {
        let (left, right) = (w[0], w[1]);
        let h = right - left;
        let p_left = sol.eval(left);
        let march = Marcher {
            sol: &sol,
            left,
            h,
            power,
            a,
            degree,
            split_tol,
            anchor: p_left * (a * left.ln()).exp(),
        };
        let mut pieces = Vec::new();
        let mut integral = C64::new(0.0, 0.0);
        if singular {
            // σ below which u − left is not resolvable in f64.
            let sigma_min = (1e-16f64).max((1e-280f64).powf(1.0 / power));
            let levels = (sigma_min.ln() / ratio.ln()).ceil() as i32;
            let inner = ratio.powi(levels);
            march.piece(0.0, inner, true, 0, &mut integral, &mut pieces);
            for k in (0..levels).rev() {
                march.piece(ratio.powi(k + 1), ratio.powi(k), false, 0, &mut integral, &mut pieces);
            }
        } else {
            march.piece(0.0, 1.0, false, 0, &mut integral, &mut pieces);
        }
        sol.panels.push(Panel { left, right, power, pieces });
    }
    Ok(sol)
}

struct Marcher<'a> {
    sol: &'a PiecewiseSolution,
    left: f64,
    h: f64,
    power: f64,
    a: C64,
    degree: usize,
    split_tol: f64,
    /// `left^a p(left)`.
    anchor: C64,
}

impl Marcher<'_> {
    /// Integrand in σ: `t^{a−1} Σ α_j p(t − v_j) · dt/dσ`.
    fn integrand(&self, sigma: f64) -> (f64, C64) {
        let delta = if self.power == 1.0 { self.h * sigma } else { self.h * sigma.powf(self.power) };
        let t = self.left + delta;
        let mut acc = C64::new(0.0, 0.0);
        let tol = 1e-12 * self.left.max(1.0);
        for (alpha, v) in self.sol.params.shifted_terms() {
            let mut base = self.left - v;
            if base.abs() <= tol {
                base = 0.0;
            }
            acc += alpha * self.sol.eval_offset(base, delta);
        }
        let jac = if self.power == 1.0 {
            self.h
        } else {
            self.power * self.h * sigma.powf(self.power - 1.0)
        };
        (delta, acc * ((self.a - 1.0) * t.ln()).exp() * jac)
    }

    fn piece(
        &self,
        s0: f64,
        s1: f64,
        innermost: bool,
        depth: usize,
        integral: &mut C64,
        out: &mut Vec<ChebPiece>,
    ) {
        let nodes = lobatto_points(self.degree, s0, s1);
        let mut deltas = Vec::with_capacity(nodes.len());
        let mut g = Vec::with_capacity(nodes.len());
        for (i, &s) in nodes.iter().enumerate() {
            // The singular end point itself is replaced by a nearby sample;
            // the innermost piece is too narrow for this to matter.
            let s_eval = if innermost && i == 0 && self.power != 1.0 { 1e-3 * s1 } else { s };
            let (_, gv) = self.integrand(s_eval);
            let d = if self.power == 1.0 { self.h * s } else { self.h * s.powf(self.power) };
            deltas.push(d);
            g.push(gv);
        }
        if !innermost && depth < MAX_SPLIT_DEPTH && s1 - s0 > 1e-15 {
            let coeffs = coeffs_from_values(&g);
            if tail_ratio(&coeffs) > self.split_tol {
                let mid = 0.5 * (s0 + s1);
                self.piece(s0, mid, false, depth + 1, integral, out);
                self.piece(mid, s1, false, depth + 1, integral, out);
                return;
            }
        }
        let cum = cumulative_integral(&g, s0, s1);
        let values: Vec<C64> = cum
            .iter()
            .zip(&deltas)
            .map(|(c, d)| {
                let t = self.left + d;
                (self.anchor - (*integral + c)) * (-self.a * t.ln()).exp()
            })
            .collect();
        *integral += cum[cum.len() - 1];
        out.push(ChebPiece::new(s0, s1, values));
    }
}
