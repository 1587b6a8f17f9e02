//! The bilinear relation between the two equations:
//! `A(u) = u p̂(u) q*(u) − Σ_{j≥1} α_j ∫_{u−v_j}^u p̂(t) q*(t + v_j) dt`
//! is constant, with `p̂ = Γ(−β) p(·, a, b)`; and `u p̂ q* → 1` at both
//! ends.

use rayon::prelude::*;
use serde::Serialize;

use crate::cheb::ChebPiece;
use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::pfun::{solve_p_any, PFunction};
use crate::qstar::{qstar_value, INTEGER_TOL};
use crate::quad::{integrate_breaks, QuadratureConfig};
use crate::special::gamma_c;
use crate::C64;

#[derive(Debug, Clone, Serialize)]
pub struct AdjointReport {
    pub grid: Vec<f64>,
    pub a_estimates: Vec<C64>,
    /// Componentwise median of the estimates.
    pub a_mean: C64,
    pub max_dev: f64,
    pub limit_at_zero: Option<C64>,
    pub limit_at_inf: Option<C64>,
    pub normalized: bool,
}

/// Chebyshev interpolant of `q*` over an interval, one piece per unit
/// length (shorter near the origin).
pub struct QstarTable {
    pieces: Vec<ChebPiece>,
}

impl QstarTable {
    pub fn new(params: &DdeParams, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::validation(format!("bad q* table range [{lo}, {hi}]")));
        }
        let mut edges = vec![lo];
        while *edges.last().unwrap() < hi {
            let x = *edges.last().unwrap();
            edges.push((x + (0.5 * x).min(1.0)).min(hi));
        }
        let degree = 20;
        let pieces = edges
            .windows(2)
            .map(|w| {
                let nodes = crate::cheb::lobatto_points(degree, w[0], w[1]);
                let values = nodes
                    .par_iter()
                    .map(|&u| qstar_value(params, u, cfg))
                    .collect::<Result<Vec<C64>>>()?;
                Ok(ChebPiece::new(w[0], w[1], values))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QstarTable { pieces })
    }

    pub fn eval(&self, u: f64) -> C64 {
        let i = self.pieces.partition_point(|p| p.b < u).min(self.pieces.len() - 1);
        self.pieces[i].eval(u)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AdjointOptions {
    /// Use the raw `p` (no `Γ(−β)` factor). Needed when `β` is a
    /// non-negative integer, e.g. Dickman paired with `q* ≡ 1`.
    pub bypass_normalization: bool,
}

fn normalization(params: &DdeParams, opts: AdjointOptions) -> Result<C64> {
    if opts.bypass_normalization {
        return Ok(C64::new(1.0, 0.0));
    }
    if let Some(n) = params.beta_nonneg_integer(INTEGER_TOL) {
        return Err(Error::domain(format!(
            "beta = {n}: Gamma(-beta) has a pole, so p cannot be normalized (use the bypass flag for the raw pairing)"
        )));
    }
    gamma_c(-params.beta())
}

/// `A(u)` on every grid point, with grid minimum above `v_m`.
pub fn adjoint_constant(
    params: &DdeParams,
    grid: &[f64],
    cfg: &QuadratureConfig,
    opts: AdjointOptions,
) -> Result<AdjointReport> {
    if grid.len() < 2 {
        return Err(Error::validation("adjoint grid needs at least two points"));
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > params.v_max()) {
        return Err(Error::validation(format!(
            "adjoint grid minimum {lo} must exceed v_m = {}",
            params.v_max()
        )));
    }
    let scale = normalization(params, opts)?;
    let p = solve_p_any(params, hi, cfg)?;
    let q = QstarTable::new(params, lo, hi + params.v_max(), cfg)?;
    let a_estimates = grid
        .par_iter()
        .map(|&u| adjoint_at(params, &p, &q, scale, u, cfg))
        .collect::<Result<Vec<C64>>>()?;
    let a_mean = median(&a_estimates);
    let max_dev = a_estimates.iter().map(|a| (a - a_mean).norm()).fold(0.0, f64::max);
    Ok(AdjointReport {
        grid: grid.to_vec(),
        a_estimates,
        a_mean,
        max_dev,
        limit_at_zero: None,
        limit_at_inf: None,
        normalized: !opts.bypass_normalization,
    })
}

/// `A(u)` for one `u`, from a prepared `p` and `q*` table.
pub fn adjoint_at(
    params: &DdeParams,
    p: &PFunction,
    q: &QstarTable,
    scale: C64,
    u: f64,
    cfg: &QuadratureConfig,
) -> Result<C64> {
    let pu = p.try_eval(u, crate::pfun::Side::Left)?;
    let mut a = pu * q.eval(u) * u;
    let bps = p.breakpoints();
    for (alpha, v) in params.shifted_terms() {
        let lo = u - v;
        let mut points = vec![lo];
        points.extend(bps.iter().copied().filter(|&b| b > lo && b < u));
        points.push(u);
        let mut f = |t: f64| p.eval(t) * q.eval(t + v);
        let r = integrate_breaks(&mut f, &points, cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions)?;
        a -= alpha * r.value;
    }
    Ok(a * scale)
}

fn median(values: &[C64]) -> C64 {
    let mid = |mut xs: Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        if n % 2 == 1 {
            xs[n / 2]
        } else {
            0.5 * (xs[n / 2 - 1] + xs[n / 2])
        }
    };
    C64::new(
        mid(values.iter().map(|v| v.re).collect()),
        mid(values.iter().map(|v| v.im).collect()),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct UpqLimits {
    /// `None` when `Re α_0 ≥ 0`: the small-`u` law is not available.
    pub limit_zero: Option<C64>,
    pub limit_zero_note: Option<String>,
    pub u_large: f64,
    /// `u p̂(u) q*(u)` at `u_large`.
    pub limit_inf: C64,
    /// The same at `u_large / 2`.
    pub limit_inf_half: C64,
    /// `2 f(U) − f(U/2)`, removing an `O(1/u)` correction.
    pub limit_inf_richardson: C64,
}

/// A factor `base^exponent` or `Γ(arg)^exponent` of a closed-form
/// product, kept unevaluated so identical factors cancel exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    /// `(v_j e^γ)^e`, keyed by `j`.
    Shift(usize),
    Gamma(C64),
    /// `u^e`.
    Power,
}

fn cancel_and_evaluate(params: &DdeParams, factors: &[(Factor, C64)]) -> Result<C64> {
    let mut merged: Vec<(Factor, C64)> = Vec::new();
    for &(f, e) in factors {
        match merged.iter_mut().find(|(g, _)| *g == f) {
            Some((_, acc)) => *acc += e,
            None => merged.push((f, e)),
        }
    }
    let mut value = C64::new(1.0, 0.0);
    for (f, e) in merged {
        if e == C64::new(0.0, 0.0) {
            continue;
        }
        match f {
            Factor::Shift(j) => {
                let base = params.shifts()[j].ln() + crate::special::EULER_GAMMA;
                value *= (e * base).exp();
            }
            Factor::Gamma(z) => value *= (e * crate::special::lgamma_c(z)?).exp(),
            Factor::Power => {
                return Err(Error::domain("u-dependence does not cancel in the small-u product"));
            }
        }
    }
    Ok(value)
}

/// Small-`u` limit of `u p̂(u) q*(u)` from the closed forms
/// `p = C_0 u^{−a}/Γ(1−a)` on `(0, v_1]` and
/// `q* ~ u^{α_0} Γ(−α_0)/Γ(−β) Π (v_j e^γ)^{α_j}`, multiplied factor by
/// factor. Requires `Re α_0 < 0` and `β` not a non-negative integer.
pub fn limit_at_zero(params: &DdeParams) -> Result<C64> {
    let alpha0 = params.alpha0();
    if !(alpha0.re < 0.0) {
        return Err(Error::domain(format!(
            "not covered: the small-u law for q* needs Re(alpha_0) < 0, got {alpha0}"
        )));
    }
    if params.beta_nonneg_integer(INTEGER_TOL).is_some() {
        return Err(Error::domain("beta is a non-negative integer: no normalization"));
    }
    let beta = params.beta();
    let one = C64::new(1.0, 0.0);
    let mut factors = Vec::new();
    // u · Γ(−β) · C_0/Γ(−α_0) · u^{−1−α_0}; note 1 − a = −α_0.
    factors.push((Factor::Power, one));
    factors.push((Factor::Gamma(-beta), one));
    factors.push((Factor::Gamma(-alpha0), -one));
    factors.push((Factor::Power, -one));
    factors.push((Factor::Power, -alpha0));
    for (j, alpha) in params.alphas().iter().enumerate().skip(1) {
        factors.push((Factor::Shift(j), -alpha));
    }
    // q*: u^{α_0} Γ(−α_0)/Γ(−β) Π (v_j e^γ)^{α_j}.
    factors.push((Factor::Power, alpha0));
    factors.push((Factor::Gamma(-alpha0), one));
    factors.push((Factor::Gamma(-beta), -one));
    for (j, alpha) in params.alphas().iter().enumerate().skip(1) {
        factors.push((Factor::Shift(j), *alpha));
    }
    cancel_and_evaluate(params, &factors)
}

/// Both limits of `u p̂(u) q*(u)`; the large-`u` one evaluated at
/// `u_large` and `u_large/2`.
pub fn upq_limits(params: &DdeParams, u_large: f64, cfg: &QuadratureConfig) -> Result<UpqLimits> {
    let scale = normalization(params, AdjointOptions::default())?;
    if !(u_large > 2.0 * params.v_max()) {
        return Err(Error::validation(format!("u_large must exceed 2 v_m, got {u_large}")));
    }
    let (limit_zero, limit_zero_note) = match limit_at_zero(params) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let p = solve_p_any(params, u_large, cfg)?;
    let f = |u: f64| -> Result<C64> {
        Ok(p.try_eval(u, crate::pfun::Side::Left)? * scale * qstar_value(params, u, cfg)? * u)
    };
    let limit_inf = f(u_large)?;
    let limit_inf_half = f(0.5 * u_large)?;
    Ok(UpqLimits {
        limit_zero,
        limit_zero_note,
        u_large,
        limit_inf,
        limit_inf_half,
        limit_inf_richardson: limit_inf * 2.0 - limit_inf_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_real_params, preset, Preset};

    #[test]
    fn limit_zero_is_exactly_one() {
        for p in [
            preset(Preset::Iwaniec { kappa: 0.5 }).unwrap(),
            make_real_params(&[-0.3, -0.45, 0.2], &[0.0, 1.0, 1.7]).unwrap(),
        ] {
            assert_eq!(limit_at_zero(&p).unwrap(), C64::new(1.0, 0.0));
        }
        let p = crate::params::make_params(
            &[C64::new(-0.4, 0.2), C64::new(-0.3, -0.1)],
            &[0.0, 1.3],
        )
        .unwrap();
        assert_eq!(limit_at_zero(&p).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn limit_zero_gated() {
        let p = preset(Preset::Iwaniec { kappa: 2.0 }).unwrap();
        assert!(matches!(limit_at_zero(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn dickman_requires_bypass() {
        let p = preset(Preset::Dickman).unwrap();
        let cfg = QuadratureConfig::default();
        assert!(matches!(
            adjoint_constant(&p, &[2.0, 3.0], &cfg, AdjointOptions::default()),
            Err(Error::Domain(_))
        ));
        let r = adjoint_constant(
            &p,
            &[1.5, 2.0, 3.0, 4.5],
            &cfg,
            AdjointOptions { bypass_normalization: true },
        )
        .unwrap();
        for a in &r.a_estimates {
            assert!(a.norm() < 1e-11, "{a}");
        }
    }

    #[test]
    fn grid_must_clear_largest_shift() {
        let p = preset(Preset::Q1).unwrap();
        let cfg = QuadratureConfig::default();
        assert!(matches!(
            adjoint_constant(&p, &[0.5, 3.0], &cfg, AdjointOptions::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn median_resists_outlier() {
        let v = [C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(9.0, 0.0)];
        assert_eq!(median(&v), C64::new(1.0, 0.0));
    }

    #[test]
    fn iwaniec_constant() {
        let cfg = QuadratureConfig::default();
        let grid: Vec<f64> = (3..=8).map(f64::from).collect();
        for kappa in [1.0, 0.5] {
            let p = preset(Preset::Iwaniec { kappa }).unwrap();
            let r = adjoint_constant(&p, &grid, &cfg, AdjointOptions::default()).unwrap();
            assert!(r.max_dev < 1e-8, "kappa {kappa}: {:?}", r.a_estimates);
            assert!((r.a_mean - 1.0).norm() < 1e-8, "kappa {kappa}: {}", r.a_mean);
        }
    }

    #[test]
    fn upq_tends_to_one() {
        let cfg = QuadratureConfig::default();
        let p = preset(Preset::Iwaniec { kappa: 0.5 }).unwrap();
        let l = upq_limits(&p, 60.0, &cfg).unwrap();
        assert_eq!(l.limit_zero, Some(C64::new(1.0, 0.0)));
        assert!((l.limit_inf - 1.0).norm() < 0.02, "{l:?}");
        let p = preset(Preset::Iwaniec { kappa: 2.0 }).unwrap();
        let l = upq_limits(&p, 30.0, &cfg).unwrap();
        assert!(l.limit_zero.is_none() && l.limit_zero_note.is_some());
    }
}
