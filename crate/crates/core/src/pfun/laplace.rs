use serde::Serialize;

use super::PiecewiseSolution;
use crate::asym::{p_series, poly_eval, r_beta_poly};
use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::qstar::INTEGER_TOL;
use crate::quad::{integrate, QuadratureConfig};
use crate::special::ein;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceCheck {
    pub s: C64,
    pub lhs: C64,
    pub rhs: C64,
    pub dev: f64,
    /// Contribution of `[U, ∞)`, from the asymptotic form of `p`.
    pub tail: C64,
    pub tail_error: f64,
}

/// `s^β exp{−Σ_{j≥1} α_j Ein(v_j s)}`.
pub fn p_laplace_transform(params: &DdeParams, s: C64) -> Result<C64> {
    let mut e = params.beta() * s.ln();
    for (alpha, v) in params.shifted_terms() {
        e -= alpha * ein(s * v)?;
    }
    Ok(e.exp())
}

/// Compares `∫_0^∞ e^{−su} p(u) du` (panel quadrature on `(0, U]` plus an
/// asymptotic tail) with the closed form.
pub fn p_laplace_check(
    params: &DdeParams,
    s: C64,
    sol: &PiecewiseSolution,
    cfg: &QuadratureConfig,
) -> Result<LaplaceCheck> {
    if !(s.re > 0.0) {
        return Err(Error::validation(format!("Laplace check needs Re(s) > 0, got s = {s}")));
    }
    if sol.params() != params {
        return Err(Error::validation("solution was computed for different parameters"));
    }
    let a = params.a();
    if !(a.re < 1.0) {
        return Err(Error::domain("Laplace identity is stated for Re(a) < 1"));
    }
    let horizon = sol.horizon();
    let v1 = params.v1();
    let bps = sol.breakpoints();
    let n_seg = bps.len().max(1) as f64;
    let tol = cfg.abs_tol / n_seg;

    // (0, v_1]: closed form, with u = v_1 τ^k removing u^{−a}.
    let k = if a.re > 0.0 { 1.0 / (1.0 - a.re) } else { 1.0 };
    let first_end = v1.min(horizon);
    let mut lhs = integrate(
        |tau: f64| {
            if tau == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let u = first_end * tau.powf(k);
            let jac = first_end * k * tau.powf(k - 1.0);
            (-s * u).exp() * sol.eval(u) * jac
        },
        0.0,
        1.0,
        tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?
    .value;
    for w in bps.windows(2).filter(|w| w[0] >= v1 * (1.0 - 1e-15)) {
        lhs += integrate(
            |u: f64| (-s * u).exp() * sol.eval(u),
            w[0],
            w[1],
            tol,
            cfg.rel_tol,
            cfg.max_subdivisions,
        )?
        .value;
    }

    let (tail, tail_error) = tail_estimate(params, s, sol, cfg)?;
    let target = (1e3 * cfg.abs_tol).max(1e-12);
    if tail_error > target {
        let required = horizon + (tail_error / target).ln() / s.re;
        return Err(Error::Horizon {
            msg: format!(
                "horizon U = {horizon} leaves a tail uncertainty {tail_error:.3e} > {target:.1e}"
            ),
            required,
        });
    }
    let lhs = lhs + tail;
    let rhs = p_laplace_transform(params, s)?;
    Ok(LaplaceCheck { s, lhs, rhs, dev: (lhs - rhs).norm(), tail, tail_error })
}

/// `∫_U^∞ e^{−su} p(u) du` with `p` replaced by its large-`u` form, and an
/// error estimate from the mismatch of that form at `U`.
fn tail_estimate(
    params: &DdeParams,
    s: C64,
    sol: &PiecewiseSolution,
    cfg: &QuadratureConfig,
) -> Result<(C64, f64)> {
    let horizon = sol.horizon();
    let p_end = sol.eval(horizon);
    let decay = (-s.re * horizon).exp() / s.re;
    if params.beta_nonneg_integer(INTEGER_TOL).is_some() {
        return Ok((C64::new(0.0, 0.0), p_end.norm() * decay));
    }
    let (form, truncation): (Box<dyn Fn(f64) -> C64>, f64) =
        if params.beta_neg_integer(INTEGER_TOL).is_some() {
            let r = r_beta_poly(params)?;
            (Box::new(move |u| poly_eval(&r, u)), 0.0)
        } else {
            let series = p_series(params, 4)?;
            let last = series.term(3, horizon).norm();
            (Box::new(move |u| series.partial_sum(u, 3)), last)
        };
    let mismatch = (p_end - form(horizon)).norm() + truncation;
    let span = (60.0 + params.beta().re.abs() * horizon.ln().max(1.0)) / s.re;
    let mut points = vec![horizon];
    let mut step = 1.0 / s.re;
    while *points.last().unwrap() < horizon + span {
        points.push(points.last().unwrap() + step);
        step *= 1.5;
    }
    let mut f = |u: f64| (-s * u).exp() * form(u);
    let tail = crate::quad::integrate_breaks(
        &mut f,
        &points,
        0.1 * cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    Ok((tail.value, mismatch * decay + tail.error))
}
