//! The canonical solution `q*` of the advanced equation
//! `u q'(u) = Σ_j α_j q(u + v_j)`.
//!
//! Three representations are used:
//!
//! * `β` a non-negative integer `n`: `q* = Q_n(u, b)`, a polynomial;
//! * `Re β < 0`: the Laplace-type integral
//!   `q*(u) = Γ(−β)^{−1} ∫₀^∞ x^{−β−1} exp{−ux + Σ_{j≥1} α_j Ein(v_j x)} dx`;
//! * otherwise the Hankel contour integral
//!   `q*(u) = Γ(β+1)/(2πi) ∫_H z^{−β−1} exp{uz + Σ_{j≥1} α_j Ein(−v_j z)} dz`
//!   over a circle of radius `ρ` around the origin plus the two banks of
//!   the negative real axis out to `−L`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::quad::{integrate, integrate_breaks, QuadResult, QuadratureConfig};
use crate::special::{self, ein, gamma_c, rgamma_c, CoeffSign, EULER_GAMMA};
use crate::C64;

/// Tolerance for treating `β` as an integer.
pub const INTEGER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Polynomial,
    Laplace,
    Hankel,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Representation::Polynomial => "polynomial",
            Representation::Laplace => "laplace",
            Representation::Hankel => "hankel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QstarValue {
    pub value: C64,
    pub representation: Representation,
    pub est_error: f64,
}

/// `Σ_{j≥1} α_j Ein(v_j w)`.
fn shifted_ein_sum(params: &DdeParams, w: C64) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for (alpha, v) in params.shifted_terms() {
        acc += alpha * ein(w * v)?;
    }
    Ok(acc)
}

/// `ln` of the large-`x` envelope constant `Π (v_j e^γ)^{Re α_j}`.
fn log_envelope(params: &DdeParams) -> f64 {
    params.shifted_terms().map(|(a, v)| a.re * (v.ln() + EULER_GAMMA)).sum()
}

fn laplace_cutoff(params: &DdeParams, u: f64, target: f64) -> f64 {
    // |integrand| ≲ x^{−Re α_0 − 1} e^{−ux} Π (v_j e^γ)^{Re α_j} for large x.
    let power = -params.alpha0().re - 1.0;
    let log_k = log_envelope(params);
    let mut x = (2.0 / u).max(2.0 * params.v_max()).max(1.0);
    for _ in 0..200 {
        let decay = u - (power / x).max(0.0);
        if decay > 0.0 {
            let log_tail = log_k + power * x.ln() - u * x - decay.ln();
            if log_tail < target.ln() {
                return x;
            }
        }
        x *= 1.25;
    }
    x
}

/// Laplace-type representation; requires `Re β < 0`.
pub fn qstar_laplace(params: &DdeParams, u: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let beta = params.beta();
    if !(beta.re < 0.0) {
        return Err(Error::domain(format!(
            "Laplace representation needs Re(beta) < 0, got beta = {beta}"
        )));
    }
    check_u(u)?;
    let inv_gamma = rgamma_c(-beta);
    let scale = inv_gamma.norm().max(1e-300);
    let target = 0.1 * cfg.abs_tol / scale;
    let cutoff = cfg.laplace_cutoff.unwrap_or_else(|| laplace_cutoff(params, u, target));
    let first = (1.0 / u).min(1.0).min(cutoff);

    let mut failure = None;
    let mut log_integrand = |ln_x: f64, x: f64| -> C64 {
        match shifted_ein_sum(params, C64::new(x, 0.0)) {
            Ok(s) => (-beta - 1.0) * ln_x - u * x + s,
            Err(e) => {
                failure.get_or_insert(e);
                C64::new(f64::NAN, 0.0)
            }
        }
    };

    // Near x = 0 the factor x^{−β−1} is singular when Re β > −1; the
    // substitution x = first·t^k with k = 1/(−Re β) removes it.
    let abs_tol = cfg.abs_tol / scale;
    let head = if beta.re > -1.0 {
        let k = 1.0 / (-beta.re);
        let ln_first = first.ln();
        let ln_jac = (first * k).ln();
        integrate(
            |t: f64| {
                let ln_t = t.ln();
                let ln_x = ln_first + k * ln_t;
                let x = ln_x.exp();
                (log_integrand(ln_x, x) + ln_jac + (k - 1.0) * ln_t).exp()
            },
            0.0,
            1.0,
            abs_tol * 0.25,
            cfg.rel_tol,
            cfg.max_subdivisions,
        )
    } else {
        integrate(
            |x: f64| (log_integrand(x.ln(), x)).exp(),
            0.0,
            first,
            abs_tol * 0.25,
            cfg.rel_tol,
            cfg.max_subdivisions,
        )
    };
    let head = head.map_err(|e| scale_accuracy(e, inv_gamma))?;

    let mut points = vec![first];
    while *points.last().unwrap() < cutoff {
        let next = (points.last().unwrap() * 2.0).min(cutoff);
        points.push(next);
    }
    let body = integrate_breaks(
        &mut |x: f64| (log_integrand(x.ln(), x)).exp(),
        &points,
        abs_tol * 0.5,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )
    .map_err(|e| scale_accuracy(e, inv_gamma))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadResult {
        value: (head.value + body.value) * inv_gamma,
        error: (head.error + body.error) * scale + 0.1 * cfg.abs_tol,
    })
}

fn scale_accuracy(err: Error, factor: C64) -> Error {
    match err {
        Error::Accuracy { msg, best_re, best_im, est_error } => {
            let best = C64::new(best_re, best_im) * factor;
            Error::Accuracy {
                msg,
                best_re: best.re,
                best_im: best.im,
                est_error: est_error * factor.norm(),
            }
        }
        other => other,
    }
}

fn check_u(u: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::validation(format!("u must be positive and finite, got {u}")));
    }
    Ok(())
}

/// Ray length `L` with
/// `e^{−uL} L^{|Re β|+1+Σ|Re α_j|} e^{γΣ|Re α_j|} Π v_j^{|Re α_j|} ≤ target`.
fn hankel_ray_length(params: &DdeParams, u: f64, radius: f64, target: f64) -> f64 {
    let sum_abs: f64 = params.b().iter().map(|a| a.re.abs()).sum();
    let power = params.beta().re.abs() + 1.0 + sum_abs;
    let log_k = EULER_GAMMA * sum_abs
        + params.shifted_terms().map(|(a, v)| a.re.abs() * v.ln()).sum::<f64>();
    let mut l = (2.0 * radius).max(1.0 / u);
    for _ in 0..400 {
        if log_k + power * l.ln() - u * l < target.ln() && u * l > power {
            return l;
        }
        l *= 1.2;
    }
    l
}

/// Hankel contour representation; requires `β` not a non-negative integer
/// and `β + 1` not a non-positive integer.
pub fn qstar_hankel(params: &DdeParams, u: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    let beta = params.beta();
    if let Some(n) = params.beta_nonneg_integer(INTEGER_TOL) {
        return Err(Error::domain(format!(
            "beta = {n} is a non-negative integer: q* is the polynomial Q_{n}, use the polynomial path"
        )));
    }
    check_u(u)?;
    let gamma = gamma_c(beta + 1.0).map_err(|_| {
        Error::domain(format!(
            "Gamma(beta + 1) has a pole at beta = {beta}; use the Laplace representation"
        ))
    })?;
    let near = (beta.re - beta.re.round()).abs() < 1e-6 && beta.im.abs() < 1e-6;
    if near {
        log::warn!("beta = {beta} is within 1e-6 of an integer; the Hankel evaluation is ill-conditioned");
    }
    let prefactor = gamma / C64::new(0.0, 2.0 * PI);
    let scale = prefactor.norm().max(1e-300);
    let radius = cfg.hankel_radius.unwrap_or_else(|| (1.0 / u).min(1.0));
    let target = 0.05 * cfg.abs_tol / scale;
    let length = cfg
        .hankel_ray_length
        .unwrap_or_else(|| hankel_ray_length(params, u, radius, target));
    if !(length > radius) {
        return Err(Error::validation("Hankel ray length must exceed the radius"));
    }
    let expo = -beta - 1.0;
    let mut failure = None;

    // Both banks of the negative axis: z = x e^{∓iπ}, traversed inward on
    // the lower bank and outward on the upper one.
    let ray_integral = {
        let mut points = vec![radius];
        while *points.last().unwrap() < length {
            let next = (points.last().unwrap() * 2.0).min(length);
            points.push(next);
        }
        integrate_breaks(
            &mut |x: f64| match shifted_ein_sum(params, C64::new(x, 0.0)) {
                Ok(s) => (expo * x.ln() - u * x + s).exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    C64::new(f64::NAN, 0.0)
                }
            },
            &points,
            0.5 * cfg.abs_tol / scale,
            cfg.rel_tol,
            cfg.max_subdivisions,
        )
    }
    .map_err(|e| scale_accuracy(e, prefactor))?;
    let lower = (expo * C64::new(0.0, -PI)).exp();
    let upper = (expo * C64::new(0.0, PI)).exp();
    let rays = ray_integral.value * (lower - upper);

    let ln_r = radius.ln();
    let circle = integrate(
        |theta: f64| {
            let z = C64::from_polar(radius, theta);
            match shifted_ein_sum(params, -z) {
                // dz = i z dθ
                Ok(s) => (expo * C64::new(ln_r, theta) + u * z + s).exp() * C64::new(0.0, 1.0) * z,
                Err(e) => {
                    failure.get_or_insert(e);
                    C64::new(f64::NAN, 0.0)
                }
            }
        },
        -PI,
        PI,
        0.25 * cfg.abs_tol / scale,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )
    .map_err(|e| scale_accuracy(e, prefactor))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let value = prefactor * (rays + circle.value);
    let error = scale * (2.0 * ray_integral.error + circle.error) + 0.05 * cfg.abs_tol;
    Ok(QuadResult { value, error })
}

/// Dispatching evaluation of `q*(u)`.
pub fn qstar(params: &DdeParams, u: f64, cfg: &QuadratureConfig) -> Result<QstarValue> {
    check_u(u)?;
    if let Some(n) = params.beta_nonneg_integer(INTEGER_TOL) {
        let value = special::qn_value(params, u, n, CoeffSign::Plus);
        return Ok(QstarValue { value, representation: Representation::Polynomial, est_error: 0.0 });
    }
    let (r, representation) = if params.beta().re < 0.0 {
        (qstar_laplace(params, u, cfg)?, Representation::Laplace)
    } else {
        (qstar_hankel(params, u, cfg)?, Representation::Hankel)
    };
    Ok(QstarValue { value: r.value, representation, est_error: r.error })
}

/// Shorthand for the value alone.
pub fn qstar_value(params: &DdeParams, u: f64, cfg: &QuadratureConfig) -> Result<C64> {
    qstar(params, u, cfg).map(|v| v.value)
}

/// `|u q'(u) − Σ_j α_j q*(u + v_j)|` with a five-point central difference
/// of step `h` for `q'`.
pub fn dde_residual(params: &DdeParams, u: f64, h: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(h > 0.0 && u > 2.0 * h) {
        return Err(Error::validation(format!("need u > 2h > 0, got u = {u}, h = {h}")));
    }
    let q = |x: f64| qstar_value(params, x, cfg);
    let derivative = (q(u - 2.0 * h)? - q(u - h)? * 8.0 + q(u + h)? * 8.0 - q(u + 2.0 * h)?) / (12.0 * h);
    let mut rhs = C64::new(0.0, 0.0);
    for (alpha, v) in params.alphas().iter().zip(params.shifts()) {
        rhs += alpha * q(u + v)?;
    }
    Ok((derivative * u - rhs).norm())
}

/// Result of checking `u q(u) − Σ_j c_j ∫_{v_{j−1}}^{v_j} q(u + t) dt`
/// for constancy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralForm {
    pub u: Vec<f64>,
    pub a_values: Vec<C64>,
    pub a_mean: C64,
    pub max_dev: f64,
    /// The integrated form is an identity only when `β = −1`.
    pub applies: bool,
}

/// Evaluates `A(u) = u q*(u) − Σ_j c_j ∫_{v_{j−1}}^{v_j} q*(u + t) dt`
/// with `c_j = Σ_{i≥j} α_i` on a grid.
pub fn integral_form_constant(
    params: &DdeParams,
    grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralForm> {
    if grid.len() < 2 {
        return Err(Error::validation("grid needs at least two points"));
    }
    let m = params.m();
    let alphas = params.alphas();
    let shifts = params.shifts();
    let tails: Vec<C64> = (1..=m).map(|j| alphas[j..].iter().sum()).collect();
    let inner_tol = (cfg.abs_tol * 10.0).max(1e-12);
    let mut a_values = Vec::with_capacity(grid.len());
    for &u in grid {
        check_u(u)?;
        let mut acc = qstar_value(params, u, cfg)? * u;
        for j in 1..=m {
            let mut failure = None;
            let integral = integrate(
                |t| match qstar_value(params, u + t, cfg) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        C64::new(f64::NAN, 0.0)
                    }
                },
                shifts[j - 1],
                shifts[j],
                inner_tol,
                1e-11,
                200,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            acc -= tails[j - 1] * integral?.value;
        }
        a_values.push(acc);
    }
    let a_mean = a_values.iter().sum::<C64>() / a_values.len() as f64;
    let max_dev = a_values.iter().map(|a| (a - a_mean).norm()).fold(0.0, f64::max);
    let beta = params.beta();
    let applies = (beta.re + 1.0).abs() < INTEGER_TOL && beta.im.abs() < INTEGER_TOL;
    Ok(IntegralForm { u: grid.to_vec(), a_values, a_mean, max_dev, applies })
}
