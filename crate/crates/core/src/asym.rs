//! Asymptotic expansions of `p(u)` and `q*(u)` as `u → ∞`, the polynomial
//! `r_β` for negative integer `β`, and the `u → 0+` law for `q*`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::qstar::INTEGER_TOL;
use crate::special::{binomial_c, factorial, gamma_c, qn_coeffs, rgamma_c, CoeffSign, EULER_GAMMA};
use crate::C64;

/// Which function the series describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesSide {
    /// `p(u) ~ Σ c_n u^{−β−1−n}`.
    P,
    /// `q*(u) ~ Σ c_n u^{β−n}`.
    Q,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticSeries {
    pub side: SeriesSide,
    pub beta: C64,
    pub coeffs: Vec<C64>,
    /// `v_m`, for the superexponential error exponent.
    pub v_max: f64,
    /// `β` is an integer (within tolerance): the `p` expansion terminates
    /// and the remainder is `O(exp(−φ(u)))`.
    pub integer_beta: bool,
}

impl AsymptoticSeries {
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn exponent(&self, n: usize) -> C64 {
        match self.side {
            SeriesSide::P => -self.beta - 1.0 - n as f64,
            SeriesSide::Q => self.beta - n as f64,
        }
    }

    /// `c_n u^{exponent(n)}`; zero beyond the stored coefficients.
    pub fn term(&self, n: usize, u: f64) -> C64 {
        match self.coeffs.get(n) {
            Some(c) if *c != C64::new(0.0, 0.0) => c * (self.exponent(n) * u.ln()).exp(),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// `Σ_{n<N} term(n)`.
    pub fn partial_sum(&self, u: f64, n_terms: usize) -> C64 {
        (0..n_terms.min(self.coeffs.len())).map(|n| self.term(n, u)).sum()
    }

    pub fn sum(&self, u: f64) -> C64 {
        self.partial_sum(u, self.coeffs.len())
    }

    /// Leading part `(u log u)/v_m` of the decay exponent φ(u) of the
    /// remainder, meaningful for integer `β`.
    pub fn phi(&self, u: f64) -> Option<f64> {
        self.integer_beta.then(|| u * u.ln() / self.v_max)
    }

    /// Index `n < truncation` with the smallest `|term(n, u)|`, ignoring
    /// identically vanishing coefficients.
    pub fn optimal_truncation(&self, u: f64) -> usize {
        let mut best = (0, f64::INFINITY);
        for n in 0..self.coeffs.len() {
            if self.coeffs[n] == C64::new(0.0, 0.0) {
                continue;
            }
            let t = self.term(n, u).norm();
            if t < best.1 {
                best = (n, t);
            }
        }
        best.0
    }
}

fn snapped_beta(params: &DdeParams) -> (C64, bool) {
    let b = params.beta();
    let r = b.re.round();
    if b.im.abs() <= INTEGER_TOL && (b.re - r).abs() <= INTEGER_TOL {
        (C64::new(r, 0.0), true)
    } else {
        (b, false)
    }
}

/// `c_n = (−1)^n Q_n(0,−b) / (n! Γ(−β−n))` for `n < N`.
///
/// For integer `β ≥ −n` the coefficient is exactly zero.
pub fn p_series(params: &DdeParams, n_terms: usize) -> Result<AsymptoticSeries> {
    if n_terms < 1 {
        return Err(Error::validation("series needs at least one term"));
    }
    let (beta, integer_beta) = snapped_beta(params);
    // Q_n(0,−b)/n! is the n-th Taylor coefficient.
    let b = qn_coeffs(params, 0.0, n_terms - 1, CoeffSign::Minus).coeffs;
    let coeffs = (0..n_terms)
        .map(|n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            b[n] * sign * rgamma_c(-beta - n as f64)
        })
        .collect();
    Ok(AsymptoticSeries {
        side: SeriesSide::P,
        beta,
        coeffs,
        v_max: params.v_max(),
        integer_beta,
    })
}

/// Coefficients (ascending powers of `u`) of the polynomial `r_β` of
/// degree `−β−1`, for negative integer `β`.
pub fn r_beta_poly(params: &DdeParams) -> Result<Vec<C64>> {
    let beta = params.beta_neg_integer(INTEGER_TOL).ok_or_else(|| {
        Error::domain(format!("r_beta needs a negative integer beta, got {}", params.beta()))
    })?;
    let degree = (-beta - 1) as usize;
    let b = qn_coeffs(params, 0.0, degree, CoeffSign::Minus).coeffs;
    let mut poly = vec![C64::new(0.0, 0.0); degree + 1];
    for (n, bn) in b.iter().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        poly[degree - n] = bn * sign / factorial(degree - n);
    }
    Ok(poly)
}

/// Evaluates a polynomial with ascending coefficients.
pub fn poly_eval(coeffs: &[C64], u: f64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * u + c)
}

/// The series `q(u) ~ Σ C(β,n) Q_n(0,b) u^{β−n}` with `N` terms.
pub fn q_series(params: &DdeParams, n_terms: usize) -> Result<AsymptoticSeries> {
    if n_terms < 1 {
        return Err(Error::validation("series needs at least one term"));
    }
    let (beta, integer_beta) = snapped_beta(params);
    let b = qn_coeffs(params, 0.0, n_terms - 1, CoeffSign::Plus).coeffs;
    let coeffs = (0..n_terms)
        .map(|n| binomial_c(beta, n) * b[n] * factorial(n))
        .collect();
    Ok(AsymptoticSeries {
        side: SeriesSide::Q,
        beta,
        coeffs,
        v_max: params.v_max(),
        integer_beta,
    })
}

/// Partial sum `Σ_{n<N} C(β,n) Q_n(0,b) u^{β−n}`.
pub fn q_series_inf(params: &DdeParams, u: f64, n_terms: usize) -> Result<C64> {
    if !(u > 0.0) {
        return Err(Error::validation(format!("u must be positive, got {u}")));
    }
    Ok(q_series(params, n_terms)?.sum(u))
}

/// `q*(u) ~ coefficient · u^{α_0}` as `u → 0+`, with
/// coefficient `Γ(−α_0)/Γ(−β) Π (v_j e^γ)^{α_j}`. Requires `Re α_0 < 0`.
pub fn q_zero_asym(params: &DdeParams) -> Result<(C64, C64)> {
    let alpha0 = params.alpha0();
    if !(alpha0.re < 0.0) {
        return Err(Error::domain(format!(
            "the small-u law for q* is only established for Re(alpha_0) < 0, got alpha_0 = {alpha0}"
        )));
    }
    let log_prod: C64 = params
        .shifted_terms()
        .map(|(a, v)| a * (v.ln() + EULER_GAMMA))
        .sum();
    let coeff = gamma_c(-alpha0)? * rgamma_c(-params.beta()) * log_prod.exp();
    Ok((alpha0, coeff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_real_params, preset, Preset};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn leading_coefficient_is_reciprocal_gamma() {
        let p = make_real_params(&[-0.3, -0.45, 0.2], &[0.0, 1.0, 1.7]).unwrap();
        let s = p_series(&p, 3).unwrap();
        assert!(close(s.coeffs[0], rgamma_c(-p.beta()), 1e-15));
        assert!(matches!(p_series(&p, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn buchstab_series_terminates() {
        let p = preset(Preset::Buchstab).unwrap();
        let s = p_series(&p, 6).unwrap();
        assert!(close(s.coeffs[0], C64::new(1.0, 0.0), 1e-15));
        assert!(s.coeffs[1..].iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert_eq!(r_beta_poly(&p).unwrap(), vec![C64::new(1.0, 0.0)]);
    }

    #[test]
    fn beta_minus_two_polynomial() {
        let p = make_real_params(&[-1.0, -1.0], &[0.0, 1.0]).unwrap();
        let r = r_beta_poly(&p).unwrap();
        assert_eq!(r.len(), 2);
        assert!(close(r[0], C64::new(1.0, 0.0), 1e-15));
        assert!(close(r[1], C64::new(1.0, 0.0), 1e-15));
        let s = p_series(&p, 5).unwrap();
        assert!(close(s.sum(3.0), C64::new(4.0, 0.0), 1e-14));
        assert!(close(poly_eval(&r, 3.0), C64::new(4.0, 0.0), 1e-14));
    }

    #[test]
    fn beta_minus_one_with_two_shifts() {
        let p = make_real_params(&[0.5, -0.7, -0.8], &[0.0, 1.0, 2.5]).unwrap();
        assert_eq!(r_beta_poly(&p).unwrap(), vec![C64::new(1.0, 0.0)]);
    }

    #[test]
    fn vanishing_rule_for_integer_beta() {
        for beta in [-1.0, -2.0, -3.0] {
            let p = make_real_params(&[beta + 0.4, -0.4], &[0.0, 1.0]).unwrap();
            let s = p_series(&p, 7).unwrap();
            let k = (-beta) as usize;
            for n in 0..7 {
                if n >= k {
                    assert_eq!(s.coeffs[n], C64::new(0.0, 0.0), "beta {beta} n {n}");
                } else {
                    assert!(s.coeffs[n].norm() > 0.0);
                }
            }
            assert!(s.phi(10.0).is_some());
        }
    }

    #[test]
    fn r_beta_rejects_other_beta() {
        let p = make_real_params(&[-0.2, -0.5], &[0.0, 1.0]).unwrap();
        assert!(matches!(r_beta_poly(&p), Err(Error::Domain(_))));
        let p = preset(Preset::Dickman).unwrap();
        assert!(matches!(r_beta_poly(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn q_series_first_term_is_power() {
        let p = make_real_params(&[-0.2, -0.55], &[0.0, 1.0]).unwrap();
        for u in [0.5, 3.0, 40.0] {
            let v = q_series_inf(&p, u, 1).unwrap();
            assert_eq!(v, (p.beta() * u.ln()).exp());
        }
    }

    #[test]
    fn q_series_polynomial_case() {
        let p = make_real_params(&[1.0, -1.0], &[0.0, 1.0]).unwrap();
        let s = q_series(&p, 5).unwrap();
        assert_eq!(s.coeffs[0], C64::new(1.0, 0.0));
        assert!(s.coeffs[1..].iter().all(|c| *c == C64::new(0.0, 0.0)));
        assert_eq!(q_series_inf(&p, 7.0, 1).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn q_zero_coefficient() {
        let p = preset(Preset::Iwaniec { kappa: 0.5 }).unwrap();
        let (e, c) = q_zero_asym(&p).unwrap();
        assert!(close(e, C64::new(-0.5, 0.0), 1e-15));
        let expected = std::f64::consts::PI.sqrt() * (-EULER_GAMMA / 2.0).exp();
        assert!((c.re - expected).abs() < 1e-12);
        assert!((c.re - 1.328_110_307_490_325).abs() < 1e-12);
        let p = make_real_params(&[0.0, -1.0], &[0.0, 1.0]).unwrap();
        assert!(matches!(q_zero_asym(&p), Err(Error::Domain(_))));
        let p = preset(Preset::Dickman).unwrap();
        assert!(q_zero_asym(&p).is_ok());
    }

    #[test]
    fn optimal_truncation_picks_smallest_term() {
        let p = make_real_params(&[-0.3, -0.45], &[0.0, 1.0]).unwrap();
        let s = p_series(&p, 12).unwrap();
        let n = s.optimal_truncation(3.0);
        let t = s.term(n, 3.0).norm();
        for k in 0..12 {
            if s.coeffs[k] != C64::new(0.0, 0.0) {
                assert!(s.term(k, 3.0).norm() >= t);
            }
        }
    }
}
