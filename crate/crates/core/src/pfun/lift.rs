use super::{closed_form, closed_form_at_zero, solve_p, PiecewiseSolution, Side};
use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::quad::QuadratureConfig;
use crate::special::rgamma_c;
use crate::C64;

/// `p(u, a, b)` for any `a`: a base solution with `a − n` (`Re(a − n) < 1`)
/// lifted `n` times through
/// `p(u, a+1, b) = −(a/u) p(u, a, b) − (1/u) Σ_{j≥1} α_j p(u − v_j, a, b)`.
#[derive(Debug, Clone)]
pub struct PFunction {
    params: DdeParams,
    base: PiecewiseSolution,
    n_lift: usize,
}

impl PFunction {
    pub fn new(params: &DdeParams, base: PiecewiseSolution, n_lift: usize) -> Result<Self> {
        let expected = params.alpha0() - n_lift as f64;
        let got = base.params().alpha0();
        if (expected - got).norm() > 1e-12 * (1.0 + expected.norm())
            || base.params().b() != params.b()
            || base.params().shifts() != params.shifts()
        {
            return Err(Error::validation(format!(
                "base solution has alpha_0 = {got}, expected alpha_0 - n_lift = {expected} with the same b and shifts"
            )));
        }
        Ok(PFunction { params: params.clone(), base, n_lift })
    }

    pub fn params(&self) -> &DdeParams {
        &self.params
    }

    pub fn base(&self) -> &PiecewiseSolution {
        &self.base
    }

    pub fn n_lift(&self) -> usize {
        self.n_lift
    }

    pub fn horizon(&self) -> f64 {
        self.base.horizon()
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.base.breakpoints()
    }

    /// Left-continuous value; NaN where it cannot be evaluated.
    pub fn eval(&self, u: f64) -> C64 {
        self.try_eval(u, Side::Left).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    pub fn try_eval(&self, u: f64, side: Side) -> Result<C64> {
        self.level(self.n_lift, u, side)
    }

    fn level(&self, k: usize, u: f64, side: Side) -> Result<C64> {
        let a_k = self.base.params().a() + k as f64;
        let initial = self.params.c0() * rgamma_c(1.0 - a_k);
        if u < 0.0 || (u == 0.0 && side == Side::Left) {
            return Ok(C64::new(0.0, 0.0));
        }
        if u == 0.0 {
            return Ok(closed_form_at_zero(initial, a_k));
        }
        let v1 = self.params.v1();
        if u < v1 || (u == v1 && side == Side::Left) {
            return Ok(closed_form(initial, a_k, u));
        }
        if k == 0 {
            return self.base.try_eval(u, side);
        }
        let a_prev = a_k - 1.0;
        let mut acc = -a_prev * self.level(k - 1, u, side)?;
        for (alpha, v) in self.params.shifted_terms() {
            acc -= alpha * self.level(k - 1, u - v, side)?;
        }
        Ok(acc / u)
    }

    /// `|p(u+) − p(u−)|`.
    pub fn jump(&self, u: f64) -> Result<f64> {
        Ok((self.try_eval(u, Side::Right)? - self.try_eval(u, Side::Left)?).norm())
    }
}

/// Number of lifts needed: the smallest `n ≥ 0` with `Re a − n < 1`.
pub fn lift_count(params: &DdeParams) -> usize {
    let re = params.a().re;
    if re < 1.0 {
        0
    } else {
        re.floor() as usize
    }
}

/// Solves the base problem with `α_0 − n` and wraps it for lifting.
pub fn solve_p_any(params: &DdeParams, horizon: f64, cfg: &QuadratureConfig) -> Result<PFunction> {
    let n = lift_count(params);
    let base_params = params.with_alpha0_shift(-(n as f64));
    let base = solve_p(&base_params, horizon, cfg)?;
    PFunction::new(params, base, n)
}

/// `p(u, a, b)` from a base solution for `a − n_lift`, left limit at
/// breakpoints.
pub fn lift_a(params: &DdeParams, u: f64, n_lift: usize, base: &PiecewiseSolution) -> Result<C64> {
    if u <= 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let f = PFunction::new(params, base.clone(), n_lift)?;
    f.try_eval(u, Side::Left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_real_params, preset, Preset};
    use crate::special::EULER_GAMMA;

    #[test]
    fn buchstab_lift() {
        let p = preset(Preset::Buchstab).unwrap();
        let f = solve_p_any(&p, 4.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(f.n_lift(), 1);
        let eg = EULER_GAMMA.exp();
        assert!((f.eval(1.5).re - eg / 1.5).abs() < 1e-13);
        assert!((f.eval(1.5).re - 1.187_381_6).abs() < 1e-7);
        assert_eq!(f.eval(0.5), C64::new(0.0, 0.0));
        let base = f.base().clone();
        assert_eq!(lift_a(&p, -1.0, 1, &base).unwrap(), C64::new(0.0, 0.0));
        assert!((lift_a(&p, 1.5, 1, &base).unwrap().re - eg / 1.5).abs() < 1e-13);
        assert!(lift_a(&p, 1.5, 2, &base).is_err());
    }

    #[test]
    fn wheeler_cancellation() {
        let p = make_real_params(&[1.0, 1.0, -2.0], &[0.0, 1.0, 2.0]).unwrap();
        let f = solve_p_any(&p, 3.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(f.n_lift(), 2);
        let eg = EULER_GAMMA.exp();
        let l = f.try_eval(2.0, Side::Left).unwrap();
        let r = f.try_eval(2.0, Side::Right).unwrap();
        assert!((l.re - eg).abs() < 1e-10, "{l}");
        assert!((r.re - eg).abs() < 1e-10, "{r}");
        assert!(f.jump(1.0).unwrap() > 0.1);
    }

    #[test]
    fn horizon_error_propagates() {
        let p = preset(Preset::Buchstab).unwrap();
        let f = solve_p_any(&p, 3.0, &QuadratureConfig::default()).unwrap();
        assert!(matches!(f.try_eval(3.5, Side::Left), Err(Error::Horizon { .. })));
    }
}
