//! Scalar special functions and power-series helpers.
//!
//! | Function | Description |
//! |----------|-------------|
//! | [`ein`] | entire exponential integral `Ein(z) = ∫₀^z (1 − e^{−t})/t dt` |
//! | [`gamma_c`] | complex Gamma function |
//! | [`rgamma_c`] | reciprocal Gamma, zero at the poles |
//! | [`lgamma_c`] | a logarithm of Gamma (branch unspecified, for ratios) |
//! | [`binomial_c`] | generalized binomial coefficient `C(β, n)` |
//! | [`qn_coeffs`] | Taylor coefficients of the `Q_n` generating function |

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::DdeParams;
use crate::C64;

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

const SQRT_2PI: f64 = 2.506_628_274_631_000_502_415_765_284_811;

// ---------------------------------------------------------------------------
// Ein and E1
// ---------------------------------------------------------------------------

/// `Ein(z) = Σ_{k≥1} (−1)^{k+1} z^k / (k·k!)`, an entire function.
///
/// Three evaluation routes are used, chosen to keep cancellation bounded:
/// the Taylor series (small `|z|`, or left half-plane near the real axis),
/// the harmonic-number series `e^{−z} Σ H_n z^n/n!` (right half-plane near
/// the real axis) and `γ + log z + E1(z)` with a continued fraction for E1
/// (large real part, or far from the real axis).
///
/// Returns [`Error::Overflow`] when the result is not representable.
pub fn ein(z: C64) -> Result<C64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::validation(format!("Ein argument not finite: {z}")));
    }
    let r = z.norm();
    if r == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    // |Ein(z)| ~ e^{-Re z}/|z| in the left half-plane.
    if -z.re - r.ln() > 700.0 {
        return Err(Error::Overflow(format!("Ein({z}) exceeds the f64 range")));
    }
    if r <= 4.0 {
        return Ok(ein_taylor(z));
    }
    if z.re >= 30.0 || r - z.re.abs() > 6.0 {
        return Ok(ein_via_e1(z));
    }
    if z.re >= 0.0 {
        Ok(ein_harmonic(z))
    } else {
        Ok(ein_taylor(z))
    }
}

/// Real convenience wrapper; `Ein` is real on the real axis.
pub fn ein_real(x: f64) -> Result<f64> {
    ein(C64::new(x, 0.0)).map(|v| v.re)
}

pub(crate) fn ein_taylor(z: C64) -> C64 {
    // term_k = (−1)^{k+1} z^k / k!
    let mut term = z;
    let mut sum = z;
    let mut k = 1.0_f64;
    loop {
        let next = -term * z / (k + 1.0);
        let contrib = next / (k + 1.0);
        sum += contrib;
        term = next;
        k += 1.0;
        if k > z.norm() + 2.0 && contrib.norm() <= 1e-17 * sum.norm() {
            break;
        }
        if k > 5000.0 {
            break;
        }
    }
    sum
}

pub(crate) fn ein_harmonic(z: C64) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    let mut harmonic = 0.0_f64;
    let mut sum = C64::new(0.0, 0.0);
    let mut n = 0.0_f64;
    loop {
        n += 1.0;
        term = term * z / n;
        harmonic += 1.0 / n;
        let contrib = term * harmonic;
        sum += contrib;
        if n > z.norm() + 2.0 && contrib.norm() <= 1e-17 * sum.norm() {
            break;
        }
        if n > 5000.0 {
            break;
        }
    }
    (-z).exp() * sum
}

pub(crate) fn ein_via_e1(z: C64) -> C64 {
    C64::new(EULER_GAMMA, 0.0) + z.ln() + e1_cf(z)
}

/// E1(z) by the modified Lentz evaluation of
/// `e^{−z} / (z + 1 − 1²/(z + 3 − 2²/(z + 5 − …)))`.
pub(crate) fn e1_cf(z: C64) -> C64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = C64::new(1.0 / TINY, 0.0);
    let mut d = C64::new(1.0, 0.0) / b;
    let mut h = d;
    for k in 1..20_000 {
        let kf = k as f64;
        let a = -kf * kf;
        b += 2.0;
        d = C64::new(1.0, 0.0) / (d * a + b);
        c = b + C64::new(a, 0.0) / c;
        if c.norm() < TINY {
            c = C64::new(TINY, 0.0);
        }
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

// ---------------------------------------------------------------------------
// Gamma
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_C: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_923_517,
    -59.597_960_355_475_491_248,
    14.136_097_974_741_747_174,
    -0.491_913_816_097_620_199_78,
    0.339_946_499_848_118_886_99e-4,
    0.465_236_289_270_485_756_65e-4,
    -0.983_744_753_048_795_646_77e-4,
    0.158_088_703_224_912_488_84e-3,
    -0.210_264_441_724_104_883_19e-3,
    0.217_439_618_115_212_643_20e-3,
    -0.164_318_106_536_763_890_22e-3,
    0.844_182_239_838_527_432_93e-4,
    -0.261_908_384_015_814_086_70e-4,
    0.368_991_826_595_316_227_04e-5,
];

/// `sin(πz)` with the real part reduced exactly before scaling by π.
fn sin_pi(z: C64) -> C64 {
    let x = z.re % 2.0;
    let (s, c) = (PI * x).sin_cos();
    let y = PI * z.im;
    C64::new(s * y.cosh(), c * y.sinh())
}

fn pole_index(z: C64) -> Option<i64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        Some(z.re as i64)
    } else {
        None
    }
}

/// `ln Γ(z)` for `Re z ≥ 1/2` by the Lanczos approximation.
fn lgamma_right(z: C64) -> C64 {
    let zm = z - 1.0;
    let mut series = C64::new(LANCZOS_C[0], 0.0);
    for (k, &c) in LANCZOS_C.iter().enumerate().skip(1) {
        series += c / (zm + k as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    C64::new(SQRT_2PI.ln(), 0.0) + (zm + 0.5) * t.ln() - t + series.ln()
}

/// Complex Gamma function.
///
/// Lanczos approximation on `Re z ≥ 1/2`, reflection elsewhere. Returns
/// [`Error::Pole`] at the non-positive integers.
pub fn gamma_c(z: C64) -> Result<C64> {
    if let Some(k) = pole_index(z) {
        return Err(Error::Pole(k));
    }
    if let Some(n) = small_positive_integer(z) {
        return Ok(C64::new(factorial(n - 1), 0.0));
    }
    if z.re >= 0.5 {
        Ok(lgamma_right(z).exp())
    } else {
        let s = sin_pi(z);
        Ok(C64::new(PI, 0.0) / (s * lgamma_right(1.0 - z).exp()))
    }
}

/// `n` when `z = n` exactly with `1 ≤ n ≤ 23`, where `(n − 1)!` is exact.
fn small_positive_integer(z: C64) -> Option<usize> {
    (z.im == 0.0 && z.re >= 1.0 && z.re <= 23.0 && z.re.fract() == 0.0).then_some(z.re as usize)
}

/// Real Gamma for convenience.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma_c(C64::new(x, 0.0)).map(|g| g.re)
}

/// `1/Γ(z)`, entire; exactly zero at the poles of Γ.
pub fn rgamma_c(z: C64) -> C64 {
    if pole_index(z).is_some() {
        return C64::new(0.0, 0.0);
    }
    if let Some(n) = small_positive_integer(z) {
        return C64::new(1.0 / factorial(n - 1), 0.0);
    }
    if z.re >= 0.5 {
        (-lgamma_right(z)).exp()
    } else {
        sin_pi(z) * lgamma_right(1.0 - z).exp() / PI
    }
}

/// A logarithm of `Γ(z)`. The imaginary part is only defined modulo 2π,
/// which is enough for forming ratios by exponentiation.
pub fn lgamma_c(z: C64) -> Result<C64> {
    if let Some(k) = pole_index(z) {
        return Err(Error::Pole(k));
    }
    if z.re >= 0.5 {
        Ok(lgamma_right(z))
    } else {
        Ok(C64::new(PI.ln(), 0.0) - sin_pi(z).ln() - lgamma_right(1.0 - z))
    }
}

/// Generalized binomial coefficient `C(β, n) = β(β−1)…(β−n+1)/n!`.
///
/// Exactly zero when `β` is a non-negative integer smaller than `n`.
pub fn binomial_c(beta: C64, n: usize) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for k in 0..n {
        let f = beta - k as f64;
        if f.re == 0.0 && f.im == 0.0 {
            return C64::new(0.0, 0.0);
        }
        acc = acc * f / (k + 1) as f64;
    }
    acc
}

/// `n!` as a float (exact through 22!).
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

// ---------------------------------------------------------------------------
// Q_n generating function
// ---------------------------------------------------------------------------

/// Sign applied to `b = (α_1, …, α_m)` in the `Q_n` generating function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffSign {
    /// `Q_n(u, b)`.
    Plus,
    /// `Q_n(u, −b)`: every `α_j` (j ≥ 1) negated.
    Minus,
}

impl CoeffSign {
    fn factor(self) -> f64 {
        match self {
            CoeffSign::Plus => 1.0,
            CoeffSign::Minus => -1.0,
        }
    }
}

/// Taylor coefficients `c_0..c_N` about `z = 0`; `c_k = f^{(k)}(0)/k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeriesCoeffs {
    pub coeffs: Vec<C64>,
}

impl PowerSeriesCoeffs {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The derivative value `f^{(n)}(0) = n!·c_n`, i.e. `Q_n`.
    pub fn derivative(&self, n: usize) -> C64 {
        self.coeffs[n] * factorial(n)
    }
}

/// Coefficients of `exp{g(z)}` with
/// `g(z) = u z − s Σ_{j≥1} α_j Σ_{k≥1} v_j^k z^k/(k·k!)`, s = ±1.
///
/// `n!` times coefficient `n` is `Q_n(u, ±b)`. Uses the exponential
/// recurrence `n·b_n = Σ_{k=1}^n k·a_k·b_{n−k}`, `b_0 = 1`.
pub fn qn_coeffs(params: &DdeParams, u: f64, order: usize, sign: CoeffSign) -> PowerSeriesCoeffs {
    if order > 60 {
        log::warn!("Q_n requested to order {order}: factorial coefficient growth limits f64 accuracy");
    }
    let s = sign.factor();
    // Exponent coefficients a_1..a_N.
    let mut a = vec![C64::new(0.0, 0.0); order + 2];
    for k in 1..=order {
        let kf = k as f64;
        let denom = kf * factorial(k);
        let mut acc = C64::new(0.0, 0.0);
        for (alpha, v) in params.b().iter().zip(&params.shifts()[1..]) {
            acc += alpha * v.powi(k as i32);
        }
        a[k] = -s * acc / denom;
    }
    a[1] += u;
    let mut b = vec![C64::new(0.0, 0.0); order + 1];
    b[0] = C64::new(1.0, 0.0);
    for n in 1..=order {
        let mut acc = C64::new(0.0, 0.0);
        for k in 1..=n {
            acc += a[k] * b[n - k] * k as f64;
        }
        b[n] = acc / n as f64;
    }
    PowerSeriesCoeffs { coeffs: b }
}

/// `Q_n(u, ±b)` for a single `n`.
pub fn qn_value(params: &DdeParams, u: f64, n: usize, sign: CoeffSign) -> C64 {
    qn_coeffs(params, u, n, sign).derivative(n)
}

/// Both sides of `∫_1^u e^{λt} t^{−r} dt ≤ e^{λu} u^{−r}/(λ − r⁺)`,
/// valid for `λ > max(r, 0)` and `u > 1`. The left side by quadrature.
pub fn exp_power_integral_bound(u: f64, r: f64, lambda: f64) -> Result<(f64, f64)> {
    let r_plus = r.max(0.0);
    if !(u > 1.0 && lambda > r_plus) {
        return Err(Error::validation(format!(
            "need u > 1 and lambda > max(r, 0), got u = {u}, r = {r}, lambda = {lambda}"
        )));
    }
    // Scale by e^{−λu} so both sides stay O(1).
    let (lhs, _) = crate::quad::integrate_real(
        |t| (lambda * (t - u)).exp() * t.powf(-r),
        1.0,
        u,
        0.0,
        1e-13,
        2000,
    )?;
    Ok((lhs, u.powf(-r) / (lambda - r_plus)))
}
