//! Chebyshev–Lobatto interpolation on an interval: barycentric evaluation,
//! coefficient transforms, spectral derivative and indefinite integral.

use std::f64::consts::PI;

use crate::C64;

/// The `n + 1` Lobatto points of `[a, b]` in ascending order.
pub fn lobatto_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..=n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n {
                b
            } else {
                mid - half * (PI * k as f64 / n as f64).cos()
            }
        })
        .collect()
}

/// Chebyshev coefficients of the interpolant through values at the
/// ascending Lobatto points.
pub fn coeffs_from_values(values: &[C64]) -> Vec<C64> {
    let n = values.len() - 1;
    let nf = n as f64;
    (0..=n)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                // Ascending node j sits at angle π(n − j)/n.
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += v * (w * (PI * (k * (n - j)) as f64 / nf).cos());
            }
            let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
            acc * scale
        })
        .collect()
}

/// Clenshaw evaluation of `Σ c_k T_k(x)` for `x ∈ [−1, 1]`.
pub fn clenshaw(coeffs: &[C64], x: f64) -> C64 {
    let mut b1 = C64::new(0.0, 0.0);
    let mut b2 = C64::new(0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = c + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + b1 * x - b2
}

/// Coefficients of the derivative series (with respect to `x ∈ [−1, 1]`).
pub fn derivative_coeffs(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return vec![C64::new(0.0, 0.0)];
    }
    let mut d = vec![C64::new(0.0, 0.0); n + 1];
    for k in (1..=n).rev() {
        let next = if k < n { d[k + 1] } else { C64::new(0.0, 0.0) };
        d[k - 1] = next + coeffs[k] * (2.0 * k as f64);
    }
    d[0] *= 0.5;
    d.truncate(n);
    d
}

/// Indefinite integral from the left end, evaluated at every Lobatto node.
/// `values` are samples at the ascending nodes of `[a, b]`.
pub fn cumulative_integral(values: &[C64], a: f64, b: f64) -> Vec<C64> {
    let n = values.len() - 1;
    let c = coeffs_from_values(values);
    let get = |k: usize| if k <= n { c[k] } else { C64::new(0.0, 0.0) };
    let mut ic = vec![C64::new(0.0, 0.0); n + 2];
    ic[1] = get(0) - get(2) * 0.5;
    for k in 2..=n + 1 {
        ic[k] = (get(k - 1) - get(k + 1)) / (2.0 * k as f64);
    }
    // Fix the constant so the integral vanishes at x = −1: T_k(−1) = (−1)^k.
    let at_left: C64 = ic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| if k % 2 == 0 { *v } else { -v })
        .sum();
    ic[0] = -at_left;
    let half = 0.5 * (b - a);
    let nf = n as f64;
    (0..=n)
        .map(|j| {
            let x = -(PI * j as f64 / nf).cos();
            let x = if j == 0 { -1.0 } else if j == n { 1.0 } else { x };
            clenshaw(&ic, x) * half
        })
        .collect()
}

/// A Chebyshev interpolant stored by its Lobatto samples on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPiece {
    pub a: f64,
    pub b: f64,
    pub values: Vec<C64>,
    coeffs: Vec<C64>,
    nodes: Vec<f64>,
}

impl ChebPiece {
    pub fn new(a: f64, b: f64, values: Vec<C64>) -> Self {
        let coeffs = coeffs_from_values(&values);
        let nodes = lobatto_points(values.len() - 1, -1.0, 1.0);
        ChebPiece { a, b, values, coeffs, nodes }
    }

    pub fn from_fn<F: FnMut(f64) -> C64>(a: f64, b: f64, degree: usize, mut f: F) -> Self {
        let values = lobatto_points(degree, a, b).into_iter().map(&mut f).collect();
        Self::new(a, b, values)
    }

    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    fn to_unit(&self, x: f64) -> f64 {
        ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0)
    }

    /// Barycentric evaluation; exact at the nodes.
    pub fn eval(&self, x: f64) -> C64 {
        let n = self.degree();
        let t = self.to_unit(x);
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, (v, node)) in self.values.iter().zip(&self.nodes).enumerate() {
            let diff = t - node;
            if diff == 0.0 {
                return *v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            let w = w / diff;
            num += v * w;
            den += w;
        }
        num / den
    }

    pub fn eval_derivative(&self, x: f64) -> C64 {
        let d = derivative_coeffs(&self.coeffs);
        clenshaw(&d, self.to_unit(x)) * (2.0 / (self.b - self.a))
    }

    /// Magnitude of the trailing coefficients relative to the largest one,
    /// a cheap resolution indicator.
    pub fn tail_ratio(&self) -> f64 {
        tail_ratio(&self.coeffs)
    }
}

pub fn tail_ratio(coeffs: &[C64]) -> f64 {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let n = coeffs.len();
    let tail = coeffs[n.saturating_sub(3)..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    tail / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn interpolates_smooth_function() {
        let p = ChebPiece::from_fn(1.0, 2.5, 16, |x| real(x.exp() * x.sin()));
        for k in 0..50 {
            let x = 1.0 + 1.5 * k as f64 / 49.0;
            assert!((p.eval(x).re - x.exp() * x.sin()).abs() < 1e-12);
            let d = x.exp() * (x.sin() + x.cos());
            assert!((p.eval_derivative(x).re - d).abs() < 1e-9);
        }
        assert!(p.tail_ratio() < 1e-12);
    }

    #[test]
    fn cumulative_integral_is_spectral() {
        let xs = lobatto_points(16, 1.0, 2.0);
        let vals: Vec<C64> = xs.iter().map(|&x| real(1.0 / x)).collect();
        let cum = cumulative_integral(&vals, 1.0, 2.0);
        for (x, c) in xs.iter().zip(&cum) {
            assert!((c.re - x.ln()).abs() < 1e-12, "x = {x}");
        }
        assert_eq!(cum[0].re.abs() < 1e-15, true);
    }

    #[test]
    fn coefficient_round_trip() {
        let vals: Vec<C64> = (0..9).map(|k| C64::new(k as f64, -(k as f64).sqrt())).collect();
        let c = coeffs_from_values(&vals);
        let xs = lobatto_points(8, -1.0, 1.0);
        for (x, v) in xs.iter().zip(&vals) {
            assert!((clenshaw(&c, *x) - v).norm() < 1e-12);
        }
    }
}
