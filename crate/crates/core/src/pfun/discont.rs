use serde::Serialize;

use super::lift::PFunction;
use crate::error::Result;
use crate::params::DdeParams;
use crate::special::{factorial, rgamma_c};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscontinuityKind {
    AlgebraicBlowup,
    BoundedOscillatory,
    FiniteJump,
    None,
}

/// A candidate discontinuity at `location = n·v_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscontinuityReport {
    pub location: f64,
    pub n: usize,
    /// Shift indices `j` with `n·v_j = location`.
    pub j: Vec<usize>,
    pub kind: DiscontinuityKind,
    /// `n − a` for the local law `p ~ coeff·(u − n v_j)^{n−a}`.
    pub local_exponent: Option<C64>,
    /// Sum over `j` of `(−α_j)^n C_0 / (n! v_j^n Γ(n − a + 1))`.
    pub predicted_coefficient: Option<C64>,
    pub measured_jump: Option<f64>,
}

const INT_TOL: f64 = 1e-12;

fn is_int(x: f64) -> bool {
    (x - x.round()).abs() < INT_TOL
}

/// Candidate discontinuities of `p(u, a, b)` on `[0, U]`, classified by
/// whether `Re a` and `a` are integers.
pub fn discontinuities(params: &DdeParams, horizon: f64) -> Vec<DiscontinuityReport> {
    let a = params.a();
    let c0 = params.c0();
    let real_a = a.im.abs() < INT_TOL;
    let mut raw: Vec<(f64, usize, usize, DiscontinuityKind)> = Vec::new();
    let push_range = |raw: &mut Vec<_>, n_max_incl: i64, kind_at: &dyn Fn(usize) -> DiscontinuityKind| {
        for n in 0..=n_max_incl.max(-1) {
            let n = n as usize;
            for (j, &v) in params.shifts().iter().enumerate().skip(1) {
                let loc = n as f64 * v;
                if loc <= horizon * (1.0 + 1e-12) {
                    raw.push((loc, n, j, kind_at(n)));
                }
            }
        }
    };

    if !is_int(a.re) {
        // n < Re a.
        let n_max = a.re.ceil() as i64 - 1;
        push_range(&mut raw, n_max, &|_| DiscontinuityKind::AlgebraicBlowup);
    } else if a.re.round() >= 0.0 && !real_a {
        let r = a.re.round() as i64;
        push_range(&mut raw, r, &|n| {
            if (n as i64) < r {
                DiscontinuityKind::AlgebraicBlowup
            } else {
                DiscontinuityKind::BoundedOscillatory
            }
        });
    } else if real_a && a.re.round() >= 1.0 {
        let r = a.re.round() as i64;
        for n in 1..=r {
            for (j, &v) in params.shifts().iter().enumerate().skip(1) {
                let loc = n as f64 * v;
                if loc <= horizon * (1.0 + 1e-12) {
                    raw.push((loc, n as usize, j, DiscontinuityKind::FiniteJump));
                }
            }
        }
    } else if real_a && a.re.round() == 0.0 {
        raw.push((0.0, 0, 1, DiscontinuityKind::FiniteJump));
    }

    raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut out: Vec<DiscontinuityReport> = Vec::new();
    for (loc, n, j, kind) in raw {
        let coeff = match kind {
            DiscontinuityKind::AlgebraicBlowup | DiscontinuityKind::BoundedOscillatory => {
                let alpha = params.alphas()[j];
                let v = params.shifts()[j];
                let minus_alpha_n = (0..n).fold(C64::new(1.0, 0.0), |acc, _| acc * (-alpha));
                Some(minus_alpha_n * c0 / (factorial(n) * v.powi(n as i32)) * rgamma_c(n as f64 - a + 1.0))
            }
            DiscontinuityKind::FiniteJump if loc == 0.0 => Some(c0),
            _ => None,
        };
        let exponent = match kind {
            DiscontinuityKind::AlgebraicBlowup | DiscontinuityKind::BoundedOscillatory => {
                Some(n as f64 - a)
            }
            _ => None,
        };
        // Points reached as n·v_j for several (n, j): one record per
        // location, keeping the smallest n (strongest singularity) and
        // summing the coefficients of the j sharing it. At 0 every j gives
        // the same term, counted once.
        if let Some(last) = out.last_mut() {
            if (last.location - loc).abs() <= 1e-12 * loc.max(1.0) {
                if last.n == n && loc != 0.0 {
                    last.j.push(j);
                    if let (Some(acc), Some(c)) = (last.predicted_coefficient.as_mut(), coeff) {
                        *acc += c;
                    }
                }
                continue;
            }
        }
        out.push(DiscontinuityReport {
            location: loc,
            n,
            j: vec![j],
            kind,
            local_exponent: exponent,
            predicted_coefficient: coeff,
            measured_jump: None,
        });
    }
    out
}

/// Fills `measured_jump = |p(x+) − p(x−)|` for finite jumps within the
/// solution's horizon.
pub fn measure_jumps(reports: &mut [DiscontinuityReport], p: &PFunction) -> Result<()> {
    for r in reports.iter_mut() {
        if r.kind == DiscontinuityKind::FiniteJump && r.location <= p.horizon() {
            r.measured_jump = Some(p.jump(r.location)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_real_params, preset, Preset};
    use crate::pfun::solve_p_any;
    use crate::quad::QuadratureConfig;

    #[test]
    fn half_a_single_blowup_at_zero() {
        let p = make_real_params(&[-0.5, -0.7], &[0.0, 1.0]).unwrap();
        let r = discontinuities(&p, 3.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].location, 0.0);
        assert_eq!(r[0].kind, DiscontinuityKind::AlgebraicBlowup);
        assert!((r[0].local_exponent.unwrap() - C64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn buchstab_single_jump() {
        let p = preset(Preset::Buchstab).unwrap();
        let r = discontinuities(&p, 3.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].location, 1.0);
        assert_eq!(r[0].kind, DiscontinuityKind::FiniteJump);
    }

    #[test]
    fn dickman_jump_at_zero_only() {
        let p = preset(Preset::Dickman).unwrap();
        let r = discontinuities(&p, 10.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].location, 0.0);
        assert_eq!(r[0].predicted_coefficient, Some(p.c0()));
    }

    #[test]
    fn negative_a_has_none() {
        let p = make_real_params(&[-2.5, 1.0], &[0.0, 1.0]).unwrap();
        assert!(discontinuities(&p, 5.0).is_empty());
    }

    #[test]
    fn wheeler_candidates_and_cancellation() {
        let p = make_real_params(&[1.0, 1.0, -2.0], &[0.0, 1.0, 2.0]).unwrap();
        let mut r = discontinuities(&p, 3.0);
        let locs: Vec<f64> = r.iter().map(|d| d.location).collect();
        assert_eq!(locs, vec![1.0, 2.0]);
        let f = solve_p_any(&p, 3.0, &QuadratureConfig::default()).unwrap();
        measure_jumps(&mut r, &f).unwrap();
        assert!(r[0].measured_jump.unwrap() > 0.1);
        assert!(r[1].measured_jump.unwrap() < 1e-8);
    }

    #[test]
    fn complex_a_with_integer_real_part() {
        let p = crate::params::make_params(
            &[C64::new(0.0, 0.5), C64::new(-1.0, 0.0)],
            &[0.0, 1.0],
        )
        .unwrap();
        let r = discontinuities(&p, 3.0);
        let kinds: Vec<_> = r.iter().map(|d| (d.location, d.kind)).collect();
        assert_eq!(
            kinds,
            vec![(0.0, DiscontinuityKind::AlgebraicBlowup), (1.0, DiscontinuityKind::BoundedOscillatory)]
        );
    }
}
