//! The acceptance suite as library functions, shared by the `check-all`
//! subcommand and the integration tests.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::adjoint::{adjoint_constant, upq_limits, AdjointOptions};
use crate::asym::{p_series, q_series};
use crate::error::Result;
use crate::oscillab::{bump_seed, canonical_consistency, forward_extend, oscillation_report};
use crate::params::{make_params, make_real_params, preset, DdeParams, Preset};
use crate::pfun::{p_laplace_check, solve_p, solve_p_any, Side};
use crate::qstar::{dde_residual, qstar_hankel, qstar_laplace, qstar_value};
use crate::quad::QuadratureConfig;
use crate::special::{exp_power_integral_bound, EULER_GAMMA};
use crate::C64;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const CHECKS: [(u32, &str); 11] = [
    (1, "dickman_closed_form"),
    (2, "dickman_depth"),
    (3, "buchstab"),
    (4, "wheeler_cancellation"),
    (5, "representation_equivalence"),
    (6, "dde_residual"),
    (7, "laplace_identity"),
    (8, "asymptotic_coefficients"),
    (9, "adjoint_constancy"),
    (10, "oscillation_dichotomy"),
    (11, "exp_power_inequality"),
];

/// Wall-clock budget for the whole suite, in seconds.
pub const SUITE_BUDGET: f64 = 180.0;

const RHO_3: f64 = 0.048_608_388_291_1;

pub fn run_check(id: u32) -> CheckOutcome {
    let name = CHECKS
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown", |(_, n)| n);
    let cfg = QuadratureConfig::default();
    let start = Instant::now();
    let result = match id {
        1 => dickman_closed_form(&cfg),
        2 => dickman_depth(&cfg),
        3 => buchstab(&cfg),
        4 => wheeler(&cfg),
        5 => representation_equivalence(&cfg),
        6 => residuals(&cfg),
        7 => laplace_identity(&cfg),
        8 => asymptotic_coefficients(&cfg),
        9 => adjoint_constancy(&cfg),
        10 => oscillation(&cfg),
        11 => exp_power_inequality(),
        _ => Ok((false, format!("no check with id {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let limit = match id {
        1 => Some(1.0),
        2 | 3 => Some(5.0),
        5 => Some(30.0),
        _ => None,
    };
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = limit {
        if seconds >= limit {
            passed = false;
            detail.push_str(&format!("; runtime {seconds:.2}s over the {limit}s limit"));
        }
    }
    CheckOutcome { id, name, passed, detail, seconds }
}

/// Runs every check in order, handing each outcome to `sink` as it
/// completes, and finishes with the suite-runtime check.
pub fn run_all<F: FnMut(&CheckOutcome)>(mut sink: F) -> Vec<CheckOutcome> {
    let start = Instant::now();
    let mut out = Vec::new();
    for (id, _) in CHECKS {
        let o = run_check(id);
        sink(&o);
        out.push(o);
    }
    let seconds = start.elapsed().as_secs_f64();
    let total = CheckOutcome {
        id: 12,
        name: "suite_runtime",
        passed: seconds < SUITE_BUDGET,
        detail: format!("suite took {seconds:.1}s (budget {SUITE_BUDGET}s)"),
        seconds,
    };
    sink(&total);
    out.push(total);
    out
}

type Verdict = Result<(bool, String)>;

fn dickman_closed_form(cfg: &QuadratureConfig) -> Verdict {
    let p = preset(Preset::Dickman)?;
    let sol = solve_p(&p, 2.0, cfg)?;
    let v = EULER_GAMMA.exp() * sol.eval(2.0).re;
    let err = (v - (1.0 - 2f64.ln())).abs();
    Ok((err <= 1e-8, format!("e^gamma p(2) = {v:.15}, |err| = {err:.2e} (tol 1e-8)")))
}

/// `ρ(u)` by trapezoid marching of `ρ'(u) = −ρ(u − 1)/u` on a mesh of
/// width `h` (with `1/h` an integer).
pub fn dickman_trapezoid(u_end: f64, h: f64) -> f64 {
    let per_unit = (1.0 / h).round() as usize;
    let n = (u_end / h).round() as usize;
    let mut rho = vec![1.0; n + 1];
    for i in per_unit..n {
        let (u0, u1) = (i as f64 * h, (i + 1) as f64 * h);
        let f0 = rho[i - per_unit] / u0;
        let f1 = rho[i + 1 - per_unit] / u1;
        rho[i + 1] = rho[i] - 0.5 * h * (f0 + f1);
    }
    rho[n]
}

fn dickman_depth(cfg: &QuadratureConfig) -> Verdict {
    let p = preset(Preset::Dickman)?;
    let sol = solve_p(&p, 3.0, cfg)?;
    let v = EULER_GAMMA.exp() * sol.eval(3.0).re;
    let oracle = dickman_trapezoid(3.0, 1e-5);
    let err = (v - oracle).abs();
    Ok((
        err <= 1e-6,
        format!(
            "e^gamma p(3) = {v:.13}, trapezoid oracle {oracle:.13}, |diff| = {err:.2e} (tol 1e-6); reference {RHO_3}"
        ),
    ))
}

fn buchstab(cfg: &QuadratureConfig) -> Verdict {
    let p = preset(Preset::Buchstab)?;
    let sol = solve_p_any(&p, 10.0, cfg)?;
    let scale = (-EULER_GAMMA).exp();
    let mut worst: f64 = 0.0;
    for k in 1..=40 {
        let u = 1.0 + k as f64 / 40.0;
        worst = worst.max((scale * sol.try_eval(u, Side::Left)?.re - 1.0 / u).abs());
    }
    let omega10 = scale * sol.try_eval(10.0, Side::Left)?.re;
    let tail = (omega10 - scale).abs();
    Ok((
        worst <= 1e-10 && tail <= 1e-6,
        format!("max |omega - 1/u| on (1,2] = {worst:.2e} (tol 1e-10); |omega(10) - e^-gamma| = {tail:.2e} (tol 1e-6)"),
    ))
}

fn wheeler(cfg: &QuadratureConfig) -> Verdict {
    let p = make_real_params(&[1.0, 1.0, -2.0], &[0.0, 1.0, 2.0])?;
    let sol = solve_p_any(&p, 3.0, cfg)?;
    let j1 = sol.jump(1.0)?;
    let j2 = sol.jump(2.0)?;
    let eg = EULER_GAMMA.exp();
    let left = sol.try_eval(2.0, Side::Left)?;
    let right = sol.try_eval(2.0, Side::Right)?;
    let dl = (left - eg).norm();
    let dr = (right - eg).norm();
    Ok((
        j2 <= 1e-8 && j1 >= 0.1 && dl <= 1e-6 && dr <= 1e-6,
        format!("jump(1) = {j1:.4}, jump(2) = {j2:.2e}; |p(2-) - e^gamma| = {dl:.2e}, |p(2+) - e^gamma| = {dr:.2e}"),
    ))
}

/// Ten parameter sets with `Re β ∈ (−2, 0)` away from `−1`, `m ∈ {1, 2}`
/// and complex coefficients, from a fixed seed.
pub fn random_beta_params(seed: u64, count: usize) -> Result<Vec<DdeParams>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let m = rng.gen_range(1..=2);
        let mut shifts = vec![0.0, rng.gen_range(0.5..1.5)];
        if m == 2 {
            shifts.push(shifts[1] + rng.gen_range(0.3..1.0));
        }
        let beta = C64::new(rng.gen_range(-1.9..-0.1), rng.gen_range(-0.3..0.3));
        if (beta.re + 1.0).abs() < 0.1 && beta.im.abs() < 0.05 {
            continue;
        }
        let mut alphas = vec![C64::new(0.0, 0.0)];
        for _ in 0..m {
            alphas.push(C64::new(rng.gen_range(-1.0..0.5), rng.gen_range(-0.2..0.2)));
        }
        alphas[0] = beta - alphas[1..].iter().sum::<C64>();
        out.push(make_params(&alphas, &shifts)?);
    }
    Ok(out)
}

fn representation_equivalence(cfg: &QuadratureConfig) -> Verdict {
    let mut worst: f64 = 0.0;
    let sets = random_beta_params(20_260_101, 10)?;
    for p in &sets {
        for u in [1.0, 5.0, 10.0] {
            let l = qstar_laplace(p, u, cfg)?.value;
            let h = qstar_hankel(p, u, cfg)?.value;
            worst = worst.max((l - h).norm());
        }
    }
    Ok((worst <= 1e-8, format!("max |laplace - hankel| over {} sets x 3 points = {worst:.2e} (tol 1e-8)", sets.len())))
}

fn residuals(cfg: &QuadratureConfig) -> Verdict {
    let cases: [(&str, DdeParams, f64, f64); 4] = [
        ("iwaniec(1)", preset(Preset::Iwaniec { kappa: 1.0 })?, 1e-6, 1e-3),
        ("iwaniec(1/2)", preset(Preset::Iwaniec { kappa: 0.5 })?, 1e-6, 1e-3),
        ("beta=0", make_real_params(&[1.0, -1.0], &[0.0, 1.0])?, 1e-12, 0.05),
        ("beta=1", make_real_params(&[2.0, -1.0], &[0.0, 1.0])?, 1e-12, 0.05),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p, tol, h) in &cases {
        let mut worst: f64 = 0.0;
        for u in [2.0, 5.0, 10.0] {
            worst = worst.max(dde_residual(p, u, *h, cfg)?);
        }
        ok &= worst <= *tol;
        parts.push(format!("{name} {worst:.1e} (tol {tol:.0e})"));
    }
    Ok((ok, format!("max residual: {}", parts.join(", "))))
}

fn laplace_identity(cfg: &QuadratureConfig) -> Verdict {
    let cases = [
        ("dickman", preset(Preset::Dickman)?),
        ("a=0 buchstab base", make_real_params(&[-1.0, -1.0], &[0.0, 1.0])?),
    ];
    let mut worst: f64 = 0.0;
    for (_, p) in &cases {
        let sol = solve_p(p, 25.0, cfg)?;
        for s in [0.5, 1.0, 2.0] {
            let c = p_laplace_check(p, C64::new(s, 0.0), &sol, cfg)?;
            worst = worst.max(c.dev);
        }
    }
    Ok((worst <= 1e-6, format!("max deviation over 2 parameter sets x 3 values of s = {worst:.2e} (tol 1e-6)")))
}

/// Absolute floor for the consecutive-term bracket: when the series
/// terminates the bracket is zero and only the solver error remains.
pub const BRACKET_FLOOR: f64 = 1e-9;

fn asymptotic_coefficients(cfg: &QuadratureConfig) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    let half = preset(Preset::Iwaniec { kappa: 0.5 })?;
    let general = make_real_params(&[-0.3, -0.4], &[0.0, 1.0])?;
    for (name, p) in [("iwaniec(1/2)", &half), ("beta=-0.7", &general)] {
        let sol = solve_p_any(p, 15.0, cfg)?;
        let value = sol.try_eval(15.0, Side::Left)?;
        let series = p_series(p, 4)?;
        for n in 1..=3 {
            let diff = (value - series.partial_sum(15.0, n)).norm();
            let bound = 2.0 * series.term(n, 15.0).norm();
            ok &= diff <= bound + BRACKET_FLOOR;
            parts.push(format!("p {name} N={n}: {diff:.2e} vs {bound:.2e}"));
        }
    }
    let q = qstar_value(&half, 20.0, cfg)?;
    let series = q_series(&half, 4)?;
    let diff = (q - series.partial_sum(20.0, 3)).norm();
    let bound = 2.0 * series.term(3, 20.0).norm();
    ok &= diff <= bound;
    parts.push(format!("q iwaniec(1/2) N=3 at 20: {diff:.2e} vs {bound:.2e}"));
    Ok((ok, format!("|value - partial| vs 2|term(N)| (+{BRACKET_FLOOR:.0e} floor on p): {}", parts.join("; "))))
}

fn adjoint_constancy(cfg: &QuadratureConfig) -> Verdict {
    let grid: Vec<f64> = (3..=8).map(f64::from).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for kappa in [1.0, 0.5] {
        let p = preset(Preset::Iwaniec { kappa })?;
        let r = adjoint_constant(&p, &grid, cfg, AdjointOptions::default())?;
        ok &= r.max_dev <= 1e-6;
        let l = upq_limits(&p, 60.0, cfg)?;
        let inf = (l.limit_inf - 1.0).norm();
        ok &= inf <= 0.02;
        let zero = match l.limit_zero {
            Some(z) => {
                ok &= z == C64::new(1.0, 0.0);
                format!("{}", z.re)
            }
            None => "not covered".to_string(),
        };
        parts.push(format!(
            "iwaniec({kappa}): A = {:.10}, max_dev {:.1e}, limit0 {zero}, |limit_inf(60) - 1| {inf:.4}",
            r.a_mean.re, r.max_dev
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn oscillation(cfg: &QuadratureConfig) -> Verdict {
    let q = forward_extend(1.0, &bump_seed(5.0), 8)?;
    let r = oscillation_report(&q);
    let k = r.first_persistent_sign_change;
    let e = r.exceedance_start(2.0);
    let wild = k.is_some_and(|k| k <= 8) && e.is_some();
    let (_, c) = canonical_consistency(1.0, 5.0, 8, 3, 1.0, cfg)?;
    let worst = c.amplification.iter().copied().fold(0.0, f64::max);
    let tame = worst <= 10.0 && c.sign_changes.iter().all(|&s| s == 0);
    Ok((
        wild && tame,
        format!(
            "bump: sign change in every interval from index {k:?}, max|q| > e^(2u) from index {e:?}; \
             canonical: fit error {:.2e}, amplification {:?} (tol 10), sign changes {:?}",
            c.fit_error,
            c.amplification.iter().map(|a| format!("{a:.3e}")).collect::<Vec<_>>(),
            c.sign_changes
        ),
    ))
}

fn exp_power_inequality() -> Verdict {
    let mut rng = StdRng::seed_from_u64(71);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..100 {
        let u = 1.0 + rng.gen_range(1e-3..19.0);
        let r: f64 = rng.gen_range(-5.0..5.0);
        let lambda = r.max(0.0) + rng.gen_range(1e-3..5.0);
        let (lhs, rhs) = exp_power_integral_bound(u, r, lambda)?;
        if lhs > rhs {
            violations += 1;
        }
        tightest = tightest.min(rhs / lhs);
    }
    Ok((violations == 0, format!("{violations} violations in 100 triples; smallest rhs/lhs = {tightest:.4}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_oracle_matches_rho3() {
        assert!((dickman_trapezoid(3.0, 1e-4) - RHO_3).abs() < 1e-8);
        assert!((dickman_trapezoid(2.0, 1e-4) - (1.0 - 2f64.ln())).abs() < 1e-8);
    }

    #[test]
    fn random_sets_are_in_range() {
        let sets = random_beta_params(1, 10).unwrap();
        assert_eq!(sets.len(), 10);
        for p in &sets {
            let b = p.beta();
            assert!(b.re > -2.0 && b.re < 0.0);
            assert!((b - C64::new(-1.0, 0.0)).norm() > 0.05);
        }
    }

    #[test]
    fn unknown_id_fails() {
        assert!(!run_check(99).passed);
    }
}
