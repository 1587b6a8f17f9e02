//! Parameter tuples `(v_j, α_j)` shared by the advanced and retarded
//! equations, plus the named presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::EULER_GAMMA;
use crate::C64;

/// Shifts `0 = v_0 < v_1 < … < v_m` and coefficients `α_0..α_m`, with the
/// derived quantities `β = Σ α_j`, `a = 1 + α_0` and
/// `C_0 = Π_{j≥1} (v_j e^γ)^{−α_j}`.
///
/// Immutable once built; construct through [`make_params`] or [`preset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct DdeParams {
    shifts: Vec<f64>,
    alphas: Vec<C64>,
    beta: C64,
    c0: C64,
}

impl DdeParams {
    /// Number of nonzero shifts.
    pub fn m(&self) -> usize {
        self.shifts.len() - 1
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    pub fn a(&self) -> C64 {
        self.alphas[0] + 1.0
    }

    pub fn alpha0(&self) -> C64 {
        self.alphas[0]
    }

    /// `b = (α_1, …, α_m)`.
    pub fn b(&self) -> &[C64] {
        &self.alphas[1..]
    }

    pub fn c0(&self) -> C64 {
        self.c0
    }

    pub fn v1(&self) -> f64 {
        self.shifts[1]
    }

    pub fn v_max(&self) -> f64 {
        self.shifts[self.m()]
    }

    /// `(α_j, v_j)` for `j ≥ 1`.
    pub fn shifted_terms(&self) -> impl Iterator<Item = (C64, f64)> + '_ {
        self.alphas[1..].iter().copied().zip(self.shifts[1..].iter().copied())
    }

    /// Same `b` and shifts, `α_0` replaced by `α_0 + delta`
    /// (so `a` and `β` move by `delta`).
    pub fn with_alpha0_shift(&self, delta: f64) -> DdeParams {
        let mut alphas = self.alphas.clone();
        alphas[0] += delta;
        make_params(&alphas, &self.shifts).expect("shifting α_0 keeps parameters valid")
    }

    /// `β` is a non-negative integer within `tol`; returns it.
    pub fn beta_nonneg_integer(&self, tol: f64) -> Option<usize> {
        let b = self.beta;
        let r = b.re.round();
        (b.im.abs() <= tol && (b.re - r).abs() <= tol && r >= 0.0).then_some(r as usize)
    }

    /// `β` is a negative integer within `tol`; returns it.
    pub fn beta_neg_integer(&self, tol: f64) -> Option<i64> {
        let b = self.beta;
        let r = b.re.round();
        (b.im.abs() <= tol && (b.re - r).abs() <= tol && r < 0.0).then_some(r as i64)
    }

    /// `α_j` all real.
    pub fn is_real(&self) -> bool {
        self.alphas.iter().all(|a| a.im == 0.0)
    }
}

/// Builds and validates a parameter set.
pub fn make_params(alphas: &[C64], shifts: &[f64]) -> Result<DdeParams> {
    if shifts.is_empty() {
        return Err(Error::validation("shift list is empty"));
    }
    if alphas.len() != shifts.len() {
        return Err(Error::validation(format!(
            "{} coefficients but {} shifts",
            alphas.len(),
            shifts.len()
        )));
    }
    if shifts.len() == 1 {
        return Err(Error::validation(
            "m = 0 (no shifted terms) is the plain Euler-Cauchy ODE and is not supported",
        ));
    }
    if shifts[0] != 0.0 {
        return Err(Error::validation(format!("shifts[0] must be 0, got {}", shifts[0])));
    }
    for (j, w) in shifts.windows(2).enumerate() {
        if !w[1].is_finite() || w[1] <= w[0] {
            return Err(Error::validation(format!(
                "shifts must be strictly increasing: shifts[{}] = {} does not exceed shifts[{}] = {}",
                j + 1,
                w[1],
                j,
                w[0]
            )));
        }
    }
    for (j, a) in alphas.iter().enumerate() {
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::validation(format!("alphas[{j}] is not finite")));
        }
        if j >= 1 && a.re == 0.0 && a.im == 0.0 {
            return Err(Error::validation(format!(
                "alphas[{j}] is zero; drop the shift instead"
            )));
        }
    }
    let beta = alphas.iter().sum::<C64>();
    let log_c0: C64 = alphas[1..]
        .iter()
        .zip(&shifts[1..])
        .map(|(a, v)| -a * (v.ln() + EULER_GAMMA))
        .sum();
    Ok(DdeParams {
        shifts: shifts.to_vec(),
        alphas: alphas.to_vec(),
        beta,
        c0: log_c0.exp(),
    })
}

/// Real-coefficient convenience constructor.
pub fn make_real_params(alphas: &[f64], shifts: &[f64]) -> Result<DdeParams> {
    let alphas: Vec<C64> = alphas.iter().map(|&a| C64::new(a, 0.0)).collect();
    make_params(&alphas, shifts)
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Preset {
    /// `α = (−1, 1)`: the retarded side is `u p' = −p(u − 1)`, so
    /// `e^γ p(u, 0, b)` is Dickman's ρ.
    Dickman,
    /// `α = (0, −1)`: the retarded side is `(u p)' = p(u − 1)`, Buchstab's
    /// equation.
    Buchstab,
    /// `α = (κ − 1, −κ)`: `(u q)' = κ q(u) − κ q(u + 1)`.
    Iwaniec { kappa: f64 },
    /// `Iwaniec { kappa: 1 }`.
    Q1,
}

impl Preset {
    /// Parses `dickman`, `buchstab`, `iwaniec` (needs `kappa`) or `q1`.
    pub fn from_name(name: &str, kappa: Option<f64>) -> Result<Preset> {
        match name.to_ascii_lowercase().as_str() {
            "dickman" => Ok(Preset::Dickman),
            "buchstab" => Ok(Preset::Buchstab),
            "q1" => Ok(Preset::Q1),
            "iwaniec" => kappa
                .map(|kappa| Preset::Iwaniec { kappa })
                .ok_or_else(|| Error::validation("preset iwaniec needs kappa")),
            other => Err(Error::validation(format!("unknown preset '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Dickman => "dickman",
            Preset::Buchstab => "buchstab",
            Preset::Iwaniec { .. } => "iwaniec",
            Preset::Q1 => "q1",
        }
    }
}

/// Expands a preset.
pub fn preset(p: Preset) -> Result<DdeParams> {
    match p {
        Preset::Dickman => make_real_params(&[-1.0, 1.0], &[0.0, 1.0]),
        Preset::Buchstab => make_real_params(&[0.0, -1.0], &[0.0, 1.0]),
        Preset::Iwaniec { kappa } => {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::validation(format!("kappa must be positive, got {kappa}")));
            }
            make_real_params(&[kappa - 1.0, -kappa], &[0.0, 1.0])
        }
        Preset::Q1 => preset(Preset::Iwaniec { kappa: 1.0 }),
    }
}

/// Wire form: `{"alphas": [[re, im], …], "shifts": […]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsJson {
    pub alphas: Vec<[f64; 2]>,
    pub shifts: Vec<f64>,
}

impl TryFrom<ParamsJson> for DdeParams {
    type Error = Error;

    fn try_from(raw: ParamsJson) -> Result<Self> {
        let alphas: Vec<C64> = raw.alphas.iter().map(|&[re, im]| C64::new(re, im)).collect();
        make_params(&alphas, &raw.shifts)
    }
}

impl From<DdeParams> for ParamsJson {
    fn from(p: DdeParams) -> Self {
        ParamsJson {
            alphas: p.alphas.iter().map(|a| [a.re, a.im]).collect(),
            shifts: p.shifts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_GAMMA: f64 = 1.781_072_417_990_197_985_236_504_103_107;

    #[test]
    fn derived_quantities() {
        let p = make_real_params(&[-1.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p.beta(), C64::new(0.0, 0.0));
        assert_eq!(p.a(), C64::new(0.0, 0.0));
        assert!((p.c0().re - 1.0 / E_GAMMA).abs() < 1e-15);

        let p = make_real_params(&[0.0, -1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p.beta().re, -1.0);
        assert_eq!(p.a().re, 1.0);
        assert!((p.c0().re - E_GAMMA).abs() < 1e-12 * E_GAMMA);

        // (1·e^γ)^{-1} (2e^γ)^{2} = 4e^γ
        let p = make_real_params(&[1.0, 1.0, -2.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.beta().re, 0.0);
        assert_eq!(p.a().re, 2.0);
        assert!((p.c0().re - 4.0 * E_GAMMA).abs() < 1e-13);
        assert_eq!(p.c0().im, 0.0);
    }

    #[test]
    fn validation_errors() {
        let err = make_real_params(&[1.0, 1.0, 1.0], &[0.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(&err, Error::Validation(m) if m.contains("shifts[2]")), "{err}");
        let err = make_real_params(&[1.0, 0.0], &[0.0, 1.0]).unwrap_err();
        assert!(matches!(&err, Error::Validation(m) if m.contains("alphas[1]")));
        assert!(make_real_params(&[], &[]).is_err());
        assert!(make_real_params(&[1.0], &[0.0]).is_err());
        assert!(make_real_params(&[1.0, 1.0], &[0.5, 1.0]).is_err());
        assert!(make_real_params(&[1.0, 1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn presets_expand() {
        let q1 = preset(Preset::Iwaniec { kappa: 1.0 }).unwrap();
        assert_eq!(q1.alphas(), &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]);
        assert_eq!(q1.beta().re, -1.0);
        assert_eq!(preset(Preset::Q1).unwrap(), q1);
        let d = preset(Preset::Dickman).unwrap();
        assert_eq!(d.a().re, 0.0);
        // e^γ · C_0 = 1, so e^γ p = 1 on (0, 1].
        assert!((d.c0().re * E_GAMMA - 1.0).abs() < 1e-15);
        assert!(matches!(preset(Preset::Iwaniec { kappa: 0.0 }), Err(Error::Validation(_))));
        let half = preset(Preset::Iwaniec { kappa: 0.5 }).unwrap();
        assert_eq!(half.beta().re, -1.0);
        assert_eq!(half.alpha0().re, -0.5);
    }

    #[test]
    fn preset_names() {
        assert_eq!(Preset::from_name("Dickman", None).unwrap(), Preset::Dickman);
        assert_eq!(
            Preset::from_name("iwaniec", Some(2.0)).unwrap(),
            Preset::Iwaniec { kappa: 2.0 }
        );
        assert!(Preset::from_name("iwaniec", None).is_err());
        assert!(Preset::from_name("rosser", None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = make_params(&[C64::new(0.5, -0.25), C64::new(-1.0, 2.0)], &[0.0, 1.5]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"alphas":[[0.5,-0.25],[-1.0,2.0]],"shifts":[0.0,1.5]}"#);
        let back: DdeParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let bad: std::result::Result<DdeParams, _> =
            serde_json::from_str(r#"{"alphas":[[1,0],[1,0]],"shifts":[0,0]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn c0_single_shift_matches_exp_gamma() {
        let p = make_real_params(&[3.7, -1.0], &[0.0, 1.0]).unwrap();
        assert!((p.c0().re - E_GAMMA).abs() <= 1e-12 * E_GAMMA);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn remake_is_idempotent(
                raw in prop::collection::vec((-3.0f64..3.0, -2.0f64..2.0, 0.05f64..2.0), 2..5)
            ) {
                let mut shifts = vec![0.0];
                let mut alphas = vec![C64::new(raw[0].0, raw[0].1)];
                for &(re, im, dv) in &raw[1..] {
                    shifts.push(shifts.last().unwrap() + dv);
                    let a = if re == 0.0 && im == 0.0 { C64::new(1.0, 0.0) } else { C64::new(re, im) };
                    alphas.push(a);
                }
                let p = make_params(&alphas, &shifts).unwrap();
                let again = make_params(p.alphas(), p.shifts()).unwrap();
                prop_assert_eq!(&again, &p);
                prop_assert!((p.a() - 1.0 - p.alpha0()).norm() <= 4.0 * f64::EPSILON * (1.0 + p.alpha0().norm()));
                prop_assert_eq!(p.beta(), p.alphas().iter().sum::<C64>());
            }
        }
    }
}
