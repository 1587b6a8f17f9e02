//! Numerical toolkit for the Euler–Cauchy pair of difference differential
//! equations
//!
//! ```text
//!   u q'(u)      =  Σ_{j=0}^m α_j q(u + v_j)      (advanced)
//!   (u p(u))'    = −Σ_{j=0}^m α_j p(u − v_j)      (retarded)
//! ```
//!
//! with shifts `0 = v_0 < v_1 < … < v_m` and complex coefficients `α_j`.
//!
//! The crate evaluates the canonical advanced solution `q*` ([`qstar`]),
//! builds the retarded solution `p(u, a, b)` by the method of steps
//! ([`pfun`]), provides the explicit asymptotic expansions of both
//! ([`asym`]), checks the bilinear relation pairing them ([`adjoint`]) and
//! demonstrates the wild behaviour of non-canonical solutions of the
//! sieve auxiliary equation ([`oscillab`]).
//!
//! ```
//! use ecdde::{params::{preset, Preset}, pfun, quad::QuadratureConfig, special::EULER_GAMMA};
//!
//! let dickman = preset(Preset::Dickman).unwrap();
//! let sol = pfun::solve_p(&dickman, 3.0, &QuadratureConfig::default()).unwrap();
//! let rho2 = EULER_GAMMA.exp() * sol.eval(2.0).re;
//! assert!((rho2 - (1.0 - 2f64.ln())).abs() < 1e-8);
//! ```

pub mod adjoint;
pub mod asym;
pub mod cheb;
pub mod checks;
pub mod cli;
pub mod error;
pub mod oscillab;
pub mod params;
pub mod pfun;
pub mod qstar;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use params::{DdeParams, Preset};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
