//! Command-line front end. `run` parses arguments, executes one subcommand
//! and maps errors to exit codes: 0 success, 2 validation/usage, 3 accuracy
//! (or a failed check), 4 domain/representation.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::adjoint::{adjoint_constant, upq_limits, AdjointOptions};
use crate::asym::{p_series, q_series};
use crate::error::{Error, Result};
use crate::oscillab::{bump_seed, canonical_consistency, forward_extend, oscillation_report};
use crate::params::{make_params, preset, DdeParams, Preset};
use crate::pfun::{discontinuities, measure_jumps, solve_p_any, Side};
use crate::qstar::qstar;
use crate::quad::QuadratureConfig;
use crate::special::{ein, gamma_c, lgamma_c, rgamma_c};
use crate::C64;

/// Directory that relative `--out` paths are resolved against.
pub const OUT_DIR_ENV: &str = "ECDDE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "ecdde", version, about = "Euler-Cauchy difference differential equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Canonical advanced solution q*(u).
    Qstar(QstarArgs),
    /// Retarded solution p(u, a, b) by the method of steps.
    Pfun(PfunArgs),
    /// Asymptotic series terms and partial sums.
    Asym(AsymArgs),
    /// Constancy of the bilinear pairing A(u).
    Adjoint(AdjointArgs),
    /// Forward extension of the kappa-equation from a seed.
    Oscillate(OscillateArgs),
    /// Special functions at complex points.
    Special(SpecialArgs),
    /// Runs the acceptance suite, one JSON line per check.
    CheckAll,
}

#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    /// dickman, buchstab, iwaniec (with --kappa) or q1.
    #[arg(long, conflicts_with_all = ["alphas", "shifts"])]
    pub preset: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Comma-separated complex coefficients alpha_0..alpha_m ("re" or "re+imi").
    #[arg(long, allow_hyphen_values = true, requires = "shifts")]
    pub alphas: Option<String>,
    /// Comma-separated shifts, starting with 0.
    #[arg(long, allow_hyphen_values = true, requires = "alphas")]
    pub shifts: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct QstarArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated evaluation points.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Evaluation grid A:B:N.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "u")]
    pub grid: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PfunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Horizon of the solve.
    #[arg(long = "U")]
    pub horizon: f64,
    /// Comma-separated evaluation points.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "at")]
    pub grid: Option<String>,
    /// One-sided limit taken at breakpoints.
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    /// Print the discontinuity report (JSON) instead of values.
    #[arg(long)]
    pub discontinuities: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Args, Debug)]
pub struct AsymArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub side: SeriesArg,
    #[arg(long, allow_hyphen_values = true)]
    pub u: f64,
    #[arg(long = "N", default_value_t = 4)]
    pub n_terms: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SeriesArg {
    P,
    Q,
}

#[derive(Args, Debug)]
pub struct AdjointArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub bypass_normalization: bool,
    /// Point for the large-u limit of u p q (skipped when absent).
    #[arg(long)]
    pub u_large: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OscillateArgs {
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long = "T", default_value_t = 5.0)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = SeedArg::Bump)]
    pub seed: SeedArg,
    /// Degree of the fitted seed.
    #[arg(long, default_value_t = 8)]
    pub degree: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Emit (u, q(u)) samples as CSV instead of the JSON report.
    #[arg(long)]
    pub csv: bool,
    #[arg(long, default_value_t = 64)]
    pub samples_per_unit: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SeedArg {
    Bump,
    FitQstar,
}

#[derive(Args, Debug)]
pub struct SpecialArgs {
    #[arg(long = "fn", value_enum)]
    pub function: SpecialFn,
    /// Comma-separated complex points.
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SpecialFn {
    Ein,
    Gamma,
    Rgamma,
    Lgamma,
}

/// Parses `re`, `re+imi`, `re-imi` or `imi`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    let bad = || Error::validation(format!("cannot parse complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Vec<T>> {
    s.split(',').map(|x| f(x.trim())).collect()
}

fn parse_real(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::validation(format!("cannot parse number '{s}'")))
}

/// `A:B:N` to `N` equispaced points including both ends.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::validation(format!("grid must be A:B:N, got '{s}'")));
    }
    let (a, b) = (parse_real(parts[0])?, parse_real(parts[1])?);
    let n: usize = parts[2]
        .parse()
        .map_err(|_| Error::validation(format!("bad grid count '{}'", parts[2])))?;
    if n == 0 || !(a.is_finite() && b.is_finite()) || (n == 1 && a != b) {
        return Err(Error::validation(format!("bad grid '{s}'")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn points(list: &Option<String>, grid: &Option<String>) -> Result<Vec<f64>> {
    match (list, grid) {
        (Some(l), _) => parse_list(l, parse_real),
        (None, Some(g)) => parse_grid(g),
        (None, None) => Err(Error::validation("give evaluation points or a grid")),
    }
}

fn build_params(p: &ParamArgs) -> Result<DdeParams> {
    match (&p.preset, &p.alphas, &p.shifts) {
        (Some(name), None, None) => preset(Preset::from_name(name, p.kappa)?),
        (None, Some(a), Some(s)) => {
            make_params(&parse_list(a, parse_complex)?, &parse_list(s, parse_real)?)
        }
        _ => Err(Error::validation("give either --preset or both --alphas and --shifts")),
    }
}

fn build_cfg(abs_tol: Option<f64>, rel_tol: Option<f64>) -> Result<QuadratureConfig> {
    let mut cfg = QuadratureConfig::cli_default();
    if let Some(t) = abs_tol {
        cfg.abs_tol = t;
    }
    if let Some(t) = rel_tol {
        cfg.rel_tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::validation(format!("cannot write output: {e}")))
        }
        Some(path) => {
            let path = match std::env::var_os(OUT_DIR_ENV) {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            std::fs::write(&path, text)
                .map_err(|e| Error::validation(format!("cannot write {}: {e}", path.display())))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::validation(format!("serialization failed: {e}")))
}

/// CSV with a header row; every row already formatted.
fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn run_qstar(args: &QstarArgs) -> Result<()> {
    let params = build_params(&args.params)?;
    let cfg = build_cfg(args.output.abs_tol, args.output.rel_tol)?;
    let us = points(&args.u, &args.grid)?;
    let values = us
        .par_iter()
        .map(|&u| qstar(&params, u, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let text = match args.output.format {
        Format::Csv => csv(
            &["u", "re", "im", "representation", "est_error"],
            &us.iter()
                .zip(&values)
                .map(|(u, v)| {
                    vec![
                        num(*u),
                        num(v.value.re),
                        num(v.value.im),
                        v.representation.to_string(),
                        format!("{:.3e}", v.est_error),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Json => to_json(
            &us.iter()
                .zip(&values)
                .map(|(u, v)| json!({"u": u, "value": v.value, "representation": v.representation.to_string(), "est_error": v.est_error}))
                .collect::<Vec<_>>(),
        )?,
    };
    emit(&args.output.out, &text)
}

fn run_pfun(args: &PfunArgs) -> Result<()> {
    let params = build_params(&args.params)?;
    let cfg = build_cfg(args.output.abs_tol, args.output.rel_tol)?;
    let sol = solve_p_any(&params, args.horizon, &cfg)?;
    if args.discontinuities {
        let mut reports = discontinuities(&params, args.horizon);
        measure_jumps(&mut reports, &sol)?;
        return emit(&args.output.out, &to_json(&reports)?);
    }
    let us = points(&args.at, &args.grid)?;
    let side = match args.side {
        SideArg::Left => Side::Left,
        SideArg::Right => Side::Right,
    };
    let values = us
        .par_iter()
        .map(|&u| sol.try_eval(u, side))
        .collect::<Result<Vec<_>>>()?;
    // p / C_0: the classical normalizations (rho for Dickman, omega for
    // Buchstab).
    let c0 = params.c0();
    let text = match args.output.format {
        Format::Csv => csv(
            &["u", "re", "im", "scaled_re", "scaled_im"],
            &us.iter()
                .zip(&values)
                .map(|(u, v)| {
                    let s = v / c0;
                    vec![num(*u), num(v.re), num(v.im), num(s.re), num(s.im)]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Json => to_json(
            &us.iter()
                .zip(&values)
                .map(|(u, v)| json!({"u": u, "value": v, "scaled": v / c0}))
                .collect::<Vec<_>>(),
        )?,
    };
    emit(&args.output.out, &text)
}

fn run_asym(args: &AsymArgs) -> Result<()> {
    let params = build_params(&args.params)?;
    build_cfg(args.output.abs_tol, args.output.rel_tol)?;
    if !(args.u > 0.0) {
        return Err(Error::validation(format!("u must be positive, got {}", args.u)));
    }
    let series = match args.side {
        SeriesArg::P => p_series(&params, args.n_terms)?,
        SeriesArg::Q => q_series(&params, args.n_terms)?,
    };
    let rows: Vec<(usize, C64, C64)> = (0..args.n_terms)
        .map(|n| (n, series.term(n, args.u), series.partial_sum(args.u, n + 1)))
        .collect();
    let text = match args.output.format {
        Format::Csv => csv(
            &["n", "coeff_re", "coeff_im", "term_re", "term_im", "term_abs", "partial_re", "partial_im"],
            &rows
                .iter()
                .map(|(n, t, s)| {
                    let c = series.coeffs[*n];
                    vec![
                        n.to_string(),
                        num(c.re),
                        num(c.im),
                        num(t.re),
                        num(t.im),
                        num(t.norm()),
                        num(s.re),
                        num(s.im),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Json => to_json(&json!({
            "series": series,
            "u": args.u,
            "terms": rows.iter().map(|(n, t, s)| json!({"n": n, "term": t, "partial": s})).collect::<Vec<_>>(),
        }))?,
    };
    emit(&args.output.out, &text)
}

fn run_adjoint(args: &AdjointArgs) -> Result<()> {
    let params = build_params(&args.params)?;
    let cfg = build_cfg(args.abs_tol, args.rel_tol)?;
    let grid = parse_grid(&args.grid)?;
    let opts = AdjointOptions { bypass_normalization: args.bypass_normalization };
    let mut report = adjoint_constant(&params, &grid, &cfg, opts)?;
    let mut limits = None;
    if !args.bypass_normalization {
        report.limit_at_zero = crate::adjoint::limit_at_zero(&params).ok();
        if let Some(u) = args.u_large {
            let l = upq_limits(&params, u, &cfg)?;
            report.limit_at_inf = Some(l.limit_inf);
            limits = Some(l);
        }
    }
    emit(&args.out, &to_json(&json!({"report": report, "upq_limits": limits}))?)
}

fn run_oscillate(args: &OscillateArgs) -> Result<()> {
    let (q, canonical) = match args.seed {
        SeedArg::Bump => (forward_extend(args.kappa, &bump_seed(args.t), args.steps)?, None),
        SeedArg::FitQstar => {
            let cfg = QuadratureConfig::default();
            let (q, c) =
                canonical_consistency(args.kappa, args.t, args.degree, args.steps, 1.0, &cfg)?;
            (q, Some(c))
        }
    };
    if args.csv {
        let n = args.samples_per_unit.max(1);
        let mut rows = Vec::new();
        for p in &q.pieces {
            for k in 0..n {
                let u = p.a + (p.b - p.a) * k as f64 / n as f64;
                rows.push(vec![num(u), num(p.eval(u))]);
            }
        }
        let last = &q.pieces[q.pieces.len() - 1];
        rows.push(vec![num(last.b), num(last.eval(last.b))]);
        return emit(&args.out, &csv(&["u", "q"], &rows));
    }
    let report = oscillation_report(&q);
    emit(
        &args.out,
        &to_json(&json!({
            "kappa": args.kappa,
            "T": args.t,
            "report": report,
            "exceeds_exp_2u_from": report.exceedance_start(2.0),
            "canonical": canonical,
        }))?,
    )
}

fn run_special(args: &SpecialArgs) -> Result<()> {
    build_cfg(args.output.abs_tol, args.output.rel_tol)?;
    let zs = parse_list(&args.z, parse_complex)?;
    let values = zs
        .iter()
        .map(|&z| match args.function {
            SpecialFn::Ein => ein(z),
            SpecialFn::Gamma => gamma_c(z),
            SpecialFn::Rgamma => Ok(rgamma_c(z)),
            SpecialFn::Lgamma => lgamma_c(z),
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match args.output.format {
        Format::Csv => csv(
            &["z_re", "z_im", "re", "im"],
            &zs.iter()
                .zip(&values)
                .map(|(z, v)| vec![num(z.re), num(z.im), num(v.re), num(v.im)])
                .collect::<Vec<_>>(),
        ),
        Format::Json => to_json(
            &zs.iter().zip(&values).map(|(z, v)| json!({"z": z, "value": v})).collect::<Vec<_>>(),
        )?,
    };
    emit(&args.output.out, &text)
}

fn run_check_all() -> i32 {
    let outcomes = crate::checks::run_all(|o| {
        if let Ok(line) = serde_json::to_string(o) {
            println!("{line}");
        }
    });
    if outcomes.iter().all(|o| o.passed) {
        0
    } else {
        3
    }
}

fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Qstar(a) => run_qstar(a),
        Command::Pfun(a) => run_pfun(a),
        Command::Asym(a) => run_asym(a),
        Command::Adjoint(a) => run_adjoint(a),
        Command::Oscillate(a) => run_oscillate(a),
        Command::Special(a) => run_special(a),
        Command::CheckAll => unreachable!("handled in run"),
    }
}

/// Entry point: `argv` includes the program name.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Command::CheckAll = cli.command {
        return run_check_all();
    }
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1.5").unwrap(), C64::new(1.5, 0.0));
        assert_eq!(parse_complex("-2").unwrap(), C64::new(-2.0, 0.0));
        assert_eq!(parse_complex("1+2i").unwrap(), C64::new(1.0, 2.0));
        assert_eq!(parse_complex("1-2.5i").unwrap(), C64::new(1.0, -2.5));
        assert_eq!(parse_complex("-0.5-i").unwrap(), C64::new(-0.5, -1.0));
        assert_eq!(parse_complex("3i").unwrap(), C64::new(0.0, 3.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), C64::new(1e-3, 20.0));
        assert!(parse_complex("x").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("3:8:6").unwrap(), vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["ecdde", "--bogus"]), 2);
        assert_eq!(run(["ecdde", "qstar", "--alphas", "1,-1", "--shifts", "0,1", "--u", "-1"]), 2);
        assert_eq!(run(["ecdde", "pfun", "--preset", "iwaniec", "--kappa", "0.5", "--U", "3", "--at", "5"]), 4);
        assert_eq!(run(["ecdde", "adjoint", "--preset", "dickman", "--grid", "2:4:3"]), 4);
    }
}
