//! The `dreq` command-line front end.
//!
//! Exit codes: 0 converged, 1 spec or usage error, 2 iteration limit,
//! 3 inner resolvent failure.

pub mod spec_file;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;

pub use spec_file::{parse_spec, render_spec, ErrorPreset, ProblemSpec, SolverSettings, SpecError};

use crate::problems::{by_name, corpus, NAMES};
use crate::solver::{equilibrium_certificate, solve, Relaxation, RelaxationRule, SolveResult, SolverConfig, Status};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_SPEC_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_INNER_FAILURE: i32 = 3;

/// Trace CSV header.
pub const TRACE_HEADER: &str = "n,residual_dr,step,certificate";

#[derive(Parser, Debug, Default)]
#[command(
    name = "dreq",
    version,
    about = "Douglas-Rachford splitting for monotone equilibrium problems"
)]
pub struct Args {
    /// Problem spec file (TOML).
    #[arg(required_unless_present_any = ["problem", "list_problems"], conflicts_with = "problem")]
    pub spec: Option<PathBuf>,

    /// Run a built-in instance instead of a spec file; `all` runs the whole corpus.
    #[arg(long)]
    pub problem: Option<String>,

    /// Print the built-in instance names and exit.
    #[arg(long)]
    pub list_problems: bool,

    /// Print the spec file of the selected problem (after overrides) and exit.
    #[arg(long)]
    pub emit_spec: bool,

    /// Where to write the trace CSV.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,

    /// Directory for the per-instance traces of `--problem all`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    #[arg(long)]
    pub gamma: Option<f64>,

    /// Constant relaxation parameter in (0,2).
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,

    #[arg(long)]
    pub tol: Option<f64>,

    #[arg(long)]
    pub max_iter: Option<usize>,

    #[arg(long)]
    pub trace_every: Option<usize>,

    #[arg(long, value_enum)]
    pub error_preset: Option<ErrorPreset>,

    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `argv` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Args::try_parse_from(argv) {
        Ok(args) => run(&args, out, err),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_SPEC_ERROR
            } else {
                EXIT_CONVERGED
            };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            code
        }
    }
}

/// Exit code for a solver status.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_CONVERGED,
        Status::MaxIter => EXIT_MAX_ITER,
        Status::InnerFailure => EXIT_INNER_FAILURE,
    }
}

pub fn run(args: &Args, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    if args.list_problems {
        for p in corpus() {
            let _ = writeln!(out, "{:<18} {}", p.name, p.summary);
        }
        return EXIT_CONVERGED;
    }
    if args.problem.as_deref() == Some("all") {
        return run_batch(args, out, err);
    }
    let spec = match load(args) {
        Ok(spec) => spec,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_SPEC_ERROR;
        }
    };
    if args.emit_spec {
        return match render_spec(&spec) {
            Ok(text) => {
                let _ = write!(out, "{text}");
                EXIT_CONVERGED
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_SPEC_ERROR
            }
        };
    }
    match execute(&spec, args.trace_out.as_deref()) {
        Ok(result) => {
            let _ = write!(out, "{}", summary(&result));
            for w in &result.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            if let Some(f) = &result.failure {
                let _ = writeln!(err, "resolvent failure: {f}");
            }
            exit_code(result.status)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_SPEC_ERROR
        }
    }
}

fn run_batch(args: &Args, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let Some(dir) = &args.out_dir else {
        let _ = writeln!(err, "error: --problem all needs --out-dir");
        return EXIT_SPEC_ERROR;
    };
    if let Err(e) = fs::create_dir_all(dir) {
        let _ = writeln!(err, "error: cannot create {}: {e}", dir.display());
        return EXIT_SPEC_ERROR;
    }
    let outcomes: Vec<(String, Result<SolveResult, SpecError>)> = NAMES
        .par_iter()
        .map(|name| {
            let outcome = instance_spec(name, args).and_then(|spec| {
                let path = dir.join(format!("{name}.csv"));
                execute(&spec, Some(&path))
            });
            (name.to_string(), outcome)
        })
        .collect();
    let mut code = EXIT_CONVERGED;
    for (name, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{name}: {} after {} iterations, y_star = {}",
                    r.status.as_str(),
                    r.iterations,
                    r.y_star
                );
                code = code.max(exit_code(r.status));
            }
            Err(e) => {
                let _ = writeln!(err, "{name}: error: {e}");
                code = code.max(EXIT_SPEC_ERROR);
            }
        }
    }
    code
}

fn plain(message: impl Into<String>) -> SpecError {
    SpecError {
        line: None,
        message: message.into(),
    }
}

fn instance_spec(name: &str, args: &Args) -> Result<ProblemSpec, SpecError> {
    let p = by_name(name).ok_or_else(|| plain(format!("unknown problem `{name}` (see --list-problems)")))?;
    let mut spec = ProblemSpec::from_instance(&p);
    apply_overrides(&mut spec.solver, args)?;
    Ok(spec)
}

/// Builds the problem from the spec file or `--problem`, with flag overrides applied.
pub fn load(args: &Args) -> Result<ProblemSpec, SpecError> {
    if let Some(name) = &args.problem {
        return instance_spec(name, args);
    }
    let path = args.spec.as_ref().ok_or_else(|| plain("no spec file given"))?;
    let text = fs::read_to_string(path).map_err(|e| plain(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = parse_spec(&text).map_err(|e| SpecError {
        line: e.line,
        message: format!("{}: {}", path.display(), e.message),
    })?;
    apply_overrides(&mut spec.solver, args)?;
    Ok(spec)
}

fn apply_overrides(s: &mut SolverSettings, args: &Args) -> Result<(), SpecError> {
    if let Some(g) = args.gamma {
        if !(g.is_finite() && g > 0.0) {
            return Err(plain(format!("--gamma {g} must be in (0, inf)")));
        }
        s.gamma = g;
    }
    if let Some(l) = args.lambda {
        if !(l > 0.0 && l < 2.0) {
            return Err(plain(spec_file::relaxation_message(l)));
        }
        s.relaxation = Relaxation::dr(RelaxationRule::Constant(l)).map_err(|e| plain(e.to_string()))?;
    }
    if let Some(t) = args.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(plain("--tol must be positive"));
        }
        s.tol = t;
    }
    if let Some(m) = args.max_iter {
        if m == 0 {
            return Err(plain("--max-iter must be at least 1"));
        }
        s.max_iter = m;
    }
    if let Some(t) = args.trace_every {
        if t == 0 {
            return Err(plain("--trace-every must be at least 1"));
        }
        s.trace_every = t;
    }
    if let Some(p) = args.error_preset {
        s.error_preset = p;
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    Ok(())
}

/// Solver configuration for a spec.
pub fn config(spec: &ProblemSpec) -> SolverConfig {
    let s = &spec.solver;
    SolverConfig {
        gamma: s.gamma,
        relaxation: s.relaxation.clone(),
        error_a: s.error_preset.schedule(),
        error_b: s.error_preset.schedule(),
        max_iter: s.max_iter,
        residual_tol: s.tol,
        trace_every: s.trace_every,
        seed: s.seed,
        ..SolverConfig::default()
    }
}

/// Solves the spec and writes the trace to `trace_out` if given.
pub fn execute(spec: &ProblemSpec, trace_out: Option<&Path>) -> Result<SolveResult, SpecError> {
    let cfg = config(spec);
    let result = solve(&spec.f, &spec.g, &spec.x0, &cfg).map_err(|e| plain(e.to_string()))?;
    if let Some(path) = trace_out {
        let text = trace_csv(spec, &cfg, &result);
        fs::File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| plain(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(result)
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

fn coords(v: &crate::hilbert::Vector) -> String {
    v.iter().map(|&c| num(c)).collect::<Vec<_>>().join(";")
}

/// The trace file: one row per recorded iteration, a blank line, then the
/// final-solution block as `key,value` rows. Vector values are
/// `;`-separated coordinates.
///
/// The certificate column is the sampled equilibrium value at the
/// projection of `y_n` onto `C`.
pub fn trace_csv(spec: &ProblemSpec, cfg: &SolverConfig, result: &SolveResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TRACE_HEADER}");
    for r in result.trace.records() {
        let point = spec.set.project(&r.y);
        let cert = equilibrium_certificate(&spec.f, &spec.g, &point, cfg.certificate_samples, cfg.seed);
        let _ = writeln!(s, "{},{},{},{}", r.n, num(r.residual_dr), num(r.step), num(cert));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "status,{}", result.status.as_str());
    let _ = writeln!(s, "iterations,{}", result.iterations);
    let _ = writeln!(s, "final_residual,{}", num(result.final_residual));
    let _ = writeln!(s, "x_star,{}", coords(&result.x_star));
    let _ = writeln!(s, "y_star,{}", coords(&result.y_star));
    let _ = writeln!(s, "certificate,{}", result.certificate.map(num).unwrap_or_default());
    s
}

/// The stdout report.
pub fn summary(result: &SolveResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", result.status.as_str());
    let _ = writeln!(s, "iterations: {}", result.iterations);
    let _ = writeln!(s, "y_star: {}", result.y_star);
    if let Some(c) = result.certificate {
        let _ = writeln!(s, "certificate: {c:.6e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(argv: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with_args(std::iter::once("dreq").chain(argv.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn lists_problems() {
        let (code, out, _) = call(&["--list-problems"]);
        assert_eq!(code, 0);
        for name in NAMES {
            assert!(out.contains(name));
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&[]).0, 1);
        assert_eq!(call(&["--problem", "nope"]).0, 1);
        assert_eq!(call(&["--problem", "quadratic-1d", "--lambda", "2.5"]).0, 1);
        assert_eq!(call(&["--problem", "quadratic-1d", "--bogus"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn status_drives_exit_code() {
        let (code, out, _) = call(&["--problem", "quadratic-1d"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("status: converged"));
        let (code, out, _) = call(&["--problem", "skew-saddle", "--max-iter", "2"]);
        assert_eq!(code, 2, "{out}");
        assert!(out.contains("status: max_iter"));
    }

    #[test]
    fn overrides_reach_the_config() {
        let args = Args::try_parse_from([
            "dreq",
            "--problem",
            "mixed-equilibrium",
            "--gamma",
            "0.3",
            "--lambda",
            "1.2",
            "--tol",
            "1e-9",
            "--max-iter",
            "77",
            "--trace-every",
            "4",
            "--error-preset",
            "geometric",
            "--seed",
            "9",
        ])
        .unwrap();
        let cfg = config(&load(&args).unwrap());
        assert_eq!(cfg.gamma, 0.3);
        assert_eq!(cfg.relaxation.at(3), 1.2);
        assert_eq!(cfg.residual_tol, 1e-9);
        assert_eq!(cfg.max_iter, 77);
        assert_eq!(cfg.trace_every, 4);
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.error_a.is_zero() && !cfg.error_b.is_zero());
    }
}
