//! `gelfand` command-line interface.
//!
//! Every subcommand prints a one-line JSON summary on stdout. Exit codes:
//! 0 success or Converged, 1 usage/config error, 2 Diverged, 3 no-solution
//! regime (no cone root, or a Forbidden classification), 4 MaxIter,
//! 5 a `verify` check failed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::cone::{classify_nonexistence, cone_roots, multiplicity_curve, Classification, ConeRoots, DEFAULT_ROOT_TOL};
use crate::error::{Error, Result};
use crate::geometry::{
    build_from_spec, default_max_distance_tol, distance_field, lambda1_infinity, max_distance_set, DomainSpec,
    GridDomain,
};
use crate::io::{self, Format};
use crate::limit::{compute_branch, estimate_lambda_max, solve_limit_gelfand, LimitConfig, SolveStatus};
use crate::p_solver::{
    compute_p_branch, convergence_study, estimate_lambda1_p, lambda_check_p, lambda_hat_p, solve_p_gelfand_minimal,
    solve_torsion_with, PConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 5;

const DOMAIN_EXAMPLE: &str = r#"--domain '{"shape":"ball","center":[0,0],"radius":1.0,"resolution":64}'"#;

#[derive(Parser, Debug)]
#[command(
    name = "gelfand",
    version,
    about = "Solvers for the infinity-Laplacian Gelfand problem"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build a domain and emit its distance field.
    Domain(Common),
    /// Minimal solution of the limit problem at one load.
    SolveLimit(Common),
    /// Continuation over `--lambdas`; with `--p`, the finite-p branch.
    Branch(Common),
    /// Bisection for the extinction threshold.
    LambdaMax(Common),
    /// Cone roots (`--lambda`) or the multiplicity curve (`--lambdas`).
    ConeCurve(Common),
    /// Where `(Λ, sup u)` falls relative to the cone curve.
    Classify(Common),
    /// p-torsion function.
    Torsion(Common),
    /// Minimal finite-p solution.
    SolveP(Common),
    /// λ̌_p, λ̂_p and λ₁(p).
    LambdaThresholds(Common),
    /// `u_{λ_p,p}/p` against the limit solution over `--p-list`.
    Converge(Common),
    /// Run the invariant suite.
    Verify(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Domain JSON: a file path or an inline document.
    #[arg(long)]
    domain: Option<String>,
    /// Solver parameter overrides as JSON (file path or inline).
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    /// `start:stop:step`, inclusive.
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated exponents.
    #[arg(long = "p-list")]
    p_list: Option<String>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated subset of csv,json,pgm.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-outer")]
    max_outer: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "d-max")]
    d_max: Option<f64>,
    #[arg(long = "sup-u")]
    sup_u: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    /// `lo,hi` for `lambda-max`.
    #[arg(long)]
    bracket: Option<String>,
}

fn usage(key: &str, reason: impl Into<String>, example: &str) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
        example: example.into(),
    }
}

/// Reads `arg` as inline JSON if it starts with `{`, else as a file.
fn json_text(arg: &str) -> Result<(String, Option<PathBuf>)> {
    if arg.trim_start().starts_with('{') {
        return Ok((arg.to_string(), None));
    }
    let path = PathBuf::from(arg);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let base = path.parent().map(Path::to_path_buf);
    Ok((text, base))
}

fn parse_strict<T: DeserializeOwned>(text: &str, example: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let key = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "config".into());
        usage(&key, msg, example)
    })
}

fn threads_from_env() -> Result<usize> {
    match std::env::var("GELFAND_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage("GELFAND_THREADS", format!("not a count: `{v}`"), "GELFAND_THREADS=4")),
        Err(_) => Ok(0),
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let ex = "--lambdas 0.05:0.35:0.05";
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, st] = parts.as_slice() else {
        return Err(usage("lambdas", "expected start:stop:step", ex));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| usage("lambdas", format!("not a number: `{t}`"), ex))
    };
    let (a, b, st) = (num(a)?, num(b)?, num(st)?);
    if !(st > 0.0) || !(b >= a) {
        return Err(usage("lambdas", "need step > 0 and stop >= start", ex));
    }
    let n = ((b - a) / st + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * st).collect())
}

fn parse_list(s: &str, key: &str, ex: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(key, format!("not a number: `{t}`"), ex))
        })
        .collect()
}

struct Ctx {
    args: Common,
    formats: Vec<Format>,
}

impl Ctx {
    fn new(args: Common) -> Result<Self> {
        let formats = args
            .format
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Format>>>()?;
        std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
        Ok(Self { args, formats })
    }

    fn spec(&self) -> Result<DomainSpec> {
        let arg = self
            .args
            .domain
            .as_deref()
            .ok_or_else(|| usage("domain", "required for this subcommand", DOMAIN_EXAMPLE))?;
        let (text, base) = json_text(arg)?;
        let mut spec = DomainSpec::from_json(&text, base.as_deref())?;
        if let Some(r) = self.args.resolution {
            spec.resolution = r;
        }
        Ok(spec)
    }

    fn domain(&self) -> Result<(GridDomain, DomainSpec)> {
        let spec = self.spec()?;
        Ok((build_from_spec(&spec)?, spec))
    }

    fn overrides(&self) -> Result<Option<String>> {
        self.args
            .config
            .as_deref()
            .map(|c| json_text(c).map(|t| t.0))
            .transpose()
    }

    fn limit_config(&self, spec: &DomainSpec) -> Result<LimitConfig> {
        let mut cfg: LimitConfig = match self.overrides()? {
            Some(t) => parse_strict(&t, r#"--config '{"outer_tol":1e-8,"u_cap":3.0}'"#)?,
            None => LimitConfig::default(),
        };
        if self.args.domain.is_some() && self.args.config.is_none() {
            cfg.stencil = spec.stencil;
        }
        if let Some(l) = self.args.lambda {
            cfg.lambda = l;
        }
        if let Some(t) = self.args.tol {
            cfg.outer_tol = t;
        }
        if let Some(m) = self.args.max_outer {
            cfg.outer_max_iter = m;
        }
        cfg.threads = threads_from_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn p_config(&self, spec: &DomainSpec) -> Result<PConfig> {
        let mut cfg: PConfig = match self.overrides()? {
            Some(t) => parse_strict(&t, r#"--config '{"grad_tol":1e-9,"max_inner":5000}'"#)?,
            None => PConfig {
                stencil: spec.stencil,
                ..PConfig::default()
            },
        };
        if let Some(p) = self.args.p {
            cfg.p = p;
        }
        if let Some(l) = self.args.lambda {
            cfg.log_lambda = l.ln();
        }
        if let Some(t) = self.args.tol {
            cfg.grad_tol = t;
        }
        if let Some(m) = self.args.max_outer {
            cfg.outer_max_iter = m;
        }
        cfg.threads = threads_from_env()?;
        Ok(cfg)
    }

    fn need<T: Copy>(&self, v: Option<T>, key: &str, ex: &str) -> Result<T> {
        v.ok_or_else(|| usage(key, "required for this subcommand", ex))
    }

    fn write(&self, name: &str, text: &str) -> Result<String> {
        let p = self.args.out.join(name);
        io::write_text(&p, text)?;
        Ok(p.display().to_string())
    }

    fn emit(&self, field: &crate::ScalarField, stem: &str) -> Result<Vec<String>> {
        Ok(io::emit_field(field, &self.args.out, stem, &self.formats)?
            .into_iter()
            .map(|p| p.display().to_string())
            .collect())
    }

    fn has(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn summary(v: Value) {
    println!("{v}");
}

fn status_code(s: SolveStatus) -> i32 {
    s.exit_code()
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Domain(a) => {
            let ctx = Ctx::new(a)?;
            let (d, _) = ctx.domain()?;
            let dist = distance_field(&d)?;
            let m = max_distance_set(&d, default_max_distance_tol(&d))?;
            let files = ctx.emit(&dist, "distance")?;
            summary(json!({
                "dim": d.dim(), "h": d.h(), "dims": d.dims(),
                "interior": d.interior_count(), "boundary": d.boundary_count(),
                "d_max": dist.max(), "lambda1": 1.0 / dist.max(),
                "max_distance_set": m.len(), "files": files,
            }));
            Ok(EXIT_OK)
        }
        Cmd::SolveLimit(a) => {
            let ctx = Ctx::new(a)?;
            let (d, spec) = ctx.domain()?;
            ctx.need(ctx.args.lambda, "lambda", "--lambda 0.2")?;
            let cfg = ctx.limit_config(&spec)?;
            let (u, rep) = solve_limit_gelfand(&d, &cfg)?;
            let mut files = ctx.emit(&u, "solution")?;
            if ctx.has(Format::Json) {
                let p = ctx.args.out.join("report.json");
                io::write_json(&p, &rep)?;
                files.push(p.display().to_string());
            }
            summary(json!({"lambda": cfg.lambda, "report": rep, "files": files}));
            Ok(status_code(rep.status))
        }
        Cmd::Branch(a) => {
            let ctx = Ctx::new(a)?;
            let (d, spec) = ctx.domain()?;
            let lambdas = parse_range(ctx.need(ctx.args.lambdas.as_deref(), "lambdas", "--lambdas 0.05:0.35:0.05")?)?;
            let pts = match ctx.args.p {
                Some(_) => compute_p_branch(&d, &lambdas, &ctx.p_config(&spec)?)?,
                None => compute_branch(&d, &lambdas, &ctx.limit_config(&spec)?)?,
            };
            let mut files = vec![ctx.write("branch.csv", &io::branch_csv(&pts))?];
            if ctx.has(Format::Json) {
                files.push(ctx.write("branch.json", &serde_json::to_string_pretty(&pts)?)?);
            }
            let converged = pts.iter().filter(|b| b.status == SolveStatus::Converged).count();
            let first_div = pts.iter().find(|b| b.status == SolveStatus::Diverged).map(|b| b.lambda);
            summary(json!({"points": pts.len(), "converged": converged, "first_diverged": first_div, "files": files}));
            Ok(EXIT_OK)
        }
        Cmd::LambdaMax(a) => {
            let ctx = Ctx::new(a)?;
            let (d, spec) = ctx.domain()?;
            let mut cfg = ctx.limit_config(&spec)?;
            // --tol is the relative bracket width here
            let rel = ctx.args.tol.unwrap_or(0.01);
            cfg.outer_tol = LimitConfig::default().outer_tol;
            let bracket = match ctx.args.bracket.as_deref() {
                Some(b) => match parse_list(b, "bracket", "--bracket 0.2,0.5")?.as_slice() {
                    [lo, hi] => Some((*lo, *hi)),
                    _ => return Err(usage("bracket", "expected lo,hi", "--bracket 0.2,0.5")),
                },
                None => None,
            };
            let est = estimate_lambda_max(&d, bracket, rel, &cfg)?;
            if ctx.has(Format::Json) {
                io::write_json(&ctx.args.out.join("lambda_max.json"), &est)?;
            }
            summary(json!({
                "lambda_max": est.lambda_max, "bracket_width": est.bracket_width,
                "lo": est.lo, "hi": est.hi, "solves": est.solves,
            }));
            Ok(EXIT_OK)
        }
        Cmd::ConeCurve(a) => {
            let ctx = Ctx::new(a)?;
            let d_max = match (ctx.args.d_max, ctx.args.domain.is_some()) {
                (Some(v), _) => v,
                (None, true) => 1.0 / lambda1_infinity(&ctx.domain()?.0)?,
                (None, false) => return Err(usage("d-max", "give --d-max or --domain", "--d-max 1")),
            };
            if let Some(lam) = ctx.args.lambdas.as_deref() {
                let pts = multiplicity_curve(&parse_range(lam)?, d_max)?;
                let file = ctx.write("cone_curve.csv", &io::curve_csv(&pts))?;
                summary(json!({"d_max": d_max, "points": pts.len(), "files": [file]}));
                return Ok(EXIT_OK);
            }
            let lambda = ctx.need(ctx.args.lambda, "lambda", "--lambda 0.2")?;
            let roots = cone_roots(lambda, d_max, DEFAULT_ROOT_TOL)?;
            summary(json!({"lambda": lambda, "d_max": d_max, "roots": roots}));
            Ok(if roots == ConeRoots::None {
                EXIT_NO_SOLUTION
            } else {
                EXIT_OK
            })
        }
        Cmd::Classify(a) => {
            let ctx = Ctx::new(a)?;
            let lambda = ctx.need(ctx.args.lambda, "lambda", "--lambda 0.1")?;
            let sup_u = ctx.need(ctx.args.sup_u, "sup-u", "--sup-u 1.0")?;
            let l1 = match (ctx.args.lambda1, ctx.args.domain.is_some()) {
                (Some(v), _) => v,
                (None, true) => lambda1_infinity(&ctx.domain()?.0)?,
                (None, false) => return Err(usage("lambda1", "give --lambda1 or --domain", "--lambda1 1")),
            };
            let class = classify_nonexistence(lambda, sup_u, l1)?;
            summary(json!({"lambda": lambda, "sup_u": sup_u, "lambda1": l1, "class": class}));
            Ok(if class == Classification::Forbidden {
                EXIT_NO_SOLUTION
            } else {
                EXIT_OK
            })
        }
        Cmd::Torsion(a) => {
            let ctx = Ctx::new(a)?;
            let (d, spec) = ctx.domain()?;
            ctx.need(ctx.args.p, "p", "--p 4")?;
            let cfg = ctx.p_config(&spec)?;
            let (v, status, trace) = solve_torsion_with(&d, &cfg)?;
            let files = ctx.emit(&v, "torsion")?;
            summary(json!({
                "p": cfg.p, "sup": v.max(), "status": status,
                "inner_iters": trace.inner_iters, "grad_sup": trace.final_grad_sup, "files": files,
            }));
            Ok(status_code(status))
        }
        Cmd::SolveP(a) => {
            let ctx = Ctx::new(a)?;
            let (d, spec) = ctx.domain()?;
            ctx.need(ctx.args.p, "p", "--p 4")?;
            ctx.need(ctx.args.lambda, "lambda", "--lambda 1.0")?;
            let cfg = ctx.p_config(&spec)?;
            let (u, rep) = solve_p_gelfand_minimal(&d, &cfg)?;
            let files = ctx.emit(&u, "solution_p")?;
            summary(json!({"p": cfg.p, "log_lambda": cfg.log_lambda, "report": rep, "files": files}));
            Ok(status_code(rep.status))
        }
        Cmd::LambdaThresholds(a) => {
            let ctx = Ctx::new(a)?;
            let (d, _) = ctx.domain()?;
            let p = ctx.need(ctx.args.p, "p", "--p 4")?;
            let check = lambda_check_p(&d, p)?;
            let hat = lambda_hat_p(&d, p)?;
            let l1 = estimate_lambda1_p(&d, p)?;
            summary(json!({"p": p, "lambda_check": check, "lambda_hat": hat, "lambda1": l1}));
            Ok(EXIT_OK)
        }
        Cmd::Converge(a) => {
            let ctx = Ctx::new(a)?;
            let (d, spec) = ctx.domain()?;
            let lambda = ctx.need(ctx.args.lambda, "lambda", "--lambda 0.2")?;
            let p_list = match ctx.args.p_list.as_deref() {
                Some(s) => parse_list(s, "p-list", "--p-list 10,20,40,80")?,
                None => vec![10.0, 20.0, 40.0, 80.0],
            };
            let pcfg = ctx.p_config(&spec)?;
            let lcfg = LimitConfig {
                lambda,
                ..ctx.limit_config(&spec)?
            };
            let rows = convergence_study(&d, lambda, &p_list, &pcfg, &lcfg)?;
            let file = ctx.write("convergence.csv", &io::study_csv(&rows))?;
            let all = rows.iter().all(|r| r.status == SolveStatus::Converged);
            summary(json!({"lambda": lambda, "rows": rows, "files": [file]}));
            Ok(if all { EXIT_OK } else { SolveStatus::MaxIter.exit_code() })
        }
        Cmd::Verify(a) => {
            let ctx = Ctx::new(a)?;
            let res = ctx.args.resolution.unwrap_or(24.0);
            let checks = crate::verify::run_suite(ctx.args.seed, res)?;
            let passed = checks.iter().filter(|c| c.passed).count();
            if ctx.has(Format::Json) {
                io::write_json(&ctx.args.out.join("verify.json"), &checks)?;
            }
            summary(json!({"passed": passed, "failed": checks.len() - passed, "checks": checks}));
            Ok(if passed == checks.len() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MaxIter(_) => SolveStatus::MaxIter.exit_code(),
                _ => EXIT_USAGE,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_inclusive() {
        let v = parse_range("0:0.3678:0.01").unwrap();
        assert_eq!(v.len(), 37);
        let v = parse_range("0.05:0.35:0.05").unwrap();
        assert_eq!(v.len(), 7);
        assert!(parse_range("1:0:0.1").is_err());
    }

    #[test]
    fn misspelled_config_key_is_usage_error() {
        let e = parse_strict::<LimitConfig>(r#"{"outer_toll": 1e-8}"#, "x").unwrap_err();
        match e {
            Error::Config { key, .. } => assert_eq!(key, "outer_toll"),
            other => panic!("{other}"),
        }
    }
}
