//! Command-line front end.
//!
//! Settings come from flags, then an optional JSON config file, then built-in
//! defaults. Exit status: 0 when every check passes, 1 on a failed check or a
//! numerical error, 2 on an invalid configuration.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::schemes::{k_from_c, SingularBranch, ThetaMode};
use crate::symmetry::SchemeKind;

#[derive(Debug, Parser)]
#[command(
    name = "invscheme",
    version,
    about = "Invariant difference schemes: exact runs, integrals, symmetries, Bäcklund checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    #[command(flatten)]
    pub flags: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Step the second-order scheme from two seed nodes on a closed-form solution.
    Solve,
    /// Write a closed-form trajectory and its scheme residuals.
    Exact,
    /// Evaluate the discrete first integrals along a trajectory CSV.
    VerifyIntegrals,
    /// Flow exact trajectories by every generator and re-check the schemes.
    SymmetryTable,
    /// Fit and verify the discrete Bäcklund transformation on a canonical pair.
    BacklundCheck,
    /// Node error against the continuous solution over a sequence of ε.
    Convergence,
    /// Line solutions and the mesh-consistency residual.
    Singular,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::Exact => "exact",
            CommandKind::VerifyIntegrals => "verify-integrals",
            CommandKind::SymmetryTable => "symmetry-table",
            CommandKind::BacklundCheck => "backlund-check",
            CommandKind::Convergence => "convergence",
            CommandKind::Singular => "singular",
        }
    }
}

/// Every setting, optional so that flags can be layered over a config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Scheme constant C.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Mesh parameter ε.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// `exact`, `one` or a number.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Winternitz constant K (defaults to the value linked to C).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Index offset ρ of the closed-form solution.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Closed-form constant A.
    #[arg(long = "A", visible_alias = "a", global = true, allow_hyphen_values = true)]
    #[serde(alias = "A")]
    pub a: Option<f64>,
    /// Closed-form constant B.
    #[arg(long = "B", visible_alias = "b", global = true, allow_hyphen_values = true)]
    #[serde(alias = "B")]
    pub b: Option<f64>,
    /// Winternitz solution constants, c1 to c6.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c3: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c4: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c5: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c6: Option<f64>,
    /// Inclusive index range `start..end`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<String>,
    /// Tolerance of the command's main checks.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with any of these settings.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// RNG seed for randomized checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trajectory CSV to read.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// `ode2`, `derived` or `winternitz`.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Group parameter of the symmetry flows.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// First abscissa of a run.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Stop a run once the abscissa passes this value.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_end: Option<f64>,
    /// Comma-separated ε values for `convergence`.
    #[arg(long, global = true)]
    pub eps_list: Option<String>,
    /// Slope of the line solution.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// Intercept of the line solution.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub offset: Option<f64>,
    /// Root sign of the line recursion: `plus` or `minus`.
    #[arg(long, global = true)]
    pub branch: Option<String>,
}

macro_rules! layer {
    ($flag:expr, $file:expr, $($f:ident),*) => {
        Overrides { $($f: $flag.$f.clone().or($file.$f.clone()),)* config: None }
    };
}

impl Overrides {
    fn over(&self, file: &Overrides) -> Overrides {
        layer!(
            self, file, c, eps, theta, k, rho, a, b, c1, c2, c3, c4, c5, c6, n, tol, out, seed, input, scheme, s, x0,
            x_end, eps_list, slope, offset, branch
        )
    }

    fn has_winternitz_constants(&self) -> bool {
        [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6].iter().any(Option::is_some)
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub c: f64,
    pub eps: f64,
    pub theta: ThetaMode,
    pub k: f64,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub cw: [f64; 6],
    pub n_start: i64,
    pub n_end: i64,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub scheme: SchemeKind,
    pub s: f64,
    pub x0: Option<f64>,
    pub x_end: Option<f64>,
    pub eps_list: Vec<f64>,
    pub slope: f64,
    pub offset: f64,
    pub branch: SingularBranch,
}

fn parse_range(s: &str) -> Result<(i64, i64)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("index range must look like `start..end`, got `{s}`")))?;
    let p = |v: &str| v.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad index `{v}`")));
    Ok((p(a)?, p(b)?))
}

impl RunConfig {
    /// Resolves flags over an optional config file over command defaults.
    pub fn resolve(command: CommandKind, flags: &Overrides) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<Overrides>(&text)
                    .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?
            }
            None => Overrides::default(),
        };
        let o = flags.over(&file);

        let theta = match &o.theta {
            Some(t) => ThetaMode::parse(t)?,
            None if command == CommandKind::Convergence => ThetaMode::One,
            None => ThetaMode::Exact,
        };
        // with θ = 1 the scheme constant −2 tracks the same curve as the exact scheme with C = 2
        let c = o.c.unwrap_or(match command {
            CommandKind::Singular | CommandKind::Convergence => -2.0,
            _ => 2.0,
        });
        let eps = o.eps.unwrap_or(0.01);
        let (n_start, n_end) = match &o.n {
            Some(r) => parse_range(r)?,
            None => (0, 20),
        };
        let scheme = match &o.scheme {
            Some(s) => SchemeKind::parse(s)?,
            None if o.has_winternitz_constants() => SchemeKind::Winternitz,
            None => SchemeKind::Ode2,
        };
        let eps_list = match &o.eps_list {
            Some(l) => l
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad eps `{v}`"))))
                .collect::<Result<Vec<_>>>()?,
            None => vec![0.1, 0.05, 0.025, 0.0125],
        };
        let branch = match o.branch.as_deref() {
            None | Some("minus") => SingularBranch::Minus,
            Some("plus") => SingularBranch::Plus,
            Some(v) => return Err(Error::Parse(format!("branch must be `plus` or `minus`, got `{v}`"))),
        };
        let dw = [1.0, 1.0, 0.0, 1.0, 2.0, 0.0];
        let cw = [
            o.c1.unwrap_or(dw[0]),
            o.c2.unwrap_or(dw[1]),
            o.c3.unwrap_or(dw[2]),
            o.c4.unwrap_or(dw[3]),
            o.c5.unwrap_or(dw[4]),
            o.c6.unwrap_or(dw[5]),
        ];
        let cfg = RunConfig {
            command,
            c,
            eps,
            theta,
            k: o.k.unwrap_or_else(|| k_from_c(c, eps)),
            rho: o.rho.unwrap_or(15.0),
            a: o.a.unwrap_or(1.0),
            b: o.b.unwrap_or(2.0),
            cw,
            n_start,
            n_end,
            tol: o.tol,
            out: o.out.unwrap_or_else(|| PathBuf::from(".")),
            seed: o.seed.unwrap_or(0),
            input: o.input,
            scheme,
            s: o.s.unwrap_or(0.3),
            x0: o.x0,
            x_end: o.x_end,
            eps_list,
            slope: o.slope.unwrap_or(1.0),
            offset: o.offset.unwrap_or(-1.0),
            branch,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.eps_list.iter().any(|e| e.is_nan() || *e <= 0.0) || self.eps_list.len() < 2 {
            return bad("eps-list needs at least two positive values".into());
        }
        if self.n_end - self.n_start + 1 < 4 {
            return bad(format!("index range {}..{} has fewer than 4 nodes", self.n_start, self.n_end));
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                return bad(format!("tol must be positive, got {t}"));
            }
        }
        if let ThetaMode::Value(t) = self.theta {
            if t == 0.0 || !t.is_finite() {
                return bad("theta must be finite and nonzero".into());
            }
        }
        Ok(())
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// One named tolerance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub tol: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tol`.
    pub fn at_most(name: &str, value: f64, tol: f64) -> Check {
        Check { name: name.into(), value: Some(value), tol: Some(tol), pass: value <= tol }
    }

    /// Passes when `value ≥ tol`.
    pub fn at_least(name: &str, value: f64, tol: f64) -> Check {
        Check { name: name.into(), value: Some(value), tol: Some(tol), pass: value >= tol }
    }

    pub fn flag(name: &str, pass: bool) -> Check {
        Check { name: name.into(), value: None, tol: None, pass }
    }
}

/// What a command hands back: its checks and extra summary fields.
pub(crate) struct Outcome {
    pub checks: Vec<Check>,
    pub details: Value,
}

pub(crate) fn write_json(dir: &Path, name: &str, v: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn error_json(e: &Error) -> Value {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
}

/// Runs a resolved configuration; returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    if let Err(e) = fs::create_dir_all(&cfg.out) {
        eprintln!("{}", error_json(&e.into()));
        return 1;
    }
    match commands::dispatch(cfg) {
        Ok(out) => {
            let pass = out.checks.iter().all(|c| c.pass);
            let summary = json!({
                "command": cfg.command.name(),
                "pass": pass,
                "checks": out.checks,
                "details": out.details,
                "config": cfg,
            });
            if let Err(e) = write_json(&cfg.out, "summary.json", &summary) {
                eprintln!("{}", error_json(&e));
                return 1;
            }
            for c in &out.checks {
                println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let v = error_json(&e);
            eprintln!("{v}");
            let summary = json!({ "command": cfg.command.name(), "pass": false, "error": v["error"], "config": cfg });
            let _ = write_json(&cfg.out, "summary.json", &summary);
            match e {
                Error::InvalidParameter(_) | Error::Parse(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::resolve(cli.command, &cli.flags) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            2
        }
    }
}
