//! Batch front end. Every command writes `<name>.json` (resolved config,
//! config hash, library version, results) and, where tabular, `<name>.csv`
//! into the output directory. Exit codes: 0 success, 2 configuration,
//! 3 failed numeric check, 4 I/O.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use roughsheet::controlled::{lift_phi, rough_integral, IntegralOptions, Measure};
use roughsheet::enhance::{
    enhance_smooth_with, load_roughsheet, save_roughsheet, verify_chen_with, Convention, EnhanceOptions, FieldId, NormOptions, RoughSheet, Sig,
    VerifyOptions,
};
use roughsheet::error::Error;
use roughsheet::fbs::{
    convergence_study, ito_compare, stratonovich_mc_check, variance_scaling, ConvergenceOptions, FbsParams, ItoOptions, StratoOptions,
    VarianceOptions,
};
use roughsheet::grid::{make_dyadic_grid, sample_sheet, Grid2D, SheetSample};
use roughsheet::phi::Phi;

const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Finest grid level the front end accepts.
const LEVEL_CAP: u32 = 12;

#[derive(Parser, Debug)]
#[command(name = "roughsheet", version, about = "Rough integration on two-parameter sheets")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "ROUGHSHEET_OUT", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Enhance a smooth sheet, write the bundle and its algebraic check.
    Enhance(EnhanceArgs),
    /// Check the algebraic relations of a saved bundle.
    Verify(VerifyArgs),
    /// Rough integral of a nonlinearity of the sheet over the unit square.
    Integrate(IntegrateArgs),
    /// Truncated fractional Brownian sheet studies.
    Fbs(FbsArgs),
    /// Change-of-variable residuals on truncated sheets.
    Strato(StratoArgs),
    /// Brownian sheet: rough integral against the left-point sum.
    Ito(ItoArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct SheetArgs {
    /// `st`, `s+t`, `sinsin` or an expression in `s` and `t`.
    #[arg(long, conflicts_with = "input")]
    sheet: Option<String>,
    /// A saved `.shs` sheet.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    level: u32,
}

#[derive(Args, Debug, Serialize)]
struct EnhanceArgs {
    #[command(flatten)]
    sheet: SheetArgs,
    /// Hoelder exponents recorded in the bundle.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = Conv::Midpoint)]
    convention: Conv,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// A saved `.rsh` bundle.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct IntegrateArgs {
    #[command(flatten)]
    sheet: SheetArgs,
    #[arg(long, default_value = "id")]
    phi: String,
    #[arg(long, value_enum, default_value_t = Meas::Dx)]
    measure: Meas,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Expected value; the command fails unless within `tol` of it.
    #[arg(long)]
    expect: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct FbsArgs {
    #[arg(long, value_enum, default_value_t = Study::Convergence)]
    study: Study,
    #[arg(long, default_value_t = 0.45)]
    alpha: f64,
    #[arg(long, default_value_t = 0.45)]
    beta: f64,
    /// Increasing cutoffs for the convergence study; the last one fixes the spacing.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    cutoffs: Vec<f64>,
    /// Cutoff for the variance study.
    #[arg(long, default_value_t = 64.0)]
    cutoff: f64,
    #[arg(long, default_value_t = 5)]
    level: u32,
    /// Norm exponents of the convergence study.
    #[arg(long, default_value_t = 0.4)]
    h: f64,
    #[arg(long, default_value_t = 0.4)]
    h2: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct StratoArgs {
    #[arg(long, default_value = "cos")]
    phi: String,
    #[arg(long, default_value_t = 0.45)]
    alpha: f64,
    #[arg(long, default_value_t = 0.45)]
    beta: f64,
    #[arg(long, default_value_t = 64.0)]
    cutoff: f64,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    levels: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Paths leaving `[-range, range]` are rejected.
    #[arg(long, default_value_t = 8.0)]
    range: f64,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Bound on the mean residual at the finest level.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct ItoArgs {
    /// Only `0.5` is supported.
    #[arg(long, default_value_t = 0.5)]
    hurst: f64,
    #[arg(long, default_value = "id")]
    phi: String,
    #[arg(long, default_value_t = 6)]
    level: u32,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Largest accepted ratio of the C-sum to its bound.
    #[arg(long, default_value_t = 4.0)]
    max_ratio: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum Conv {
    Midpoint,
    Ito,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum Meas {
    Dx,
    Dw,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
enum Study {
    Convergence,
    Variance,
}

enum Failure {
    Config(String),
    Check(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Check(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Check(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Io(_) | Error::Format(_) | Error::Version { .. } | Error::Corrupt(_) => Failure::Io(m),
            Error::Relation(_) | Error::Rejection { .. } | Error::NonFinite(..) | Error::NotCocycle(_) => Failure::Check(m),
            _ => Failure::Config(m),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn config(m: impl Into<String>) -> Failure {
    Failure::Config(m.into())
}

fn parse_phi(s: &str) -> Outcome<Phi> {
    s.parse().map_err(|e: Error| config(e.to_string()))
}

fn check_level(level: u32) -> Outcome<()> {
    if level == 0 || level > LEVEL_CAP {
        return Err(config(format!("level {level} outside 1..={LEVEL_CAP}")));
    }
    Ok(())
}

fn load_sheet(a: &SheetArgs) -> Outcome<SheetSample> {
    if let Some(path) = &a.input {
        if !path.is_file() {
            return Err(config(format!("input {} not found", path.display())));
        }
        return Ok(SheetSample::load_shs(path)?);
    }
    let name = a.sheet.as_deref().ok_or_else(|| config("no input: pass --sheet or --input"))?;
    check_level(a.level)?;
    let grid: Grid2D = make_dyadic_grid(a.level, 1.0, 1.0)?;
    let x = match name {
        "st" => sample_sheet(|s, t| s * t, &grid)?,
        "s+t" => sample_sheet(|s, t| s + t, &grid)?,
        "sinsin" => sample_sheet(|s, t| s.sin() * t.sin(), &grid)?,
        expr => {
            let e: meval::Expr = expr.parse().map_err(|e| config(format!("sheet expression: {e}")))?;
            let f = e.bind2("s", "t").map_err(|e| config(format!("sheet expression: {e}")))?;
            sample_sheet(f, &grid)?
        }
    };
    Ok(x)
}

fn fbs_params(alpha: f64, beta: f64, cutoff: f64, seed: u64) -> Outcome<FbsParams> {
    Ok(FbsParams::new(alpha, beta, cutoff, seed)?)
}

/// Writes outputs with a shared provenance stamp.
struct Sink {
    dir: PathBuf,
    name: &'static str,
    config: serde_json::Value,
    hash: String,
}

impl Sink {
    fn new(dir: &Path, name: &'static str, command: &Command) -> Outcome<Self> {
        let config = serde_json::to_value(command).map_err(|e| Failure::Io(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(config.to_string().as_bytes()));
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), name, config, hash })
    }

    fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.name))
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Outcome<()> {
        std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }

    fn csv(&self, body: &str) -> Outcome<()> {
        let head = format!("# roughsheet {VERSION}; config sha256 {}; all columns dimensionless\n", self.hash);
        self.write(&self.path("csv"), (head + body).as_bytes())
    }

    fn json(&self, result: &impl Serialize, pass: bool) -> Outcome<()> {
        let doc = serde_json::json!({
            "version": VERSION,
            "command": self.name,
            "config": self.config,
            "config_hash": self.hash,
            "pass": pass,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
        self.write(&self.path("json"), text.as_bytes())
    }
}

fn verdict(pass: bool, what: &str) -> Outcome<()> {
    if pass {
        Ok(())
    } else {
        Err(Failure::Check(format!("{what} failed")))
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Enhance(a) => {
            let sink = Sink::new(&cli.out, "enhance", &cli.command)?;
            let x = load_sheet(&a.sheet)?;
            let convention = match a.convention {
                Conv::Midpoint => Convention::Midpoint,
                Conv::Ito => Convention::Ito,
            };
            let b = enhance_smooth_with(&x, &EnhanceOptions { alpha: a.alpha, beta: a.beta, convention })?;
            let rep = verify_chen_with(&b, &x, a.tol, &VerifyOptions { seed: a.seed, ..Default::default() })?;
            save_roughsheet(&b, sink.path("rsh"))?;
            sink.json(&rep, rep.pass)?;
            verdict(rep.pass, "algebraic relations")
        }
        Command::Verify(a) => {
            if !a.input.is_file() {
                return Err(config(format!("input {} not found", a.input.display())));
            }
            let sink = Sink::new(&cli.out, "verify", &cli.command)?;
            let b: RoughSheet = load_roughsheet(&a.input)?;
            let rep = verify_chen_with(&b, b.sample(), a.tol, &VerifyOptions { seed: a.seed, ..Default::default() })?;
            let mut csv = String::from("relation,max_residual,samples,pass\n");
            for r in &rep.relations {
                csv += &format!("{},{:e},{},{}\n", r.id(), r.max_residual, r.samples, r.pass);
            }
            sink.csv(&csv)?;
            sink.json(&rep, rep.pass)?;
            verdict(rep.pass, "algebraic relations")
        }
        Command::Integrate(a) => {
            let sink = Sink::new(&cli.out, "integrate", &cli.command)?;
            let phi = parse_phi(&a.phi)?;
            let x = load_sheet(&a.sheet)?;
            let b = enhance_smooth_with(&x, &EnhanceOptions::default())?;
            let y = lift_phi(&phi, &x, &b, 8)?;
            let m = match a.measure {
                Meas::Dx => Measure::Dx,
                Meas::Dw => Measure::Dw,
            };
            let rep = rough_integral(&y, &b, m, &x.grid().full_box(), &IntegralOptions { stride: a.stride, verify: None })?;
            let pass = a.expect.map_or(true, |e| (rep.value - e).abs() <= a.tol);
            sink.csv(&format!("value,formula,correction,cells\n{:e},{:e},{:e},{}\n", rep.value, rep.formula, rep.correction, rep.cells))?;
            sink.json(&rep, pass)?;
            verdict(pass, "integral value")
        }
        Command::Fbs(a) => {
            check_level(a.level)?;
            let sink = Sink::new(&cli.out, "fbs", &cli.command)?;
            match a.study {
                Study::Convergence => {
                    let top = *a.cutoffs.last().ok_or_else(|| config("no cutoffs"))?;
                    let p = fbs_params(a.alpha, a.beta, top, a.seed)?;
                    let opts = ConvergenceOptions {
                        level: a.level,
                        exponents: (a.h, a.h2),
                        fields: vec![FieldId::A(Sig::X)],
                        norm: NormOptions::default(),
                        ..Default::default()
                    };
                    let rep = convergence_study(&p, &a.cutoffs, a.trials, &opts)?;
                    let pass = rep.decreasing(FieldId::A(Sig::X));
                    sink.csv(&rep.to_csv()?)?;
                    sink.json(&rep, pass)?;
                    verdict(pass, "monotone decay of the differences")
                }
                Study::Variance => {
                    let p = fbs_params(a.alpha, a.beta, a.cutoff, a.seed)?;
                    let rep = variance_scaling(&p, &VarianceOptions { level: a.level, samples: a.trials, ..Default::default() })?;
                    let pass = (0..2).all(|d| (rep.slopes[d] - rep.expected[d]).abs() <= 0.05);
                    sink.csv(&rep.to_csv()?)?;
                    sink.json(&rep, pass)?;
                    verdict(pass, "variance slopes")
                }
            }
        }
        Command::Strato(a) => {
            a.levels.iter().try_for_each(|&l| check_level(l))?;
            let sink = Sink::new(&cli.out, "strato", &cli.command)?;
            let phi = parse_phi(&a.phi)?;
            let p = fbs_params(a.alpha, a.beta, a.cutoff, a.seed)?;
            let opts = StratoOptions { levels: a.levels.clone(), trials: a.trials, range: a.range, stride: a.stride, ..Default::default() };
            let rep = stratonovich_mc_check(&phi, &p, &opts)?;
            let top = *a.levels.iter().max().expect("levels checked non-empty by the study");
            let pass = rep.row(top).is_some_and(|r| r.residual.mean <= a.tol);
            sink.csv(&rep.to_csv()?)?;
            sink.json(&rep, pass)?;
            verdict(pass, "residual bound")
        }
        Command::Ito(a) => {
            if a.hurst != 0.5 {
                return Err(config(format!("hurst {} unsupported; the comparison needs the Brownian sheet", a.hurst)));
            }
            check_level(a.level)?;
            let sink = Sink::new(&cli.out, "ito", &cli.command)?;
            let phi = parse_phi(&a.phi)?;
            let rep = ito_compare(&ItoOptions { level: a.level, trials: a.trials, stride: a.stride, phi, seed: a.seed })?;
            let pass = rep.difference_vanishes() && rep.c_ratio <= a.max_ratio;
            sink.csv(&rep.to_csv()?)?;
            sink.json(&rep, pass)?;
            verdict(pass, "Ito comparison")
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
