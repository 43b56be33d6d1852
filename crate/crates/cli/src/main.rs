//! `mcp-gap`: sharp Poincare constants of one-dimensional MCP(K,N) densities.
//!
//! JSON and CSV go to standard output, diagnostics to standard error.
//! Exit codes: 0 success, 1 selftest failure, 2 invalid input, 3 solver failure.

mod output;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mcp_gap_core::acceptance::{run_all, AcceptanceConfig};
use mcp_gap_core::bounds::{
    closed_form_bounds, intro_lower_bound, model_gap_bounds, muckenhoupt_bounds, sphere_eigenvalue,
    sturm_constant, von_renesse_constant,
};
use mcp_gap_core::geometry::{random_mcp_density, validate_mcp_density, ModelDensity};
use mcp_gap_core::sharp::{model_poincare, scan_profile, sharp_poincare, ScanProfile};
use mcp_gap_core::spectral::{spectral_gap, DEFAULT_CELLS};
use mcp_gap_core::{BoundaryConditions, CurvatureParams, Error, GridDensity, SharpOptions};

use output::{cell, round_json};

#[derive(Parser)]
#[command(
    name = "mcp-gap",
    version,
    about = "Sharp spectral-gap constants for MCP(K,N) model densities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Class constant for (K, N, D) with bounds and older constants alongside.
    Compute(ComputeArgs),
    /// Sweep of lambda[h_{K,N,D'}] over geometrically spaced D'.
    Scan(ScanArgs),
    /// Check a sampled density against the MCP(K,N) ratio condition.
    Validate(ValidateArgs),
    /// Closed-form and Muckenhoupt brackets for the model gap.
    Bounds(BoundsArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Params {
    /// Curvature lower bound K.
    #[arg(long = "K", id = "K", allow_negative_numbers = true)]
    k: f64,
    /// Dimension upper bound N > 1.
    #[arg(long = "N", id = "N", allow_negative_numbers = true)]
    n: f64,
}

impl Params {
    fn parse(&self) -> Result<CurvatureParams, Error> {
        CurvatureParams::new(self.k, self.n)
    }
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    params: Params,
    /// Diameter; capped at D_{K,N} when K > 0.
    #[arg(long = "D", allow_negative_numbers = true)]
    d: f64,
    /// Grid cells per solve.
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    n: usize,
    /// Also run a 512-point scan and report disagreement with the refined search.
    #[arg(long)]
    dense_scan: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    params: Params,
    /// Largest diameter; defaults to D_{K,N} when K > 0.
    #[arg(long = "D", allow_negative_numbers = true)]
    d: Option<f64>,
    #[arg(long, default_value_t = 32)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    output: Format,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    params: Params,
    /// Density file in grid JSON form; standard input when absent or `-`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Generate a random MCP(K,N) density instead, write it here, then validate it.
    #[arg(long, requires = "d", conflicts_with = "input")]
    density_out: Option<PathBuf>,
    /// Support length of the generated density.
    #[arg(long = "D", allow_negative_numbers = true)]
    d: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells of the generated density.
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    n: usize,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    params: Params,
    #[arg(long = "D", allow_negative_numbers = true)]
    d: f64,
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    n: usize,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = DEFAULT_CELLS)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    output: Option<Format>,
}

enum Failure {
    Input(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn print_json(mut v: Value) -> io::Result<()> {
    round_json(&mut v);
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &v)?;
    writeln!(out)
}

fn to_value<T: serde::Serialize>(x: T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn effective_diameter(params: CurvatureParams, d: f64) -> Result<f64, Failure> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Failure::Input(format!(
            "D must be positive and finite, got {d}"
        )));
    }
    let dkn = params.diameter_bound();
    if d > dkn {
        eprintln!("note: D = {d} exceeds D_{{K,N}} = {dkn}; using D_{{K,N}}");
        return Ok(dkn);
    }
    Ok(d)
}

fn compute(args: &ComputeArgs) -> CmdResult {
    let params = args.params.parse()?;
    let d = effective_diameter(params, args.d)?;
    let sharp = sharp_poincare(
        params,
        d,
        SharpOptions {
            n: args.n,
            dense_scan: args.dense_scan,
        },
    )?;
    if let Some(dis) = sharp.disagreement {
        eprintln!(
            "warning: coarse and dense searches disagree (argmin {} vs {})",
            dis.coarse_argmin, dis.dense_argmin
        );
    }
    let model = model_poincare(params, sharp.d, args.n)?;
    let r = sharp.d / 2.0;
    let mut doc = to_value(sharp.summary());
    let extra = json!({
        "error": sharp.error,
        "disagreement": sharp.disagreement,
        "model": model,
        "intro_lower_bound": intro_lower_bound(params, sharp.d),
        "closed_form_bounds": closed_form_bounds(params, sharp.d)?,
        "sphere_eigenvalue": sphere_eigenvalue(params).ok(),
        "r": r,
        "sturm_constant": sturm_constant(params, r),
        "von_renesse_constant": von_renesse_constant(params, r),
    });
    doc.as_object_mut()
        .expect("summary is an object")
        .extend(extra.as_object().expect("object").clone());
    match args.output {
        Format::Json => print_json(doc)?,
        Format::Csv => {
            let mut out = io::stdout().lock();
            writeln!(out, "key,value")?;
            let flat = [
                ("K", params.k()),
                ("N", params.n()),
                ("D", sharp.d),
                ("value", sharp.value),
                ("error", sharp.error),
                ("argmin", sharp.minimizing_d_prime),
                ("model", model.value),
                ("intro_lower_bound", intro_lower_bound(params, sharp.d)),
                ("sturm_constant", sturm_constant(params, r)),
                ("von_renesse_constant", von_renesse_constant(params, r)),
            ];
            for (key, v) in flat {
                writeln!(out, "{key},{}", cell(v))?;
            }
            writeln!(out, "method,{}", sharp.method)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_scan(profile: &ScanProfile) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "D_prime,lambda,scaled,error")?;
    for row in &profile.rows {
        writeln!(
            out,
            "{},{},{},{}",
            cell(row.d_prime),
            cell(row.lambda),
            cell(row.scaled),
            cell(row.error)
        )?;
    }
    let expected = if profile.scaled_as_expected {
        "as expected"
    } else {
        "NOT as expected"
    };
    writeln!(
        out,
        "# lambda: {}; scaled: {} ({expected})",
        profile.lambda_trend, profile.scaled_trend
    )
}

fn scan(args: &ScanArgs) -> CmdResult {
    let params = args.params.parse()?;
    let d = match args.d {
        Some(d) => effective_diameter(params, d)?,
        None if params.k() > 0.0 => params.diameter_bound(),
        None => return Err(Failure::Input("--D is required when K <= 0".into())),
    };
    let profile = scan_profile(params, d, args.count, args.n)?;
    match args.output {
        Format::Csv => write_scan(&profile)?,
        Format::Json => print_json(to_value(&profile))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn read_density(path: Option<&PathBuf>) -> Result<GridDensity, Failure> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p)?,
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("bad density file: {e}")))
}

fn validate(args: &ValidateArgs) -> CmdResult {
    let params = args.params.parse()?;
    let h = match (&args.density_out, args.d) {
        (Some(path), Some(d)) => {
            let h = random_mcp_density(params, d, args.seed, args.n)?;
            fs::write(path, serde_json::to_string(&h).expect("grid serializes"))?;
            h
        }
        _ => read_density(args.input.as_ref())?,
    };
    let report = validate_mcp_density(&h, params)?;
    let gap = match spectral_gap(&h, BoundaryConditions::NEUMANN_NEUMANN) {
        Ok(r) => Some(r.summary(false)),
        Err(e) => {
            eprintln!("note: no gap estimate: {e}");
            None
        }
    };
    let model = if report.diameter_ok {
        let d = h.len().min(params.diameter_bound());
        model_poincare(params, d, DEFAULT_CELLS).ok()
    } else {
        None
    };
    print_json(json!({ "validation": report, "gap": gap, "model": model }))?;
    Ok(ExitCode::SUCCESS)
}

fn bounds(args: &BoundsArgs) -> CmdResult {
    let params = args.params.parse()?;
    let d = effective_diameter(params, args.d)?;
    let muck = if params.is_maximal_diameter(d) {
        None
    } else {
        let h = ModelDensity::new(params, d)?.sample(args.n)?;
        let m = args.n;
        Some(muckenhoupt_bounds(&h.restrict(m / 2, m)?)?)
    };
    print_json(json!({
        "K": params.k(),
        "N": params.n(),
        "D": d,
        "scaled": closed_form_bounds(params, d)?,
        "lambda": model_gap_bounds(params, d)?,
        "muckenhoupt": muck,
        "intro_lower_bound": intro_lower_bound(params, d),
        "sphere_eigenvalue": sphere_eigenvalue(params).ok(),
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn selftest(args: &SelftestArgs) -> CmdResult {
    let outcomes = run_all(AcceptanceConfig {
        n: args.n,
        seed: args.seed,
    })?;
    let all = outcomes.iter().all(|o| o.pass);
    if args.output == Some(Format::Json) {
        print_json(to_value(&outcomes))?;
    } else {
        let mut out = io::stdout().lock();
        for o in &outcomes {
            writeln!(out, "{o}")?;
        }
        let passed = outcomes.iter().filter(|o| o.pass).count();
        writeln!(out, "{passed}/{} criteria passed", outcomes.len())?;
    }
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("MCP_GAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::Input(format!(
            "MCP_GAP_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Solver(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Compute(a) => compute(a),
        Command::Scan(a) => scan(a),
        Command::Validate(a) => validate(a),
        Command::Bounds(a) => bounds(a),
        Command::Selftest(a) => selftest(a),
    });
    match result {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
