use bhk_cli::config::Config;
use bhk_cli::error::Result;
use bhk_cli::experiments::{run_experiment, Experiment};
use bhk_core::besov::{besov_wh_norm, BesovParams};
use bhk_core::grid::Grid;
use bhk_core::herz::{weak_herz_norm, HerzParams};
use bhk_core::lp::LpFamily;
use bhk_core::presets::{preset_field, Preset};
use bhk_core::report::NormReport;
use bhk_core::sobolev_wh_norm;
use clap::{Args, Parser};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for weak-Herz / Besov-weak-Herz norms and mild
/// Navier-Stokes solutions.
#[derive(Parser)]
#[command(name = "bhk", version, about)]
enum Cli {
    /// Norm tables for a preset or field file.
    Norms(RunArgs),
    /// Sandwich / Sobolev-embedding ratio sweeps.
    Embeddings(RunArgs),
    /// Hoelder inequality ratio sweep.
    Holder(RunArgs),
    /// Heat-semigroup decay-rate fits.
    HeatDecay(RunArgs),
    /// Order-zero multiplier norm ratios.
    MultiplierBound(RunArgs),
    /// Convolution-operator norm ratios.
    ConvolutionBound(RunArgs),
    /// Bilinear-term constant estimation.
    BilinearK(RunArgs),
    /// Picard mild-solution run with delta bisection.
    Solve(RunArgs),
    /// Self-similarity of the mild solution.
    SelfSimilar(RunArgs),
    /// Weak-star pairing decay rate.
    Weakstar(RunArgs),
    /// Long-time comparison of two solutions.
    Asymptotic(RunArgs),
    /// Critical-norm rescale invariance.
    CriticalitySweep(RunArgs),
    /// Evaluate one norm of a stored field.
    Norm(NormArgs),
    /// Sample a preset field into a BHF1 file.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Measure inequality constants and freeze ceilings instead of
    /// asserting against a committed ceilings file.
    #[arg(long)]
    calibrate: bool,
    /// Output directory (overrides run.out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct NormArgs {
    /// BHF1 field file.
    #[arg(long)]
    field: PathBuf,
    /// Space: wk, swk or bwk.
    #[arg(long)]
    space: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    p: f64,
    /// Outer summability; `inf` accepted.
    #[arg(long)]
    q: String,
    /// Regularity exponent (swk, bwk).
    #[arg(long)]
    s: Option<f64>,
    /// Block summability (bwk); `inf` accepted.
    #[arg(long)]
    r: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// Preset name, e.g. `power(1)` or `rotational`.
    #[arg(long)]
    preset: String,
    /// Grid as n,N,L.
    #[arg(long)]
    grid: String,
    /// Output BHF1 path.
    #[arg(long)]
    out: PathBuf,
    /// Seed recorded in the sidecar (used by random presets).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<bool> {
    let cli = Cli::parse();
    let (experiment, args) = match cli {
        Cli::Norms(a) => (Experiment::Norms, a),
        Cli::Embeddings(a) => (Experiment::Embeddings, a),
        Cli::Holder(a) => (Experiment::Holder, a),
        Cli::HeatDecay(a) => (Experiment::HeatDecay, a),
        Cli::MultiplierBound(a) => (Experiment::MultiplierBound, a),
        Cli::ConvolutionBound(a) => (Experiment::ConvolutionBound, a),
        Cli::BilinearK(a) => (Experiment::BilinearK, a),
        Cli::Solve(a) => (Experiment::Solve, a),
        Cli::SelfSimilar(a) => (Experiment::SelfSimilar, a),
        Cli::Weakstar(a) => (Experiment::Weakstar, a),
        Cli::Asymptotic(a) => (Experiment::Asymptotic, a),
        Cli::CriticalitySweep(a) => (Experiment::CriticalitySweep, a),
        Cli::Norm(a) => return norm_command(a).map(|()| true),
        Cli::Gen(a) => return gen_command(a).map(|()| true),
    };
    let mut cfg = Config::load(&args.config)?;
    if let Some(out) = args.out {
        cfg.set("run.out", out.display());
    }
    if let Some(seed) = args.seed {
        cfg.set("run.seed", seed);
    }
    let outcome = run_experiment(experiment, &cfg, args.calibrate)?;
    for a in &outcome.summary.assertions {
        let verdict = if a.pass { "pass" } else { "FAIL" };
        println!(
            "[{verdict}] {}: measured {:.6e} vs {} {:.6e}",
            a.name, a.measured, a.direction, a.bound
        );
    }
    println!(
        "{}: {} -> {}",
        experiment.name(),
        if outcome.summary.all_pass { "ok" } else { "failed" },
        outcome.out_dir.display()
    );
    Ok(outcome.summary.all_pass)
}

fn norm_command(args: NormArgs) -> Result<()> {
    let field = bhk_core::io::read_field(&args.field)?;
    let field = if field.is_scalar() {
        field
    } else {
        field.magnitude()?
    };
    let q = bhk_cli::config::parse_f64(&args.q)
        .map_err(|_| bhk_cli::CliError::Config(format!("bad q `{}`", args.q)))?;
    let hp = HerzParams::new(args.alpha, args.p, q)?;
    let report = match args.space.as_str() {
        "wk" => {
            let profile = weak_herz_norm(&field, &hp)?;
            NormReport::from_annuli("wk", serde_json::to_value(hp).unwrap(), &profile)
        }
        "swk" => {
            let s = args.s.ok_or_else(|| {
                bhk_cli::CliError::Config("swk needs --s".into())
            })?;
            let aggregate = sobolev_wh_norm(&field, &hp, s)?;
            let pot = bhk_core::lp::riesz_potential(&field, s)?;
            let profile = weak_herz_norm(&pot, &hp)?;
            let mut r = NormReport::from_annuli(
                "swk",
                serde_json::json!({"alpha": hp.alpha, "p": hp.p, "q": hp.q, "s": s}),
                &profile,
            );
            r.aggregate = aggregate;
            r
        }
        "bwk" => {
            let s = args.s.ok_or_else(|| {
                bhk_cli::CliError::Config("bwk needs --s".into())
            })?;
            let r = args
                .r
                .as_deref()
                .ok_or_else(|| bhk_cli::CliError::Config("bwk needs --r".into()))?;
            let r = bhk_cli::config::parse_f64(r)
                .map_err(|_| bhk_cli::CliError::Config(format!("bad r `{r:?}`")))?;
            let family = LpFamily::build(field.grid())?;
            let bp = BesovParams { herz: hp, s, r };
            let profile = besov_wh_norm(&field, &family, &bp)?;
            NormReport::from_blocks("bwk", serde_json::to_value(bp).unwrap(), &profile)
        }
        other => {
            return Err(bhk_cli::CliError::Config(format!(
                "--space must be wk|swk|bwk, got `{other}`"
            )))
        }
    };
    println!("{}", report.to_json());
    Ok(())
}

fn gen_command(args: GenArgs) -> Result<()> {
    let parts: Vec<&str> = args.grid.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bhk_cli::CliError::Config(format!(
            "--grid expects n,N,L: got `{}`",
            args.grid
        )));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| bhk_cli::CliError::Config("bad n".into()))?;
    let size: usize = parts[1]
        .parse()
        .map_err(|_| bhk_cli::CliError::Config("bad N".into()))?;
    let l: f64 = parts[2]
        .parse()
        .map_err(|_| bhk_cli::CliError::Config("bad L".into()))?;
    let grid = Grid::new(n, size, l)?;
    let preset = Preset::parse(&args.preset)?;
    let field = preset_field(&preset, &grid)?;
    bhk_core::io::write_field(&field, &args.out)?;
    bhk_core::io::write_sidecar(
        &args.out,
        &serde_json::json!({
            "preset": args.preset,
            "grid": {"n": n, "N": size, "L": l},
            "seed": args.seed,
            "components": field.components(),
        }),
    )?;
    println!("wrote {}", args.out.display());
    Ok(())
}
