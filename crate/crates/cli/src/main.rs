//! `irs`: sweeps, evaluations and solver runs for the IRS-assisted downlink.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use irs_core::channel::build_statistics;
use irs_core::rate::upper_bound_rate_closed_form;
use irs_core::scenario::{load_scenario, preset_distance_checks, ScenarioSource, FIG3_PRESET};
use irs_core::ssca::{write_trace_csv, FinalIterate};
use irs_core::sweep::{desk_solver, run_eval, OutputDir, DESK_SAMPLES};
use irs_core::validation::validate_oracles;
use irs_core::{design_scheme, run_sweep, Scheme, ScenarioConfig, SolverConfig, SweepParameter, SweepSpec};

#[derive(Parser)]
#[command(name = "irs", version, about = "IRS phase-shift design and ergodic-rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one parameter and evaluate every scheme at each value.
    Sweep(SweepArgs),
    /// Evaluate schemes at a single scenario.
    Eval(EvalArgs),
    /// Run the phase-shift solver and write its trace.
    Solve(SolveArgs),
    /// Check the closed forms against brute-force oracles.
    ValidateOracles(OracleArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario (default: paper-fig3).
    #[arg(long)]
    preset: Option<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(ScenarioConfig, String)> {
        let source = match (&self.scenario, &self.preset) {
            (Some(path), _) => ScenarioSource::File(path.clone()),
            (None, Some(name)) => ScenarioSource::Preset(name.clone()),
            (None, None) => ScenarioSource::Preset(FIG3_PRESET.to_string()),
        };
        let cfg = load_scenario(&source)?;
        if matches!(&source, ScenarioSource::Preset(name) if name == FIG3_PRESET) {
            for check in preset_distance_checks(&cfg).iter().filter(|c| !c.consistent()) {
                log::warn!(
                    "{}: stated {:.2} m, geometry gives {:.2} m (residual {:+.2} m)",
                    check.link,
                    check.stated,
                    check.computed,
                    check.residual()
                );
            }
        }
        Ok((cfg, source.id()))
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Solver iterations T.
    #[arg(long, default_value_t = 300)]
    iterations: usize,
    /// Channel samples per iteration L.
    #[arg(long, default_value_t = 10)]
    batch: usize,
    /// Proximal weight τ (default: calibrated from the first gradients).
    #[arg(long)]
    tau: Option<f64>,
    /// Deploy the last surrogate maximizer instead of the projected iterate.
    #[arg(long)]
    last_surrogate: bool,
}

impl SolverArgs {
    fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            iterations: self.iterations,
            samples_per_iteration: self.batch,
            tau: self.tau,
            output: if self.last_surrogate {
                FinalIterate::LastSurrogate
            } else {
                FinalIterate::Projected
            },
            ..desk_solver(seed)
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Parameter to sweep: irs-size, rician, delta or distance.
    #[arg(long)]
    sweep: SweepParameter,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Comma-separated scheme names (default: all five).
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Monte Carlo samples per point.
    #[arg(long, default_value_t = DESK_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for results.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    #[arg(long, default_value_t = DESK_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Scheme whose phase shifts to design.
    #[arg(long, default_value = "proposed")]
    scheme: Scheme,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for trace.csv, solution.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random scenarios to check.
    #[arg(long, default_value_t = 10)]
    scenarios: usize,
    /// Draws per sampled expectation.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Optional directory for oracles.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn schemes_or_all(schemes: Option<Vec<Scheme>>) -> Vec<Scheme> {
    schemes.unwrap_or_else(|| Scheme::ALL.to_vec())
}

fn print_rows(table: &irs_core::SweepTable) {
    println!("{:<20} {:>10} {:>10} {:>10} {:>10}", "scheme", "value", "ub_rate", "mc_rate", "stderr");
    for r in &table.rows {
        println!(
            "{:<20} {:>10} {:>10.4} {:>10.4} {:>10.2e}",
            r.scheme.name(),
            r.value,
            r.ub_rate,
            r.mc_rate,
            r.mc_stderr
        );
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let (cfg, id) = args.scenario.load()?;
    let spec = SweepSpec {
        parameter: args.sweep,
        values: args.values,
        schemes: schemes_or_all(args.schemes),
        n_samples: args.samples,
        solver: args.solver.config(args.seed),
        seed: args.seed,
        workers: args.workers,
    };
    let out = OutputDir(args.out);
    let table = run_sweep(&spec, &cfg, &id, Some(&out))?;
    print_rows(&table);
    eprintln!("wrote {}", out.results().display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let (cfg, id) = args.scenario.load()?;
    let out = OutputDir(args.out);
    let solver = args.solver.config(args.seed);
    let table = run_eval(&schemes_or_all(args.schemes), args.samples, &solver, args.seed, &cfg, &id, Some(&out))?;
    print_rows(&table);
    eprintln!("wrote {}", out.results().display());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve(args: SolveArgs) -> Result<()> {
    let (cfg, id) = args.scenario.load()?;
    let stats = build_statistics(&cfg)?;
    let solver = args.solver.config(args.seed);
    let design = design_scheme(&args.scheme.spec(), &stats, &solver)?;
    let Some(output) = &design.solver else {
        bail!("scheme `{}` does not run the solver", args.scheme);
    };
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_json(
        &args.out.join("manifest.json"),
        &json!({
            "tool": "irs",
            "version": env!("CARGO_PKG_VERSION"),
            "scenario_id": id,
            "scheme": args.scheme,
            "seed": args.seed,
            "solver": solver,
        }),
    )?;
    write_trace_csv(&args.out.join("trace.csv"), &output.trace)?;
    let ub = upper_bound_rate_closed_form(&design.phases[0], &stats)?;
    write_json(
        &args.out.join("solution.json"),
        &json!({
            "phases_rad": design.phases[0].phases(),
            "converged_at": output.converged_at,
            "tau": output.tau,
            "ub_rate": ub,
        }),
    )?;
    println!("scheme {}: UB rate {ub:.4} bit/s/Hz", args.scheme);
    match output.converged_at {
        Some(t) => println!("fixed-point gap below {} at t = {t}", solver.tolerance),
        None => println!("fixed-point gap stayed above {}", solver.tolerance),
    }
    eprintln!("wrote {}", args.out.join("trace.csv").display());
    Ok(())
}

fn validate(args: OracleArgs) -> Result<bool> {
    let checks = validate_oracles(args.seed, args.scenarios, args.samples)?;
    for c in &checks {
        println!(
            "{} {:<50} worst {:.2e} (tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.tolerance
        );
    }
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join("oracles.json"), &serde_json::to_value(&checks)?)?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::Solve(a) => solve(a).map(|_| true),
        Command::ValidateOracles(a) => validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
