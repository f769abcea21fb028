use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use thinflow::harness::mms::{mms_1d, mms_3d, mms_extended, OrderReport, OrderVerdict};
use thinflow::harness::output::read_json;
use thinflow::harness::run::RunSummary;
use thinflow::harness::sweep::{reverdict, verify_sweep};
use thinflow::harness::{parse_config, run1d, run3d, sweep, verify_run, RunConfig};
use thinflow::solver1d::Formulation;
use thinflow::{Error, FluidParams, Result};

#[derive(Parser)]
#[command(
    name = "thinflow",
    version,
    about = "Thin-domain compressible flow solvers and diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set fluid.kappa=0.3`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic 1D run.
    Run1d(ConfigArgs),
    /// Thin-box 3D run with its 1D reference.
    Run3d(ConfigArgs),
    /// One 3D run per entry of `grid.eps_list`.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
        /// Comma-separated thicknesses; overrides `grid.eps_list`.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Convergence checks and re-derivation of recorded runs.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Print the summary and verdicts of a run or sweep directory, recomputed
    /// from its CSV files.
    Report { dir: PathBuf },
}

#[derive(Subcommand)]
enum Verify {
    /// Manufactured-solution order checks.
    Mms {
        #[arg(long, value_enum, default_value_t = Dim::All)]
        dim: Dim,
    },
    /// Re-derive a run or sweep directory from its snapshots.
    Run { dir: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dim {
    #[value(name = "1")]
    One,
    #[value(name = "3")]
    Three,
    All,
}

fn load(args: &ConfigArgs, extra: Vec<String>) -> Result<RunConfig> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    let mut ov = args.overrides.clone();
    ov.extend(extra);
    if let Some(out) = &args.out {
        ov.push(format!(
            "output.dir={}",
            toml_string(&out.to_string_lossy())
        ));
    }
    parse_config(&text, &ov)
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn print_summary(s: &RunSummary) {
    println!("kind            {}", s.kind);
    println!("config_digest   {}", s.config_digest);
    println!("steps           {}", s.steps);
    println!("end_time        {}", s.end_time);
    println!("wall_clock_s    {:.2}", s.wall_clock_s);
    println!("mass_drift      {:e}", s.mass_drift);
    if let Some(e) = s.eps {
        println!("eps             {e}");
    }
    if let Some(e) = s.initial_e_norm {
        println!("E_norm(0)       {e:e}");
    }
    if let Some(sup) = s.sup {
        println!("sup E_norm      {:e}", sup.rel_entropy_norm);
        println!("sup metric_rho  {:e}", sup.metric_density);
        println!("sup metric_vel  {:e}", sup.metric_velocity);
    }
    if let Some(g) = s.gronwall {
        match g.value() {
            Some(r) => println!("gronwall_ratio  {r}"),
            None => println!("gronwall_ratio  exactly prepared"),
        }
    }
    if let Some(k) = s.max_kappa_entropy_increase {
        println!("max dE_kappa    {k:e}");
    }
}

fn print_sweep(dir: &Path) -> Result<bool> {
    let res = reverdict(dir)?;
    println!("eps        delta      sup_E_norm     gronwall   metric_rho     metric_vel     steps   status");
    for r in &res.records {
        let f = |x: Option<f64>| {
            x.map(|v| format!("{v:<14.6e}"))
                .unwrap_or(format!("{:<14}", "-"))
        };
        println!(
            "{:<10} {:<10} {} {:<10} {} {} {:<7} {}",
            r.eps,
            r.delta,
            f(r.sup_e_norm),
            r.gronwall_ratio
                .map(|g| format!("{g:.4}"))
                .unwrap_or("-".into()),
            f(r.sup_metric_density),
            f(r.sup_metric_velocity),
            r.steps,
            r.status
        );
    }
    for v in &res.verdicts {
        println!(
            "{} {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    if let Some(s) = res.empirical_slope {
        println!("empirical slope of sup E_norm in eps: {s:.3}");
    }
    Ok(res.passed() || res.records.len() < 2 && res.complete)
}

fn verification(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Verification(what.to_string()))
    }
}

fn mms(dim: Dim) -> Result<()> {
    let p = FluidParams::default();
    let mut reports: Vec<OrderReport> = Vec::new();
    if dim != Dim::Three {
        reports.push(mms_1d(Formulation::Primitive, &[64, 128, 256], 0.1, &p)?);
        reports.push(mms_1d(Formulation::Augmented, &[64, 128, 256], 0.1, &p)?);
    }
    if dim != Dim::One {
        reports.push(mms_3d(&[(4, 32), (8, 64), (16, 128)], 0.25, 0.01, &p, 1)?);
        reports.push(mms_extended(&[64, 128, 256], 2, 0.25, 0.1, &p)?);
    }
    for r in &reports {
        println!("{}", r.summary());
    }
    verification(
        reports.iter().all(|r| r.verdict != OrderVerdict::Fail),
        "observed order below threshold",
    )
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run1d(args) => {
            let cfg = load(&args, Vec::new())?;
            let (summary, _) = run1d(&cfg, Some(&cfg.output.dir))?;
            print_summary(&summary);
        }
        Command::Run3d(args) => {
            let cfg = load(&args, Vec::new())?;
            let run = run3d(&cfg, Some(&cfg.output.dir))?;
            print_summary(&run.summary);
        }
        Command::Sweep { args, eps } => {
            let extra = eps
                .map(|e| {
                    let list: Vec<String> = e.iter().map(|x| format!("{x:?}")).collect();
                    vec![format!("grid.eps_list=[{}]", list.join(", "))]
                })
                .unwrap_or_default();
            let cfg = load(&args, extra)?;
            let res = sweep(&cfg, Some(&cfg.output.dir))?;
            let ok = print_sweep(&cfg.output.dir)?;
            if !res.complete {
                let failed = res
                    .records
                    .last()
                    .map(|r| r.status.clone())
                    .unwrap_or_default();
                return Err(Error::Verification(format!("sweep incomplete: {failed}")));
            }
            verification(ok, "sweep verdicts failed")?;
        }
        Command::Verify { what } => match what {
            Verify::Mms { dim } => mms(dim)?,
            Verify::Run { dir } => {
                let rows = if dir.join("sweep.json").exists() {
                    verify_sweep(&dir)?
                } else {
                    verify_run(&dir)?.rows_checked
                };
                println!(
                    "{}: {rows} recorded rows re-derived from snapshots",
                    dir.display()
                );
            }
        },
        Command::Report { dir } => {
            if dir.join("sweep.csv").exists() {
                verification(print_sweep(&dir)?, "sweep verdicts failed")?;
            } else {
                let summary: RunSummary = read_json(&dir.join("report.json"))?;
                print_summary(&summary);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
