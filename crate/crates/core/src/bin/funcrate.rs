use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use funcrate::report::{emit_csv, emit_json, emit_svg, parse_json};
use funcrate::{load_config, run_experiment, verify_kernels, Error, RunOptions};

/// Convergence rates of Riemann-sum approximations to integral functionals.
#[derive(Parser)]
#[command(name = "funcrate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and list every violation.
    Validate { config: PathBuf },
    /// Run an experiment and write CSV, JSON and SVG reports.
    Run {
        config: PathBuf,
        /// directory for the reports, overriding the configured paths
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// worker threads (defaults to FUNCRATE_THREADS, then all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-render the SVG plot of a JSON report.
    Plot {
        report: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the transition-kernel bound suite for a configuration.
    VerifyKernels {
        config: PathBuf,
        /// print the suite as JSON
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Validation(Vec<funcrate::Violation>),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(v) => Failure::Validation(v),
            e => Failure::Runtime(e),
        }
    }
}

fn validate(path: &Path) -> Result<(), Failure> {
    load_config(path)?;
    println!("{}: ok", path.display());
    Ok(())
}

fn run(path: &Path, out_dir: Option<&Path>, threads: Option<usize>) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    let outputs = match out_dir {
        Some(dir) => cfg.outputs.relocate(dir),
        None => cfg.outputs.clone(),
    };
    let report = run_experiment(&cfg, RunOptions { threads })?;
    emit_csv(&report, &outputs.csv)?;
    emit_json(&report, &outputs.json)?;
    emit_svg(&report, &outputs.svg)?;
    println!("{:>8} {:>14} {:>14} {:>14}", "n", "weak_err", "strong_err_p", "lp_root");
    for r in &report.rows {
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.n, r.weak_err, r.strong_err_p, r.strong_lp_root
        );
    }
    if let Some(f) = &report.fits.strong {
        println!("strong slope {:.4} ({}, R² {:.4})", f.slope, f.abscissa_mode.name(), f.r_squared);
    }
    println!("calibration C (thm1) = {:.6e}", report.calibration.thm1);
    println!(
        "wrote {}, {}, {} in {:.2}s",
        outputs.csv.display(),
        outputs.json.display(),
        outputs.svg.display(),
        report.timing.wall_seconds
    );
    Ok(())
}

fn plot(path: &Path, out_dir: Option<&Path>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let report = parse_json(&text)?;
    let file = path.with_extension("svg");
    let target = match out_dir {
        Some(dir) => dir.join(file.file_name().unwrap_or_else(|| "report.svg".as_ref())),
        None => file,
    };
    emit_svg(&report, &target)?;
    println!("wrote {}", target.display());
    Ok(())
}

fn kernels(path: &Path, json: bool) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    let suite = verify_kernels(&cfg)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&suite).map_err(Error::from)?);
    } else {
        let opt = |x: Option<f64>| x.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.6e}"));
        println!("process            {}", suite.process);
        println!("majorant Q         {}", suite.majorant);
        println!("weight V           {}", suite.weight);
        println!("∫Q                 {:.12}", suite.majorant_mass);
        println!("density constant   {}", opt(suite.density_constant));
        println!("derivative const.  {}", opt(suite.derivative_constant));
        println!("closed-form error  {:.3e}", suite.closed_form_error);
        println!(
            "V axioms           ratio {:.6}, monotonicity failures {}, min {:.6}",
            suite.weight_axioms.submultiplicative_ratio,
            suite.weight_axioms.monotonicity_failures,
            suite.weight_axioms.min_value
        );
        println!("integrability      {}", suite.integrability.reason);
    }
    if suite.passed() {
        println!("kernel suite: PASS");
        Ok(())
    } else {
        Err(Failure::Runtime(Error::Report("kernel suite failed".into())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { config } => validate(config),
        Command::Run {
            config,
            out_dir,
            threads,
        } => run(config, out_dir.as_deref(), *threads),
        Command::Plot { report, out_dir } => plot(report, out_dir.as_deref()),
        Command::VerifyKernels { config, json } => kernels(config, *json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(violations)) => {
            eprintln!("invalid configuration:");
            for v in &violations {
                eprintln!("  {v}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
