use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nodal_lab::experiment::{fit_table, run_experiment, run_spectrum, ExperimentConfig, ExperimentKind, Manifest, ScalingModel};
use nodal_lab::LabError;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nodal-lab",
    version,
    about = "Nodal domain, doubling index, capacity and heat kernel experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured fields and write mode and grid files.
    Spectrum(Common),
    /// Nodal domain table, plus deficiency ratios when deltas are given.
    Nodal(Common),
    /// Subcube chains around every domain's max point.
    Chain(Common),
    /// Condenser capacities, plus nodal condensers when fields and deltas are given.
    Capacity(Common),
    /// Gaussian bounds and the boundary-ratio fit for the geometry's heat kernel.
    HeatBounds(Common),
    /// Smallest centered inradius per field and the scaling fits.
    Scaling(Common),
    /// Log-log fit of one CSV column against its `lambda` column.
    Fit(FitArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Run with this single seed instead of the configured list.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    table: PathBuf,
    /// Column holding y.
    #[arg(long, default_value = "min_centered_inradius")]
    y: String,
    #[arg(long, default_value = "pure_power")]
    model: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Write the fit as JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::InvalidConfig(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn set_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
}

fn load(common: &Common, kind: Option<ExperimentKind>) -> Result<ExperimentConfig, LabError> {
    let text =
        std::fs::read_to_string(&common.config).map_err(|e| LabError::InvalidConfig(vec![format!("{}: {e}", common.config.display())]))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(kind) = kind {
        if config.kind != kind {
            return Err(LabError::InvalidConfig(vec![format!(
                "config kind is {} but the subcommand runs {}",
                config.kind.name(),
                kind.name()
            )]));
        }
    }
    if let Some(dir) = &common.out {
        config.output_dir = dir.clone();
    }
    if let Some(seed) = common.seed_override {
        config.seeds = vec![seed];
    }
    config.validate()?;
    Ok(config)
}

fn report(manifest: &Manifest) -> ExitCode {
    println!(
        "{}: {} instances, {} skipped, {} failed, {} artifacts in {}",
        manifest.kind.name(),
        manifest.instances,
        manifest.skipped.len(),
        manifest.failures.len(),
        manifest.artifacts.len(),
        manifest.config.output_dir.display()
    );
    for f in &manifest.failures {
        eprintln!("failed {}: {}", f.instance, f.error);
    }
    if manifest.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn run(common: &Common, kind: Option<ExperimentKind>) -> ExitCode {
    set_threads(common.threads);
    let result = load(common, kind).and_then(|c| if kind.is_some() { run_experiment(&c) } else { run_spectrum(&c) });
    match result {
        Ok(m) => report(&m),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn fit(args: &FitArgs) -> ExitCode {
    set_threads(args.threads);
    let result = args
        .model
        .parse::<ScalingModel>()
        .and_then(|m| fit_table(&args.table, &args.y, m, args.dim))
        .and_then(|f| {
            let text = serde_json::to_string_pretty(&f)?;
            match &args.out {
                Some(p) => std::fs::write(p, text + "\n")?,
                None => println!("{text}"),
            }
            Ok(())
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Spectrum(c) => run(c, None),
        Command::Nodal(c) => run(c, Some(ExperimentKind::Nodal)),
        Command::Chain(c) => run(c, Some(ExperimentKind::Chain)),
        Command::Capacity(c) => run(c, Some(ExperimentKind::Capacity)),
        Command::HeatBounds(c) => run(c, Some(ExperimentKind::HeatBounds)),
        Command::Scaling(c) => run(c, Some(ExperimentKind::Scaling)),
        Command::Fit(a) => fit(a),
    }
}
