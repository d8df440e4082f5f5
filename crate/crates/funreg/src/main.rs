use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use funreg::commands;
use funreg::config::{Overrides, RunConfig};
use funreg::io;
use funreg::{artifact, Error, Result};
use funreg_core::synth::SynthScenario;

#[derive(Parser)]
#[command(name = "funreg", version, about = "Non-linear function-on-function regression")]
struct Cli {
    /// Print machine-readable JSON on stdout instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Fflm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Quadratic,
    PlantedRanks,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known ground truth.
    Synth {
        /// Scenario JSON file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        scenario: Option<PathBuf>,
        /// Built-in scenario instead of a file.
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 500)]
        subjects: usize,
        /// Observation noise for the quadratic preset.
        #[arg(long, default_value_t = 0.05)]
        noise_sd: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a model and write the artifact and diagnostics.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory for diagnostics and held-out reports.
        #[arg(long)]
        reports: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fit the linear baseline instead of the network.
        #[arg(long)]
        baseline: Option<Baseline>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Predict response curves for the covariates in a dataset file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against observed responses.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Predictions-format or dataset-format file with the true curves.
        #[arg(long)]
        truth: PathBuf,
        /// Also write the metrics JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalue and variance-explained tables of a trained model.
    FpcaReport {
        #[arg(long)]
        model: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            scenario,
            preset,
            subjects,
            noise_sd,
            out,
            seed,
        } => {
            let mut s = match (scenario, preset) {
                (Some(path), _) => io::read_json::<SynthScenario>(&path)?,
                (None, Some(Preset::Quadratic)) => SynthScenario::quadratic(subjects, noise_sd, 0),
                (None, Some(Preset::PlantedRanks)) => SynthScenario::planted_ranks(subjects, 11, 10, 0),
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let summary = commands::synth(&s, &out)?;
            if cli.json {
                print_json(&summary);
            } else {
                println!(
                    "{} subjects, covariates {:?}, responses {:?}, {} observations",
                    summary.n_subjects, summary.covariates, summary.responses, summary.observations
                );
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
            }
        }
        Command::Train {
            config,
            data,
            schema,
            model,
            reports,
            seed,
            baseline,
            test_fraction,
        } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            cfg.apply(&Overrides {
                data,
                schema,
                model,
                reports,
                seed,
                baseline_fflm: baseline.is_some(),
                test_fraction,
            });
            // Paths and fractions are checked before any file is opened.
            let schema_path = cfg.resolve(None)?.schema;
            let run = cfg.resolve(io::read_schema(&schema_path)?.grid_size)?;
            let out = commands::train(&run)?;
            if cli.json {
                print_json(&serde_json::json!({
                    "l": out.diagnostics.l,
                    "p": out.diagnostics.p,
                    "regressor": out.diagnostics.regressor,
                    "n_params": out.diagnostics.n_params,
                    "model": run.model,
                    "test_metrics": out.test_metrics,
                }));
            } else {
                let d = &out.diagnostics;
                println!(
                    "trained {} on {} subjects: L = {}, P = {}, {} parameters",
                    d.regressor, d.n_subjects, d.l, d.p, d.n_params
                );
                println!("wrote {}", run.model.display());
                if let Some(m) = &out.test_metrics {
                    println!("held-out subjects:\n{}", commands::metrics_table(m));
                }
            }
        }
        Command::Predict { model, data, out } => {
            let pred = commands::predict(&model, &data, &out)?;
            let rows = pred.subject_ids.len() * pred.channels.len() * pred.grid.len();
            if cli.json {
                print_json(&serde_json::json!({ "subjects": pred.subject_ids.len(), "rows": rows, "out": out }));
            } else {
                println!("wrote {rows} rows for {} subjects to {}", pred.subject_ids.len(), out.display());
            }
        }
        Command::Evaluate { predictions, truth, out } => {
            let report = commands::evaluate(&predictions, &truth)?;
            if let Some(path) = &out {
                io::write_json(path, &report)?;
            }
            if cli.json {
                print_json(&report);
            } else {
                println!("{}", commands::metrics_table(&report));
            }
        }
        Command::FpcaReport { model } => {
            let report = commands::fpca_report(&artifact::load(&model)?);
            if cli.json {
                print_json(&report);
            } else {
                println!("{}", commands::fpca_table(&report));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
