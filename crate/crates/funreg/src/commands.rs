//! The work behind each subcommand, callable without spawning a process.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use funreg_core::fpca::fve_curve;
use funreg_core::pipeline::{
    evaluate as score, predict_pipeline, train_pipeline, Diagnostics, MetricsReport, PredictionSet, SideModel,
    TrainedModel,
};
use funreg_core::synth::{generate, SynthScenario};
use funreg_core::{FunctionalDataset, Role, Schema};

use crate::artifact;
use crate::config::ResolvedRun;
use crate::error::{Error, Result};
use crate::io::{self, SchemaFile};

pub const DATASET_FILE: &str = "dataset.csv";
pub const SCHEMA_FILE: &str = "schema.json";
pub const TRUTH_FILE: &str = "ground_truth.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const TEST_PREDICTIONS_FILE: &str = "test_predictions.csv";
pub const TEST_METRICS_FILE: &str = "test_metrics.json";
pub const SPLIT_FILE: &str = "split.json";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    pub n_subjects: usize,
    pub covariates: Vec<String>,
    pub responses: Vec<String>,
    pub observations: usize,
    pub files: Vec<PathBuf>,
}

/// Generates a scenario into `out_dir` as dataset, schema and ground truth.
pub fn synth(scenario: &SynthScenario, out_dir: &Path) -> Result<SynthSummary> {
    let (data, truth) = generate(scenario)?;
    create_dir(out_dir)?;
    let files = [DATASET_FILE, SCHEMA_FILE, TRUTH_FILE].map(|f| out_dir.join(f));
    io::write_dataset(&files[0], &data)?;
    io::write_json(&files[1], &SchemaFile::from_schema(&data.schema()))?;
    io::write_json(&files[2], &truth)?;
    Ok(SynthSummary {
        n_subjects: data.n_subjects(),
        covariates: data.covariate_names().to_vec(),
        responses: data.response_names().to_vec(),
        observations: data.records().len(),
        files: files.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub diagnostics: Diagnostics,
    pub test_metrics: Option<MetricsReport>,
}

/// Fits the pipeline and writes the artifact plus reports. With a positive
/// test fraction the held-out subjects are predicted and scored as well.
pub fn train(run: &ResolvedRun) -> Result<TrainOutcome> {
    let schema = io::read_schema(&run.schema)?.schema();
    let data = io::load_dataset(&run.data, &schema)?;
    let (train_idx, test_idx) = if run.split.test_fraction > 0.0 {
        data.split_indices(run.split.test_fraction, run.split.seed)?
    } else {
        ((0..data.n_subjects()).collect(), Vec::new())
    };
    let train_set = data.training_subset(&train_idx)?;
    let (model, diagnostics) = train_pipeline(&train_set, &run.pipeline)?;
    for w in &diagnostics.warnings {
        log::warn!("{w}");
    }
    if let Some(dir) = run.model.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    artifact::save(&model, &run.model)?;
    create_dir(&run.reports)?;
    io::write_json(&run.reports.join(DIAGNOSTICS_FILE), &diagnostics)?;

    let mut test_metrics = None;
    if !test_idx.is_empty() {
        let ids = |idx: &[usize]| idx.iter().map(|&i| data.subject_ids()[i].clone()).collect();
        let split = SplitRecord {
            seed: run.split.seed,
            test_fraction: run.split.test_fraction,
            train: ids(&train_idx),
            test: ids(&test_idx),
        };
        io::write_json(&run.reports.join(SPLIT_FILE), &split)?;
        let test = data.subset(&test_idx)?;
        let pred = predict_pipeline(&model, &test.without_responses())?;
        io::write_predictions(&run.reports.join(TEST_PREDICTIONS_FILE), &pred)?;
        let truth = test.response_curves().expect("training data has responses");
        let metrics = score(&pred.to_curves()?, &truth)?;
        io::write_json(&run.reports.join(TEST_METRICS_FILE), &metrics)?;
        test_metrics = Some(metrics);
    }
    Ok(TrainOutcome {
        model,
        diagnostics,
        test_metrics,
    })
}

/// Covariate rows of a dataset file, arranged for `model`. Channel names
/// come from the file itself so that a mismatch is reported by name; response
/// rows are ignored.
pub fn load_prediction_inputs(model: &TrainedModel, path: &Path) -> Result<FunctionalDataset> {
    let records: Vec<_> = io::read_records(path)?
        .into_iter()
        .filter(|r| r.role == Role::Covariate)
        .collect();
    let mut covariates: Vec<String> = Vec::new();
    for r in &records {
        if !covariates.contains(&r.variable) {
            covariates.push(r.variable.clone());
        }
    }
    if covariates.is_empty() {
        return Err(Error::Config(format!("{}: no covariate rows", path.display())));
    }
    let schema = Schema {
        covariates,
        responses: model.response.channels.clone(),
        covariate_domain: model.covariate.grid.domain(),
        response_domain: model.response.grid.domain(),
    };
    let want: BTreeSet<&String> = model.covariate.channels.iter().collect();
    let have: BTreeSet<&String> = schema.covariates.iter().collect();
    if want != have {
        return Err(Error::Core(funreg_core::Error::ChannelMismatch {
            missing: want.difference(&have).map(|s| s.to_string()).collect(),
            extra: have.difference(&want).map(|s| s.to_string()).collect(),
        }));
    }
    Ok(FunctionalDataset::from_records(&schema, records)?)
}

pub fn predict(model_path: &Path, data_path: &Path, out: &Path) -> Result<PredictionSet> {
    let model = artifact::load(model_path)?;
    let data = load_prediction_inputs(&model, data_path)?;
    let pred = predict_pipeline(&model, &data)?;
    io::write_predictions(out, &pred)?;
    Ok(pred)
}

pub fn evaluate(predictions: &Path, truth: &Path) -> Result<MetricsReport> {
    let pred = io::read_curves(predictions)?;
    let truth = io::read_curves(truth)?;
    let report = score(&pred, &truth)?;
    if report.unmatched_truth > 0 || report.unmatched_predictions > 0 {
        log::warn!(
            "evaluated {} common subjects; {} only in truth, {} only in predictions",
            report.matched_subjects,
            report.unmatched_truth,
            report.unmatched_predictions
        );
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.6e}"))
}

/// Aligned plain-text table, one row per response channel.
pub fn metrics_table(r: &MetricsReport) -> String {
    let w = r.channels.iter().map(|c| c.name.len()).chain([7]).max().unwrap_or(7);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<w$}  {:>13}  {:>13}  {:>13}  {:>8}  {:>8}",
        "channel", "rmse", "rmse_sqrt", "rmspe", "subjects", "points"
    );
    for c in &r.channels {
        let _ = writeln!(
            s,
            "{:<w$}  {:>13.6e}  {:>13.6e}  {:>13}  {:>8}  {:>8}",
            c.name,
            c.rmse,
            c.rmse_sqrt,
            opt(c.rmspe),
            c.n_subjects,
            c.n_points
        );
    }
    let _ = write!(
        s,
        "{:<w$}  {:>13.6e}  {:>13.6e}  {:>13}",
        "mean",
        r.mean_rmse,
        r.mean_rmse_sqrt,
        opt(r.mean_rmspe)
    );
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpectrum {
    pub name: String,
    pub eigenvalues: Vec<f64>,
    pub fve: Vec<f64>,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSpectrum {
    pub channels: Vec<ChannelSpectrum>,
    pub eigenvalues: Vec<f64>,
    pub fve: Vec<f64>,
    pub selected: usize,
}

/// Machine-readable form of `fpca-report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaReport {
    pub l: usize,
    pub p: usize,
    pub regressor: String,
    pub n_params: usize,
    pub covariate: SideSpectrum,
    pub response: SideSpectrum,
}

fn side_spectrum(side: &SideModel) -> SideSpectrum {
    SideSpectrum {
        channels: side
            .univariate
            .iter()
            .map(|u| ChannelSpectrum {
                name: u.channel.clone(),
                eigenvalues: u.spectrum.clone(),
                fve: fve_curve(&u.spectrum),
                selected: u.n_components(),
            })
            .collect(),
        eigenvalues: side.eigen.spectrum.clone(),
        fve: fve_curve(&side.eigen.spectrum),
        selected: side.n_components(),
    }
}

pub fn fpca_report(model: &TrainedModel) -> FpcaReport {
    FpcaReport {
        l: model.l(),
        p: model.p(),
        regressor: model.regressor.kind().into(),
        n_params: model.regressor.n_params(),
        covariate: side_spectrum(&model.covariate),
        response: side_spectrum(&model.response),
    }
}

/// Rows printed past the selected component; JSON output keeps all of them.
const TABLE_TAIL: usize = 5;

fn spectrum_table(s: &mut String, title: &str, eig: &[f64], fve: &[f64], selected: usize) {
    let _ = writeln!(s, "{title} (selected {selected})");
    let _ = writeln!(s, "  {:>4}  {:>13}  {:>9}", "k", "eigenvalue", "fve");
    let shown = eig.len().min(selected + TABLE_TAIL);
    for (k, (e, f)) in eig.iter().zip(fve).take(shown).enumerate() {
        let mark = if k + 1 == selected { " <" } else { "" };
        let _ = writeln!(s, "  {:>4}  {:>13.6e}  {:>8.4}%{mark}", k + 1, e, 100.0 * f);
    }
    if shown < eig.len() {
        let _ = writeln!(s, "  ({} smaller eigenvalues omitted)", eig.len() - shown);
    }
}

pub fn fpca_table(r: &FpcaReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "L = {}, P = {}, regressor {} with {} parameters", r.l, r.p, r.regressor, r.n_params);
    for (name, side) in [("covariate", &r.covariate), ("response", &r.response)] {
        for c in &side.channels {
            let _ = writeln!(s);
            spectrum_table(&mut s, &format!("{name} channel {}", c.name), &c.eigenvalues, &c.fve, c.selected);
        }
        let _ = writeln!(s);
        spectrum_table(&mut s, &format!("{name} multivariate"), &side.eigenvalues, &side.fve, side.selected);
    }
    s.pop();
    s
}
