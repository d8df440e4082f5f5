//! Training and application of the full model, and evaluation metrics.
//!
//! Training, per side (covariates on S, responses on T):
//! smooth each channel's mean and covariance, standardize point-wise, run
//! univariate FPCA per channel, combine channels through the score covariance,
//! and project every subject onto the multivariate components. The regressor
//! is then fit from covariate scores to response scores.
//!
//! Prediction standardizes new covariates with the training parameters,
//! projects, maps scores through the regressor, reconstructs standardized
//! response curves on the T grid and reverts the standardization.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{CurveSet, FunctionalDataset, ObservationSeries};
use crate::error::{Error, Result, StageExt};
use crate::fpca::{
    extrapolated_points, fve_curve, multivariate_fpca, project_multivariate, project_univariate, reconstruct,
    score_covariance, univariate_fpca, MultivariateEigenSystem, ScoreMatrix, TruncationRule, UnivariateEigenSystem,
};
use crate::grid::{make_grid, EvalGrid, Interval};
use crate::linalg::Matrix;
use crate::regression::{
    count_params, fit_fflm, train_network, Activation, NetworkSpec, Regressor, TrainConfig, TrainingLog,
};
use crate::smoothing::{
    smooth_covariance, smooth_mean, standardize, variance_function, CovarianceSurface, KernelSpec,
    StandardizationParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SideConfig {
    pub grid_size: usize,
    pub kernel: KernelSpec,
    pub truncation: TruncationRule,
}

impl Default for SideConfig {
    fn default() -> Self {
        Self {
            grid_size: 101,
            kernel: KernelSpec::default(),
            truncation: TruncationRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorConfig {
    Network {
        #[serde(default = "default_hidden")]
        hidden_widths: Vec<usize>,
        #[serde(default)]
        activation: Activation,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        train: TrainConfig,
    },
    Fflm {
        #[serde(default)]
        ridge: f64,
    },
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig::Network {
            hidden_widths: default_hidden(),
            activation: Activation::Elu,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub covariate: SideConfig,
    pub response: SideConfig,
    pub regressor: RegressorConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, side) in [("covariate", &self.covariate), ("response", &self.response)] {
            if side.grid_size < 2 {
                return Err(Error::BadConfig(format!("{name} grid_size must be at least 2")));
            }
            side.truncation.validate()?;
        }
        match &self.regressor {
            RegressorConfig::Network { hidden_widths, train, .. } => {
                if hidden_widths.contains(&0) {
                    return Err(Error::BadConfig("hidden widths must be positive".into()));
                }
                train.validate()
            }
            RegressorConfig::Fflm { ridge } if !(*ridge >= 0.0 && ridge.is_finite()) => {
                Err(Error::BadConfig(format!("ridge must be >= 0, got {ridge}")))
            }
            RegressorConfig::Fflm { .. } => Ok(()),
        }
    }
}

/// Everything needed to standardize and project one side of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideModel {
    pub grid: EvalGrid,
    pub channels: Vec<String>,
    pub standardization: Vec<StandardizationParams>,
    pub univariate: Vec<UnivariateEigenSystem>,
    pub eigen: MultivariateEigenSystem,
}

impl SideModel {
    pub fn n_components(&self) -> usize {
        self.eigen.n_components()
    }

    /// Multivariate scores of one subject's series, given in channel order.
    pub fn scores(&self, series: &[&ObservationSeries]) -> Result<Vec<f64>> {
        if series.len() != self.channels.len() {
            return Err(Error::ChannelCountMismatch {
                expected: self.channels.len(),
                got: series.len(),
            });
        }
        let z: Vec<ObservationSeries> = series
            .iter()
            .zip(&self.standardization)
            .map(|(s, p)| standardize(s, p))
            .collect();
        let refs: Vec<&ObservationSeries> = z.iter().collect();
        project_multivariate(&refs, &self.eigen)
    }

    fn validate(&self, side: &str) -> Result<()> {
        let n = self.channels.len();
        if self.standardization.len() != n || self.univariate.len() != n || self.eigen.channels != self.channels {
            return Err(Error::ShapeMismatch(format!("{side} side: channel lists disagree")));
        }
        let g = self.grid.len();
        let bad_std = self
            .standardization
            .iter()
            .any(|s| s.grid != self.grid || s.mean.len() != g || s.variance.len() != g);
        if bad_std || self.eigen.grid != self.grid || self.eigen.functions.cols() != n * g {
            return Err(Error::ShapeMismatch(format!("{side} side: grid sizes disagree")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub covariate: SideModel,
    pub response: SideModel,
    pub regressor: Regressor,
    pub config: PipelineConfig,
}

impl TrainedModel {
    /// Number of covariate components `L`.
    pub fn l(&self) -> usize {
        self.covariate.n_components()
    }

    /// Number of response components `P`.
    pub fn p(&self) -> usize {
        self.response.n_components()
    }

    /// Structural consistency, checked after loading from disk.
    pub fn validate(&self) -> Result<()> {
        self.covariate.validate("covariate")?;
        self.response.validate("response")?;
        if self.regressor.input_dim() != self.l() || self.regressor.output_dim() != self.p() {
            return Err(Error::ShapeMismatch(format!(
                "regressor maps {} -> {}, eigen systems have L = {}, P = {}",
                self.regressor.input_dim(),
                self.regressor.output_dim(),
                self.l(),
                self.p()
            )));
        }
        if let Regressor::Network(p) = &self.regressor {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDiagnostics {
    pub name: String,
    pub mean_bandwidth: f64,
    pub cov_bandwidth: f64,
    pub variance_clipped: usize,
    /// Grid points filled by constant extrapolation, summed over subjects.
    pub extrapolated_points: usize,
    pub spectrum: Vec<f64>,
    pub fve: Vec<f64>,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideDiagnostics {
    pub channels: Vec<ChannelDiagnostics>,
    pub spectrum: Vec<f64>,
    pub fve: Vec<f64>,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_subjects: usize,
    pub l: usize,
    pub p: usize,
    pub regressor: String,
    pub n_params: usize,
    pub covariate: SideDiagnostics,
    pub response: SideDiagnostics,
    pub training: Option<TrainingLog>,
    pub warnings: Vec<String>,
}

struct FittedSide {
    model: SideModel,
    diagnostics: SideDiagnostics,
    scores: Matrix,
}

fn fit_side<'a>(
    side: &str,
    names: &[String],
    domain: Interval,
    channel: impl Fn(usize) -> Vec<&'a ObservationSeries>,
    n: usize,
    cfg: &SideConfig,
    warnings: &mut Vec<String>,
) -> Result<FittedSide> {
    let grid = make_grid(domain, cfg.grid_size).stage(|| format!("grid/{side}"))?;
    let uni_rule = cfg.truncation.with_cap((n - 1).min(grid.len()));
    let mut standardization = Vec::with_capacity(names.len());
    let mut univariate = Vec::with_capacity(names.len());
    let mut channel_diag = Vec::with_capacity(names.len());
    // [subject][channel] standardized series
    let mut z: Vec<Vec<ObservationSeries>> = vec![Vec::with_capacity(names.len()); n];
    let mut uni_scores: Vec<Vec<f64>> = vec![Vec::new(); n];

    for (c, name) in names.iter().enumerate() {
        let series = channel(c);
        let label = || format!("smoothing/{side}/channel={name}");
        let mean = smooth_mean(&series, &cfg.kernel, &grid).stage(label)?;
        let cov = smooth_covariance(&series, &mean, &cfg.kernel, &grid).stage(label)?;
        let var = variance_function(&cov);
        if var.clipped > 0 {
            warnings.push(format!(
                "{side}/{name}: variance clipped to {:e} at {} of {} grid points",
                var.floor,
                var.clipped,
                grid.len()
            ));
        }
        let params = StandardizationParams::new(&mean, &var).stage(label)?;

        // covariance of the standardized process, G(s,t) / sqrt(v(s) v(t))
        let g = grid.len();
        let sd: Vec<f64> = var.values.iter().map(|v| libm::sqrt(*v)).collect();
        let mut zc = Matrix::zeros(g, g);
        for k in 0..g {
            for l in 0..g {
                zc[(k, l)] = cov.values[(k, l)] / (sd[k] * sd[l]);
            }
        }
        let zsurface = CovarianceSurface {
            grid: grid.clone(),
            values: zc,
            bandwidth: cov.bandwidth,
        };
        let flabel = || format!("fpca/{side}/channel={name}");
        let mut sys = match univariate_fpca(&zsurface, &uni_rule) {
            Ok(s) => s,
            Err(Error::EmptySpectrum) => {
                log::warn!("{side}/{name}: no variation left after standardization, channel contributes no components");
                warnings.push(format!("{side}/{name}: empty spectrum, channel contributes no components"));
                UnivariateEigenSystem::empty(name.clone(), grid.clone())
            }
            Err(e) => return Err(e).stage(flabel),
        };
        sys.channel = name.clone();

        let mut extrapolated = 0;
        for (i, s) in series.iter().enumerate() {
            let zs = standardize(s, &params);
            extrapolated += extrapolated_points(&zs, &grid);
            if sys.n_components() > 0 {
                let sc = project_univariate(&zs, &sys).stage(|| format!("{}/subject={i}", flabel()))?;
                uni_scores[i].extend(sc);
            }
            z[i].push(zs);
        }
        channel_diag.push(ChannelDiagnostics {
            name: name.clone(),
            mean_bandwidth: mean.bandwidth,
            cov_bandwidth: cov.bandwidth,
            variance_clipped: var.clipped,
            extrapolated_points: extrapolated,
            fve: fve_curve(&sys.spectrum),
            spectrum: sys.spectrum.clone(),
            selected: sys.n_components(),
        });
        standardization.push(params);
        univariate.push(sys);
    }

    let mlabel = || format!("fpca/{side}");
    let widths: Vec<usize> = univariate.iter().map(|s| s.n_components()).collect();
    let p_plus: usize = widths.iter().sum();
    if p_plus == 0 {
        return Err(Error::EmptySpectrum).stage(mlabel);
    }
    let flat: Vec<f64> = uni_scores.into_iter().flatten().collect();
    let scores = ScoreMatrix::new(Matrix::from_row_major(n, p_plus, flat).stage(mlabel)?, widths).stage(mlabel)?;
    let xi = score_covariance(&scores).stage(mlabel)?;
    let eigen = multivariate_fpca(&univariate, &xi, &cfg.truncation).stage(mlabel)?;

    let k = eigen.n_components();
    let mut out = Matrix::zeros(n, k);
    for (i, row) in z.iter().enumerate() {
        let refs: Vec<&ObservationSeries> = row.iter().collect();
        let s = project_multivariate(&refs, &eigen).stage(|| format!("{}/subject={i}", mlabel()))?;
        out.row_mut(i).copy_from_slice(&s);
    }
    let diagnostics = SideDiagnostics {
        channels: channel_diag,
        fve: fve_curve(&eigen.spectrum),
        spectrum: eigen.spectrum.clone(),
        selected: k,
    };
    Ok(FittedSide {
        model: SideModel {
            grid,
            channels: names.to_vec(),
            standardization,
            univariate,
            eigen,
        },
        diagnostics,
        scores: out,
    })
}

/// Fits both sides and the regressor.
pub fn train_pipeline(data: &FunctionalDataset, config: &PipelineConfig) -> Result<(TrainedModel, Diagnostics)> {
    config.validate()?;
    if !data.has_responses() {
        return Err(Error::BadConfig("training data has no response observations".into()));
    }
    let n = data.n_subjects();
    if n < 2 {
        return Err(Error::TooFewSubjects { needed: 2, got: n });
    }
    let mut warnings = Vec::new();
    let cov_side = fit_side(
        "covariate",
        data.covariate_names(),
        data.covariate_domain(),
        |c| data.covariate_channel(c),
        n,
        &config.covariate,
        &mut warnings,
    )?;
    let resp_side = fit_side(
        "response",
        data.response_names(),
        data.response_domain(),
        |c| data.response_channel(c).unwrap_or_default(),
        n,
        &config.response,
        &mut warnings,
    )?;
    let (l, p) = (cov_side.model.n_components(), resp_side.model.n_components());
    let (regressor, training) = match &config.regressor {
        RegressorConfig::Network {
            hidden_widths,
            activation,
            seed,
            train,
        } => {
            let spec = NetworkSpec {
                input_dim: l,
                hidden_widths: hidden_widths.clone(),
                output_dim: p,
                activation: *activation,
                seed: *seed,
            };
            let (params, log) =
                train_network(&spec, train, &cov_side.scores, &resp_side.scores).stage(|| "train".to_string())?;
            (Regressor::Network(params), Some(log))
        }
        RegressorConfig::Fflm { ridge } => (
            Regressor::Fflm(fit_fflm(&cov_side.scores, &resp_side.scores, *ridge).stage(|| "train".to_string())?),
            None,
        ),
    };
    let diagnostics = Diagnostics {
        n_subjects: n,
        l,
        p,
        regressor: regressor.kind().to_string(),
        n_params: count_params(&regressor.shape()),
        covariate: cov_side.diagnostics,
        response: resp_side.diagnostics,
        training,
        warnings,
    };
    let model = TrainedModel {
        covariate: cov_side.model,
        response: resp_side.model,
        regressor,
        config: config.clone(),
    };
    Ok((model, diagnostics))
}

/// Predicted response curves on the model's T grid, original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub grid: EvalGrid,
    pub channels: Vec<String>,
    pub subject_ids: Vec<String>,
    /// `[subject][channel][grid point]`
    pub values: Vec<Vec<Vec<f64>>>,
}

impl PredictionSet {
    /// Linear interpolation of a predicted curve at `t`.
    pub fn at(&self, subject: usize, channel: usize, t: f64) -> f64 {
        self.grid.interpolate(&self.values[subject][channel], t)
    }

    pub fn to_curves(&self) -> Result<CurveSet> {
        let curves = self
            .values
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| ObservationSeries::new(self.grid.points().to_vec(), v.clone()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CurveSet {
            channels: self.channels.clone(),
            subjects: self.subject_ids.clone(),
            curves,
        })
    }
}

/// Response curves for one subject, covariate series in the model's channel order.
pub fn predict_subject(model: &TrainedModel, covariates: &[&ObservationSeries]) -> Result<Vec<Vec<f64>>> {
    let eta = model.covariate.scores(covariates)?;
    let scores = model.regressor.predict(&eta)?;
    let zcurves = reconstruct(&scores, &model.response.eigen)?;
    let out: Vec<Vec<f64>> = zcurves
        .into_iter()
        .zip(&model.response.standardization)
        .map(|(zc, p)| {
            zc.iter()
                .zip(p.mean.iter().zip(&p.variance))
                .map(|(z, (m, v))| z * libm::sqrt(*v) + m)
                .collect()
        })
        .collect();
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFit);
    }
    Ok(out)
}

/// Applies a trained model to every subject of `data` (responses, if any, are ignored).
pub fn predict_pipeline(model: &TrainedModel, data: &FunctionalDataset) -> Result<PredictionSet> {
    let want = &model.covariate.channels;
    let have = data.covariate_names();
    let missing: Vec<String> = want.iter().filter(|c| !have.contains(c)).cloned().collect();
    let extra: Vec<String> = have.iter().filter(|c| !want.contains(c)).cloned().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::ChannelMismatch { missing, extra });
    }
    let order: Vec<usize> = want
        .iter()
        .map(|c| have.iter().position(|h| h == c).expect("checked above"))
        .collect();
    let domain = model.covariate.grid.domain();
    let mut values = Vec::with_capacity(data.n_subjects());
    for (i, id) in data.subject_ids().iter().enumerate() {
        let row = data.subject_covariates(i);
        let series: Vec<&ObservationSeries> = order.iter().map(|&c| &row[c]).collect();
        for (s, name) in series.iter().zip(want) {
            if let Some(t) = s.times().iter().find(|t| !domain.contains(**t)) {
                return Err(Error::DomainViolation {
                    subject: id.clone(),
                    variable: name.clone(),
                    time: *t,
                    lo: domain.lo(),
                    hi: domain.hi(),
                });
            }
        }
        values.push(predict_subject(model, &series).stage(|| format!("predict/subject={id}"))?);
    }
    Ok(PredictionSet {
        grid: model.response.grid.clone(),
        channels: model.response.channels.clone(),
        subject_ids: data.subject_ids().to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub name: String,
    /// Mean squared error per observation (no square root).
    pub rmse: f64,
    pub rmse_sqrt: f64,
    /// `None` when every subject has an all-zero truth curve.
    pub rmspe: Option<f64>,
    pub n_subjects: usize,
    pub n_points: usize,
    /// Subjects left out of `rmspe` because their truth is identically zero.
    pub rmspe_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub channels: Vec<ChannelMetrics>,
    pub mean_rmse: f64,
    pub mean_rmse_sqrt: f64,
    pub mean_rmspe: Option<f64>,
    pub matched_subjects: usize,
    pub unmatched_truth: usize,
    pub unmatched_predictions: usize,
}

/// Error metrics of `predictions` against `truth` over the subjects present
/// in both. Predicted curves are interpolated to the truth timestamps.
///
/// Per channel: `rmse = sum (y - yhat)^2 / (number of points)` and
/// `rmspe = mean over subjects of sum (y - yhat)^2 / sum y^2`.
pub fn evaluate(predictions: &CurveSet, truth: &CurveSet) -> Result<MetricsReport> {
    let missing: Vec<String> = truth
        .channels
        .iter()
        .filter(|c| predictions.channel_index(c).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::ChannelMismatch {
            missing,
            extra: Vec::new(),
        });
    }
    let pred_index: BTreeMap<&str, usize> = predictions
        .subjects
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let pairs: Vec<(usize, usize)> = truth
        .subjects
        .iter()
        .enumerate()
        .filter_map(|(ti, s)| pred_index.get(s.as_str()).map(|&pi| (ti, pi)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoOverlap);
    }
    let channels: Vec<ChannelMetrics> = truth
        .channels
        .iter()
        .enumerate()
        .map(|(tc, name)| {
            let pc = predictions.channel_index(name).expect("checked above");
            let (mut sse, mut points, mut ratio_sum, mut ratio_n, mut excluded) = (0.0, 0usize, 0.0, 0usize, 0usize);
            for &(ti, pi) in &pairs {
                let y = &truth.curves[ti][tc];
                let yhat = &predictions.curves[pi][pc];
                let (mut s_err, mut s_y) = (0.0, 0.0);
                for (t, v) in y.iter() {
                    let e = v - yhat.interpolate(t);
                    s_err += e * e;
                    s_y += v * v;
                }
                sse += s_err;
                points += y.len();
                if s_y > 0.0 {
                    ratio_sum += s_err / s_y;
                    ratio_n += 1;
                } else {
                    excluded += 1;
                }
            }
            let rmse = sse / points as f64;
            ChannelMetrics {
                name: name.clone(),
                rmse,
                rmse_sqrt: libm::sqrt(rmse),
                rmspe: (ratio_n > 0).then(|| ratio_sum / ratio_n as f64),
                n_subjects: pairs.len(),
                n_points: points,
                rmspe_excluded: excluded,
            }
        })
        .collect();
    let d = channels.len() as f64;
    let mean_rmspe = if channels.iter().all(|c| c.rmspe.is_some()) {
        Some(channels.iter().filter_map(|c| c.rmspe).sum::<f64>() / d)
    } else {
        None
    };
    Ok(MetricsReport {
        mean_rmse: channels.iter().map(|c| c.rmse).sum::<f64>() / d,
        mean_rmse_sqrt: channels.iter().map(|c| c.rmse_sqrt).sum::<f64>() / d,
        mean_rmspe,
        matched_subjects: pairs.len(),
        unmatched_truth: truth.subjects.len() - pairs.len(),
        unmatched_predictions: predictions.subjects.len() - pairs.len(),
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curves(rows: &[(&str, &str, f64, f64)]) -> CurveSet {
        CurveSet::from_points(rows.iter().map(|&(s, v, t, y)| (s.to_string(), v.to_string(), t, y))).unwrap()
    }

    #[test]
    fn perfect_predictions_score_zero() {
        let truth = curves(&[("a", "y", 0.0, 1.0), ("a", "y", 1.0, 2.0), ("b", "y", 0.5, -1.0)]);
        let m = evaluate(&truth, &truth).unwrap();
        assert_eq!(m.channels[0].rmse, 0.0);
        assert_eq!(m.channels[0].rmspe, Some(0.0));
    }

    #[test]
    fn hand_arithmetic() {
        let truth = curves(&[("a", "y", 0.0, 1.0), ("a", "y", 0.5, 1.0), ("a", "y", 1.0, 1.0)]);
        let pred = curves(&[("a", "y", 0.0, 0.0), ("a", "y", 1.0, 0.0)]);
        let m = evaluate(&pred, &truth).unwrap();
        assert_eq!(m.channels[0].rmse, 1.0);
        assert_eq!(m.channels[0].rmse_sqrt, 1.0);
        assert_eq!(m.channels[0].rmspe, Some(1.0));
    }

    #[test]
    fn overlap_and_exclusions() {
        let truth = curves(&[("a", "y", 0.0, 0.0), ("a", "y", 1.0, 0.0), ("c", "y", 0.0, 1.0), ("c", "y", 1.0, 1.0)]);
        let pred = curves(&[("a", "y", 0.0, 1.0), ("a", "y", 1.0, 1.0), ("b", "y", 0.0, 1.0), ("b", "y", 1.0, 1.0)]);
        let m = evaluate(&pred, &truth).unwrap();
        assert_eq!(m.matched_subjects, 1);
        assert_eq!(m.unmatched_truth, 1);
        assert_eq!(m.unmatched_predictions, 1);
        assert_eq!(m.channels[0].rmspe, None);
        assert_eq!(m.channels[0].rmspe_excluded, 1);
        let none = curves(&[("z", "y", 0.0, 1.0), ("z", "y", 1.0, 1.0)]);
        assert_eq!(evaluate(&none, &truth), Err(Error::NoOverlap));
        let other = curves(&[("a", "w", 0.0, 1.0), ("a", "w", 1.0, 1.0)]);
        assert!(matches!(evaluate(&other, &truth), Err(Error::ChannelMismatch { .. })));
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = PipelineConfig::default();
        assert_eq!(c.covariate.grid_size, 101);
        assert_eq!(c.response.truncation.fve_cutoff, 0.99);
        assert!(matches!(c.regressor, RegressorConfig::Network { ref hidden_widths, .. } if hidden_widths == &vec![16]));
        c.validate().unwrap();
        let mut bad = c.clone();
        bad.regressor = RegressorConfig::Fflm { ridge: -1.0 };
        assert!(bad.validate().is_err());
        let parsed: PipelineConfig = serde_json::from_str(r#"{"regressor":{"kind":"fflm"}}"#).unwrap();
        assert_eq!(parsed.regressor, RegressorConfig::Fflm { ridge: 0.0 });
    }
}
