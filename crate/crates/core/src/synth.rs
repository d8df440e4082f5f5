//! Synthetic functional data with planted eigenstructure and a planted score
//! mapping.
//!
//! Each side is built from an orthonormal multivariate Fourier system. With
//! `F = 2q + 1` univariate Fourier functions `f_j` on the domain and an
//! orthonormal `C x C` DCT matrix `Q`, component `k = a F + j` restricted to
//! channel `c` is `Q[a][c] f_((j + c) mod F)`. These are orthonormal in the
//! multivariate inner product (sum of per-channel integrals) for any `K <= C F`.
//!
//! Covariate scores are independent normals with the planted variances;
//! response scores are the planted mapping applied to them. Curves are sampled
//! densely or at Poisson-many uniform times, with white noise added.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FunctionalDataset, ObservationSeries, Schema};
use crate::error::{Error, Result};
use crate::grid::Interval;
use crate::linalg::Matrix;
use crate::pipeline::{SideModel, TrainedModel};
use crate::regression::Regressor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedBasis {
    pub domain: Interval,
    pub fourier_order: usize,
    pub channels: usize,
    pub components: usize,
}

impl PlantedBasis {
    fn n_fourier(&self) -> usize {
        2 * self.fourier_order + 1
    }

    fn fourier(&self, j: usize, t: f64) -> f64 {
        let len = self.domain.length();
        let x = (t - self.domain.lo()) / len;
        if j == 0 {
            return 1.0 / libm::sqrt(len);
        }
        let m = j.div_ceil(2) as f64;
        let arg = 2.0 * core::f64::consts::PI * m * x;
        let amp = libm::sqrt(2.0 / len);
        if j % 2 == 1 {
            amp * libm::sin(arg)
        } else {
            amp * libm::cos(arg)
        }
    }

    fn dct(&self, a: usize, c: usize) -> f64 {
        let n = self.channels as f64;
        let s = if a == 0 { libm::sqrt(1.0 / n) } else { libm::sqrt(2.0 / n) };
        s * libm::cos(core::f64::consts::PI * (c as f64 + 0.5) * a as f64 / n)
    }

    /// Component `k` on channel `c` at time `t`.
    pub fn eval(&self, k: usize, c: usize, t: f64) -> f64 {
        let f = self.n_fourier();
        let (a, j) = (k / f, k % f);
        self.dct(a, c) * self.fourier((j + c) % f, t)
    }
}

/// How a mapping matrix is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    /// `diag(sqrt(lambda_Y)) R diag(lambda_X)^(-1/2)` with `R` a random matrix
    /// with orthonormal rows, so response scores are uncorrelated with
    /// variances `lambda_Y` (linear term only).
    Planted,
    /// Independent normal entries with the given standard deviation.
    Random { scale: f64 },
    Explicit { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mapping {
    Linear { b: MatrixSpec },
    /// `f(x) = B1 x + B2 (x * x)` with the square taken element-wise.
    Quadratic { b1: MatrixSpec, b2: MatrixSpec },
    /// `f(x) = sum_k C_k x^(k+1)`, powers element-wise.
    Polynomial { coefficients: Vec<MatrixSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// The same equispaced points (endpoints included) for every series.
    Dense { points: usize },
    /// `max(Poisson(rate), min_points)` uniform times per series.
    Irregular { rate: f64, min_points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSpec {
    pub channels: usize,
    pub fourier_order: usize,
    /// Planted component variances, positive and non-increasing.
    pub eigenvalues: Vec<f64>,
    pub domain: Interval,
    /// Constant added to every curve.
    #[serde(default)]
    pub mean_offset: f64,
}

impl SideSpec {
    fn basis(&self) -> PlantedBasis {
        PlantedBasis {
            domain: self.domain,
            fourier_order: self.fourier_order,
            channels: self.channels,
            components: self.eigenvalues.len(),
        }
    }

    fn validate(&self, side: &str) -> Result<()> {
        let bad = |m: String| Err(Error::BadScenario(format!("{side}: {m}")));
        if self.channels == 0 {
            return bad("at least one channel is required".into());
        }
        if self.eigenvalues.is_empty() {
            return bad("at least one eigenvalue is required".into());
        }
        if !self.eigenvalues.iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("eigenvalues must be positive".into());
        }
        if self.eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return bad("eigenvalues must be non-increasing".into());
        }
        let cap = self.channels * (2 * self.fourier_order + 1);
        if self.eigenvalues.len() > cap {
            return bad(format!(
                "{} components exceed the {cap} available from {} channel(s) of Fourier order {}",
                self.eigenvalues.len(),
                self.channels,
                self.fourier_order
            ));
        }
        if !self.mean_offset.is_finite() {
            return bad("mean_offset must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthScenario {
    pub n_subjects: usize,
    pub covariate: SideSpec,
    pub response: SideSpec,
    pub mapping: Mapping,
    #[serde(default)]
    pub noise_sd: f64,
    pub sampling: Sampling,
    #[serde(default)]
    pub seed: u64,
}

/// `count` values decaying geometrically from `first` by `ratio`.
pub fn geometric(first: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| first * libm::pow(ratio, k as f64)).collect()
}

fn unit() -> Interval {
    Interval::new(0.0, 1.0).expect("valid")
}

impl SynthScenario {
    /// Linear planted model with `l` covariate and `p` response components on
    /// two channels per side, dense noiseless sampling.
    pub fn planted_ranks(n_subjects: usize, l: usize, p: usize, seed: u64) -> Self {
        let order = |k: usize| k.div_ceil(2).saturating_sub(1).div_ceil(2).max(1);
        Self {
            n_subjects,
            covariate: SideSpec {
                channels: 2,
                fourier_order: order(l),
                eigenvalues: geometric(1.0, 0.85, l),
                domain: unit(),
                mean_offset: 0.0,
            },
            response: SideSpec {
                channels: 2,
                fourier_order: order(p),
                eigenvalues: geometric(1.0, 0.85, p),
                domain: unit(),
                mean_offset: 2.0,
            },
            mapping: Mapping::Linear { b: MatrixSpec::Planted },
            noise_sd: 0.0,
            sampling: Sampling::Dense { points: 101 },
            seed,
        }
    }

    /// The canonical nonlinear scenario: three components per side, one
    /// channel each, `f(x) = B1 x + B2 (x * x)`.
    pub fn quadratic(n_subjects: usize, noise_sd: f64, seed: u64) -> Self {
        let side = |offset: f64| SideSpec {
            channels: 1,
            fourier_order: 2,
            eigenvalues: vec![1.0, 0.6, 0.3],
            domain: unit(),
            mean_offset: offset,
        };
        Self {
            n_subjects,
            covariate: side(0.0),
            response: side(2.0),
            mapping: Mapping::Quadratic {
                b1: MatrixSpec::Explicit {
                    rows: vec![vec![0.6, 0.2, 0.0], vec![-0.2, 0.5, 0.2], vec![0.1, 0.0, 0.5]],
                },
                b2: MatrixSpec::Explicit {
                    rows: vec![vec![0.8, 0.0, 0.3], vec![0.0, -0.8, 0.4], vec![0.4, 0.4, -0.6]],
                },
            },
            noise_sd,
            sampling: Sampling::Dense { points: 101 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::BadScenario("at least two subjects are required".into()));
        }
        self.covariate.validate("covariate")?;
        self.response.validate("response")?;
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::BadScenario(format!("noise_sd must be >= 0, got {}", self.noise_sd)));
        }
        match self.sampling {
            Sampling::Dense { points } if points < 2 => {
                return Err(Error::BadScenario("dense sampling needs at least 2 points".into()));
            }
            Sampling::Irregular { rate, min_points } if !(rate.is_finite() && rate > 0.0) || min_points < 2 => {
                return Err(Error::BadScenario(format!(
                    "irregular sampling needs rate > 0 and min_points >= 2, got ({rate}, {min_points})"
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub covariate_basis: PlantedBasis,
    pub response_basis: PlantedBasis,
    /// Resolved mapping matrices (`K_Y x K_X` each), in polynomial order.
    pub mapping: Vec<Matrix>,
    /// `N x K_X`
    pub covariate_scores: Matrix,
    /// `N x K_Y`, the mapping applied to the covariate scores.
    pub response_scores: Matrix,
    pub covariate_offset: f64,
    pub response_offset: f64,
    /// Noise-free responses at the sampled times, `[subject][channel]`.
    pub noiseless_responses: Vec<Vec<ObservationSeries>>,
}

impl GroundTruth {
    /// Linear part of the mapping.
    pub fn linear_map(&self) -> &Matrix {
        &self.mapping[0]
    }

    /// Noise-free response of a subject on one channel at `t`.
    pub fn response_at(&self, subject: usize, channel: usize, t: f64) -> f64 {
        let b = &self.response_basis;
        self.response_offset
            + (0..b.components)
                .map(|k| self.response_scores[(subject, k)] * b.eval(k, channel, t))
                .sum::<f64>()
    }
}

fn resolve(spec: &MatrixSpec, rows: usize, cols: usize, scenario: &SynthScenario, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    match spec {
        MatrixSpec::Explicit { rows: r } => {
            let m = Matrix::from_rows(r).map_err(|e| Error::BadScenario(format!("mapping matrix: {e}")))?;
            if m.shape() != (rows, cols) || !m.is_finite() {
                return Err(Error::BadScenario(format!(
                    "mapping matrix must be {rows}x{cols} and finite, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(m)
        }
        MatrixSpec::Random { scale } => {
            if !(scale.is_finite() && *scale >= 0.0) {
                return Err(Error::BadScenario(format!("random scale must be >= 0, got {scale}")));
            }
            let data = (0..rows * cols)
                .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect();
            Matrix::from_row_major(rows, cols, data)
        }
        MatrixSpec::Planted => {
            if rows > cols {
                return Err(Error::BadScenario(format!(
                    "a planted map needs no more response ({rows}) than covariate ({cols}) components"
                )));
            }
            let g = nalgebra::DMatrix::from_fn(cols, rows, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            });
            let q = g.qr().q();
            let ly = &scenario.response.eigenvalues;
            let lx = &scenario.covariate.eigenvalues;
            let mut m = Matrix::zeros(rows, cols);
            for p in 0..rows {
                for k in 0..cols {
                    m[(p, k)] = libm::sqrt(ly[p]) * q[(k, p)] / libm::sqrt(lx[k]);
                }
            }
            Ok(m)
        }
    }
}

fn sample_times(sampling: &Sampling, domain: Interval, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match *sampling {
        Sampling::Dense { points } => {
            let step = domain.length() / (points - 1) as f64;
            let mut t: Vec<f64> = (0..points).map(|k| domain.lo() + k as f64 * step).collect();
            t[points - 1] = domain.hi();
            t
        }
        Sampling::Irregular { rate, min_points } => {
            let m = (Poisson::new(rate).expect("validated").sample(rng) as usize).max(min_points);
            let mut t: Vec<f64> = (0..m)
                .map(|_| domain.lo() + rng.random::<f64>() * domain.length())
                .collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            t
        }
    }
}

fn curve(
    basis: &PlantedBasis,
    channel: usize,
    scores: &[f64],
    offset: f64,
    times: &[f64],
) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            offset
                + scores
                    .iter()
                    .enumerate()
                    .map(|(k, s)| s * basis.eval(k, channel, t))
                    .sum::<f64>()
        })
        .collect()
}

/// Draws a dataset and the ground truth that generated it. Subject `i` uses
/// its own random stream, so its data does not depend on `N`.
pub fn generate(scenario: &SynthScenario) -> Result<(FunctionalDataset, GroundTruth)> {
    scenario.validate()?;
    let (kx, ky) = (scenario.covariate.eigenvalues.len(), scenario.response.eigenvalues.len());
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mapping: Vec<Matrix> = match &scenario.mapping {
        Mapping::Linear { b } => vec![resolve(b, ky, kx, scenario, &mut rng)?],
        Mapping::Quadratic { b1, b2 } => vec![
            resolve(b1, ky, kx, scenario, &mut rng)?,
            resolve(b2, ky, kx, scenario, &mut rng)?,
        ],
        Mapping::Polynomial { coefficients } => {
            if coefficients.is_empty() {
                return Err(Error::BadScenario("polynomial mapping needs at least one coefficient".into()));
            }
            coefficients
                .iter()
                .map(|c| resolve(c, ky, kx, scenario, &mut rng))
                .collect::<Result<_>>()?
        }
    };
    let (xb, yb) = (scenario.covariate.basis(), scenario.response.basis());
    let n = scenario.n_subjects;
    let noise = Normal::new(0.0, scenario.noise_sd).map_err(|e| Error::BadScenario(format!("{e}")))?;
    let mut xi = Matrix::zeros(n, kx);
    let mut zeta = Matrix::zeros(n, ky);
    let mut covariates = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    let mut noiseless = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = ChaCha8Rng::seed_from_u64(scenario.seed);
        r.set_stream(i as u64 + 1);
        for (k, lam) in scenario.covariate.eigenvalues.iter().enumerate() {
            xi[(i, k)] = libm::sqrt(*lam) * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r);
        }
        let x = xi.row(i).to_vec();
        let mut power = x.clone();
        let mut z = vec![0.0; ky];
        for (deg, m) in mapping.iter().enumerate() {
            if deg > 0 {
                power.iter_mut().zip(&x).for_each(|(p, v)| *p *= v);
            }
            for (zp, v) in z.iter_mut().zip(m.matvec(&power)) {
                *zp += v;
            }
        }
        zeta.row_mut(i).copy_from_slice(&z);

        let mut row_x = Vec::with_capacity(xb.channels);
        for c in 0..xb.channels {
            let t = sample_times(&scenario.sampling, xb.domain, &mut r);
            let mut v = curve(&xb, c, &x, scenario.covariate.mean_offset, &t);
            v.iter_mut().for_each(|y| *y += noise.sample(&mut r));
            row_x.push(ObservationSeries::new(t, v)?);
        }
        let mut row_y = Vec::with_capacity(yb.channels);
        let mut row_clean = Vec::with_capacity(yb.channels);
        for c in 0..yb.channels {
            let t = sample_times(&scenario.sampling, yb.domain, &mut r);
            let clean = curve(&yb, c, &z, scenario.response.mean_offset, &t);
            let v: Vec<f64> = clean.iter().map(|y| y + noise.sample(&mut r)).collect();
            row_clean.push(ObservationSeries::new(t.clone(), clean)?);
            row_y.push(ObservationSeries::new(t, v)?);
        }
        covariates.push(row_x);
        responses.push(row_y);
        noiseless.push(row_clean);
    }
    let schema = Schema {
        covariates: (1..=xb.channels).map(|c| format!("x{c}")).collect(),
        responses: (1..=yb.channels).map(|c| format!("y{c}")).collect(),
        covariate_domain: xb.domain,
        response_domain: yb.domain,
    };
    let width = format!("{}", n).len().max(3);
    let ids = (0..n).map(|i| format!("s{:0width$}", i + 1, width = width)).collect();
    let data = FunctionalDataset::new(&schema, ids, covariates, Some(responses))?;
    let truth = GroundTruth {
        covariate_basis: xb,
        response_basis: yb,
        mapping,
        covariate_scores: xi,
        response_scores: zeta,
        covariate_offset: scenario.covariate.mean_offset,
        response_offset: scenario.response.mean_offset,
        noiseless_responses: noiseless,
    };
    Ok((data, truth))
}

/// Planted `(covariate, response)` scores of one subject.
pub fn oracle_scores(truth: &GroundTruth, subject: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = truth.covariate_scores.rows();
    if subject >= n {
        return Err(Error::IndexOutOfRange { index: subject, len: n });
    }
    Ok((
        truth.covariate_scores.row(subject).to_vec(),
        truth.response_scores.row(subject).to_vec(),
    ))
}

/// `A[p][k] = sum_d <phi_hat_p^(d), phi_k^(d) / sqrt(v_hat_d)>`: the estimated
/// score of a standardized curve is `A` applied to its planted scores (after
/// centering), as long as the planted span is captured.
pub fn alignment_matrix(side: &SideModel, basis: &PlantedBasis) -> Result<Matrix> {
    if side.channels.len() != basis.channels {
        return Err(Error::ChannelCountMismatch {
            expected: basis.channels,
            got: side.channels.len(),
        });
    }
    let grid = &side.grid;
    let pts = grid.points();
    let mut a = Matrix::zeros(side.n_components(), basis.components);
    for p in 0..side.n_components() {
        for k in 0..basis.components {
            a[(p, k)] = (0..basis.channels)
                .map(|d| {
                    let var = &side.standardization[d].variance;
                    let planted: Vec<f64> = pts
                        .iter()
                        .zip(var)
                        .map(|(&t, v)| basis.eval(k, d, t) / libm::sqrt(*v))
                        .collect();
                    grid.inner(side.eigen.function(p, d), &planted)
                })
                .sum();
        }
    }
    Ok(a)
}

/// The linear model's fitted map expressed in the planted bases:
/// `A_Y^(-1) B_hat A_X`. Needs as many estimated as planted response components.
pub fn aligned_linear_map(model: &TrainedModel, truth: &GroundTruth) -> Result<Matrix> {
    let b_hat = match &model.regressor {
        Regressor::Fflm(f) => &f.b,
        Regressor::Network(_) => {
            return Err(Error::BadConfig("alignment of the map needs the linear regressor".into()))
        }
    };
    let ax = alignment_matrix(&model.covariate, &truth.covariate_basis)?;
    let ay = alignment_matrix(&model.response, &truth.response_basis)?;
    if ay.rows() != ay.cols() {
        return Err(Error::ShapeMismatch(format!(
            "response alignment is {}x{}; estimated and planted ranks differ",
            ay.rows(),
            ay.cols()
        )));
    }
    let inv = ay.to_na().try_inverse().ok_or(Error::NonFiniteFit)?;
    let m = inv * b_hat.to_na() * ax.to_na();
    Ok(Matrix::from_na(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn planted_basis_is_orthonormal() {
        for (channels, order, k) in [(1, 2, 5), (2, 3, 11), (3, 1, 9), (2, 5, 22)] {
            let b = PlantedBasis {
                domain: Interval::new(-1.0, 2.0).unwrap(),
                fourier_order: order,
                channels,
                components: k,
            };
            let grid = make_grid(b.domain, 201).unwrap();
            let tab: Vec<Vec<Vec<f64>>> = (0..k)
                .map(|p| (0..channels).map(|c| grid.points().iter().map(|&t| b.eval(p, c, t)).collect()).collect())
                .collect();
            for p in 0..k {
                for q in 0..k {
                    let ip: f64 = (0..channels).map(|c| grid.inner(&tab[p][c], &tab[q][c])).sum();
                    let target = if p == q { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() < 1e-6, "({channels},{order}) <{p},{q}> = {ip}");
                }
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let s = SynthScenario::quadratic(20, 0.1, 3);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a, b);
        let mut other = s.clone();
        other.seed = 4;
        assert_ne!(generate(&other).unwrap().0, a.0);
    }

    #[test]
    fn subject_streams_do_not_depend_on_n() {
        let small = generate(&SynthScenario::quadratic(10, 0.1, 3)).unwrap();
        let big = generate(&SynthScenario::quadratic(30, 0.1, 3)).unwrap();
        assert_eq!(small.0.subject_covariates(4), big.0.subject_covariates(4));
    }

    #[test]
    fn planted_map_gives_planted_response_variances() {
        let s = SynthScenario::planted_ranks(2000, 5, 3, 1);
        let (_, truth) = generate(&s).unwrap();
        let n = 2000.0;
        for (k, lam) in s.covariate.eigenvalues.iter().enumerate() {
            let col = truth.covariate_scores.column(k);
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
            assert!((v / lam - 1.0).abs() < 0.1, "component {k}: {v} vs {lam}");
        }
        // B Lambda_X B^T = Lambda_Y exactly
        let b = truth.linear_map();
        for p in 0..3 {
            for q in 0..3 {
                let v: f64 = (0..5).map(|k| b[(p, k)] * b[(q, k)] * s.covariate.eigenvalues[k]).sum();
                let target = if p == q { s.response.eigenvalues[p] } else { 0.0 };
                assert!((v - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn irregular_sampling_respects_minimum() {
        let mut s = SynthScenario::quadratic(30, 0.1, 8);
        s.sampling = Sampling::Irregular { rate: 3.0, min_points: 4 };
        let (data, _) = generate(&s).unwrap();
        for i in 0..data.n_subjects() {
            assert!(data.subject_covariates(i).iter().all(|x| x.len() >= 4));
        }
    }

    #[test]
    fn bad_scenarios() {
        let mut s = SynthScenario::quadratic(30, 0.1, 8);
        s.covariate.eigenvalues = vec![0.5, 1.0, 0.2];
        assert!(matches!(generate(&s), Err(Error::BadScenario(_))));
        let mut s = SynthScenario::quadratic(30, -1.0, 8);
        assert!(matches!(generate(&s), Err(Error::BadScenario(_))));
        s.noise_sd = 0.0;
        s.covariate.eigenvalues = vec![1.0; 6];
        assert!(matches!(generate(&s), Err(Error::BadScenario(_))));
        let mut s = SynthScenario::planted_ranks(10, 2, 3, 0);
        s.response.fourier_order = 2;
        assert!(matches!(generate(&s), Err(Error::BadScenario(_))));
    }

    #[test]
    fn oracle_scores_bounds() {
        let (_, truth) = generate(&SynthScenario::quadratic(5, 0.0, 1)).unwrap();
        assert!(oracle_scores(&truth, 4).is_ok());
        assert_eq!(oracle_scores(&truth, 5), Err(Error::IndexOutOfRange { index: 5, len: 5 }));
    }

    #[test]
    fn scenario_serde_round_trip() {
        let s = SynthScenario::quadratic(50, 0.05, 2);
        let back: SynthScenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
