//! Local-linear kernel estimates of per-channel mean functions and
//! covariance surfaces, and point-wise Z-score standardization.
//!
//! Both smoothers pool observations across subjects. The covariance smoother
//! fits a local plane to the raw products `U(t_j1, t_j2)` of residuals with
//! `j1 != j2` only; the diagonal products carry the measurement-error variance
//! and are excluded.
//!
//! Kernel moments are additive over subjects, so each smoother first
//! accumulates per-grid-point moment sums and then solves the small normal
//! equations. For the covariance surface the off-diagonal pair sums of one
//! subject factor as `(sum_j a_j)(sum_j b_j) - sum_j a_j b_j`, which turns the
//! pair loop into dense matrix products.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::ObservationSeries;
use crate::error::{Error, Result};
use crate::grid::{make_grid, EvalGrid, Interval};
use crate::linalg::Matrix;

/// Windows whose total kernel weight falls below this are degenerate.
/// Kernels are scaled so `K(0) = 1`.
pub const MIN_WEIGHT_MASS: f64 = 1e-6;
/// Minimum weighted variance of the local design, relative to `h^2`.
const MIN_LOCAL_SPREAD: f64 = 1e-8;
/// Relative variance floor applied to the diagonal of a covariance surface.
pub const VARIANCE_FLOOR: f64 = 1e-8;
/// Number of candidates in the automatic bandwidth search.
pub const BANDWIDTH_CANDIDATES: usize = 10;
/// Number of subject-level folds in the automatic bandwidth search.
pub const CV_FOLDS: usize = 5;
/// Grid size used while cross-validating covariance bandwidths.
pub const CV_COVARIANCE_GRID: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    /// Kernel weight, unnormalized (`K(0) = 1`); normalization does not change
    /// any weighted least-squares minimizer.
    pub fn weight(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => libm::exp(-0.5 * u * u),
            KernelFamily::Epanechnikov => {
                if u.abs() < 1.0 {
                    1.0 - u * u
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the support in bandwidth units, if compact.
    fn support(self) -> Option<f64> {
        match self {
            KernelFamily::Gaussian => None,
            KernelFamily::Epanechnikov => Some(1.0),
        }
    }
}

/// A fixed bandwidth (in time units) or `"auto"` for cross-validated selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(h) => s.serialize_f64(*h),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(h) => Ok(Bandwidth::Fixed(h)),
            Repr::Text(t) if t == "auto" => Ok(Bandwidth::Auto),
            Repr::Text(t) => Err(serde::de::Error::custom(alloc::format!(
                "bandwidth must be a number or \"auto\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub mean_bandwidth: Bandwidth,
    pub cov_bandwidth: Bandwidth,
}

impl KernelSpec {
    pub fn fixed(family: KernelFamily, mean: f64, cov: f64) -> Self {
        Self {
            family,
            mean_bandwidth: Bandwidth::Fixed(mean),
            cov_bandwidth: Bandwidth::Fixed(cov),
        }
    }
}

fn check_bandwidth(h: f64, domain: Interval) -> Result<f64> {
    if h.is_finite() && h > 0.0 && h < domain.length() {
        Ok(h)
    } else {
        Err(Error::BadBandwidth {
            bandwidth: h,
            length: domain.length(),
        })
    }
}

/// Estimated mean function tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFunction {
    pub grid: EvalGrid,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl MeanFunction {
    pub fn eval(&self, t: f64) -> f64 {
        self.grid.interpolate(&self.values, t)
    }
}

/// Estimated covariance surface tabulated on a grid (exactly symmetric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSurface {
    pub grid: EvalGrid,
    pub values: Matrix,
    pub bandwidth: f64,
}

impl CovarianceSurface {
    /// Bilinear interpolation at `(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        bilinear(&self.grid, &self.values, s, t)
    }
}

fn bilinear(grid: &EvalGrid, m: &Matrix, s: f64, t: f64) -> f64 {
    let (k, f) = grid.locate(s);
    let (l, g) = grid.locate(t);
    let a = m[(k, l)];
    let b = m[(k + 1, l)];
    let c = m[(k, l + 1)];
    let d = m[(k + 1, l + 1)];
    (1.0 - f) * (1.0 - g) * a + f * (1.0 - g) * b + (1.0 - f) * g * c + f * g * d
}

/// Pooled `(time, value)` pairs sorted by time.
struct Pooled {
    times: Vec<f64>,
    values: Vec<f64>,
}

fn pool(series: &[&ObservationSeries]) -> Pooled {
    let mut pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.iter()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (times, values) = pts.into_iter().unzip();
    Pooled { times, values }
}

/// Local-linear intercepts at every grid point (two-pass weighted fit).
fn fit_mean_on_grid(p: &Pooled, family: KernelFamily, h: f64, points: &[f64]) -> Result<Vec<f64>> {
    // shifting by the first value makes constant data reproduce exactly
    let y_ref = p.values[0];
    points
        .iter()
        .map(|&t| {
            let (lo, hi) = match family.support() {
                Some(r) => (
                    p.times.partition_point(|&x| x <= t - r * h),
                    p.times.partition_point(|&x| x < t + r * h),
                ),
                None => (0, p.times.len()),
            };
            let window = || {
                p.times[lo..hi]
                    .iter()
                    .zip(&p.values[lo..hi])
                    .map(|(&tk, &yk)| (family.weight((tk - t) / h), tk - t, yk - y_ref))
            };
            let (mut s0, mut sx, mut sr) = (0.0, 0.0, 0.0);
            for (w, x, r) in window() {
                s0 += w;
                sx += w * x;
                sr += w * r;
            }
            if s0 < MIN_WEIGHT_MASS {
                return Err(Error::DegenerateWindow {
                    at: vec![t],
                    bandwidth: h,
                });
            }
            let (xbar, rbar) = (sx / s0, sr / s0);
            let (mut sxx, mut sxr) = (0.0, 0.0);
            for (w, x, r) in window() {
                let dx = x - xbar;
                sxx += w * dx * dx;
                sxr += w * dx * (r - rbar);
            }
            if sxx < MIN_LOCAL_SPREAD * h * h * s0 {
                return Err(Error::DegenerateWindow {
                    at: vec![t],
                    bandwidth: h,
                });
            }
            let est = y_ref + rbar - (sxr / sxx) * xbar;
            if est.is_finite() {
                Ok(est)
            } else {
                Err(Error::NonFiniteFit)
            }
        })
        .collect()
}

/// Local-linear estimate of the mean function of one channel.
pub fn smooth_mean(series: &[&ObservationSeries], kernel: &KernelSpec, grid: &EvalGrid) -> Result<MeanFunction> {
    let pooled = pool(series);
    if pooled.times.len() < 2 {
        return Err(Error::TooSparse {
            points: pooled.times.len(),
        });
    }
    let h = match kernel.mean_bandwidth {
        Bandwidth::Fixed(h) => check_bandwidth(h, grid.domain())?,
        Bandwidth::Auto => select_bandwidth(series, kernel.family, grid, BandwidthTarget::Mean)?,
    };
    let values = fit_mean_on_grid(&pooled, kernel.family, h, grid.points())?;
    Ok(MeanFunction {
        grid: grid.clone(),
        values,
        bandwidth: h,
    })
}

/// Residuals `y_j - mean(t_j)` for one subject.
struct Residuals {
    times: Vec<f64>,
    values: Vec<f64>,
}

fn residuals(series: &[&ObservationSeries], mean: &MeanFunction) -> Vec<Residuals> {
    series
        .iter()
        .map(|s| Residuals {
            times: s.times().to_vec(),
            values: s.iter().map(|(t, y)| y - mean.eval(t)).collect(),
        })
        .collect()
}

/// Additive kernel moments for the local-plane covariance fit.
///
/// With `w = K((t_j1 - s)/h) K((t_j2 - t)/h)`, `x1 = t_j1 - s`, `x2 = t_j2 - t`
/// and `u = r_j1 r_j2`, summed over subjects and pairs `j1 != j2`:
/// `s00 = sum w`, `s10 = sum w x1`, `s20 = sum w x1^2`, `s11 = sum w x1 x2`,
/// `u00 = sum w u`, `u10 = sum w x1 u`. The `x2` moments are transposes.
#[derive(Clone)]
struct CovMoments {
    s00: DMatrix<f64>,
    s10: DMatrix<f64>,
    s20: DMatrix<f64>,
    s11: DMatrix<f64>,
    u00: DMatrix<f64>,
    u10: DMatrix<f64>,
}

impl CovMoments {
    fn zeros(g: usize) -> Self {
        let z = DMatrix::zeros(g, g);
        Self {
            s00: z.clone(),
            s10: z.clone(),
            s20: z.clone(),
            s11: z.clone(),
            u00: z.clone(),
            u10: z,
        }
    }

    fn add_subject(&mut self, r: &Residuals, family: KernelFamily, h: f64, points: &[f64]) {
        let m = r.times.len();
        if m < 2 {
            return;
        }
        let g = points.len();
        let e0 = DMatrix::from_fn(m, g, |j, k| family.weight((r.times[j] - points[k]) / h));
        let e1 = DMatrix::from_fn(m, g, |j, k| e0[(j, k)] * (r.times[j] - points[k]));
        let e2 = DMatrix::from_fn(m, g, |j, k| e1[(j, k)] * (r.times[j] - points[k]));
        let rv = DVector::from_column_slice(&r.values);
        let er0 = DMatrix::from_fn(m, g, |j, k| e0[(j, k)] * rv[j]);
        let er1 = DMatrix::from_fn(m, g, |j, k| e1[(j, k)] * rv[j]);
        let colsum = |e: &DMatrix<f64>| -> DVector<f64> { e.row_sum().transpose() };
        let (p0, p1, p2) = (colsum(&e0), colsum(&e1), colsum(&e2));
        let (q0, q1) = (colsum(&er0), colsum(&er1));

        self.s00.ger(1.0, &p0, &p0, 1.0);
        self.s00.gemm(-1.0, &e0.transpose(), &e0, 1.0);
        self.s10.ger(1.0, &p1, &p0, 1.0);
        self.s10.gemm(-1.0, &e1.transpose(), &e0, 1.0);
        self.s20.ger(1.0, &p2, &p0, 1.0);
        self.s20.gemm(-1.0, &e2.transpose(), &e0, 1.0);
        self.s11.ger(1.0, &p1, &p1, 1.0);
        self.s11.gemm(-1.0, &e1.transpose(), &e1, 1.0);
        self.u00.ger(1.0, &q0, &q0, 1.0);
        self.u00.gemm(-1.0, &er0.transpose(), &er0, 1.0);
        self.u10.ger(1.0, &q1, &q0, 1.0);
        self.u10.gemm(-1.0, &er1.transpose(), &er0, 1.0);
    }

    fn minus(&self, other: &CovMoments) -> CovMoments {
        CovMoments {
            s00: &self.s00 - &other.s00,
            s10: &self.s10 - &other.s10,
            s20: &self.s20 - &other.s20,
            s11: &self.s11 - &other.s11,
            u00: &self.u00 - &other.u00,
            u10: &self.u10 - &other.u10,
        }
    }

    fn plus_assign(&mut self, other: &CovMoments) {
        self.s00 += &other.s00;
        self.s10 += &other.s10;
        self.s20 += &other.s20;
        self.s11 += &other.s11;
        self.u00 += &other.u00;
        self.u10 += &other.u10;
    }

    /// Local-plane intercepts on the upper triangle, mirrored.
    fn solve(&self, h: f64, points: &[f64]) -> Result<Matrix> {
        let g = points.len();
        let mut out = Matrix::zeros(g, g);
        for k in 0..g {
            for l in k..g {
                let s00 = self.s00[(k, l)];
                let degenerate = || Error::DegenerateWindow {
                    at: vec![points[k], points[l]],
                    bandwidth: h,
                };
                if !(s00 >= MIN_WEIGHT_MASS) {
                    return Err(degenerate());
                }
                let x1 = self.s10[(k, l)] / s00;
                let x2 = self.s10[(l, k)] / s00;
                let ub = self.u00[(k, l)] / s00;
                let c11 = self.s20[(k, l)] / s00 - x1 * x1;
                let c22 = self.s20[(l, k)] / s00 - x2 * x2;
                let c12 = self.s11[(k, l)] / s00 - x1 * x2;
                let c1u = self.u10[(k, l)] / s00 - x1 * ub;
                let c2u = self.u10[(l, k)] / s00 - x2 * ub;
                let det = c11 * c22 - c12 * c12;
                let spread = MIN_LOCAL_SPREAD * h * h;
                if !(c11 > spread && c22 > spread && det > MIN_LOCAL_SPREAD * c11 * c22) {
                    return Err(degenerate());
                }
                let g1 = (c22 * c1u - c12 * c2u) / det;
                let g2 = (c11 * c2u - c12 * c1u) / det;
                let est = ub - g1 * x1 - g2 * x2;
                if !est.is_finite() {
                    return Err(Error::NonFiniteFit);
                }
                out[(k, l)] = est;
                out[(l, k)] = est;
            }
        }
        Ok(out)
    }
}

fn fit_covariance_on_grid(res: &[Residuals], family: KernelFamily, h: f64, points: &[f64]) -> Result<Matrix> {
    let mut mom = CovMoments::zeros(points.len());
    for r in res {
        mom.add_subject(r, family, h, points);
    }
    mom.solve(h, points)
}

/// Local-plane estimate of the covariance surface of one channel.
pub fn smooth_covariance(
    series: &[&ObservationSeries],
    mean: &MeanFunction,
    kernel: &KernelSpec,
    grid: &EvalGrid,
) -> Result<CovarianceSurface> {
    if mean.grid != *grid {
        return Err(Error::ShapeMismatch(
            "mean function was estimated on a different grid".into(),
        ));
    }
    if !series.iter().any(|s| s.len() >= 2) {
        return Err(Error::NoPairs);
    }
    let h = match kernel.cov_bandwidth {
        Bandwidth::Fixed(h) => check_bandwidth(h, grid.domain())?,
        Bandwidth::Auto => select_bandwidth(series, kernel.family, grid, BandwidthTarget::Covariance(mean))?,
    };
    let res = residuals(series, mean);
    let values = fit_covariance_on_grid(&res, kernel.family, h, grid.points())?;
    Ok(CovarianceSurface {
        grid: grid.clone(),
        values,
        bandwidth: h,
    })
}

/// Diagonal of a covariance surface after clipping at the variance floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceFunction {
    pub values: Vec<f64>,
    pub floor: f64,
    /// Number of grid points that were raised to the floor.
    pub clipped: usize,
}

/// The diagonal `G(t, t)`, clipped from below at
/// `1e-8 * max diagonal` (or `1e-8` if no diagonal entry is positive).
pub fn variance_function(surface: &CovarianceSurface) -> VarianceFunction {
    let g = surface.grid.len();
    let diag: Vec<f64> = (0..g).map(|k| surface.values[(k, k)]).collect();
    let max = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = VARIANCE_FLOOR * if max > 0.0 { max } else { 1.0 };
    let mut clipped = 0;
    let values = diag
        .into_iter()
        .map(|v| {
            if v < floor {
                clipped += 1;
                floor
            } else {
                v
            }
        })
        .collect();
    if clipped > 0 {
        log::warn!("variance function clipped at {clipped} of {g} grid points (floor {floor:e})");
    }
    VarianceFunction {
        values,
        floor,
        clipped,
    }
}

/// Mean and variance functions of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub grid: EvalGrid,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl StandardizationParams {
    pub fn new(mean: &MeanFunction, variance: &VarianceFunction) -> Result<Self> {
        if variance.values.len() != mean.grid.len() {
            return Err(Error::LengthMismatch {
                expected: mean.grid.len(),
                got: variance.values.len(),
            });
        }
        Ok(Self {
            grid: mean.grid.clone(),
            mean: mean.values.clone(),
            variance: variance.values.clone(),
        })
    }

    pub fn mean_at(&self, t: f64) -> f64 {
        self.grid.interpolate(&self.mean, t)
    }

    pub fn variance_at(&self, t: f64) -> f64 {
        self.grid.interpolate(&self.variance, t)
    }
}

/// `z_j = v(t_j)^(-1/2) (y_j - mu(t_j))`.
pub fn standardize(series: &ObservationSeries, params: &StandardizationParams) -> ObservationSeries {
    series.map_values(|t, y| (y - params.mean_at(t)) / libm::sqrt(params.variance_at(t)))
}

/// `y_j = z_j v(t_j)^(1/2) + mu(t_j)`.
pub fn destandardize(series: &ObservationSeries, params: &StandardizationParams) -> ObservationSeries {
    series.map_values(|t, z| z * libm::sqrt(params.variance_at(t)) + params.mean_at(t))
}

#[derive(Debug, Clone, Copy)]
pub enum BandwidthTarget<'a> {
    Mean,
    /// Covariance smoothing around the given mean estimate.
    Covariance(&'a MeanFunction),
}

/// Log-spaced candidates from `2 * median within-subject gap` to half the
/// domain length; a single candidate when that range is empty.
pub fn bandwidth_candidates(series: &[&ObservationSeries], domain: Interval) -> Vec<f64> {
    let mut gaps: Vec<f64> = series
        .iter()
        .flat_map(|s| s.times().windows(2).map(|w| w[1] - w[0]))
        .collect();
    if gaps.is_empty() {
        let p = pool(series);
        gaps = p.times.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    }
    let hi = domain.length() / 2.0;
    if gaps.is_empty() {
        return vec![hi];
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let median = if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    };
    let lo = 2.0 * median;
    if !(lo < hi) {
        return vec![hi];
    }
    let ratio = hi / lo;
    (0..BANDWIDTH_CANDIDATES)
        .map(|k| lo * libm::pow(ratio, k as f64 / (BANDWIDTH_CANDIDATES - 1) as f64))
        .collect()
}

/// Cross-validated bandwidth for the mean or covariance smoother.
pub fn select_bandwidth(
    series: &[&ObservationSeries],
    family: KernelFamily,
    grid: &EvalGrid,
    target: BandwidthTarget<'_>,
) -> Result<f64> {
    let candidates = bandwidth_candidates(series, grid.domain());
    select_bandwidth_from(&candidates, series, family, grid, target)
}

/// Picks the candidate minimizing the subject-level K-fold CV error
/// (K = min(5, N), subject `i` in fold `i mod K`). Among candidates whose error
/// is within `1e-9 * (held-out energy)` of the minimum, the smallest wins.
pub fn select_bandwidth_from(
    candidates: &[f64],
    series: &[&ObservationSeries],
    family: KernelFamily,
    grid: &EvalGrid,
    target: BandwidthTarget<'_>,
) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewSubjects { needed: 2, got: n });
    }
    if candidates.is_empty() {
        return Err(Error::AllCandidatesDegenerate);
    }
    let folds = CV_FOLDS.min(n);
    let (scores, energy) = match target {
        BandwidthTarget::Mean => cv_mean(candidates, series, family, grid, folds),
        BandwidthTarget::Covariance(mean) => cv_covariance(candidates, series, mean, family, grid, folds)?,
    };
    let best = scores
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::AllCandidatesDegenerate);
    }
    let tol = 1e-9 * energy;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].total_cmp(&candidates[b]));
    let pick = order
        .into_iter()
        .find(|&i| scores[i].is_some_and(|s| s <= best + tol))
        .ok_or(Error::AllCandidatesDegenerate)?;
    log::debug!(
        "bandwidth CV picked {} from {} candidates (scores {:?})",
        candidates[pick],
        candidates.len(),
        scores
    );
    Ok(candidates[pick])
}

/// One-pass local-linear moments about each grid point, additive over subjects.
#[derive(Clone)]
struct MeanMoments {
    s0: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    t0: Vec<f64>,
    t1: Vec<f64>,
}

impl MeanMoments {
    fn zeros(g: usize) -> Self {
        Self {
            s0: vec![0.0; g],
            s1: vec![0.0; g],
            s2: vec![0.0; g],
            t0: vec![0.0; g],
            t1: vec![0.0; g],
        }
    }

    fn add(&mut self, s: &ObservationSeries, y_ref: f64, family: KernelFamily, h: f64, points: &[f64]) {
        for (k, &t) in points.iter().enumerate() {
            for (tj, yj) in s.iter() {
                let x = tj - t;
                let w = family.weight(x / h);
                if w == 0.0 {
                    continue;
                }
                let r = yj - y_ref;
                self.s0[k] += w;
                self.s1[k] += w * x;
                self.s2[k] += w * x * x;
                self.t0[k] += w * r;
                self.t1[k] += w * x * r;
            }
        }
    }

    fn minus(&self, o: &MeanMoments) -> MeanMoments {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        MeanMoments {
            s0: sub(&self.s0, &o.s0),
            s1: sub(&self.s1, &o.s1),
            s2: sub(&self.s2, &o.s2),
            t0: sub(&self.t0, &o.t0),
            t1: sub(&self.t1, &o.t1),
        }
    }

    fn plus_assign(&mut self, o: &MeanMoments) {
        for (a, b) in [
            (&mut self.s0, &o.s0),
            (&mut self.s1, &o.s1),
            (&mut self.s2, &o.s2),
            (&mut self.t0, &o.t0),
            (&mut self.t1, &o.t1),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn solve(&self, y_ref: f64, h: f64) -> Option<Vec<f64>> {
        (0..self.s0.len())
            .map(|k| {
                let s0 = self.s0[k];
                if !(s0 >= MIN_WEIGHT_MASS) {
                    return None;
                }
                let xbar = self.s1[k] / s0;
                let var = self.s2[k] / s0 - xbar * xbar;
                if !(var > MIN_LOCAL_SPREAD * h * h) {
                    return None;
                }
                let rbar = self.t0[k] / s0;
                let slope = (self.t1[k] / s0 - xbar * rbar) / var;
                let est = y_ref + rbar - slope * xbar;
                est.is_finite().then_some(est)
            })
            .collect()
    }
}

fn cv_mean(
    candidates: &[f64],
    series: &[&ObservationSeries],
    family: KernelFamily,
    grid: &EvalGrid,
    folds: usize,
) -> (Vec<Option<f64>>, f64) {
    let y_ref = series[0].values()[0];
    let count: usize = series.iter().map(|s| s.len()).sum();
    let ybar = series.iter().flat_map(|s| s.values()).sum::<f64>() / count as f64;
    let energy: f64 = series
        .iter()
        .flat_map(|s| s.values())
        .map(|y| (y - ybar) * (y - ybar))
        .sum();
    let points = grid.points();
    let scores = candidates
        .iter()
        .map(|&h| {
            let mut per_fold = vec![MeanMoments::zeros(points.len()); folds];
            for (i, s) in series.iter().enumerate() {
                per_fold[i % folds].add(s, y_ref, family, h, points);
            }
            let mut total = MeanMoments::zeros(points.len());
            for f in &per_fold {
                total.plus_assign(f);
            }
            let mut err = 0.0;
            for (f, held) in per_fold.iter().enumerate() {
                let fit = total.minus(held).solve(y_ref, h)?;
                for s in series.iter().skip(f).step_by(folds) {
                    for (t, y) in s.iter() {
                        let e = y - grid.interpolate(&fit, t);
                        err += e * e;
                    }
                }
            }
            Some(err)
        })
        .collect();
    (scores, energy)
}

fn cv_covariance(
    candidates: &[f64],
    series: &[&ObservationSeries],
    mean: &MeanFunction,
    family: KernelFamily,
    grid: &EvalGrid,
    folds: usize,
) -> Result<(Vec<Option<f64>>, f64)> {
    if !series.iter().any(|s| s.len() >= 2) {
        return Err(Error::NoPairs);
    }
    let cv_grid = make_grid(grid.domain(), grid.len().min(CV_COVARIANCE_GRID))?;
    let points = cv_grid.points();
    let res = residuals(series, mean);
    let energy: f64 = res
        .iter()
        .map(|r| {
            let s: f64 = r.values.iter().map(|v| v * v).sum();
            let d: f64 = r.values.iter().map(|v| v * v * v * v).sum();
            s * s - d
        })
        .sum();
    let scores = candidates
        .iter()
        .map(|&h| {
            let mut per_fold = vec![CovMoments::zeros(points.len()); folds];
            for (i, r) in res.iter().enumerate() {
                per_fold[i % folds].add_subject(r, family, h, points);
            }
            let mut total = CovMoments::zeros(points.len());
            for f in &per_fold {
                total.plus_assign(f);
            }
            let mut err = 0.0;
            for (f, held) in per_fold.iter().enumerate() {
                let fit = match total.minus(held).solve(h, points) {
                    Ok(m) => m,
                    Err(_) => return None,
                };
                for r in res.iter().skip(f).step_by(folds) {
                    for (a, (&ta, &ra)) in r.times.iter().zip(&r.values).enumerate() {
                        for (b, (&tb, &rb)) in r.times.iter().zip(&r.values).enumerate() {
                            if a != b {
                                let e = ra * rb - bilinear(&cv_grid, &fit, ta, tb);
                                err += e * e;
                            }
                        }
                    }
                }
            }
            Some(err)
        })
        .collect();
    Ok((scores, energy))
}
