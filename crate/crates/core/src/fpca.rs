//! Univariate FPCA per channel and multivariate FPCA across channels.
//!
//! The covariance operator of a channel is discretized with trapezoid weights
//! `W`: the symmetric matrix `W^(1/2) G W^(1/2)` is eigendecomposed and its
//! eigenvectors `u` are mapped back to functions `W^(-1/2) u`, which are then
//! orthonormal under the same quadrature. Multivariate components are linear
//! recombinations of the univariate ones, with weights taken from the
//! eigenvectors of the covariance of the stacked univariate scores.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::ObservationSeries;
use crate::error::{Error, Result};
use crate::grid::{interpolate_scattered, EvalGrid};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::smoothing::CovarianceSurface;

/// Eigenvalues below `EIGEN_FLOOR * largest` are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Allowed deviation from quadrature orthonormality, univariate systems.
pub const UNIVARIATE_ORTHO_TOL: f64 = 1e-8;
/// Allowed deviation from quadrature orthonormality, multivariate systems.
pub const MULTIVARIATE_ORTHO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationRule {
    pub fve_cutoff: f64,
    pub max_components: Option<usize>,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self {
            fve_cutoff: 0.99,
            max_components: None,
        }
    }
}

impl TruncationRule {
    pub fn with_cap(self, cap: usize) -> Self {
        Self {
            max_components: Some(self.max_components.map_or(cap, |c| c.min(cap))),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fve_cutoff > 0.0 && self.fve_cutoff <= 1.0) {
            return Err(Error::BadConfig(format!(
                "fve_cutoff must lie in (0, 1], got {}",
                self.fve_cutoff
            )));
        }
        if self.max_components == Some(0) {
            return Err(Error::BadConfig("max_components must be at least 1".into()));
        }
        Ok(())
    }
}

/// Cumulative fraction of variance explained by the leading positive eigenvalues.
pub fn fve_curve(eigenvalues: &[f64]) -> Vec<f64> {
    let pos: Vec<f64> = eigenvalues.iter().copied().filter(|&v| v > 0.0).collect();
    let total: f64 = pos.iter().sum();
    let mut acc = 0.0;
    pos.iter()
        .map(|v| {
            acc += v;
            acc / total
        })
        .collect()
}

/// Smallest `k` whose leading eigenvalues explain at least the cutoff
/// fraction of the positive spectrum, capped at `max_components`.
pub fn select_truncation(eigenvalues: &[f64], rule: &TruncationRule) -> Result<usize> {
    rule.validate()?;
    let pos: Vec<f64> = eigenvalues.iter().copied().filter(|&v| v > 0.0).collect();
    if pos.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let total: f64 = pos.iter().sum();
    // relative slack so 9.9 / 10 counts as reaching 0.99
    let target = rule.fve_cutoff * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut k = pos.len();
    for (i, v) in pos.iter().enumerate() {
        acc += v;
        if acc >= target {
            k = i + 1;
            break;
        }
    }
    Ok(rule.max_components.map_or(k, |cap| k.min(cap)))
}

/// Flips `v` so its entry of largest magnitude is positive (earliest index on
/// ties). Returns whether it flipped.
pub fn apply_sign_convention(v: &mut [f64]) -> bool {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateEigenSystem {
    pub channel: String,
    pub grid: EvalGrid,
    /// Retained eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Row `p` is eigenfunction `p` tabulated on the grid.
    pub eigenfunctions: Matrix,
    /// Every eigenvalue above the floor, including truncated ones.
    pub spectrum: Vec<f64>,
}

impl UnivariateEigenSystem {
    /// A system with no components, used for channels without variation.
    pub fn empty(channel: impl Into<String>, grid: EvalGrid) -> Self {
        let g = grid.len();
        Self {
            channel: channel.into(),
            grid,
            eigenvalues: Vec::new(),
            eigenfunctions: Matrix::zeros(0, g),
            spectrum: Vec::new(),
        }
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest deviation of the quadrature Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        gram_deviation(&self.eigenfunctions, &self.grid, 1)
    }
}

fn gram_deviation(functions: &Matrix, grid: &EvalGrid, blocks: usize) -> f64 {
    let g = grid.len();
    let n = functions.rows();
    let mut worst: f64 = 0.0;
    for p in 0..n {
        for q in p..n {
            let (a, b) = (functions.row(p), functions.row(q));
            let ip: f64 = (0..blocks)
                .map(|d| grid.inner(&a[d * g..(d + 1) * g], &b[d * g..(d + 1) * g]))
                .sum();
            let target = if p == q { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

/// Eigendecomposition of one channel's covariance operator.
pub fn univariate_fpca(surface: &CovarianceSurface, rule: &TruncationRule) -> Result<UnivariateEigenSystem> {
    let grid = &surface.grid;
    let g = grid.len();
    if surface.values.shape() != (g, g) {
        return Err(Error::ShapeMismatch(format!(
            "covariance surface is {}x{}, grid has {g} points",
            surface.values.rows(),
            surface.values.cols()
        )));
    }
    let sw: Vec<f64> = grid.weights().iter().map(|w| libm::sqrt(*w)).collect();
    let mut m = Matrix::zeros(g, g);
    for k in 0..g {
        for l in 0..g {
            let sym = 0.5 * (surface.values[(k, l)] + surface.values[(l, k)]);
            m[(k, l)] = sw[k] * sym * sw[l];
        }
    }
    let eig = symmetric_eigen(&m)?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) {
        return Err(Error::EmptySpectrum);
    }
    let floor = EIGEN_FLOOR * lmax;
    let spectrum: Vec<f64> = eig.values.iter().copied().take_while(|&v| v >= floor).collect();
    let k = select_truncation(&spectrum, rule)?;
    let mut eigenfunctions = Matrix::zeros(k, g);
    for p in 0..k {
        let row = eigenfunctions.row_mut(p);
        for (j, x) in row.iter_mut().enumerate() {
            *x = eig.vectors[(p, j)] / sw[j];
        }
        apply_sign_convention(row);
    }
    let sys = UnivariateEigenSystem {
        channel: String::new(),
        grid: grid.clone(),
        eigenvalues: spectrum[..k].to_vec(),
        eigenfunctions,
        spectrum,
    };
    let dev = sys.orthonormality_error();
    if dev > UNIVARIATE_ORTHO_TOL {
        return Err(Error::NotOrthonormal { deviation: dev });
    }
    Ok(sys)
}

/// The series on the grid: linear interpolation inside its observed span,
/// nearest observed value outside it.
pub fn series_on_grid(series: &ObservationSeries, grid: &EvalGrid) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|&x| interpolate_scattered(series.times(), series.values(), x))
        .collect()
}

/// Grid points that fall outside the series' observed span.
pub fn extrapolated_points(series: &ObservationSeries, grid: &EvalGrid) -> usize {
    let (a, b) = (series.times()[0], series.times()[series.len() - 1]);
    grid.points().iter().filter(|&&x| x < a || x > b).count()
}

/// Quadrature projections of a standardized series onto each eigenfunction.
pub fn project_univariate(series: &ObservationSeries, eig: &UnivariateEigenSystem) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::TooSparse { points: series.len() });
    }
    let x = series_on_grid(series, &eig.grid);
    Ok(eig
        .eigenfunctions
        .iter_rows()
        .map(|phi| eig.grid.inner(&x, phi))
        .collect())
}

/// Univariate scores of every subject, channels stacked left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub values: Matrix,
    pub block_widths: Vec<usize>,
}

impl ScoreMatrix {
    pub fn new(values: Matrix, block_widths: Vec<usize>) -> Result<Self> {
        let total: usize = block_widths.iter().sum();
        if total != values.cols() {
            return Err(Error::BlockMismatch(format!(
                "block widths sum to {total}, score matrix has {} columns",
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(Error::NonFiniteFit);
        }
        Ok(Self { values, block_widths })
    }
}

/// Sample covariance of the score columns (divisor `N - 1`).
pub fn score_covariance(scores: &ScoreMatrix) -> Result<Matrix> {
    let (n, p) = scores.values.shape();
    if n < 2 {
        return Err(Error::TooFewSubjects { needed: 2, got: n });
    }
    let mut means = vec![0.0; p];
    for row in scores.values.iter_rows() {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = scores.values.clone();
    for i in 0..n {
        for (x, m) in centered.row_mut(i).iter_mut().zip(&means) {
            *x -= m;
        }
    }
    let c = centered.to_na();
    let mut xi = Matrix::from_na(&(c.transpose() * &c));
    for k in 0..p {
        for l in 0..p {
            xi[(k, l)] /= (n - 1) as f64;
        }
    }
    // exact symmetry regardless of summation order
    for k in 0..p {
        for l in 0..k {
            xi[(l, k)] = xi[(k, l)];
        }
    }
    Ok(xi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateEigenSystem {
    pub grid: EvalGrid,
    pub channels: Vec<String>,
    /// Retained eigenvalues of the score covariance, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue above the floor, including truncated ones.
    pub spectrum: Vec<f64>,
    /// Row `p` holds component `p` for each channel in turn (`D * G` values).
    pub functions: Matrix,
    /// Row `p` is the unit eigenvector `c_p` (length `P_+`).
    pub block_vectors: Matrix,
    pub block_widths: Vec<usize>,
}

impl MultivariateEigenSystem {
    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Component `p` restricted to channel `d`.
    pub fn function(&self, p: usize, d: usize) -> &[f64] {
        let g = self.grid.len();
        &self.functions.row(p)[d * g..(d + 1) * g]
    }

    pub fn orthonormality_error(&self) -> f64 {
        gram_deviation(&self.functions, &self.grid, self.n_channels())
    }
}

/// Combines univariate systems into multivariate components through the
/// eigenvectors of the score covariance `xi`.
pub fn multivariate_fpca(
    systems: &[UnivariateEigenSystem],
    xi: &Matrix,
    rule: &TruncationRule,
) -> Result<MultivariateEigenSystem> {
    let grid = match systems.first() {
        Some(s) => s.grid.clone(),
        None => return Err(Error::BlockMismatch("no channels".into())),
    };
    if let Some(s) = systems.iter().find(|s| s.grid != grid) {
        return Err(Error::BlockMismatch(format!(
            "channel {:?} uses a different grid",
            s.channel
        )));
    }
    let widths: Vec<usize> = systems.iter().map(|s| s.n_components()).collect();
    let p_plus: usize = widths.iter().sum();
    if xi.shape() != (p_plus, p_plus) {
        return Err(Error::BlockMismatch(format!(
            "score covariance is {}x{}, block widths {widths:?} need {p_plus}x{p_plus}",
            xi.rows(),
            xi.cols()
        )));
    }
    if p_plus == 0 {
        return Err(Error::EmptySpectrum);
    }
    let eig = symmetric_eigen(xi)?;
    let lmax = eig.values[0];
    if !(lmax > 0.0) {
        return Err(Error::EmptySpectrum);
    }
    let floor = EIGEN_FLOOR * lmax;
    let spectrum: Vec<f64> = eig.values.iter().copied().take_while(|&v| v >= floor).collect();
    let k = select_truncation(&spectrum, rule)?;
    let g = grid.len();
    let d = systems.len();
    let mut functions = Matrix::zeros(k, d * g);
    let mut block_vectors = Matrix::zeros(k, p_plus);
    for p in 0..k {
        let c = eig.vectors.row(p);
        let row = functions.row_mut(p);
        let mut offset = 0;
        for (ch, sys) in systems.iter().enumerate() {
            let out = &mut row[ch * g..(ch + 1) * g];
            for m in 0..sys.n_components() {
                let coef = c[offset + m];
                for (o, phi) in out.iter_mut().zip(sys.eigenfunctions.row(m)) {
                    *o += coef * phi;
                }
            }
            offset += sys.n_components();
        }
        let flipped = apply_sign_convention(row);
        let cv = block_vectors.row_mut(p);
        cv.copy_from_slice(c);
        if flipped {
            cv.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let sys = MultivariateEigenSystem {
        grid,
        channels: systems.iter().map(|s| s.channel.clone()).collect(),
        eigenvalues: spectrum[..k].to_vec(),
        spectrum,
        functions,
        block_vectors,
        block_widths: widths,
    };
    let dev = sys.orthonormality_error();
    if dev > MULTIVARIATE_ORTHO_TOL {
        return Err(Error::NotOrthonormal { deviation: dev });
    }
    Ok(sys)
}

/// Multivariate scores by direct quadrature against each component.
pub fn project_multivariate(sample: &[&ObservationSeries], eig: &MultivariateEigenSystem) -> Result<Vec<f64>> {
    if sample.len() != eig.n_channels() {
        return Err(Error::ChannelCountMismatch {
            expected: eig.n_channels(),
            got: sample.len(),
        });
    }
    let mut on_grid = Vec::with_capacity(sample.len());
    for s in sample {
        if s.len() < 2 {
            return Err(Error::TooSparse { points: s.len() });
        }
        on_grid.push(series_on_grid(s, &eig.grid));
    }
    Ok((0..eig.n_components())
        .map(|p| {
            on_grid
                .iter()
                .enumerate()
                .map(|(d, x)| eig.grid.inner(x, eig.function(p, d)))
                .sum()
        })
        .collect())
}

/// Multivariate scores from stacked univariate scores: `c_p^T s`.
pub fn project_from_univariate(stacked: &[f64], eig: &MultivariateEigenSystem) -> Result<Vec<f64>> {
    let p_plus: usize = eig.block_widths.iter().sum();
    if stacked.len() != p_plus {
        return Err(Error::LengthMismatch {
            expected: p_plus,
            got: stacked.len(),
        });
    }
    Ok(eig.block_vectors.matvec(stacked))
}

/// Per-channel curves on the grid, `sum_p scores[p] * phi_p`.
pub fn reconstruct(scores: &[f64], eig: &MultivariateEigenSystem) -> Result<Vec<Vec<f64>>> {
    if scores.len() != eig.n_components() {
        return Err(Error::LengthMismatch {
            expected: eig.n_components(),
            got: scores.len(),
        });
    }
    let g = eig.grid.len();
    Ok((0..eig.n_channels())
        .map(|d| {
            let mut out = vec![0.0; g];
            for (p, s) in scores.iter().enumerate() {
                for (o, phi) in out.iter_mut().zip(eig.function(p, d)) {
                    *o += s * phi;
                }
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Interval};
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(g: usize) -> EvalGrid {
        make_grid(Interval::new(0.0, 1.0).unwrap(), g).unwrap()
    }

    fn surface_from(grid: &EvalGrid, terms: &[(f64, &dyn Fn(f64) -> f64)]) -> CovarianceSurface {
        let g = grid.len();
        let mut m = Matrix::zeros(g, g);
        for (k, &s) in grid.points().iter().enumerate() {
            for (l, &t) in grid.points().iter().enumerate() {
                m[(k, l)] = terms.iter().map(|(lam, f)| lam * f(s) * f(t)).sum();
            }
        }
        CovarianceSurface {
            grid: grid.clone(),
            values: m,
            bandwidth: 0.1,
        }
    }

    fn sine(t: f64) -> f64 {
        2f64.sqrt() * (2.0 * PI * t).sin()
    }

    fn cosine(t: f64) -> f64 {
        2f64.sqrt() * (2.0 * PI * t).cos()
    }

    fn sup_diff_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
        let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
        plus.min(minus)
    }

    #[test]
    fn rank_one_surface() {
        let gr = grid(101);
        let surf = surface_from(&gr, &[(2.0, &sine)]);
        let all = TruncationRule {
            fve_cutoff: 1.0,
            max_components: Some(2),
        };
        let sys = univariate_fpca(&surf, &all).unwrap();
        assert!((sys.eigenvalues[0] - 2.0).abs() < 1e-3);
        let truth: Vec<f64> = gr.points().iter().map(|&t| sine(t)).collect();
        assert!(sup_diff_up_to_sign(sys.eigenfunctions.row(0), &truth) < 1e-3);
        assert!(sys.spectrum.get(1).is_none_or(|&v| v <= 1e-6));
    }

    #[test]
    fn rank_two_surface() {
        let gr = grid(101);
        let surf = surface_from(&gr, &[(4.0, &sine), (1.0, &cosine)]);
        let sys = univariate_fpca(&surf, &TruncationRule::default()).unwrap();
        assert_eq!(sys.n_components(), 2);
        assert!((sys.eigenvalues[0] - 4.0).abs() < 1e-3);
        assert!((sys.eigenvalues[1] - 1.0).abs() < 1e-3);
        let a: Vec<f64> = gr.points().iter().map(|&t| sine(t)).collect();
        let b: Vec<f64> = gr.points().iter().map(|&t| cosine(t)).collect();
        assert!(sup_diff_up_to_sign(sys.eigenfunctions.row(0), &a) < 1e-3);
        assert!(sup_diff_up_to_sign(sys.eigenfunctions.row(1), &b) < 1e-3);
        assert!(sys.orthonormality_error() < UNIVARIATE_ORTHO_TOL);
        for row in sys.eigenfunctions.iter_rows() {
            let mut r = row.to_vec();
            assert!(!apply_sign_convention(&mut r));
        }
    }

    #[test]
    fn zero_surface_is_empty() {
        let gr = grid(11);
        let surf = surface_from(&gr, &[]);
        assert_eq!(univariate_fpca(&surf, &TruncationRule::default()), Err(Error::EmptySpectrum));
    }

    #[test]
    fn truncation_examples() {
        let r99 = TruncationRule::default();
        assert_eq!(select_truncation(&[9.0, 0.9, 0.1], &r99), Ok(2));
        assert_eq!(select_truncation(&[5.0], &r99), Ok(1));
        let half = TruncationRule {
            fve_cutoff: 0.5,
            max_components: None,
        };
        assert_eq!(select_truncation(&[4.0, 3.0, 2.0, 1.0], &half), Ok(2));
        assert_eq!(select_truncation(&[0.0, -1.0], &r99), Err(Error::EmptySpectrum));
        assert_eq!(select_truncation(&[4.0, 3.0, 2.0, 1.0], &r99.with_cap(2)), Ok(2));
    }

    fn rank_two_system() -> UnivariateEigenSystem {
        let gr = grid(101);
        univariate_fpca(&surface_from(&gr, &[(4.0, &sine), (1.0, &cosine)]), &TruncationRule::default()).unwrap()
    }

    fn series_of(gr: &EvalGrid, v: Vec<f64>) -> ObservationSeries {
        ObservationSeries::new(gr.points().to_vec(), v).unwrap()
    }

    #[test]
    fn univariate_projection_examples() {
        let sys = rank_two_system();
        let gr = &sys.grid;
        let phi1 = sys.eigenfunctions.row(0).to_vec();
        let phi2 = sys.eigenfunctions.row(1).to_vec();
        let s = project_univariate(&series_of(gr, phi1.clone()), &sys).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-6 && s[1].abs() < 1e-6);
        let zero = project_univariate(&series_of(gr, vec![0.0; gr.len()]), &sys).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let combo: Vec<f64> = phi1.iter().zip(&phi2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let s = project_univariate(&series_of(gr, combo), &sys).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-6 && (s[1] + 3.0).abs() < 1e-6);
        let one = ObservationSeries::new(vec![0.5], vec![1.0]).unwrap();
        assert_eq!(project_univariate(&one, &sys), Err(Error::TooSparse { points: 1 }));
    }

    #[test]
    fn score_covariance_examples() {
        let same = ScoreMatrix::new(Matrix::from_rows(&vec![vec![1.0, 2.0]; 5]).unwrap(), vec![2]).unwrap();
        assert!(score_covariance(&same).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let pair = ScoreMatrix::new(Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap(), vec![1, 1]).unwrap();
        assert_eq!(score_covariance(&pair).unwrap().as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        let one = ScoreMatrix::new(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![1]).unwrap();
        assert_eq!(score_covariance(&one), Err(Error::TooFewSubjects { needed: 2, got: 1 }));
    }

    #[test]
    fn score_covariance_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect()).collect();
        let sm = ScoreMatrix::new(Matrix::from_rows(&rows).unwrap(), vec![4]).unwrap();
        let xi = score_covariance(&sm).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let ma = rows.iter().map(|r| r[a]).sum::<f64>() / 50.0;
                let mb = rows.iter().map(|r| r[b]).sum::<f64>() / 50.0;
                let mut acc = 0.0;
                for r in &rows {
                    acc += (r[a] - ma) * (r[b] - mb);
                }
                let oracle = acc / 49.0;
                assert!((xi[(a, b)] - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()));
            }
        }
    }

    #[test]
    fn single_channel_reduces_to_univariate() {
        let sys = rank_two_system();
        let mut named = sys.clone();
        named.channel = "y".into();
        // scores whose covariance has the two components swapped in magnitude
        let xi = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let mv = multivariate_fpca(&[named], &xi, &TruncationRule::default()).unwrap();
        assert_eq!(mv.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(mv.block_vectors.row(0)[0], 0.0);
        assert_eq!(mv.block_vectors.row(0)[1].abs(), 1.0);
        assert!(sup_diff_up_to_sign(mv.function(0, 0), sys.eigenfunctions.row(1)) < 1e-12);
        assert!(sup_diff_up_to_sign(mv.function(1, 0), sys.eigenfunctions.row(0)) < 1e-12);
        assert_eq!(mv.channels, vec![String::from("y")]);
    }

    #[test]
    fn block_mismatch() {
        let sys = rank_two_system();
        let xi = Matrix::identity(3);
        assert!(matches!(
            multivariate_fpca(&[sys], &xi, &TruncationRule::default()),
            Err(Error::BlockMismatch(_))
        ));
    }

    fn two_channel_system(xi: &Matrix) -> MultivariateEigenSystem {
        let a = rank_two_system();
        let gr = a.grid.clone();
        let s3 = |t: f64| 2f64.sqrt() * (4.0 * PI * t).sin();
        let b = univariate_fpca(&surface_from(&gr, &[(2.0, &s3), (0.5, &sine), (0.1, &cosine)]), &TruncationRule::default()).unwrap();
        multivariate_fpca(&[a, b], xi, &TruncationRule { fve_cutoff: 1.0, max_components: None }).unwrap()
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let a = Matrix::from_rows(&(0..n).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect::<Vec<_>>()).unwrap();
        let mut m = a.matmul(&a.transpose()).unwrap();
        for k in 0..n {
            m[(k, k)] += 0.1 * (k + 1) as f64;
        }
        m
    }

    #[test]
    fn multivariate_orthonormal_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xi = random_spd(&mut rng, 5);
        let mv = two_channel_system(&xi);
        assert_eq!(mv.n_components(), 5);
        assert!(mv.orthonormality_error() < MULTIVARIATE_ORTHO_TOL);
        let gr = mv.grid.clone();
        for p in 0..mv.n_components() {
            let sample: Vec<ObservationSeries> = (0..2).map(|d| series_of(&gr, mv.function(p, d).to_vec())).collect();
            let refs: Vec<&ObservationSeries> = sample.iter().collect();
            let s = project_multivariate(&refs, &mv).unwrap();
            for (q, v) in s.iter().enumerate() {
                let target = if p == q { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-6);
            }
            let back = reconstruct(&s, &mv).unwrap();
            for d in 0..2 {
                assert!(back[d].iter().zip(mv.function(p, d)).all(|(a, b)| (a - b).abs() < 1e-6));
            }
        }
        let zero = reconstruct(&[0.0; 5], &mv).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(reconstruct(&[1.0], &mv), Err(Error::LengthMismatch { expected: 5, got: 1 }));
        let one = [series_of(&gr, vec![0.0; gr.len()])];
        let refs: Vec<&ObservationSeries> = one.iter().collect();
        assert_eq!(
            project_multivariate(&refs, &mv),
            Err(Error::ChannelCountMismatch { expected: 2, got: 1 })
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projection_routes_agree(seed in 0u64..10_000, amps in proptest::collection::vec(-3.0f64..3.0, 6), m in 5usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xi = random_spd(&mut rng, 5);
            let mv = two_channel_system(&xi);
            let uni = [rank_two_system(), {
                let gr = mv.grid.clone();
                let s3 = |t: f64| 2f64.sqrt() * (4.0 * PI * t).sin();
                univariate_fpca(&surface_from(&gr, &[(2.0, &s3), (0.5, &sine), (0.1, &cosine)]), &TruncationRule::default()).unwrap()
            }];
            let sample: Vec<ObservationSeries> = (0..2).map(|d| {
                let mut t: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
                t.sort_by(f64::total_cmp);
                t.dedup();
                let v = t.iter().map(|&x| amps[3 * d] * (PI * x).sin() + amps[3 * d + 1] * x * x + amps[3 * d + 2]).collect();
                ObservationSeries::new(t, v).unwrap()
            }).collect();
            let refs: Vec<&ObservationSeries> = sample.iter().collect();
            let direct = project_multivariate(&refs, &mv).unwrap();
            let mut stacked = project_univariate(&sample[0], &uni[0]).unwrap();
            stacked.extend(project_univariate(&sample[1], &uni[1]).unwrap());
            let via = project_from_univariate(&stacked, &mv).unwrap();
            for (a, b) in direct.iter().zip(&via) {
                prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn sign_convention_idempotent(v in proptest::collection::vec(-10.0f64..10.0, 1..50)) {
            let mut once = v.clone();
            apply_sign_convention(&mut once);
            let mut twice = once.clone();
            apply_sign_convention(&mut twice);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn truncation_reaches_cutoff(mut vals in proptest::collection::vec(1e-6f64..100.0, 1..30), cutoff in 0.05f64..1.0, cap in proptest::option::of(1usize..30)) {
            vals.sort_by(|a, b| b.total_cmp(a));
            let rule = TruncationRule { fve_cutoff: cutoff, max_components: cap };
            let k = select_truncation(&vals, &rule).unwrap();
            prop_assert!(k >= 1 && k <= vals.len());
            let fve = fve_curve(&vals);
            if cap.is_none_or(|c| k < c) {
                prop_assert!(fve[k - 1] >= cutoff * (1.0 - 1e-12));
                if k > 1 {
                    prop_assert!(fve[k - 2] < cutoff);
                }
            }
        }
    }
}
