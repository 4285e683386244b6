//! Finite-`n` realizations of `B_n = (1/n)(R + T^{1/2} X)(R + T^{1/2} X)*`
//! with `(1/n) R R* = diag(u)` and `T = diag(t)`, plus the eigenvalue
//! bookkeeping used to check gap emptiness and side counts.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::separation::{Convention, SeparationPrediction};
use crate::spectrum::{JointSpectrum, Pair};
use crate::support::SpectralGap;

/// Relative inset applied to both ends of a gap before counting.
pub const COUNT_INSET: f64 = 0.05;

/// Entry law of `X`; each has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    StandardGaussian,
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    UniformStandardized,
}

impl NoiseLaw {
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseLaw::StandardGaussian => rng.sample(StandardNormal),
            NoiseLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseLaw::UniformStandardized => {
                let r3 = 3f64.sqrt();
                rng.random_range(-r3..r3)
            }
        }
    }
}

impl std::str::FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard_gaussian" | "gaussian" => Ok(NoiseLaw::StandardGaussian),
            "rademacher" => Ok(NoiseLaw::Rademacher),
            "uniform_standardized" | "uniform" => Ok(NoiseLaw::UniformStandardized),
            other => Err(Error::InvalidArgument(format!("unknown noise law {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub spectrum: JointSpectrum,
    pub n: usize,
    pub p: usize,
    pub noise_law: NoiseLaw,
    pub trials: usize,
    pub seed: u64,
    /// Entries `(ξ + iη)/√2` with independent standardized `ξ, η`.
    pub complex_entries: bool,
}

impl SimConfig {
    pub fn new(
        spectrum: JointSpectrum,
        n: usize,
        p: usize,
        noise_law: NoiseLaw,
        trials: usize,
        seed: u64,
        complex_entries: bool,
    ) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
        }
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(Self { spectrum, n, p, noise_law, trials, seed, complex_entries })
    }

    /// `p = round(y n)`.
    pub fn from_aspect(spectrum: JointSpectrum, y: f64, n: usize, noise_law: NoiseLaw, trials: usize, seed: u64) -> Result<Self> {
        let p = (y * n as f64).round() as usize;
        Self::new(spectrum, n, p, noise_law, trials, seed, false)
    }

    pub fn y(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

/// Deterministic part of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Deterministic {
    /// `p × n`, `R[j][j] = sqrt(n u_j)`, zero elsewhere.
    pub r: DMatrix<f64>,
    pub t_diag: Vec<f64>,
    pub pairs: Vec<Pair>,
}

pub fn build_deterministic(spectrum: &JointSpectrum, n: usize, p: usize) -> Result<Deterministic> {
    if p == 0 || p > n {
        return Err(Error::DimensionMismatch(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
    }
    let pairs = spectrum.materialize_pairs(p);
    let mut r = DMatrix::<f64>::zeros(p, n);
    for (j, pair) in pairs.iter().enumerate() {
        r[(j, j)] = (n as f64 * pair.u).sqrt();
    }
    let t_diag = pairs.iter().map(|q| q.t).collect();
    Ok(Deterministic { r, t_diag, pairs })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampledMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl SampledMatrix {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            SampledMatrix::Real(m) => eigenvalues(m),
            SampledMatrix::Complex(m) => eigenvalues(m),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SampledMatrix::Real(m) => m.nrows(),
            SampledMatrix::Complex(m) => m.nrows(),
        }
    }
}

/// Random stream for one trial: the root seed selects the key, the trial
/// index selects the ChaCha stream.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws `X` row-major from the trial's stream.
pub fn draw_noise(cfg: &SimConfig, trial_index: u64) -> DMatrix<f64> {
    let mut rng = trial_rng(cfg.seed, trial_index);
    let law = cfg.noise_law;
    DMatrix::from_row_iterator(cfg.p, cfg.n, (0..cfg.p * cfg.n).map(|_| law.draw(&mut rng)))
}

fn draw_complex_noise(cfg: &SimConfig, trial_index: u64) -> DMatrix<Complex64> {
    let mut rng = trial_rng(cfg.seed, trial_index);
    let law = cfg.noise_law;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_iterator(
        cfg.p,
        cfg.n,
        (0..cfg.p * cfg.n).map(|_| {
            let re = law.draw(&mut rng);
            let im = law.draw(&mut rng);
            Complex64::new(re * scale, im * scale)
        }),
    )
}

/// Holds the deterministic part so repeated trials only redraw `X`.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub config: SimConfig,
    pub deterministic: Deterministic,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        let deterministic = build_deterministic(&config.spectrum, config.n, config.p)?;
        Ok(Self { config, deterministic })
    }

    /// `Y = (R + T^{1/2} X)/√n` and `B = Y Y*` for one trial.
    pub fn sample_b(&self, trial_index: u64) -> SampledMatrix {
        let cfg = &self.config;
        let inv_sqrt_n = 1.0 / (cfg.n as f64).sqrt();
        let det = &self.deterministic;
        if cfg.complex_entries {
            let mut y = draw_complex_noise(cfg, trial_index);
            for (j, mut row) in y.row_iter_mut().enumerate() {
                row *= Complex64::new(det.t_diag[j].sqrt() * inv_sqrt_n, 0.0);
            }
            for j in 0..cfg.p {
                y[(j, j)] += Complex64::new(det.r[(j, j)] * inv_sqrt_n, 0.0);
            }
            SampledMatrix::Complex(&y * y.adjoint())
        } else {
            let mut y = draw_noise(cfg, trial_index);
            for (j, mut row) in y.row_iter_mut().enumerate() {
                row *= det.t_diag[j].sqrt() * inv_sqrt_n;
            }
            for j in 0..cfg.p {
                y[(j, j)] += det.r[(j, j)] * inv_sqrt_n;
            }
            SampledMatrix::Real(&y * y.transpose())
        }
    }

    pub fn trial_eigenvalues(&self, trial_index: u64) -> Result<Vec<f64>> {
        self.sample_b(trial_index).eigenvalues()
    }
}

/// Convenience wrapper building the deterministic part on every call.
pub fn sample_b(cfg: &SimConfig, trial_index: u64) -> Result<SampledMatrix> {
    Ok(Simulator::new(cfg.clone())?.sample_b(trial_index))
}

const HERMITIAN_TOL: f64 = 1e-12;

fn hermitian_defect<T: ComplexField<RealField = f64>>(b: &DMatrix<T>) -> Result<f64> {
    if b.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!("{} x {} matrix is not square", b.nrows(), b.ncols())));
    }
    let n = b.nrows();
    let mut scale: f64 = 1.0;
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = b[(i, j)].clone();
            scale = scale.max(v.clone().modulus());
            if j > i {
                defect = defect.max((v - b[(j, i)].clone().conjugate()).modulus());
            }
        }
    }
    Ok(defect / scale)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues<T: ComplexField<RealField = f64>>(b: &DMatrix<T>) -> Result<Vec<f64>> {
    let defect = hermitian_defect(b)?;
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitian(defect));
    }
    let mut vals: Vec<f64> = b.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Ascending eigenvalues with their eigenvectors as columns.
pub fn eigen_decomposition<T: ComplexField<RealField = f64>>(b: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    let defect = hermitian_defect(b)?;
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitian(defect));
    }
    let eig = b.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(b.nrows(), b.ncols(), |r, c| eig.eigenvectors[(r, order[c])].clone());
    Ok((vals, vecs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCounts {
    pub below: usize,
    pub inside: usize,
    pub above: usize,
}

/// `#{λ < a}`, `#{a ≤ λ ≤ b}`, `#{λ > b}` for ascending `eigs`.
pub fn count_eigs(eigs: &[f64], a: f64, b: f64) -> SideCounts {
    let below = eigs.partition_point(|&l| l < a);
    let upto_b = eigs.partition_point(|&l| l <= b);
    SideCounts { below, inside: upto_b - below, above: eigs.len() - upto_b }
}

/// Interval actually counted against: the gap shrunk by 5% of its width at
/// each end (the unbounded gap uses `a + 10` as its upper end).
pub fn inset_interval(gap: &SpectralGap) -> (f64, f64) {
    let hi = gap.finite_upper();
    let delta = COUNT_INSET * (hi - gap.a);
    (gap.a + delta, hi - delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    pub eigenvalues: Vec<f64>,
    /// One entry per gap, in the order given to [`run_trials`].
    pub counts: Vec<SideCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub gap: SpectralGap,
    pub inset: (f64, f64),
    pub active_convention: Convention,
    /// `(below, above)` predicted under the active convention.
    pub predicted: (usize, usize),
    /// `(below, above)` predicted under the flipped convention.
    pub predicted_flipped: (usize, usize),
    pub trials: usize,
    pub empty_inside: usize,
    pub matches_active: usize,
    pub matches_flipped: usize,
    pub freq_empty_inside: f64,
    pub freq_active: f64,
    pub freq_flipped: f64,
}

impl GapSummary {
    pub fn frequency(&self, convention: Convention) -> f64 {
        if convention == self.active_convention {
            self.freq_active
        } else {
            self.freq_flipped
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialsReport {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub noise_law: NoiseLaw,
    pub complex_entries: bool,
    pub gaps: Vec<GapSummary>,
    #[serde(skip)]
    pub trials: Vec<TrialResult>,
}

/// Runs every trial and compares side counts against the predictions, one
/// prediction per gap.
pub fn run_trials(cfg: &SimConfig, predictions: &[SeparationPrediction]) -> Result<TrialsReport> {
    let sim = Simulator::new(cfg.clone())?;
    for pred in predictions {
        if pred.p() != cfg.p {
            return Err(Error::DimensionMismatch(format!("prediction covers {} pairs, simulation has p = {}", pred.p(), cfg.p)));
        }
    }
    let intervals: Vec<(f64, f64)> = predictions.iter().map(|pr| inset_interval(&pr.gap)).collect();
    let trials: Vec<TrialResult> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let eigenvalues = sim.trial_eigenvalues(k)?;
            let counts = intervals.iter().map(|&(lo, hi)| count_eigs(&eigenvalues, lo, hi)).collect();
            Ok(TrialResult { trial: k, seed: cfg.seed, eigenvalues, counts })
        })
        .collect::<Result<_>>()?;

    let total = trials.len();
    let gaps = predictions
        .iter()
        .enumerate()
        .map(|(g, pred)| {
            let active = pred.convention;
            let predicted = pred.counts_under(active);
            let predicted_flipped = pred.counts_under(active.flipped());
            let mut empty = 0;
            let mut hit = 0;
            let mut hit_flipped = 0;
            for t in &trials {
                let c = t.counts[g];
                empty += usize::from(c.inside == 0);
                hit += usize::from((c.below, c.above) == predicted);
                hit_flipped += usize::from((c.below, c.above) == predicted_flipped);
            }
            let freq = |k: usize| k as f64 / total as f64;
            GapSummary {
                gap: pred.gap,
                inset: intervals[g],
                active_convention: active,
                predicted,
                predicted_flipped,
                trials: total,
                empty_inside: empty,
                matches_active: hit,
                matches_flipped: hit_flipped,
                freq_empty_inside: freq(empty),
                freq_active: freq(hit),
                freq_flipped: freq(hit_flipped),
            }
        })
        .collect();
    Ok(TrialsReport {
        n: cfg.n,
        p: cfg.p,
        seed: cfg.seed,
        noise_law: cfg.noise_law,
        complex_entries: cfg.complex_entries,
        gaps,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeBoundReport {
    pub sigma2: f64,
    pub y: f64,
    pub eps: f64,
    /// `σ²(1 - √y)²`.
    pub lower_edge: f64,
    /// `σ²(1 + √y)²`.
    pub upper_edge: f64,
    /// `(λ_min, λ_max)` per trial.
    pub extremes: Vec<(f64, f64)>,
    /// Smallest `λ_min - (lower_edge - eps)` over trials.
    pub lower_margin: f64,
    /// Smallest `(upper_edge + eps) - λ_max` over trials.
    pub upper_margin: f64,
    pub pass: bool,
}

/// Checks `λ_min ≥ σ²(1-√y)² - ε` and `λ_max ≤ σ²(1+√y)² + ε` on every
/// trial of a pure-noise configuration (`R = 0`, `T = σ² I`).
pub fn extreme_bound_check(cfg: &SimConfig, eps: f64) -> Result<ExtremeBoundReport> {
    let atoms = cfg.spectrum.atoms();
    let sigma2 = atoms[0].t;
    if atoms.iter().any(|a| a.u != 0.0 || a.t != sigma2) {
        return Err(Error::InvalidArgument("extreme bound check needs R = 0 and T = sigma^2 I".into()));
    }
    let y = cfg.y();
    let lower_edge = sigma2 * (1.0 - y.sqrt()).powi(2);
    let upper_edge = sigma2 * (1.0 + y.sqrt()).powi(2);
    let sim = Simulator::new(cfg.clone())?;
    let extremes: Vec<(f64, f64)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let e = sim.trial_eigenvalues(k)?;
            Ok((e[0], e[e.len() - 1]))
        })
        .collect::<Result<_>>()?;
    let lower_margin = extremes.iter().map(|&(lo, _)| lo - (lower_edge - eps)).fold(f64::INFINITY, f64::min);
    let upper_margin = extremes.iter().map(|&(_, hi)| (upper_edge + eps) - hi).fold(f64::INFINITY, f64::min);
    Ok(ExtremeBoundReport {
        sigma2,
        y,
        eps,
        lower_edge,
        upper_edge,
        extremes,
        lower_margin,
        upper_margin,
        pass: lower_margin >= 0.0 && upper_margin >= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub max_eigen_gap: f64,
    pub spectral_norm: f64,
    pub holds: bool,
}

/// Slack allowed in `max_k |λ_k(A) - λ_k(B)| ≤ ‖A - B‖`.
pub const PERTURBATION_SLACK: f64 = 1e-10;

pub fn perturbation_check<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<PerturbationReport> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let ea = eigenvalues(a)?;
    let eb = eigenvalues(b)?;
    let diff = eigenvalues(&(a - b))?;
    let spectral_norm = diff.first().map(|v| v.abs()).unwrap_or(0.0).max(diff.last().map(|v| v.abs()).unwrap_or(0.0));
    let max_eigen_gap = ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(PerturbationReport { max_eigen_gap, spectral_norm, holds: max_eigen_gap <= spectral_norm + PERTURBATION_SLACK })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumAtom;
    use proptest::prelude::*;

    fn pure(n: usize, p: usize, law: NoiseLaw) -> SimConfig {
        SimConfig::new(JointSpectrum::point_mass(0.0, 1.0).unwrap(), n, p, law, 1, 7, false).unwrap()
    }

    #[test]
    fn deterministic_examples() {
        let det = build_deterministic(&JointSpectrum::point_mass(0.0, 1.0).unwrap(), 8, 4).unwrap();
        assert!(det.r.iter().all(|v| *v == 0.0));
        assert_eq!(det.t_diag, vec![1.0; 4]);

        let det = build_deterministic(&JointSpectrum::point_mass(4.0, 1.0).unwrap(), 4, 2).unwrap();
        assert_eq!(det.r.shape(), (2, 4));
        assert_eq!(det.r[(0, 0)], 4.0);
        assert_eq!(det.r[(1, 1)], 4.0);
        assert_eq!(det.r.iter().filter(|v| **v != 0.0).count(), 2);

        assert!(build_deterministic(&JointSpectrum::point_mass(4.0, 1.0).unwrap(), 2, 4).is_err());
    }

    #[test]
    fn signal_eigenvalues_are_the_u_multiset() {
        let s = JointSpectrum::new(vec![SpectrumAtom::new(0.5, 1.0, 0.25), SpectrumAtom::new(3.0, 2.0, 0.75)]).unwrap();
        let (n, p) = (12, 8);
        let det = build_deterministic(&s, n, p).unwrap();
        let rr = (&det.r * det.r.transpose()) / n as f64;
        let eig = eigenvalues(&rr).unwrap();
        let mut want: Vec<f64> = det.pairs.iter().map(|q| q.u).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_moments() {
        for law in [NoiseLaw::StandardGaussian, NoiseLaw::Rademacher, NoiseLaw::UniformStandardized] {
            let x = draw_noise(&pure(200, 200, law), 3);
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
            assert!(m.abs() < 3.0 / (200.0f64 * 200.0).sqrt(), "{law:?} mean {m}");
            assert!((v - 1.0).abs() < 0.05, "{law:?} var {v}");
        }
    }

    #[test]
    fn complex_entries_have_zero_pseudo_variance() {
        let mut cfg = pure(200, 200, NoiseLaw::StandardGaussian);
        cfg.complex_entries = true;
        let x = draw_complex_noise(&cfg, 0);
        let n = x.len() as f64;
        let var = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
        let pseudo = x.iter().map(|v| v * v).sum::<Complex64>() / n;
        assert!((var - 1.0).abs() < 0.05);
        assert!(pseudo.norm() < 0.05);
    }

    #[test]
    fn pure_noise_reduces_to_sample_covariance() {
        let cfg = pure(30, 10, NoiseLaw::StandardGaussian);
        let SampledMatrix::Real(b) = sample_b(&cfg, 0).unwrap() else { panic!() };
        let x = draw_noise(&cfg, 0);
        let s = (&x * x.transpose()) / 30.0;
        assert!((b - s).abs().max() < 1e-12);
    }

    #[test]
    fn fixed_seed_replays_bitwise() {
        let s = JointSpectrum::new(vec![SpectrumAtom::new(0.0, 1.0, 0.5), SpectrumAtom::new(8.0, 1.0, 0.5)]).unwrap();
        let cfg = SimConfig::new(s, 40, 10, NoiseLaw::Rademacher, 2, 99, false).unwrap();
        assert_eq!(sample_b(&cfg, 1).unwrap(), sample_b(&cfg, 1).unwrap());
        assert_ne!(sample_b(&cfg, 1).unwrap(), sample_b(&cfg, 0).unwrap());
    }

    #[test]
    fn eigenvalue_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(eigenvalues(&d).unwrap(), vec![1.0, 2.0, 3.0]);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = eigenvalues(&m).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(eigenvalues(&bad), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn reconstruction_residual() {
        let cfg = pure(60, 20, NoiseLaw::StandardGaussian);
        for b in [sample_b(&cfg, 0).unwrap(), {
            let mut c = cfg.clone();
            c.complex_entries = true;
            sample_b(&c, 0).unwrap()
        }] {
            match b {
                SampledMatrix::Real(m) => {
                    let (vals, v) = eigen_decomposition(&m).unwrap();
                    let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
                    let rec = &v * l * v.transpose();
                    assert!((&m - rec).norm() / m.norm() < 1e-10);
                }
                SampledMatrix::Complex(m) => {
                    let (vals, v) = eigen_decomposition(&m).unwrap();
                    let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
                        vals.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
                    ));
                    let rec = &v * l * v.adjoint();
                    assert!((&m - rec).norm() / m.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn count_examples() {
        let e = [1.0, 2.0, 3.0];
        assert_eq!(count_eigs(&e, 1.5, 2.5), SideCounts { below: 1, inside: 1, above: 1 });
        assert_eq!(count_eigs(&e, 0.0, 0.5), SideCounts { below: 0, inside: 0, above: 3 });
        assert_eq!(count_eigs(&e, 1.0, 3.0), SideCounts { below: 0, inside: 3, above: 0 });
        assert_eq!(count_eigs(&e, 2.5, f64::INFINITY), SideCounts { below: 2, inside: 1, above: 0 });
    }

    #[test]
    fn perturbation_examples() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let r = perturbation_check(&a, &a).unwrap();
        assert_eq!(r.max_eigen_gap, 0.0);
        assert!(r.holds);
        let eps = 0.25;
        let b = &a + DMatrix::<f64>::identity(3, 3) * eps;
        let r = perturbation_check(&a, &b).unwrap();
        assert!((r.max_eigen_gap - eps).abs() < 1e-12 && (r.spectral_norm - eps).abs() < 1e-12 && r.holds);
        assert!(perturbation_check(&a, &DMatrix::<f64>::identity(2, 2)).is_err());
    }

    proptest! {
        #[test]
        fn counts_partition_the_spectrum(mut eigs in proptest::collection::vec(-10.0f64..10.0, 1..60), a in -12.0f64..12.0, w in 0.0f64..5.0) {
            eigs.sort_by(f64::total_cmp);
            let c = count_eigs(&eigs, a, a + w);
            prop_assert_eq!(c.below + c.inside + c.above, eigs.len());
            prop_assert_eq!(c.below, eigs.iter().filter(|l| **l < a).count());
            prop_assert_eq!(c.above, eigs.iter().filter(|l| **l > a + w).count());
        }

        #[test]
        fn eigenvalues_ascend_and_keep_the_trace(entries in proptest::collection::vec(-3.0f64..3.0, 36)) {
            let m = DMatrix::from_row_slice(6, 6, &entries);
            let sym = &m + m.transpose();
            let e = eigenvalues(&sym).unwrap();
            prop_assert!(e.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!((e.iter().sum::<f64>() - sym.trace()).abs() < 1e-10);
        }
    }

    #[test]
    fn sim_config_validation() {
        let s = JointSpectrum::point_mass(0.0, 1.0).unwrap();
        assert!(SimConfig::new(s.clone(), 10, 11, NoiseLaw::StandardGaussian, 1, 0, false).is_err());
        assert!(SimConfig::new(s.clone(), 10, 0, NoiseLaw::StandardGaussian, 1, 0, false).is_err());
        assert!(SimConfig::new(s.clone(), 10, 5, NoiseLaw::StandardGaussian, 0, 0, false).is_err());
        assert_eq!(SimConfig::from_aspect(s, 0.2, 2000, NoiseLaw::Rademacher, 1, 0).unwrap().p, 400);
    }
}
