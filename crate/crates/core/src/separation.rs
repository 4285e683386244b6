//! Exact separation: how many eigenvalues of `B_n` fall on each side of a
//! gap, predicted from `h_j(x) = u_j g̲(x) + t_j s̲(x)` relative to `-1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{ModelConfig, Pair};
use crate::stieltjes::{boundary_value, SolveSettings};
use crate::support::SpectralGap;

/// Largest `|Im s̲|` accepted as "real" on a gap.
pub const GAP_IM_TOL: f64 = 1e-6;

/// Which side of `-1` maps to which side of the gap.
///
/// `Derivation`: `h_j < -1` ⇔ eigenvalue above `b`, `h_j > -1` ⇔ below `a`.
/// In the `y → 0` limit `h_j = -(u_j + t_j)/x`, so `h_j < -1` exactly when
/// `u_j + t_j > x`.
///
/// `Theorem`: the flipped reading, `h_j < -1` ⇔ eigenvalue below `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Derivation,
    Theorem,
}

impl Convention {
    pub fn flipped(self) -> Self {
        match self {
            Convention::Derivation => Convention::Theorem,
            Convention::Theorem => Convention::Derivation,
        }
    }

    /// Maps `(#h < -1, #h > -1)` to predicted eigenvalue counts
    /// `(below a, above b)`.
    pub fn eigen_counts(self, h_below: usize, h_above: usize) -> (usize, usize) {
        match self {
            Convention::Derivation => (h_above, h_below),
            Convention::Theorem => (h_below, h_above),
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derivation" => Ok(Convention::Derivation),
            "theorem" => Ok(Convention::Theorem),
            other => Err(Error::InvalidArgument(format!("unknown convention {other:?}"))),
        }
    }
}

/// `h_j(x)` for each pair, using the real boundary values at `x`.
pub fn h_values(pairs: &[Pair], x: f64, cfg: &ModelConfig, settings: &SolveSettings) -> Result<Vec<f64>> {
    let pair = boundary_value(x, cfg, settings)?;
    let im = pair.s_under.im.abs().max(pair.g_under.im.abs());
    if im > GAP_IM_TOL {
        return Err(Error::NotOnGap { x, im });
    }
    let (s, g) = (pair.s_under.re, pair.g_under.re);
    Ok(pairs.iter().map(|p| p.u * g + p.t * s).collect())
}

/// Range of `h` over the sampled points for one distinct `(u, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub u: f64,
    pub t: f64,
    pub multiplicity: usize,
    pub h_min: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationPrediction {
    pub gap: SpectralGap,
    /// Sample points used, strictly inside the gap.
    pub x_samples: Vec<f64>,
    pub profiles: Vec<PairProfile>,
    /// `#{j : h_j < -1}`.
    pub count_h_below: usize,
    /// `#{j : h_j > -1}`.
    pub count_h_above: usize,
    pub convention: Convention,
    /// Eigenvalues predicted below `a` under `convention`.
    pub predicted_below: usize,
    /// Eigenvalues predicted above `b` under `convention`.
    pub predicted_above: usize,
}

impl SeparationPrediction {
    pub fn p(&self) -> usize {
        self.count_h_below + self.count_h_above
    }

    /// `(below, above)` under an arbitrary convention.
    pub fn counts_under(&self, convention: Convention) -> (usize, usize) {
        convention.eigen_counts(self.count_h_below, self.count_h_above)
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        let (below, above) = self.counts_under(convention);
        self.convention = convention;
        self.predicted_below = below;
        self.predicted_above = above;
        self
    }
}

/// Default number of interior sample points.
pub const DEFAULT_SAMPLES: usize = 5;

/// Predicts side counts for `gap` by sampling `h_j` at `n_samples` equally
/// spaced points in `[a + δ, b - δ]`, `δ = 10⁻³ (b - a)`. The unbounded gap
/// is sampled on `(a, a + 10)`.
pub fn predict_counts(
    gap: &SpectralGap,
    pairs: &[Pair],
    cfg: &ModelConfig,
    settings: &SolveSettings,
    n_samples: usize,
    convention: Convention,
) -> Result<SeparationPrediction> {
    if n_samples < 3 {
        return Err(Error::InvalidArgument(format!("n_samples = {n_samples} < 3")));
    }
    let hi = gap.finite_upper();
    let delta = 1e-3 * (hi - gap.a);
    let (lo, hi) = (gap.a + delta, hi - delta);
    let x_samples: Vec<f64> = (0..n_samples)
        .map(|k| lo + (hi - lo) * k as f64 / (n_samples - 1) as f64)
        .collect();

    // h depends only on (u, t): evaluate once per distinct pair
    let mut profiles: Vec<PairProfile> = Vec::new();
    for p in pairs {
        match profiles.iter_mut().find(|q| q.u == p.u && q.t == p.t) {
            Some(q) => q.multiplicity += 1,
            None => profiles.push(PairProfile {
                u: p.u,
                t: p.t,
                multiplicity: 1,
                h_min: f64::INFINITY,
                h_max: f64::NEG_INFINITY,
            }),
        }
    }
    let distinct: Vec<Pair> = profiles.iter().map(|q| Pair { u: q.u, t: q.t }).collect();
    for &x in &x_samples {
        let h = h_values(&distinct, x, cfg, settings)?;
        for (q, hv) in profiles.iter_mut().zip(h) {
            q.h_min = q.h_min.min(hv);
            q.h_max = q.h_max.max(hv);
        }
    }

    let mut below = 0;
    let mut above = 0;
    for (k, q) in profiles.iter().enumerate() {
        if q.h_max < -1.0 {
            below += q.multiplicity;
        } else if q.h_min > -1.0 {
            above += q.multiplicity;
        } else {
            return Err(Error::SignConstancy { pair: k, h_min: q.h_min, h_max: q.h_max });
        }
    }
    let (predicted_below, predicted_above) = convention.eigen_counts(below, above);
    Ok(SeparationPrediction {
        gap: *gap,
        x_samples,
        profiles,
        count_h_below: below,
        count_h_above: above,
        convention,
        predicted_below,
        predicted_above,
    })
}
