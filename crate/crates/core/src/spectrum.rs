//! Model inputs: the joint spectrum `H` of paired eigenvalues `(u, t)` of
//! `(1/n) R R*` and `T`, and the aspect ratio `y = p / n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAtom {
    pub u: f64,
    pub t: f64,
    pub weight: f64,
}

impl SpectrumAtom {
    pub fn new(u: f64, t: f64, weight: f64) -> Self {
        Self { u, t, weight }
    }
}

/// One paired eigenvalue `(u_j, t_j)` of a finite realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub u: f64,
    pub t: f64,
}

/// Finite discrete joint distribution of `(u, t)`.
///
/// Construction validates: every `u >= 0`, every `t > 0`, weights positive
/// and summing to one, atoms distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SpectrumAtom>", into = "Vec<SpectrumAtom>")]
pub struct JointSpectrum {
    atoms: Vec<SpectrumAtom>,
}

impl TryFrom<Vec<SpectrumAtom>> for JointSpectrum {
    type Error = Error;

    fn try_from(atoms: Vec<SpectrumAtom>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<JointSpectrum> for Vec<SpectrumAtom> {
    fn from(spectrum: JointSpectrum) -> Self {
        spectrum.atoms
    }
}

/// Checks the spectrum invariants without taking ownership.
pub fn validate(atoms: &[SpectrumAtom]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::InvalidSpectrum("empty atom list".into()));
    }
    for (k, a) in atoms.iter().enumerate() {
        if !(a.u.is_finite() && a.t.is_finite() && a.weight.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("atom {k} has a non-finite field")));
        }
        if a.u < 0.0 {
            return Err(Error::InvalidSpectrum(format!("atom {k}: u = {} < 0", a.u)));
        }
        if a.t <= 0.0 {
            return Err(Error::InvalidSpectrum(format!(
                "atom {k}: t = {} <= 0 (integral of 1/t must be finite)",
                a.t
            )));
        }
        if a.weight <= 0.0 {
            return Err(Error::InvalidSpectrum(format!("atom {k}: weight = {} <= 0", a.weight)));
        }
        if atoms[..k].iter().any(|b| b.u == a.u && b.t == a.t) {
            return Err(Error::InvalidSpectrum(format!(
                "atom {k}: duplicate (u, t) = ({}, {})",
                a.u, a.t
            )));
        }
    }
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidSpectrum(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

impl JointSpectrum {
    pub fn new(atoms: Vec<SpectrumAtom>) -> Result<Self> {
        validate(&atoms)?;
        Ok(Self { atoms })
    }

    /// Single atom of unit mass at `(u, t)`.
    pub fn point_mass(u: f64, t: f64) -> Result<Self> {
        Self::new(vec![SpectrumAtom::new(u, t, 1.0)])
    }

    pub fn atoms(&self) -> &[SpectrumAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `∫ u^i t^j dH`.
    pub fn moment(&self, i: i32, j: i32) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * a.u.powi(i) * a.t.powi(j))
            .sum()
    }

    /// Apportions `p` slots among the atoms by largest remainder.
    ///
    /// Ties in the fractional parts go to the earlier atom.
    pub fn multiplicities(&self, p: usize) -> Vec<usize> {
        let quotas: Vec<f64> = self.atoms.iter().map(|a| a.weight * p as f64).collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().take(p.saturating_sub(assigned)) {
            counts[k] += 1;
        }
        counts
    }

    /// `p` paired eigenvalues whose empirical distribution approximates `H`.
    /// Atoms appear in order, each repeated by its multiplicity.
    pub fn materialize_pairs(&self, p: usize) -> Vec<Pair> {
        self.multiplicities(p)
            .into_iter()
            .zip(&self.atoms)
            .flat_map(|(m, a)| std::iter::repeat(Pair { u: a.u, t: a.t }).take(m))
            .collect()
    }

    /// Distinct values of `u + t`, ascending. These are the eigenvalues of
    /// the deterministic limit `R R* + T` reached as `y -> 0`.
    pub fn degenerate_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.atoms.iter().map(|a| a.u + a.t).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Multiplies every `u` and `t` by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| SpectrumAtom::new(a.u * kappa, a.t * kappa, a.weight))
                .collect(),
        )
    }
}

/// Spectrum together with the aspect ratio `y ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub spectrum: JointSpectrum,
    pub y: f64,
}

impl ModelConfig {
    pub fn new(spectrum: JointSpectrum, y: f64) -> Result<Self> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::InvalidArgument(format!("aspect ratio y = {y} outside (0, 1]")));
        }
        Ok(Self { spectrum, y })
    }

    /// Marchenko–Pastur reduction: `H` a point mass at `(0, sigma2)`.
    pub fn marchenko_pastur(y: f64, sigma2: f64) -> Result<Self> {
        Self::new(JointSpectrum::point_mass(0.0, sigma2)?, y)
    }

    pub fn with_y(&self, y: f64) -> Result<Self> {
        Self::new(self.spectrum.clone(), y)
    }

    pub fn atoms(&self) -> &[SpectrumAtom] {
        self.spectrum.atoms()
    }
}
