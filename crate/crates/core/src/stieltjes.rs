//! Companion Stieltjes transform pair `(s̲, g̲)` of the limiting spectral
//! distribution.
//!
//! For `z` in the upper half-plane the pair is the unique solution there of
//!
//! ```text
//! z = -(1-y)/s̲ - (y/s̲) ∫ dH / (1 + u g̲ + t s̲)
//! z = -1/g̲     + y    ∫ t dH / (1 + u g̲ + t s̲)
//! ```
//!
//! Solutions on the real axis are obtained as limits `v ↓ 0` of `x + iv`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::ModelConfig;

/// Denominators smaller than this are treated as poles.
pub const POLE_EPS: f64 = 1e-14;

/// Smallest imaginary part an iterate may carry.
const HALF_PLANE_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesPair {
    pub z: Complex64,
    pub s_under: Complex64,
    pub g_under: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    /// Residual tolerance, absolute for `|z| <= 1` and relative to `|z|` above.
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// First imaginary part of the continuation toward the real axis.
    pub v_start: f64,
    /// Last imaginary part of the continuation.
    pub v_min: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
            v_start: 1.0,
            v_min: 1e-8,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping = {} outside (0, 1]", self.damping)));
        }
        if !(self.v_min > 0.0 && self.v_start >= self.v_min) {
            return Err(Error::InvalidArgument(format!(
                "continuation range v_start = {}, v_min = {} is invalid",
                self.v_start, self.v_min
            )));
        }
        Ok(())
    }

    fn threshold(&self, z: Complex64) -> f64 {
        self.tol * z.norm().max(1.0)
    }
}

/// Weighted sums over atoms of `1/D`, `t/D`, `u/D` and their squared
/// counterparts, where `D = 1 + u g̲ + t s̲`.
#[derive(Debug, Clone, Copy)]
struct AtomSums {
    inv: Complex64,
    t: Complex64,
    u: Complex64,
    t_sq: Complex64,
    u_sq: Complex64,
    tt_sq: Complex64,
    ut_sq: Complex64,
    uu_sq: Complex64,
}

fn atom_sums(s: Complex64, g: Complex64, cfg: &ModelConfig) -> Result<AtomSums> {
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = AtomSums {
        inv: zero,
        t: zero,
        u: zero,
        t_sq: zero,
        u_sq: zero,
        tt_sq: zero,
        ut_sq: zero,
        uu_sq: zero,
    };
    for a in cfg.atoms() {
        let d = 1.0 + a.u * g + a.t * s;
        let mag = d.norm();
        if !(mag >= POLE_EPS) {
            return Err(Error::Pole { magnitude: mag, context: "1 + u g + t s" });
        }
        let inv = 1.0 / d;
        let inv2 = inv * inv;
        let w = a.weight;
        acc.inv += w * inv;
        acc.t += w * a.t * inv;
        acc.u += w * a.u * inv;
        acc.t_sq += w * a.t * inv2;
        acc.u_sq += w * a.u * inv2;
        acc.tt_sq += w * a.t * a.t * inv2;
        acc.ut_sq += w * a.u * a.t * inv2;
        acc.uu_sq += w * a.u * a.u * inv2;
    }
    Ok(acc)
}

fn check_nonzero(v: Complex64, context: &'static str) -> Result<()> {
    let mag = v.norm();
    if mag >= POLE_EPS {
        Ok(())
    } else {
        Err(Error::Pole { magnitude: mag, context })
    }
}

/// Right-hand sides of the companion system at `(s̲, g̲)`.
fn rhs(s: Complex64, g: Complex64, y: f64, sums: &AtomSums) -> (Complex64, Complex64) {
    let r1 = -(1.0 - y) / s - (y / s) * sums.inv;
    let r2 = -1.0 / g + y * sums.t;
    (r1, r2)
}

/// `(|z - RHS₁|, |z - RHS₂|)` for the companion system.
pub fn companion_residual(pair: &StieltjesPair, cfg: &ModelConfig) -> Result<(f64, f64)> {
    check_nonzero(pair.z, "z")?;
    check_nonzero(pair.s_under, "s")?;
    check_nonzero(pair.g_under, "g")?;
    let sums = atom_sums(pair.s_under, pair.g_under, cfg)?;
    let (r1, r2) = rhs(pair.s_under, pair.g_under, cfg.y, &sums);
    Ok(((pair.z - r1).norm(), (pair.z - r2).norm()))
}

/// `|y g̲² ∫ u dH/(1+u g̲+t s̲) + s̲ - g̲|`, the difference of the two
/// companion equations multiplied through by `s̲ g̲`.
pub fn constraint_residual(s: Complex64, g: Complex64, cfg: &ModelConfig) -> Result<f64> {
    let sums = atom_sums(s, g, cfg)?;
    Ok((cfg.y * g * g * sums.u + s - g).norm())
}

/// Residuals of the original (non-companion) system for `(s, g)`:
///
/// ```text
/// s = ∫   dH / (u/(1+yg) - (1+y s t) z + t(1-y))
/// g = ∫ t dH / (u/(1+yg) - (1+y s t) z + t(1-y))
/// ```
pub fn original_residual(s: Complex64, g: Complex64, z: Complex64, cfg: &ModelConfig) -> Result<(f64, f64)> {
    let y = cfg.y;
    let one_yg = 1.0 + y * g;
    check_nonzero(one_yg, "1 + y g")?;
    let mut rhs_s = Complex64::new(0.0, 0.0);
    let mut rhs_g = Complex64::new(0.0, 0.0);
    for a in cfg.atoms() {
        let d = a.u / one_yg - (1.0 + y * s * a.t) * z + a.t * (1.0 - y);
        check_nonzero(d, "u/(1+yg) - (1+yst)z + t(1-y)")?;
        rhs_s += a.weight / d;
        rhs_g += a.weight * a.t / d;
    }
    Ok(((s - rhs_s).norm(), (g - rhs_g).norm()))
}

/// `s̲ = -(1-y)/z + y s`, `g̲ = -1/(z (1 + y g))`.
pub fn to_companion(s: Complex64, g: Complex64, z: Complex64, y: f64) -> Result<StieltjesPair> {
    check_nonzero(z, "z")?;
    let one_yg = 1.0 + y * g;
    check_nonzero(one_yg, "1 + y g")?;
    Ok(StieltjesPair {
        z,
        s_under: -(1.0 - y) / z + y * s,
        g_under: -1.0 / (z * one_yg),
    })
}

/// Inverse of [`to_companion`]; returns `(s, g)`.
pub fn from_companion(pair: &StieltjesPair, y: f64) -> Result<(Complex64, Complex64)> {
    if y == 0.0 {
        return Err(Error::InvalidArgument("y = 0 makes the transform singular".into()));
    }
    let z = pair.z;
    check_nonzero(z, "z")?;
    let zg = z * pair.g_under;
    check_nonzero(zg, "z g")?;
    let s = (pair.s_under + (1.0 - y) / z) / y;
    let g = (-1.0 / zg - 1.0) / y;
    Ok((s, g))
}

/// The bounded quantities `A₁, A₂, B₀, B₁, B₂`:
/// `A_j = ∫ u t^{j-1} dH / |D|²`, `B_j = ∫ t^j dH / |D|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapQuantities {
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

pub fn gap_quantities(pair: &StieltjesPair, cfg: &ModelConfig) -> Result<GapQuantities> {
    let mut q = GapQuantities { a1: 0.0, a2: 0.0, b0: 0.0, b1: 0.0, b2: 0.0 };
    for a in cfg.atoms() {
        let d = 1.0 + a.u * pair.g_under + a.t * pair.s_under;
        let m2 = d.norm_sqr();
        if !(m2.sqrt() >= POLE_EPS) {
            return Err(Error::Pole { magnitude: m2.sqrt(), context: "1 + u g + t s" });
        }
        let w = a.weight / m2;
        q.a1 += w * a.u;
        q.a2 += w * a.u * a.t;
        q.b0 += w;
        q.b1 += w * a.t;
        q.b2 += w * a.t * a.t;
    }
    Ok(q)
}

/// Residuals of the imaginary-part identities obtained from the companion
/// system at `z = x + iv`:
///
/// ```text
/// Im(z s̲) = y (A₁ Im g̲ + B₁ Im s̲)
/// v       = Im g̲ / |g̲|² - y (A₂ Im g̲ + B₂ Im s̲)
/// ```
pub fn imaginary_part_residuals(pair: &StieltjesPair, cfg: &ModelConfig) -> Result<(f64, f64)> {
    let q = gap_quantities(pair, cfg)?;
    let y = cfg.y;
    let (s2, g2) = (pair.s_under.im, pair.g_under.im);
    let zs2 = (pair.z * pair.s_under).im;
    let first = zs2 - y * (q.a1 * g2 + q.b1 * s2);
    let second = pair.z.im - (g2 / pair.g_under.norm_sqr() - y * (q.a2 * g2 + q.b2 * s2));
    Ok((first.abs(), second.abs()))
}

struct State {
    s: Complex64,
    g: Complex64,
    residual: f64,
}

fn residual_at(z: Complex64, s: Complex64, g: Complex64, cfg: &ModelConfig) -> Result<f64> {
    check_nonzero(s, "s")?;
    check_nonzero(g, "g")?;
    let sums = atom_sums(s, g, cfg)?;
    let (r1, r2) = rhs(s, g, cfg.y, &sums);
    Ok((z - r1).norm().max((z - r2).norm()))
}

fn project(v: Complex64) -> Complex64 {
    if v.im < HALF_PLANE_FLOOR {
        Complex64::new(v.re, HALF_PLANE_FLOOR)
    } else {
        v
    }
}

/// One Newton step on `F(s̲, g̲) = RHS(s̲, g̲) - z`.
fn newton_step(z: Complex64, s: Complex64, g: Complex64, cfg: &ModelConfig) -> Result<(Complex64, Complex64)> {
    let y = cfg.y;
    let sums = atom_sums(s, g, cfg)?;
    let (r1, r2) = rhs(s, g, y, &sums);
    let f1 = r1 - z;
    let f2 = r2 - z;
    let s2 = s * s;
    let j11 = (1.0 - y) / s2 + (y / s2) * sums.inv + (y / s) * sums.t_sq;
    let j12 = (y / s) * sums.u_sq;
    let j21 = -y * sums.tt_sq;
    let j22 = 1.0 / (g * g) - y * sums.ut_sq;
    let det = j11 * j22 - j12 * j21;
    check_nonzero(det, "Newton Jacobian")?;
    let ds = -(j22 * f1 - j12 * f2) / det;
    let dg = -(-j21 * f1 + j11 * f2) / det;
    Ok((s + ds, g + dg))
}

/// Newton iterations from a warm start; `None` when they leave the upper
/// half-plane, hit a pole, or fail to reach the tolerance.
fn newton_polish(z: Complex64, s0: Complex64, g0: Complex64, cfg: &ModelConfig, settings: &SolveSettings) -> Option<State> {
    let threshold = settings.threshold(z);
    let (mut s, mut g) = (s0, g0);
    let mut residual = residual_at(z, s, g, cfg).ok()?;
    for _ in 0..40 {
        if residual < threshold {
            return Some(State { s, g, residual });
        }
        let (sn, gn) = newton_step(z, s, g, cfg).ok()?;
        if !(sn.im > 0.0 && gn.im > 0.0) || !sn.is_finite() || !gn.is_finite() {
            return None;
        }
        let rn = residual_at(z, sn, gn, cfg).ok()?;
        if !(rn < residual) && rn >= threshold {
            return None;
        }
        s = sn;
        g = gn;
        residual = rn;
    }
    (residual < threshold).then_some(State { s, g, residual })
}

/// Damped alternating fixed point with Newton acceleration once the iterate
/// is in the basin.
fn fixed_point(
    z: Complex64,
    cfg: &ModelConfig,
    settings: &SolveSettings,
    start: (Complex64, Complex64),
    damping: f64,
) -> Result<State> {
    let y = cfg.y;
    let threshold = settings.threshold(z);
    let (mut s, mut g) = start;
    let mut residual = residual_at(z, s, g, cfg)?;
    let mut damping = damping;
    let mut rises = 0usize;
    for it in 0..settings.max_iter {
        if residual < threshold {
            return Ok(State { s, g, residual });
        }
        if it % 16 == 15 || residual < 1e-3 * z.norm().max(1.0) {
            if let Some(st) = newton_polish(z, s, g, cfg, settings) {
                return Ok(st);
            }
        }
        let sums = atom_sums(s, g, cfg)?;
        let denom = z - y * sums.t;
        check_nonzero(denom, "z - y ∫ t/D")?;
        let g_cand = -1.0 / denom;
        let s_cand = -((1.0 - y) + y * sums.inv) / z;
        s = project((1.0 - damping) * s + damping * s_cand);
        g = project((1.0 - damping) * g + damping * g_cand);
        let next = residual_at(z, s, g, cfg)?;
        if next > residual {
            rises += 1;
            if rises > 8 && damping > 0.1 {
                damping = 0.1;
                rises = 0;
            }
        }
        residual = next;
    }
    if residual < threshold {
        Ok(State { s, g, residual })
    } else {
        Err(Error::NonConvergence { iterations: settings.max_iter, residual })
    }
}

/// A few extra Newton steps past the stopping threshold, kept while the
/// residual keeps dropping.
fn finish(z: Complex64, st: State, cfg: &ModelConfig) -> StieltjesPair {
    let State { mut s, mut g, mut residual } = st;
    for _ in 0..3 {
        let Ok((sn, gn)) = newton_step(z, s, g, cfg) else { break };
        if !(sn.im > 0.0 && gn.im > 0.0) {
            break;
        }
        match residual_at(z, sn, gn, cfg) {
            Ok(rn) if rn < residual => {
                s = sn;
                g = gn;
                residual = rn;
            }
            _ => break,
        }
    }
    StieltjesPair { z, s_under: s, g_under: g }
}

/// Solves the companion system at `z` with `Im z > 0`.
///
/// Starts from `s̲ = g̲ = -1/z`. When the direct iteration fails (slow
/// contraction close to the real axis, or a pole) the solution is reached
/// by continuation from `Re z + i·max(1, Im z)`.
pub fn solve_at(z: Complex64, cfg: &ModelConfig, settings: &SolveSettings) -> Result<StieltjesPair> {
    settings.validate()?;
    if !(z.im > 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("solve_at needs Im z > 0, got {z}")));
    }
    let start = (-1.0 / z, -1.0 / z);
    let direct = fixed_point(z, cfg, settings, start, settings.damping)
        .or_else(|_| fixed_point(z, cfg, settings, start, 0.1));
    match direct {
        Ok(st) => Ok(finish(z, st, cfg)),
        Err(first) => {
            if z.im >= settings.v_start {
                return Err(first);
            }
            continuation(z.re, z.im, cfg, settings)
        }
    }
}

/// Geometric continuation `v_start, v_start/2, …` down to `v_end`, warm
/// starting each solve from the previous one.
fn continuation(x: f64, v_end: f64, cfg: &ModelConfig, settings: &SolveSettings) -> Result<StieltjesPair> {
    let mut v = settings.v_start.max(v_end);
    let z0 = Complex64::new(x, v);
    let init = (-1.0 / z0, -1.0 / z0);
    let mut st = fixed_point(z0, cfg, settings, init, settings.damping)
        .or_else(|_| fixed_point(z0, cfg, settings, init, 0.1))
        .map_err(|e| match e {
            Error::NonConvergence { residual, .. } => Error::ContinuationStall { v, residual },
            other => other,
        })?;
    while v > v_end {
        v = (v * 0.5).max(v_end);
        let z = Complex64::new(x, v);
        st = match newton_polish(z, st.s, st.g, cfg, settings) {
            Some(next) => next,
            None => {
                let last = residual_at(z, st.s, st.g, cfg).unwrap_or(f64::INFINITY);
                fixed_point(z, cfg, settings, (st.s, st.g), settings.damping)
                    .or_else(|_| fixed_point(z, cfg, settings, (st.s, st.g), 0.1))
                    .map_err(|_| Error::ContinuationStall { v, residual: last })?
            }
        };
    }
    Ok(finish(Complex64::new(x, v), st, cfg))
}

/// Limit of the pair as `z = x + iv` approaches the real point `x ≠ 0`,
/// evaluated at `v = v_min`.
///
/// Off the support the limit is real and the value at `v_min` still carries
/// an `O(v_min)` imaginary part, which near the atom of the companion law at
/// zero is large. There a Newton polish on the real axis is attempted from
/// the real parts; it is kept only if it lands within a few multiples of
/// that imaginary part. Inside the support no real root is that close, so
/// the `v_min` value is returned unchanged.
pub fn boundary_value(x: f64, cfg: &ModelConfig, settings: &SolveSettings) -> Result<StieltjesPair> {
    settings.validate()?;
    if x == 0.0 || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("boundary value undefined at x = {x}")));
    }
    let pair = continuation(x, settings.v_min, cfg, settings)?;
    Ok(real_axis_polish(x, &pair, cfg, settings).unwrap_or(pair))
}

fn real_axis_polish(x: f64, pair: &StieltjesPair, cfg: &ModelConfig, settings: &SolveSettings) -> Option<StieltjesPair> {
    let z = Complex64::new(x, 0.0);
    let (mut s, mut g) = (Complex64::new(pair.s_under.re, 0.0), Complex64::new(pair.g_under.re, 0.0));
    let im = pair.s_under.im.abs() + pair.g_under.im.abs();
    let radius = 10.0 * im + 1e-12 * pair.s_under.norm().max(pair.g_under.norm()).max(1.0);
    let threshold = settings.threshold(z);
    for _ in 0..40 {
        if residual_at(z, s, g, cfg).ok()? < threshold {
            let moved = (s - pair.s_under.re).norm() + (g - pair.g_under.re).norm();
            return (moved <= radius).then_some(StieltjesPair { z, s_under: s, g_under: g });
        }
        let (sn, gn) = newton_step(z, s, g, cfg).ok()?;
        if !sn.is_finite() || !gn.is_finite() {
            return None;
        }
        s = sn;
        g = gn;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{JointSpectrum, SpectrumAtom};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mp(y: f64) -> ModelConfig {
        ModelConfig::marchenko_pastur(y, 1.0).unwrap()
    }

    /// Companion MP transform: root of `z s² + (z + 1 - y) s + 1 = 0` with
    /// positive imaginary part.
    fn mp_companion(z: Complex64, y: f64) -> Complex64 {
        let b = z + 1.0 - y;
        let disc = (b * b - 4.0 * z).sqrt();
        let r1 = (-b + disc) / (2.0 * z);
        let r2 = (-b - disc) / (2.0 * z);
        if r1.im > r2.im {
            r1
        } else {
            r2
        }
    }

    /// MP transform of `F` itself: `s = (s̲ + (1-y)/z) / y`.
    fn mp_stieltjes(z: Complex64, y: f64) -> Complex64 {
        (mp_companion(z, y) + (1.0 - y) / z) / y
    }

    fn mp_density(x: f64, y: f64) -> f64 {
        let (a, b) = ((1.0 - y.sqrt()).powi(2), (1.0 + y.sqrt()).powi(2));
        if x <= a || x >= b {
            0.0
        } else {
            ((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * y * x)
        }
    }

    fn two_atom(y: f64) -> ModelConfig {
        let s = JointSpectrum::new(vec![SpectrumAtom::new(0.0, 1.0, 0.5), SpectrumAtom::new(8.0, 1.0, 0.5)]).unwrap();
        ModelConfig::new(s, y).unwrap()
    }

    #[test]
    fn residual_zero_at_mp_closed_form() {
        let z = c(3.0, 0.5);
        let s = mp_companion(z, 0.25);
        let pair = StieltjesPair { z, s_under: s, g_under: s };
        let (r1, r2) = companion_residual(&pair, &mp(0.25)).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
        let bumped = StieltjesPair { s_under: s + 1e-3, ..pair };
        let (b1, b2) = companion_residual(&bumped, &mp(0.25)).unwrap();
        assert!(b1 > 0.0 && b2 > 0.0);
    }

    #[test]
    fn original_residual_at_mp_closed_form() {
        let z = c(3.0, 0.5);
        let y = 0.25;
        let s = mp_stieltjes(z, y);
        // with u = 0, t = 1 the second equation forces g = s
        let (r1, r2) = original_residual(s, s, z, &mp(y)).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
        let (b1, _) = original_residual(s + 1e-3, s, z, &mp(y)).unwrap();
        assert!(b1 > 0.0);
    }

    #[test]
    fn residual_reports_pole() {
        let cfg = mp(0.5);
        // 1 + s = 0
        let pair = StieltjesPair { z: c(1.0, 1.0), s_under: c(-1.0, 0.0), g_under: c(-1.0, 0.0) };
        assert!(matches!(companion_residual(&pair, &cfg), Err(Error::Pole { .. })));
    }

    #[test]
    fn companion_transform_examples() {
        let (s, g, z) = (c(0.3, 0.7), c(-0.2, 0.4), c(1.5, 0.2));
        let pair = to_companion(s, g, z, 1.0).unwrap();
        assert!((pair.s_under - s).norm() < 1e-15);
        // y -> 0 with bounded s, g
        let small = to_companion(s, g, z, 1e-12).unwrap();
        assert!((small.s_under + 1.0 / z).norm() < 1e-10);
        assert!((small.g_under + 1.0 / z).norm() < 1e-10);
        assert!(from_companion(&pair, 0.0).is_err());
        assert!(to_companion(s, c(-1.0, 0.0), z, 1.0).is_err());
    }

    #[test]
    fn solve_matches_mp_quadratic() {
        let z = c(1.0, 1.0);
        let pair = solve_at(z, &mp(0.25), &SolveSettings::default()).unwrap();
        let want = mp_companion(z, 0.25);
        assert!((pair.s_under - want).norm() < 1e-9);
        assert!((pair.g_under - want).norm() < 1e-9);
    }

    #[test]
    fn solve_small_y_approaches_minus_inverse_z() {
        let z = c(5.0, 0.01);
        let expected = -1.0 / z;
        for cfg in [mp(1e-4), two_atom(1e-4)] {
            let pair = solve_at(z, &cfg, &SolveSettings::default()).unwrap();
            assert!((pair.s_under - expected).norm() < 1e-3, "{:?}", pair);
            // two-atom: the u = 8 atom makes g differ from s, but y scales it away
            assert!((pair.g_under - expected).norm() < 1e-3, "{:?}", pair);
        }
    }

    #[test]
    fn solve_far_field_decay() {
        let z = c(1e6, 1e3);
        let pair = solve_at(z, &two_atom(0.3), &SolveSettings::default()).unwrap();
        assert!((pair.s_under + 1.0 / z).norm() < 1e-8);
    }

    #[test]
    fn solve_rejects_lower_half_plane() {
        assert!(solve_at(c(1.0, -0.1), &mp(0.5), &SolveSettings::default()).is_err());
        assert!(solve_at(c(1.0, 0.0), &mp(0.5), &SolveSettings::default()).is_err());
    }

    #[test]
    fn boundary_value_inside_mp_bulk() {
        let y = 0.25;
        let pair = boundary_value(1.0, &mp(y), &SolveSettings::default()).unwrap();
        let f = pair.s_under.im / (y * std::f64::consts::PI);
        assert!(pair.s_under.im > 0.0);
        assert!((f - mp_density(1.0, y)).abs() < 1e-6, "{f}");
    }

    #[test]
    fn boundary_value_outside_mp_support() {
        let pair = boundary_value(3.0, &mp(0.25), &SolveSettings::default()).unwrap();
        assert!(pair.s_under.im.abs() < 1e-7);
        assert!(pair.s_under.re < 0.0);
        assert!((pair.s_under - pair.g_under).norm() < 1e-9);
        assert!(boundary_value(0.0, &mp(0.25), &SolveSettings::default()).is_err());
    }

    #[test]
    fn imaginary_part_identities_hold_with_c_equal_y() {
        let cfg = two_atom(0.3);
        let pair = solve_at(c(4.0, 0.3), &cfg, &SolveSettings::default()).unwrap();
        let (a, b) = imaginary_part_residuals(&pair, &cfg).unwrap();
        assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
    }

    #[test]
    fn decay_along_imaginary_axis() {
        let cfg = two_atom(0.5);
        let mut last = f64::INFINITY;
        for v in [10.0, 100.0, 1000.0, 10000.0] {
            let z = c(0.0, v);
            let pair = solve_at(z, &cfg, &SolveSettings::default()).unwrap();
            let err = (pair.s_under * z + 1.0).norm();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn settings_validation() {
        let bad = SolveSettings { tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolveSettings { max_iter: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolveSettings { damping: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn arb_cfg() -> impl Strategy<Value = ModelConfig> {
        (
            prop::collection::vec((0.0f64..10.0, 0.2f64..4.0, 0.1f64..1.0), 1..=5),
            0.05f64..=1.0,
        )
            .prop_filter_map("valid", |(raw, y)| {
                let total: f64 = raw.iter().map(|r| r.2).sum();
                let mut atoms: Vec<_> = raw.iter().map(|&(u, t, w)| SpectrumAtom::new(u, t, w / total)).collect();
                let head: f64 = atoms[..atoms.len() - 1].iter().map(|a| a.weight).sum();
                let last = atoms.len() - 1;
                atoms[last].weight = 1.0 - head;
                ModelConfig::new(JointSpectrum::new(atoms).ok()?, y).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn companion_round_trip(sr in -3.0f64..3.0, si in 0.01f64..3.0, gr in -3.0f64..3.0, gi in 0.01f64..3.0,
                                zr in -5.0f64..5.0, zi in 0.1f64..5.0, y in 0.05f64..1.0) {
            let (s, g, z) = (c(sr, si), c(gr, gi), c(zr, zi));
            let pair = to_companion(s, g, z, y).unwrap();
            let (s2, g2) = from_companion(&pair, y).unwrap();
            prop_assert!((s2 - s).norm() <= 1e-12 * s.norm().max(1.0) / y);
            prop_assert!((g2 - g).norm() <= 1e-12 * g.norm().max(1.0) / y);
        }

        #[test]
        fn solved_pairs_are_herglotz_and_consistent(cfg in arb_cfg(), x in -2.0f64..20.0, v in 0.01f64..5.0) {
            let settings = SolveSettings::default();
            let z = c(x, v);
            let pair = solve_at(z, &cfg, &settings).unwrap();
            prop_assert!(pair.s_under.im > 0.0 && pair.g_under.im > 0.0);
            let (r1, r2) = companion_residual(&pair, &cfg).unwrap();
            prop_assert!(r1.max(r2) < settings.tol * z.norm().max(1.0));
            // the constraint is s̲ g̲ (RHS₁ - RHS₂), so it inherits the residual scaled by |s̲ g̲|
            let scale = z.norm().max(1.0) * (pair.s_under * pair.g_under).norm().max(1.0);
            prop_assert!(constraint_residual(pair.s_under, pair.g_under, &cfg).unwrap() < 10.0 * settings.tol * scale);
            let (s, g) = from_companion(&pair, cfg.y).unwrap();
            let (e1, e2) = original_residual(s, g, z, &cfg).unwrap();
            prop_assert!(e1.max(e2) < 1e-9, "{} {}", e1, e2);
            let q = gap_quantities(&pair, &cfg).unwrap();
            prop_assert!([q.a1, q.a2, q.b0, q.b1, q.b2].iter().all(|v| v.is_finite()));
        }
    }
}
