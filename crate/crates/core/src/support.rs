//! Support of the limiting spectral distribution.
//!
//! On the real axis, every real `g̲ ≠ 0` determines a real `s̲` through
//!
//! ```text
//! y g̲² ∫ u dH/(1 + u g̲ + t s̲) + s̲ - g̲ = 0
//! ```
//!
//! and then `x(g̲) = -1/g̲ + y ∫ t dH/(1 + u g̲ + t s̲)`. Maximal parameter
//! intervals where `x'(g̲) > 0` and every atom denominator keeps its sign map
//! onto the gaps of the support.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect_predicate, bisect_secant};
use crate::spectrum::{JointSpectrum, ModelConfig};
use crate::stieltjes::{boundary_value, SolveSettings, POLE_EPS};

/// Residual bound on the constraint root.
pub const ROOT_TOL: f64 = 1e-12;

/// Real parametrized solution `(g̲, s̲(g̲), x(g̲), x'(g̲))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealBranch {
    pub g: f64,
    pub s: f64,
    pub x: f64,
    pub dx_dg: f64,
    pub ds_dg: f64,
}

impl RealBranch {
    /// Sign of `1 + u g̲ + t s̲` for each atom.
    pub fn signs(&self, cfg: &ModelConfig) -> Vec<i8> {
        cfg.atoms()
            .iter()
            .map(|a| if 1.0 + a.u * self.g + a.t * self.s > 0.0 { 1 } else { -1 })
            .collect()
    }
}

fn constraint(s: f64, g: f64, scale: f64, cfg: &ModelConfig) -> (f64, f64) {
    // returns (φ, ∂φ/∂s) with the integral term multiplied by `scale`
    let mut su = 0.0;
    let mut sut = 0.0;
    for a in cfg.atoms() {
        if a.u == 0.0 {
            continue;
        }
        let d = 1.0 + a.u * g + a.t * s;
        su += a.weight * a.u / d;
        sut += a.weight * a.u * a.t / (d * d);
    }
    let k = scale * cfg.y * g * g;
    (s - g + k * su, 1.0 - k * sut)
}

/// Interval of `s` between the nearest poles `s = -(1 + u g)/t` around `g`.
fn pole_cell(g: f64, cfg: &ModelConfig) -> Result<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for a in cfg.atoms().iter().filter(|a| a.u > 0.0) {
        let pole = -(1.0 + a.u * g) / a.t;
        if (pole - g).abs() <= POLE_EPS * g.abs().max(1.0) {
            return Err(Error::NoRealBranch { g });
        }
        if pole < g {
            lo = lo.max(pole);
        } else {
            hi = hi.min(pole);
        }
    }
    Ok((lo, hi))
}

/// Real `s̲` solving the constraint at `g̲`, on the branch that reduces to
/// `s̲ = g̲` when the `u`-integral is switched off.
///
/// The branch is followed by continuation in a factor `λ ∈ [0, 1]` on the
/// integral term. A fold (`∂φ/∂s` reaching zero) means the branch has no
/// real continuation at this `g̲`.
pub fn solve_s_given_g(g: f64, cfg: &ModelConfig) -> Result<f64> {
    if g == 0.0 || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("g = {g} must be finite and nonzero")));
    }
    if cfg.atoms().iter().all(|a| a.u == 0.0) {
        return Ok(g);
    }
    let (lo, hi) = pole_cell(g, cfg)?;
    let inside = |s: f64| s > lo && s < hi;

    let mut lambda: f64 = 0.0;
    let mut s = g;
    let mut step: f64 = 0.125;
    while lambda < 1.0 {
        let target = (lambda + step).min(1.0);
        // tangent predictor: dφ/dλ = y g² ∫ u/D, so ds/dλ = -that / φ_s
        let (phi1, dphi) = constraint(s, g, 1.0, cfg);
        let integral_term = phi1 - (s - g);
        let mut cand = s - (target - lambda) * integral_term / dphi;
        if !inside(cand) {
            cand = s;
        }
        match newton_in_cell(cand, g, target, cfg, lo, hi) {
            Some(root) => {
                s = root;
                lambda = target;
                step = (step * 2.0).min(0.25);
            }
            None => {
                step *= 0.5;
                if step < 1e-7 {
                    return Err(Error::NoRealBranch { g });
                }
            }
        }
    }

    let scale = g.abs().max(s.abs()).max(1.0);
    let phi = |v: f64| constraint(v, g, 1.0, cfg).0;
    if phi(s).abs() <= ROOT_TOL * scale {
        return Ok(s);
    }
    // bracket the Newton root and finish with bisection and secant steps
    let mut h = 1e-12 * scale;
    for _ in 0..40 {
        let (a, b) = ((s - h).max(lo + 0.5 * (s - lo)), (s + h).min(hi - 0.5 * (hi - s)));
        if phi(a).signum() != phi(b).signum() {
            if let Some(root) = bisect_secant(phi, a, b, 1e-15 * scale) {
                if phi(root).abs() <= ROOT_TOL * scale {
                    return Ok(root);
                }
            }
            break;
        }
        h *= 4.0;
    }
    Err(Error::NoRealBranch { g })
}

fn newton_in_cell(start: f64, g: f64, lambda: f64, cfg: &ModelConfig, lo: f64, hi: f64) -> Option<f64> {
    let mut s = start;
    for _ in 0..40 {
        let (phi, dphi) = constraint(s, g, lambda, cfg);
        if !(dphi > 0.0) || !phi.is_finite() {
            return None;
        }
        let delta = phi / dphi;
        let next = s - delta;
        if !(next > lo && next < hi) {
            return None;
        }
        s = next;
        if delta.abs() <= 1e-15 * s.abs().max(1.0) {
            let (_, dphi) = constraint(s, g, lambda, cfg);
            return (dphi > 0.0).then_some(s);
        }
    }
    None
}

/// Evaluates the real branch at `g̲`, including the analytic derivative
/// `x'(g̲) = 1/g̲² - y A₂ - y B₂ s̲'(g̲)`.
pub fn x_of_g(g: f64, cfg: &ModelConfig) -> Result<RealBranch> {
    let s = solve_s_given_g(g, cfg)?;
    let y = cfg.y;
    let (mut st, mut su, mut suu, mut sut, mut stt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for a in cfg.atoms() {
        let d = 1.0 + a.u * g + a.t * s;
        if !(d.abs() >= POLE_EPS) {
            return Err(Error::Pole { magnitude: d.abs(), context: "1 + u g + t s" });
        }
        let w = a.weight;
        let d2 = d * d;
        st += w * a.t / d;
        su += w * a.u / d;
        suu += w * a.u * a.u / d2;
        sut += w * a.u * a.t / d2;
        stt += w * a.t * a.t / d2;
    }
    let x = -1.0 / g + y * st;
    let phi_g = -1.0 + 2.0 * y * g * su - y * g * g * suu;
    let phi_s = 1.0 - y * g * g * sut;
    if phi_s.abs() < POLE_EPS {
        return Err(Error::NoRealBranch { g });
    }
    let ds_dg = -phi_g / phi_s;
    let dx_dg = 1.0 / (g * g) - y * sut - y * stt * ds_dg;
    Ok(RealBranch { g, s, x, dx_dg, ds_dg })
}

mod null_as_pos_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            ser.serialize_f64(*v)
        } else {
            ser.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::INFINITY))
    }
}

mod null_as_neg_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        super::null_as_pos_inf::serialize(v, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Open interval `(a, b)` outside the support of the limiting distribution.
/// `b` is `+∞` for the gap above the support; `g_a = -∞` for the gap
/// `(0, a)` reached as `g̲ → -∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub a: f64,
    #[serde(with = "null_as_pos_inf")]
    pub b: f64,
    #[serde(with = "null_as_neg_inf")]
    pub g_a: f64,
    pub g_b: f64,
    pub y: f64,
}

impl SpectralGap {
    pub fn is_unbounded(&self) -> bool {
        self.b.is_infinite()
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Upper end used where a finite interval is required: `b`, or `a + 10`
    /// for the unbounded gap.
    pub fn finite_upper(&self) -> f64 {
        if self.is_unbounded() {
            self.a + UNBOUNDED_PROXY
        } else {
            self.b
        }
    }

    /// A point well inside the gap.
    pub fn probe(&self) -> f64 {
        0.5 * (self.a + self.finite_upper())
    }
}

/// Finite stand-in for the `+∞` end of the unbounded gap.
pub const UNBOUNDED_PROXY: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapSearch {
    /// Most negative `g̲` of the sweep.
    pub g_lo: f64,
    /// Most positive `g̲` of the sweep.
    pub g_hi: f64,
    /// Smallest `|g̲|` of the sweep.
    pub g_inner: f64,
    /// Log-spaced points per side.
    pub n_grid: usize,
}

impl Default for GapSearch {
    fn default() -> Self {
        Self { g_lo: -1e4, g_hi: 1e4, g_inner: 1e-6, n_grid: 4000 }
    }
}

impl GapSearch {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 100 {
            return Err(Error::InvalidArgument(format!("n_grid = {} < 100", self.n_grid)));
        }
        if !(self.g_lo < -self.g_inner && self.g_hi > self.g_inner && self.g_inner > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sweep range g_lo = {}, g_inner = {}, g_hi = {} is invalid",
                self.g_lo, self.g_inner, self.g_hi
            )));
        }
        Ok(())
    }

    fn side(&self, negative: bool) -> Vec<f64> {
        let outer = if negative { -self.g_lo } else { self.g_hi };
        let (l0, l1) = (outer.ln(), self.g_inner.ln());
        let n = self.n_grid;
        let mags = (0..n).map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp());
        if negative {
            // ascending from g_lo towards 0⁻
            mags.map(|m| -m).collect()
        } else {
            let mut v: Vec<f64> = mags.collect();
            v.reverse();
            v
        }
    }
}

/// Parameter interval discarded during a sweep, kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedInterval {
    pub g_from: f64,
    pub g_to: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapScan {
    pub gaps: Vec<SpectralGap>,
    pub rejected: Vec<RejectedInterval>,
    /// Number of parameter runs with `x'(g̲) < 0`, i.e. real solutions that
    /// are not limits from the upper half-plane.
    pub decreasing_runs: usize,
}

fn gap_point(g: f64, cfg: &ModelConfig) -> Option<(RealBranch, Vec<i8>)> {
    let b = x_of_g(g, cfg).ok()?;
    (b.dx_dg > 0.0 && b.x.is_finite()).then(|| {
        let signs = b.signs(cfg);
        (b, signs)
    })
}

/// Sweeps the real branch and returns the gaps of the support.
pub fn find_gaps(cfg: &ModelConfig, search: &GapSearch, settings: &SolveSettings) -> Result<Vec<SpectralGap>> {
    Ok(scan_gaps(cfg, search, settings)?.gaps)
}

/// Like [`find_gaps`], also reporting rejected candidate intervals.
pub fn scan_gaps(cfg: &ModelConfig, search: &GapSearch, settings: &SolveSettings) -> Result<GapScan> {
    search.validate()?;
    let mut scan = GapScan { gaps: Vec::new(), rejected: Vec::new(), decreasing_runs: 0 };
    for negative in [true, false] {
        let grid = search.side(negative);
        let branches: Vec<Option<RealBranch>> = grid.par_iter().map(|&g| x_of_g(g, cfg).ok()).collect();
        scan.decreasing_runs += count_runs(&branches, |b| b.dx_dg < 0.0);
        let points: Vec<Option<(RealBranch, Vec<i8>)>> = branches
            .iter()
            .map(|b| b.filter(|b| b.dx_dg > 0.0 && b.x.is_finite()).map(|b| (b, b.signs(cfg))))
            .collect();
        let mut i = 0;
        while i < grid.len() {
            let Some((_, signs)) = &points[i] else {
                i += 1;
                continue;
            };
            let mut j = i;
            while j + 1 < grid.len() && points[j + 1].as_ref().is_some_and(|(_, s)| s == signs) {
                j += 1;
            }
            let candidate = run_to_gap(cfg, &grid, &points, i, j, negative, signs);
            match candidate {
                Ok(Some(gap)) => scan.gaps.push(gap),
                Ok(None) => {}
                Err(reason) => scan.rejected.push(RejectedInterval { g_from: grid[i], g_to: grid[j], reason }),
            }
            i = j + 1;
        }
    }

    let mut validated = Vec::with_capacity(scan.gaps.len());
    for gap in std::mem::take(&mut scan.gaps) {
        match cross_validate(&gap, cfg, settings) {
            Ok(()) => validated.push(gap),
            Err(reason) => scan.rejected.push(RejectedInterval { g_from: gap.g_a, g_to: gap.g_b, reason }),
        }
    }
    validated.sort_by(|l, r| l.a.total_cmp(&r.a));
    for w in validated.windows(2) {
        if w[0].b > w[1].a + 1e-9 * w[1].a.abs().max(1.0) {
            return Err(Error::GridTooCoarse(format!(
                "gaps ({}, {}) and ({}, {}) overlap",
                w[0].a, w[0].b, w[1].a, w[1].b
            )));
        }
    }
    scan.gaps = validated;
    Ok(scan)
}

fn count_runs<F: Fn(&RealBranch) -> bool>(branches: &[Option<RealBranch>], pred: F) -> usize {
    let mut runs = 0;
    let mut inside = false;
    for b in branches {
        let hit = b.as_ref().is_some_and(&pred);
        if hit && !inside {
            runs += 1;
        }
        inside = hit;
    }
    runs
}

/// Converts the grid run `i..=j` into a gap, refining finite ends to the
/// stationary points of `x(g̲)`.
fn run_to_gap(
    cfg: &ModelConfig,
    grid: &[f64],
    points: &[Option<(RealBranch, Vec<i8>)>],
    i: usize,
    j: usize,
    negative: bool,
    signs: &[i8],
) -> std::result::Result<Option<SpectralGap>, String> {
    let pred = |g: f64| gap_point(g, cfg).is_some_and(|(_, s)| s == signs);
    let refine = |inside: usize, outside: usize| -> RealBranch {
        let g_in = grid[inside];
        let g_out = grid[outside];
        let tol = 1e-15 * g_in.abs().max(1e-300);
        let g = bisect_predicate(&pred, g_in, g_out, tol);
        gap_point(g, cfg).map(|(b, _)| b).unwrap_or(points[inside].as_ref().unwrap().0)
    };
    let last = grid.len() - 1;

    let (a, g_a) = if i == 0 {
        if negative {
            // g̲ → -∞: x → 0
            if cfg.y < 1.0 {
                (0.0, f64::NEG_INFINITY)
            } else {
                return Err("run reaches g -> -inf at y = 1; no gap at zero".into());
            }
        } else {
            // g̲ → 0⁺: x → -∞
            (f64::NEG_INFINITY, 0.0)
        }
    } else {
        let b = refine(i, i - 1);
        (b.x, b.g)
    };
    let (b, g_b) = if j == last {
        if negative {
            (f64::INFINITY, 0.0)
        } else {
            // g̲ → +∞: x → 0⁻
            (0.0, f64::INFINITY)
        }
    } else {
        let br = refine(j, j + 1);
        (br.x, br.g)
    };
    if b <= 0.0 {
        return Ok(None);
    }
    let a = a.max(0.0);
    if !(b > a) {
        return Ok(None);
    }
    Ok(Some(SpectralGap { a, b, g_a, g_b, y: cfg.y }))
}

/// Checks that the upper-half-plane limit at a point inside the gap is real
/// and agrees with the real branch there.
fn cross_validate(gap: &SpectralGap, cfg: &ModelConfig, settings: &SolveSettings) -> std::result::Result<(), String> {
    let x = gap.probe();
    let fine = SolveSettings { v_min: settings.v_min.min(1e-10), ..*settings };
    let pair = boundary_value(x, cfg, &fine).map_err(|e| format!("boundary solve at x = {x} failed: {e}"))?;
    let im = pair.s_under.im.abs().max(pair.g_under.im.abs());
    if im > 1e-6 {
        return Err(format!("density is positive at x = {x} (Im s = {im:e})"));
    }
    let branch = branch_at_x(gap, x, cfg).ok_or_else(|| format!("no branch point with x(g) = {x}"))?;
    let ds = (branch.s - pair.s_under.re).abs();
    let dg = (branch.g - pair.g_under.re).abs();
    if ds.max(dg) > 1e-6 * branch.s.abs().max(1.0) {
        return Err(format!("branch ({}, {}) disagrees with boundary value ({}, {}) at x = {x}", branch.s, branch.g, pair.s_under.re, pair.g_under.re));
    }
    Ok(())
}

/// Inverts the increasing map `g̲ ↦ x(g̲)` across the gap's parameter interval.
pub fn branch_at_x(gap: &SpectralGap, x: f64, cfg: &ModelConfig) -> Option<RealBranch> {
    let lo = if gap.g_a.is_finite() { gap.g_a } else { -1e12 };
    let hi = if gap.is_unbounded() { -1e-300 } else { gap.g_b };
    let lo = if gap.g_a.is_finite() { lo } else { expand_left(lo, hi, x, cfg)? };
    let f = |g: f64| x_of_g(g, cfg).map(|b| b.x - x).unwrap_or(f64::NAN);
    let (lo, hi) = if gap.is_unbounded() {
        // shrink toward 0⁻ until x(g) exceeds the target
        let mut h = lo / 2.0;
        while f(h) < 0.0 && h.abs() > 1e-300 {
            h /= 2.0;
        }
        (lo, h)
    } else {
        (lo, hi)
    };
    let g = bisect_secant(f, lo, hi, 1e-15 * lo.abs().min(hi.abs()))?;
    x_of_g(g, cfg).ok()
}

fn expand_left(lo: f64, hi: f64, x: f64, cfg: &ModelConfig) -> Option<f64> {
    // start from the middle of the log range and walk left until x(g) < target
    let mut g = -(lo.abs() * hi.abs().max(1e-6)).sqrt();
    for _ in 0..200 {
        let b = x_of_g(g, cfg).ok()?;
        if b.x < x {
            return Some(g);
        }
        g *= 2.0;
    }
    None
}

/// Density of the limiting distribution of `B_n` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub y: f64,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub im_s_under: Vec<f64>,
    pub re_s_under: Vec<f64>,
    pub re_g_under: Vec<f64>,
    /// Indices whose boundary solve failed; their values are NaN.
    pub failed: Vec<usize>,
}

impl DensityCurve {
    /// Trapezoid integral of the density over the grid, skipping failed
    /// points' intervals.
    pub fn trapezoid_mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.f.windows(2))
            .filter(|(_, f)| f[0].is_finite() && f[1].is_finite())
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum()
    }
}

/// `f(x) = Im s̲(x) / (y π)`: the companion distribution puts mass `1 - y`
/// at zero and `y F` elsewhere, so its density divided by `y` is that of `F`.
pub fn density(cfg: &ModelConfig, grid: &[f64], settings: &SolveSettings) -> Result<DensityCurve> {
    settings.validate()?;
    if let Some(bad) = grid.iter().find(|x| **x == 0.0 || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("density grid contains x = {bad}")));
    }
    let solved: Vec<_> = grid.par_iter().map(|&x| boundary_value(x, cfg, settings)).collect();
    let n = grid.len();
    let mut curve = DensityCurve {
        y: cfg.y,
        grid: grid.to_vec(),
        f: Vec::with_capacity(n),
        im_s_under: Vec::with_capacity(n),
        re_s_under: Vec::with_capacity(n),
        re_g_under: Vec::with_capacity(n),
        failed: Vec::new(),
    };
    for (k, r) in solved.into_iter().enumerate() {
        match r {
            Ok(pair) => {
                curve.f.push((pair.s_under.im / (cfg.y * std::f64::consts::PI)).max(0.0));
                curve.im_s_under.push(pair.s_under.im);
                curve.re_s_under.push(pair.s_under.re);
                curve.re_g_under.push(pair.g_under.re);
            }
            Err(_) => {
                curve.failed.push(k);
                curve.f.push(f64::NAN);
                curve.im_s_under.push(f64::NAN);
                curve.re_s_under.push(f64::NAN);
                curve.re_g_under.push(f64::NAN);
            }
        }
    }
    Ok(curve)
}

/// Which gap to follow across aspect ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapSelector {
    /// Position in ascending order of `a` at the first (largest) `y`.
    Index(usize),
    /// The gap containing this point at the first `y`.
    Containing(f64),
    /// The gap above the support.
    Unbounded,
}

impl GapSelector {
    fn pick(&self, gaps: &[SpectralGap]) -> Option<SpectralGap> {
        match *self {
            GapSelector::Index(k) => gaps.get(k).copied(),
            GapSelector::Containing(x) => gaps.iter().find(|g| g.contains(x)).copied(),
            GapSelector::Unbounded => gaps.iter().find(|g| g.is_unbounded()).copied(),
        }
    }
}

/// Relative matching threshold, in units of the previous gap width.
const TRACK_THRESHOLD: f64 = 0.2;

fn endpoint_distance(prev: &SpectralGap, next: &SpectralGap) -> Option<f64> {
    if prev.is_unbounded() != next.is_unbounded() {
        return None;
    }
    let da = (prev.a - next.a).abs();
    if prev.is_unbounded() {
        Some(da)
    } else {
        Some(da.min((prev.b - next.b).abs()))
    }
}

/// Follows one gap as `y` decreases and checks that it widens.
///
/// For a finite gap `b - a` must strictly increase; for the unbounded gap
/// the finite end `a` must strictly decrease.
pub fn gap_vs_y(
    spectrum: &JointSpectrum,
    y_values: &[f64],
    selector: GapSelector,
    search: &GapSearch,
    settings: &SolveSettings,
) -> Result<Vec<SpectralGap>> {
    if y_values.is_empty() {
        return Err(Error::InvalidArgument("no y values".into()));
    }
    if y_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("y values must be strictly decreasing".into()));
    }
    let mut track = Vec::with_capacity(y_values.len());
    for (k, &y) in y_values.iter().enumerate() {
        let cfg = ModelConfig::new(spectrum.clone(), y)?;
        let gaps = find_gaps(&cfg, search, settings)?;
        let next = match track.last() {
            None => selector.pick(&gaps).ok_or_else(|| Error::GapTracking {
                y,
                reason: format!("selected gap not present among {} gaps", gaps.len()),
            })?,
            Some(prev) => {
                let prev: &SpectralGap = prev;
                // there is at most one unbounded gap, so it needs no distance test
                let scale = if prev.is_unbounded() { f64::INFINITY } else { prev.width() };
                let best = gaps
                    .iter()
                    .filter_map(|g| endpoint_distance(prev, g).map(|d| (d, *g)))
                    .min_by(|l, r| l.0.total_cmp(&r.0));
                match best {
                    Some((d, g)) if d <= TRACK_THRESHOLD * scale => g,
                    Some((d, _)) => {
                        return Err(Error::GapTracking {
                            y,
                            reason: format!("nearest gap endpoint moved {d} (> {} x width {scale}) at step {k}", TRACK_THRESHOLD),
                        })
                    }
                    None => return Err(Error::GapTracking { y, reason: format!("gap closed at step {k}") }),
                }
            }
        };
        if let Some(prev) = track.last() {
            let prev: &SpectralGap = prev;
            let widened = if next.is_unbounded() { next.a < prev.a } else { next.width() > prev.width() };
            if !widened {
                return Err(Error::GapTracking {
                    y,
                    reason: format!("gap did not widen: ({}, {}) -> ({}, {})", prev.a, prev.b, next.a, next.b),
                });
            }
        }
        track.push(next);
    }
    Ok(track)
}
