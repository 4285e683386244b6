//! `specsep` command line: configuration, orchestration and report files.
//!
//! Exit codes: 0 success, 2 usage error, 3 solver failure, 4 verification
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::separation::{predict_counts, Convention, SeparationPrediction, DEFAULT_SAMPLES};
use crate::simulate::{run_trials, NoiseLaw, SimConfig, TrialsReport};
use crate::spectrum::{JointSpectrum, ModelConfig};
use crate::stieltjes::SolveSettings;
use crate::support::{density, find_gaps, GapSearch, SpectralGap};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Fraction of density points allowed to fail before the command fails.
pub const DENSITY_FAILURE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n: usize,
    /// Defaults to `round(y n)`.
    #[serde(default)]
    pub p: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise_law: NoiseLaw,
    #[serde(default)]
    pub complex: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for DensitySection {
    fn default() -> Self {
        Self { x_min: 0.01, x_max: 10.0, points: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparateSection {
    pub samples: usize,
    pub convention: Convention,
}

impl Default for SeparateSection {
    fn default() -> Self {
        Self { samples: DEFAULT_SAMPLES, convention: Convention::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub threshold: f64,
    pub eigenvalues_csv: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { threshold: 0.95, eigenvalues_csv: true }
    }
}

/// The JSON document passed with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub y: f64,
    pub spectrum: JointSpectrum,
    #[serde(default)]
    pub solve: SolveSettings,
    #[serde(default)]
    pub gap_search: GapSearch,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub separate: SeparateSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Usage(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        self.model()?;
        self.solve.validate().map_err(CliError::from)?;
        self.gap_search.validate().map_err(CliError::from)?;
        if let Some(sim) = &self.sim {
            let p = self.sim_p(sim);
            if (p as f64 / sim.n as f64 - self.y).abs() > 1.0 / sim.n as f64 {
                return Err(CliError::Usage(format!("p/n = {p}/{} is not within 1/n of y = {}", sim.n, self.y)));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelConfig, CliError> {
        ModelConfig::new(self.spectrum.clone(), self.y).map_err(CliError::from)
    }

    fn sim_p(&self, sim: &SimSection) -> usize {
        sim.p.unwrap_or_else(|| (self.y * sim.n as f64).round() as usize)
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let sim = self.sim.as_ref().ok_or_else(|| CliError::Usage("config has no \"sim\" section".into()))?;
        SimConfig::new(self.spectrum.clone(), sim.n, self.sim_p(sim), sim.noise_law, sim.trials, sim.seed, sim.complex)
            .map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Solver(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpectrum(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::Io(_)
            | Error::Json(_) => CliError::Usage(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "specsep", version, about = "Spectral gaps and eigenvalue separation for information-plus-noise matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write density.csv on a uniform grid
    Density(DensityArgs),
    /// Write gaps.json
    Gaps(CommonArgs),
    /// Write separation.json with predicted side counts per gap
    Separate(SeparateArgs),
    /// Simulate and write verify.json (and eigenvalues.csv)
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Side mapping for predicted counts
    #[arg(long)]
    pub convention: Option<Convention>,
    /// Minimum match frequency for `verify`
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SeparateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reuse a gaps.json instead of sweeping
    #[arg(long)]
    pub gaps: Option<PathBuf>,
    /// Matrix dimension; defaults to the sim section's p
    #[arg(long)]
    pub p: Option<usize>,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("specsep: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Density(a) => cmd_density(&RunConfig::load(&a.common.config)?, &a.common.out, a.x_min, a.x_max, a.points),
        Command::Gaps(a) => cmd_gaps(&RunConfig::load(&a.config)?, &a.out),
        Command::Separate(a) => {
            let cfg = RunConfig::load(&a.common.config)?;
            let gaps = match &a.gaps {
                Some(path) => Some(read_gaps(path)?),
                None => None,
            };
            cmd_separate(&cfg, &a.common.out, a.common.convention, gaps, a.p)
        }
        Command::Verify(a) => cmd_verify(&RunConfig::load(&a.config)?, &a.out, a.convention, a.threshold),
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Solver(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn read_gaps(path: &Path) -> Result<Vec<SpectralGap>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn cmd_density(
    cfg: &RunConfig,
    out: &Path,
    x_min: Option<f64>,
    x_max: Option<f64>,
    points: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let x_min = x_min.unwrap_or(cfg.density.x_min);
    let x_max = x_max.unwrap_or(cfg.density.x_max);
    let points = points.unwrap_or(cfg.density.points);
    if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
        return Err(CliError::Usage(format!("need 0 < x_min < x_max, got [{x_min}, {x_max}]")));
    }
    if points < 2 {
        return Err(CliError::Usage(format!("points = {points} < 2")));
    }
    let grid: Vec<f64> = (0..points)
        .map(|k| if k + 1 == points { x_max } else { x_min + (x_max - x_min) * k as f64 / (points - 1) as f64 })
        .collect();
    let curve = density(&cfg.model()?, &grid, &cfg.solve)?;

    let mut csv = String::from("x,f,im_s_under,re_s_under,re_g_under\n");
    for k in 0..points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(curve.grid[k]),
            num(curve.f[k]),
            num(curve.im_s_under[k]),
            num(curve.re_s_under[k]),
            num(curve.re_g_under[k])
        );
    }
    prepare_out(out)?;
    let path = write_file(out.join("density.csv"), &csv)?;
    let failed = curve.failed.len() as f64 / points as f64;
    if failed > DENSITY_FAILURE_LIMIT {
        return Err(CliError::Solver(format!("boundary solve failed at {} of {points} points", curve.failed.len())));
    }
    Ok(vec![path])
}

pub fn cmd_gaps(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let gaps = find_gaps(&cfg.model()?, &cfg.gap_search, &cfg.solve)?;
    prepare_out(out)?;
    Ok(vec![write_file(out.join("gaps.json"), &to_json(&gaps)?)?])
}

fn predictions(
    cfg: &RunConfig,
    gaps: &[SpectralGap],
    p: usize,
    convention: Convention,
) -> Result<Vec<SeparationPrediction>, CliError> {
    let model = cfg.model()?;
    let pairs = cfg.spectrum.materialize_pairs(p);
    gaps.iter()
        .map(|gap| {
            if gap.y != cfg.y {
                return Err(CliError::Usage(format!("gap {gap:?} was computed at y = {}, config has y = {}", gap.y, cfg.y)));
            }
            predict_counts(gap, &pairs, &model, &cfg.solve, cfg.separate.samples, convention).map_err(CliError::from)
        })
        .collect()
}

pub fn cmd_separate(
    cfg: &RunConfig,
    out: &Path,
    convention: Option<Convention>,
    gaps: Option<Vec<SpectralGap>>,
    p: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let p = match (p, &cfg.sim) {
        (Some(p), _) => p,
        (None, Some(sim)) => cfg.sim_p(sim),
        (None, None) => return Err(CliError::Usage("separate needs --p or a \"sim\" section".into())),
    };
    if p == 0 {
        return Err(CliError::Usage("p must be positive".into()));
    }
    let gaps = match gaps {
        Some(g) => g,
        None => find_gaps(&cfg.model()?, &cfg.gap_search, &cfg.solve)?,
    };
    let preds = predictions(cfg, &gaps, p, convention.unwrap_or(cfg.separate.convention))?;
    prepare_out(out)?;
    Ok(vec![write_file(out.join("separation.json"), &to_json(&preds)?)?])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyGap {
    pub gap: SpectralGap,
    pub inset: (f64, f64),
    pub predicted_derivation: (usize, usize),
    pub predicted_theorem: (usize, usize),
    pub freq_empty_inside: f64,
    pub freq_derivation: f64,
    pub freq_theorem: f64,
    pub freq_active: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub y: f64,
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub seed: u64,
    pub noise_law: NoiseLaw,
    pub complex: bool,
    pub convention: Convention,
    pub threshold: f64,
    pub pass: bool,
    pub gaps: Vec<VerifyGap>,
}

impl VerifyReport {
    fn new(cfg: &RunConfig, sim: &SimConfig, preds: &[SeparationPrediction], report: &TrialsReport, convention: Convention, threshold: f64) -> Self {
        let gaps: Vec<VerifyGap> = preds
            .iter()
            .zip(&report.gaps)
            .map(|(pred, s)| {
                let freq_active = s.frequency(convention);
                VerifyGap {
                    gap: pred.gap,
                    inset: s.inset,
                    predicted_derivation: pred.counts_under(Convention::Derivation),
                    predicted_theorem: pred.counts_under(Convention::Theorem),
                    freq_empty_inside: s.freq_empty_inside,
                    freq_derivation: s.frequency(Convention::Derivation),
                    freq_theorem: s.frequency(Convention::Theorem),
                    freq_active,
                    pass: freq_active >= threshold,
                }
            })
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            y: cfg.y,
            n: sim.n,
            p: sim.p,
            trials: sim.trials,
            seed: sim.seed,
            noise_law: sim.noise_law,
            complex: sim.complex_entries,
            convention,
            threshold,
            pass: gaps.iter().all(|g| g.pass),
            gaps,
        }
    }
}

/// One row per trial, ascending eigenvalues.
pub fn eigenvalues_csv(report: &TrialsReport) -> String {
    let mut csv = String::new();
    for t in &report.trials {
        let row: Vec<String> = t.eigenvalues.iter().map(|v| num(*v)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    csv
}

pub fn cmd_verify(
    cfg: &RunConfig,
    out: &Path,
    convention: Option<Convention>,
    threshold: Option<f64>,
) -> Result<Vec<PathBuf>, CliError> {
    let convention = convention.unwrap_or(cfg.separate.convention);
    let threshold = threshold.unwrap_or(cfg.verify.threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Usage(format!("threshold = {threshold} is outside [0, 1]")));
    }
    let sim = cfg.sim_config()?;
    let gaps = find_gaps(&cfg.model()?, &cfg.gap_search, &cfg.solve)?;
    let preds = predictions(cfg, &gaps, sim.p, convention)?;
    let trials = run_trials(&sim, &preds)?;
    let report = VerifyReport::new(cfg, &sim, &preds, &trials, convention, threshold);

    prepare_out(out)?;
    let mut written = vec![write_file(out.join("verify.json"), &to_json(&report)?)?];
    if cfg.verify.eigenvalues_csv {
        written.push(write_file(out.join("eigenvalues.csv"), &eigenvalues_csv(&trials))?);
    }
    if !report.pass {
        let worst = report
            .gaps
            .iter()
            .filter(|g| !g.pass)
            .map(|g| format!("gap ({}, {}): {convention:?} matched {:.3}", g.gap.a, g.gap.b, g.freq_active))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Verification(format!("{worst} (threshold {threshold})")));
    }
    Ok(written)
}

/// Applies `SPECSEP_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    match std::env::var("SPECSEP_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("SPECSEP_THREADS = {v:?} is not a positive integer")))?;
            // a pool built earlier in the process keeps its size
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}
