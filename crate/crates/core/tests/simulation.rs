use specsep::separation::{predict_counts, DEFAULT_SAMPLES};
use specsep::simulate::{extreme_bound_check, perturbation_check, run_trials, NoiseLaw, SimConfig, Simulator};
use specsep::support::{density, find_gaps};
use specsep::{Convention, GapSearch, JointSpectrum, ModelConfig, SeparationPrediction, SolveSettings, SpectrumAtom};

fn two_atom() -> JointSpectrum {
    JointSpectrum::new(vec![SpectrumAtom::new(0.0, 1.0, 0.5), SpectrumAtom::new(8.0, 1.0, 0.5)]).unwrap()
}

fn predictions(spectrum: &JointSpectrum, y: f64, p: usize) -> Vec<SeparationPrediction> {
    let cfg = ModelConfig::new(spectrum.clone(), y).unwrap();
    let settings = SolveSettings::default();
    let pairs = spectrum.materialize_pairs(p);
    find_gaps(&cfg, &GapSearch::default(), &settings)
        .unwrap()
        .iter()
        .map(|g| predict_counts(g, &pairs, &cfg, &settings, DEFAULT_SAMPLES, Convention::Derivation).unwrap())
        .collect()
}

/// Kolmogorov distance between the eigenvalue ESD and the CDF obtained by
/// integrating the computed density.
fn kolmogorov(eigs: &[f64], cfg: &ModelConfig, lo: f64, hi: f64) -> f64 {
    let grid: Vec<f64> = (0..=6000).map(|k| lo + (hi - lo) * k as f64 / 6000.0).collect();
    let curve = density(cfg, &grid, &SolveSettings::default()).unwrap();
    assert!(curve.failed.is_empty());
    let mut cdf = vec![0.0; grid.len()];
    for k in 1..grid.len() {
        cdf[k] = cdf[k - 1] + 0.5 * (grid[k] - grid[k - 1]) * (curve.f[k] + curve.f[k - 1]);
    }
    assert!((cdf[grid.len() - 1] - 1.0).abs() < 5e-3, "mass {}", cdf[grid.len() - 1]);
    let at = |x: f64| -> f64 {
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return cdf[cdf.len() - 1];
        }
        let pos = (x - lo) / (hi - lo) * 6000.0;
        let k = pos.floor() as usize;
        cdf[k] + (pos - k as f64) * (cdf[k + 1] - cdf[k])
    };
    let p = eigs.len() as f64;
    eigs.iter()
        .enumerate()
        .map(|(k, &l)| {
            let f = at(l);
            (f - k as f64 / p).abs().max((f - (k + 1) as f64 / p).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn esd_matches_limit_in_kolmogorov_distance() {
    let mp = JointSpectrum::point_mass(0.0, 1.0).unwrap();
    let sim = Simulator::new(SimConfig::new(mp, 4000, 1000, NoiseLaw::StandardGaussian, 1, 1, false).unwrap()).unwrap();
    let eigs = sim.trial_eigenvalues(0).unwrap();
    let d = kolmogorov(&eigs, &ModelConfig::marchenko_pastur(0.25, 1.0).unwrap(), 0.2, 2.3);
    assert!(d <= 0.03, "MP: {d}");

    let sim = Simulator::new(SimConfig::new(two_atom(), 10_000, 1000, NoiseLaw::Rademacher, 1, 2, false).unwrap()).unwrap();
    let eigs = sim.trial_eigenvalues(0).unwrap();
    let d = kolmogorov(&eigs, &ModelConfig::new(two_atom(), 0.1).unwrap(), 0.3, 12.0);
    assert!(d <= 0.03, "two-atom: {d}");
}

#[test]
fn gaps_stay_empty_and_counts_are_exact() {
    let spectrum = two_atom();
    let preds = predictions(&spectrum, 0.1, 400);
    let sim = SimConfig::new(spectrum, 4000, 400, NoiseLaw::StandardGaussian, 50, 21, false).unwrap();
    let report = run_trials(&sim, &preds).unwrap();
    for s in &report.gaps {
        assert!(s.freq_empty_inside >= 0.98, "{s:?}");
        assert!(s.freq_active >= 0.98, "{s:?}");
    }
    let mid = report.gaps.iter().find(|s| s.gap.contains(5.0)).unwrap();
    assert_eq!(mid.predicted, (200, 200));
}

#[test]
fn noise_law_does_not_change_counts() {
    let spectrum = two_atom();
    let preds = predictions(&spectrum, 0.1, 200);
    let mut seen = Vec::new();
    for law in [NoiseLaw::StandardGaussian, NoiseLaw::Rademacher, NoiseLaw::UniformStandardized] {
        let sim = SimConfig::new(spectrum.clone(), 2000, 200, law, 10, 5, false).unwrap();
        let report = run_trials(&sim, &preds).unwrap();
        assert!(report.gaps.iter().all(|s| s.freq_active == 1.0), "{law:?}: {:?}", report.gaps);
        seen.push(report.gaps.iter().map(|s| s.predicted).collect::<Vec<_>>());
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn complex_entries_separate_too() {
    let spectrum = two_atom();
    let preds = predictions(&spectrum, 0.1, 100);
    let mut sim = SimConfig::new(spectrum, 1000, 100, NoiseLaw::StandardGaussian, 5, 8, false).unwrap();
    sim.complex_entries = true;
    let report = run_trials(&sim, &preds).unwrap();
    assert!(report.gaps.iter().all(|s| s.freq_active == 1.0 && s.freq_empty_inside == 1.0), "{:?}", report.gaps);
}

#[test]
fn trials_replay_bitwise() {
    let spectrum = two_atom();
    let preds = predictions(&spectrum, 0.1, 50);
    let sim = SimConfig::new(spectrum, 500, 50, NoiseLaw::Rademacher, 4, 77, false).unwrap();
    let a = run_trials(&sim, &preds).unwrap();
    let b = run_trials(&sim, &preds).unwrap();
    assert_eq!(a, b);
    for (x, y) in a.trials.iter().zip(&b.trials) {
        assert!(x.eigenvalues.iter().zip(&y.eigenvalues).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    let other = SimConfig { seed: 78, ..sim };
    assert_ne!(run_trials(&other, &preds).unwrap().trials[0].eigenvalues, a.trials[0].eigenvalues);
}

#[test]
fn small_y_eigenvalues_sit_near_u_plus_t() {
    let spectrum = JointSpectrum::new(vec![
        SpectrumAtom::new(0.0, 1.0, 0.25),
        SpectrumAtom::new(3.0, 2.0, 0.25),
        SpectrumAtom::new(9.0, 1.0, 0.5),
    ])
    .unwrap();
    let (n, p) = (20_000, 20);
    let sim = Simulator::new(SimConfig::new(spectrum.clone(), n, p, NoiseLaw::StandardGaussian, 1, 4, false).unwrap()).unwrap();
    let eigs = sim.trial_eigenvalues(0).unwrap();
    let targets = spectrum.degenerate_eigenvalues();
    let y = p as f64 / n as f64;
    for l in eigs {
        let (v, d) = targets.iter().map(|v| (*v, (l - v).abs())).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        // fluctuations scale like (u + t) sqrt(y)
        assert!(d <= 4.0 * v * y.sqrt(), "{l} vs {v}");
    }
}

#[test]
fn extreme_bounds_scale_with_sigma2() {
    for sigma2 in [1.0, 4.0] {
        let s = JointSpectrum::point_mass(0.0, sigma2).unwrap();
        let sim = SimConfig::new(s, 2000, 500, NoiseLaw::StandardGaussian, 2, 3, false).unwrap();
        let r = extreme_bound_check(&sim, 0.1 * sigma2).unwrap();
        assert!((r.upper_edge - sigma2 * 2.25).abs() < 1e-12 && (r.lower_edge - sigma2 * 0.25).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
    }
    let bad = SimConfig::new(two_atom(), 100, 10, NoiseLaw::StandardGaussian, 1, 0, false).unwrap();
    assert!(extreme_bound_check(&bad, 0.1).is_err());
}

#[test]
fn perturbation_inequality_on_sampled_matrices() {
    let s = JointSpectrum::point_mass(0.0, 1.0).unwrap();
    let sim = Simulator::new(SimConfig::new(s, 200, 50, NoiseLaw::StandardGaussian, 2, 0, false).unwrap()).unwrap();
    let (a, b) = match (sim.sample_b(0), sim.sample_b(1)) {
        (specsep::simulate::SampledMatrix::Real(a), specsep::simulate::SampledMatrix::Real(b)) => (a, b),
        _ => unreachable!(),
    };
    let r = perturbation_check(&a, &b).unwrap();
    assert!(r.holds && r.max_eigen_gap > 0.0, "{r:?}");
}
