mod common;

use common::{axis_separated, max_opt, pooled, random_cloud, tuned_opt};
use rand::seq::SliceRandom;
use ssfg::discrepancies::estimate_fixed;
use ssfg::{
    max_sfg, mssfg, pssfg, sfg, ssfg, DiscrepancyReport, FgwConfig, OptimizerConfig, PointCloud,
    SeededRng, SlicingDistribution,
};

#[test]
fn sfg_ignores_row_order() {
    let mut rng = SeededRng::new(30);
    let mu = random_cloud(40, 3, 1.0, 0.0, &mut rng);
    let mut rows: Vec<Vec<f64>> = mu.rows().map(|r| r.to_vec()).collect();
    rows.shuffle(&mut rng);
    let shuffled = PointCloud::from_rows(&rows).unwrap();
    let report = sfg(&mu, &shuffled, &FgwConfig::default(), 200, &mut rng).unwrap();
    assert_eq!(report.value, 0.0);
}

#[test]
fn sfg_two_points_pure_wasserstein() {
    // Projections of (0,0) and (1,0) differ by cos(phi); E cos^2 = 1/2.
    let mut rng = SeededRng::new(31);
    let mu = PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap();
    let nu = PointCloud::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let cfg = FgwConfig::new(0.0, 2).unwrap();
    let r = sfg(&mu, &nu, &cfg, 5000, &mut rng).unwrap();
    assert!((r.value - 0.5).abs() < 3.0 * r.std_error, "{} +- {}", r.value, r.std_error);
}

#[test]
fn max_sfg_finds_the_separating_axis() {
    let mut rng = SeededRng::new(32);
    let (mu, nu) = axis_separated(64, 2, &mut rng);
    let cfg = FgwConfig::default();
    let report = max_sfg(&mu, &nu, &cfg, &max_opt(), &mut rng).unwrap();
    let theta = match &report.final_slicing {
        SlicingDistribution::Dirac(t) => t.clone(),
        other => panic!("unexpected slicing {other:?}"),
    };
    assert!(theta.as_slice()[0].abs() > 0.99, "{theta:?}");

    let grid_best = (0..360)
        .map(|deg| {
            let phi = (deg as f64).to_radians();
            let t = ssfg::Direction::new(vec![phi.cos(), phi.sin()]).unwrap();
            let (v, _) = estimate_fixed(&mu, &nu, &cfg, &SlicingDistribution::Dirac(t), 1, &mut rng).unwrap();
            v
        })
        .fold(f64::MIN, f64::max);
    assert!(report.value >= grid_best * (1.0 - 1e-3), "{} < {grid_best}", report.value);
}

#[test]
fn max_dominates_average_slicing() {
    let mut rng = SeededRng::new(33);
    for _ in 0..5 {
        let mu = random_cloud(32, 4, 1.0, 0.0, &mut rng);
        let nu = random_cloud(32, 4, 1.5, 0.5, &mut rng);
        let cfg = FgwConfig::default();
        let avg = sfg(&mu, &nu, &cfg, 500, &mut rng).unwrap();
        let max = max_sfg(&mu, &nu, &cfg, &max_opt(), &mut rng).unwrap();
        assert!(max.value >= avg.value - 3.0 * avg.std_error);
    }
}

#[test]
fn mixture_is_bounded_by_its_best_component() {
    let mut rng = SeededRng::new(34);
    let mu = random_cloud(32, 3, 1.0, 0.0, &mut rng);
    let nu = random_cloud(32, 3, 1.5, 0.5, &mut rng);
    let cfg = FgwConfig::default();
    let opt = tuned_opt(200);
    let kappas = [5.0, 50.0];
    let single: Vec<DiscrepancyReport> = kappas
        .iter()
        .map(|&k| ssfg(&mu, &nu, &cfg, k, &opt, &mut rng).unwrap())
        .collect();
    let mix = mssfg(&mu, &nu, &cfg, &kappas, &[0.5, 0.5], &opt, &mut rng).unwrap();
    let best = single.iter().max_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    let tol = 4.0 * pooled(mix.std_error, best.std_error);
    assert!(mix.value <= best.value + tol, "{} vs {}", mix.value, best.value);
}

#[test]
fn power_spherical_is_stable_in_high_dimension() {
    let mut rng = SeededRng::new(35);
    let mu = random_cloud(32, 64, 1.0, 0.0, &mut rng);
    let nu = random_cloud(32, 64, 1.2, 0.2, &mut rng);
    let cfg = FgwConfig::default();
    let ps = pssfg(&mu, &nu, &cfg, 100.0, &tuned_opt(100), &mut rng).unwrap();
    let max = max_sfg(&mu, &nu, &cfg, &max_opt(), &mut rng).unwrap();
    assert!(ps.value.is_finite() && ps.std_error.is_finite());
    assert!(ps.value <= max.value + 3.0 * ps.std_error, "{} vs {}", ps.value, max.value);
}

/// Every step of the 5-window moving average may fall by at most the noise
/// of the difference of two window means, and the trace must rise overall.
fn noisy_monotone(report: &DiscrepancyReport) -> bool {
    let values: Vec<f64> = report.trace.iter().map(|t| t.objective).collect();
    if values.len() < 6 {
        return true;
    }
    let smooth: Vec<f64> = values.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    let slack = 2.0 * 2f64.sqrt() * report.std_error / 5f64.sqrt();
    let steps_ok = smooth.windows(2).all(|w| w[1] >= w[0] - slack);
    steps_ok && smooth.last().unwrap() >= smooth.first().unwrap()
}

#[test]
fn ascent_trace_rises_up_to_noise() {
    let mut rng = SeededRng::new(36);
    let opt = OptimizerConfig {
        learning_rate: 0.01,
        max_iter: 30,
        num_projections: 100,
        ..OptimizerConfig::default()
    };
    let (mut ok, mut total) = (0, 0);
    for _ in 0..20 {
        let mu = random_cloud(32, 3, 1.0, 0.0, &mut rng);
        let nu = random_cloud(32, 3, 1.5, 0.5, &mut rng);
        let report = ssfg(&mu, &nu, &FgwConfig::default(), 10.0, &opt, &mut rng).unwrap();
        total += 1;
        ok += usize::from(noisy_monotone(&report));
    }
    assert!(ok * 10 >= total * 9, "{ok}/{total}");
}

#[test]
fn fixed_slicing_estimator_satisfies_weak_triangle() {
    let mut rng = SeededRng::new(37);
    let cfg = FgwConfig::default();
    let mut violations = 0;
    for _ in 0..200 {
        let a = random_cloud(16, 3, 1.0, 0.0, &mut rng);
        let b = random_cloud(16, 3, 1.0, 0.5, &mut rng);
        let c = random_cloud(16, 3, 1.5, -0.5, &mut rng);
        let eps = ssfg::sphere_sampling::sample_uniform_sphere(3, &mut rng).unwrap();
        let slicing = SlicingDistribution::Vmf(
            ssfg::sphere_sampling::VmfParams::new(eps, 10.0).unwrap(),
        );
        // Same projections for every pair.
        let seed: u64 = rand::Rng::random(&mut rng);
        let est = |x: &PointCloud, y: &PointCloud| {
            estimate_fixed(x, y, &cfg, &slicing, 50, &mut SeededRng::new(seed)).unwrap().0
        };
        let (ac, ab, bc) = (est(&a, &c), est(&a, &b), est(&b, &c));
        violations += usize::from(ac > 2.0 * (ab + bc) * (1.0 + 1e-12));
    }
    assert_eq!(violations, 0);
}

#[test]
fn every_kind_is_deterministic_under_a_seed() {
    let mut rng = SeededRng::new(38);
    let mu = random_cloud(24, 3, 1.0, 0.0, &mut rng);
    let nu = random_cloud(24, 3, 1.3, 0.4, &mut rng);
    let cfg = FgwConfig::default();
    let opt = OptimizerConfig::default();
    let run = |seed| {
        let mut r = SeededRng::new(seed);
        (
            ssfg(&mu, &nu, &cfg, 10.0, &opt, &mut r).unwrap(),
            pssfg(&mu, &nu, &cfg, 10.0, &opt, &mut r).unwrap(),
            mssfg(&mu, &nu, &cfg, &[1.0, 10.0], &[0.3, 0.7], &opt, &mut r).unwrap(),
            max_sfg(&mu, &nu, &cfg, &opt, &mut r).unwrap(),
        )
    };
    assert_eq!(run(5), run(5));
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut rng = SeededRng::new(39);
    let mu = random_cloud(8, 3, 1.0, 0.0, &mut rng);
    let nu = random_cloud(8, 3, 1.0, 0.0, &mut rng);
    let other_dim = random_cloud(8, 4, 1.0, 0.0, &mut rng);
    let cfg = FgwConfig::default();
    let opt = OptimizerConfig::default();
    assert!(ssfg(&mu, &nu, &cfg, -1.0, &opt, &mut rng).is_err());
    assert!(ssfg(&mu, &other_dim, &cfg, 1.0, &opt, &mut rng).is_err());
    assert!(mssfg(&mu, &nu, &cfg, &[1.0], &[0.5, 0.5], &opt, &mut rng).is_err());
    assert!(mssfg(&mu, &nu, &cfg, &[1.0, 2.0], &[0.5, 0.6], &opt, &mut rng).is_err());
    assert!(sfg(&mu, &nu, &cfg, 0, &mut rng).is_err());
    assert!(FgwConfig::new(1.5, 2).is_err());
    let bad = OptimizerConfig { learning_rate: 0.0, ..opt };
    assert!(ssfg(&mu, &nu, &cfg, 1.0, &bad, &mut rng).is_err());
}
