mod common;

use common::random_cloud;
use ssfg::discrepancies::DiscrepancyKind;
use ssfg::experiments::{
    convergence_rate, four_mode_centers, gaussian_cloud, gaussian_modes, gmm_fit, kappa_sweep,
    particle_flow, particle_flow_from, wasserstein_control_rate, FlowConfig, GmmFitConfig,
};
use ssfg::{sfg, Error, FgwConfig, OptimizerConfig, PointCloud, SeededRng};

#[test]
fn sweep_on_identical_clouds_is_zero() {
    let mut rng = SeededRng::new(40);
    let mu = random_cloud(16, 3, 1.0, 0.0, &mut rng);
    let opt = OptimizerConfig::default();
    let out = kappa_sweep(&mu, &mu, &FgwConfig::default(), &[1.0, 10.0], &opt, 2, &mut rng).unwrap();
    assert_eq!(out.records.len(), 4);
    assert!(out.records.iter().all(|r| r.value == 0.0));
    assert!(out.find("ssfg", "kappa=10").is_some());
    assert!(out.find("max-sfg", "").is_some());
}

#[test]
fn sweep_limits_bracket_ssfg() {
    let mut rng = SeededRng::new(41);
    let mu = random_cloud(32, 3, 1.0, 0.0, &mut rng);
    let nu = random_cloud(32, 3, 1.6, 0.4, &mut rng);
    let opt = common::tuned_opt(200);
    let out = kappa_sweep(&mu, &nu, &FgwConfig::default(), &[1e-3, 1e3], &opt, 2, &mut rng).unwrap();
    let low = out.find("ssfg", "kappa=0.001").unwrap();
    let high = out.find("ssfg", "kappa=1000").unwrap();
    let sfg_row = out.find("sfg", "").unwrap();
    let max_row = out.find("max-sfg", "").unwrap();
    let near = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    assert!(near(low.value, sfg_row.value, 0.1 * sfg_row.value), "{low:?} vs {sfg_row:?}");
    assert!(high.value <= max_row.value * 1.02, "{high:?} vs {max_row:?}");
    assert!(high.value > low.value);
}

#[test]
fn sweep_rejects_empty_inputs() {
    let mut rng = SeededRng::new(42);
    let mu = random_cloud(8, 3, 1.0, 0.0, &mut rng);
    let opt = OptimizerConfig::default();
    let cfg = FgwConfig::default();
    assert!(kappa_sweep(&mu, &mu, &cfg, &[], &opt, 1, &mut rng).is_err());
    assert!(kappa_sweep(&mu, &mu, &cfg, &[1.0], &opt, 0, &mut rng).is_err());
}

#[test]
fn sfg_is_invariant_to_replicating_rows() {
    let mut rng = SeededRng::new(43);
    let mu = random_cloud(16, 3, 1.0, 0.0, &mut rng);
    let nu = random_cloud(16, 3, 1.4, 0.3, &mut rng);
    let cfg = FgwConfig::default();
    let a = sfg(&mu, &nu, &cfg, 100, &mut SeededRng::new(9)).unwrap();
    let b = sfg(&mu.replicate(4), &nu.replicate(4), &cfg, 100, &mut SeededRng::new(9)).unwrap();
    assert!((a.value - b.value).abs() <= 1e-9 * a.value, "{} vs {}", a.value, b.value);
}

#[test]
fn convergence_harness_shapes_and_errors() {
    let mut rng = SeededRng::new(44);
    let opt = OptimizerConfig {
        max_iter: 2,
        num_projections: 10,
        ..OptimizerConfig::default()
    };
    let out = convergence_rate(2, &[4, 8], 2, &FgwConfig::default(), 10.0, &opt, &mut rng).unwrap();
    assert!(out.find("mean", "n=4").is_some());
    assert!(out.find("mean", "n=8").is_some());
    assert!(out.find("slope", "").is_some());
    assert!(convergence_rate(1, &[4, 8], 2, &FgwConfig::default(), 10.0, &opt, &mut rng).is_err());
    assert!(convergence_rate(2, &[8, 4], 2, &FgwConfig::default(), 10.0, &opt, &mut rng).is_err());
    assert!(wasserstein_control_rate(&[3, 8], 2, &mut rng).is_err());
}

#[test]
fn control_rate_is_close_to_one_over_n() {
    let mut rng = SeededRng::new(45);
    let out = wasserstein_control_rate(&[16, 32, 64, 128], 40, &mut rng).unwrap();
    let slope = out.find("slope", "").unwrap().value;
    assert!((-1.3..=-0.7).contains(&slope), "{slope}");
}

fn small_flow(kind: DiscrepancyKind, steps: usize, step_size: f64) -> FlowConfig {
    FlowConfig {
        discrepancy: kind,
        opt: OptimizerConfig {
            learning_rate: 0.1,
            max_iter: 1,
            num_projections: 50,
            ..OptimizerConfig::default()
        },
        steps,
        step_size,
        snapshot_every: 50,
        ..FlowConfig::default()
    }
}

#[test]
fn sfg_flow_trace_decreases_up_to_noise() {
    let mut rng = SeededRng::new(46);
    let target = gaussian_modes(&four_mode_centers(), 0.5, 64, &mut rng);
    let flow = small_flow(DiscrepancyKind::Sfg, 400, 0.01);
    let run = particle_flow(&target, 64, &flow, &mut rng).unwrap();
    let smooth: Vec<f64> = run.trace.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    let tol = 1e-3 * smooth[0];
    assert!(smooth.windows(2).all(|w| w[1] <= w[0] + tol));
    assert!(run.trace.last().unwrap() < &(0.01 * run.trace[0]));
    assert_eq!(run.snapshots.first().unwrap().0, 0);
    assert_eq!(run.snapshots.last().unwrap().0, 400);
}

#[test]
fn flow_is_deterministic() {
    let mut rng = SeededRng::new(47);
    let target = gaussian_modes(&four_mode_centers(), 0.5, 32, &mut rng);
    let mut flow = small_flow(DiscrepancyKind::Ssfg { kappa: 100.0 }, 50, 0.01);
    flow.yardstick_projections = 20;
    let a = particle_flow(&target, 32, &flow, &mut SeededRng::new(3)).unwrap();
    let b = particle_flow(&target, 32, &flow, &mut SeededRng::new(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.yardstick.len(), 50 / flow.yardstick_every + 1);
}

#[test]
fn flow_at_target_does_not_move() {
    let mut rng = SeededRng::new(48);
    let target = gaussian_cloud(16, 2, 1.0, &mut rng);
    let flow = small_flow(DiscrepancyKind::Ssfg { kappa: 10.0 }, 5, 0.01);
    let run = particle_flow_from(target.clone(), &target, &flow, &mut rng).unwrap();
    let drift = run
        .final_particles
        .as_flat()
        .iter()
        .zip(target.as_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-12, "{drift}");
}

#[test]
fn huge_step_reports_divergence() {
    let mut rng = SeededRng::new(49);
    let target = gaussian_modes(&four_mode_centers(), 0.5, 32, &mut rng);
    let flow = small_flow(DiscrepancyKind::Sfg, 500, 1e6);
    match particle_flow(&target, 32, &flow, &mut rng) {
        Err(Error::Divergence { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn flow_rejects_bad_settings() {
    let mut rng = SeededRng::new(50);
    let target = gaussian_cloud(8, 2, 1.0, &mut rng);
    let flow = small_flow(DiscrepancyKind::Sfg, 5, 0.01);
    assert!(particle_flow(&target, 7, &flow, &mut rng).is_err());
    let zero = FlowConfig { steps: 0, ..flow.clone() };
    assert!(particle_flow(&target, 8, &zero, &mut rng).is_err());
    let negative = FlowConfig { step_size: -1.0, ..flow };
    assert!(particle_flow(&target, 8, &negative, &mut rng).is_err());
}

#[test]
fn single_component_gmm_matches_sample_moments() {
    let mut rng = SeededRng::new(51);
    let target = gaussian_cloud(1024, 2, 1.0, &mut rng);
    let fit = GmmFitConfig {
        k: 1,
        steps: 300,
        batch: 128,
        ..GmmFitConfig::default()
    };
    let params = gmm_fit(&target, &fit, &mut rng).unwrap();
    let n = target.len() as f64;
    for j in 0..2 {
        let col: Vec<f64> = target.rows().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let std = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((params.means[0][j] - mean).abs() < 0.1, "{params:?}");
        assert!((params.std_devs()[0][j] - std).abs() < 0.1, "{params:?}");
    }
}

#[test]
fn default_gmm_config_stays_finite() {
    let mut rng = SeededRng::new(52);
    let target = gaussian_modes(&four_mode_centers(), 0.5, 512, &mut rng);
    let fit = GmmFitConfig {
        steps: 20,
        ..GmmFitConfig::default()
    };
    let params = gmm_fit(&target, &fit, &mut rng).unwrap();
    assert_eq!(params.k(), 10);
    assert_eq!(params.dim(), 2);
    assert!(params.means.iter().chain(&params.log_std_devs).flatten().all(|x| x.is_finite()));
    assert!(params.weights.iter().all(|&w| (w - 0.1).abs() < 1e-15));
}

#[test]
fn gmm_rejects_oversized_batch() {
    let mut rng = SeededRng::new(53);
    let target = PointCloud::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let fit = GmmFitConfig {
        batch: 3,
        ..GmmFitConfig::default()
    };
    assert!(gmm_fit(&target, &fit, &mut rng).is_err());
}
