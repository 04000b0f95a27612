#![allow(dead_code)]

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use ssfg::discrepancies::OptimizerConfig;
use ssfg::{PointCloud, Projected1D, SeededRng};

pub fn normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn values(n: usize, rng: &mut SeededRng) -> Projected1D {
    Projected1D::from_values((0..n).map(|_| normal(rng)).collect())
}

/// `scale * N(0, I) + shift` with a random per-axis scale in [0.5, 1.5].
pub fn random_cloud(n: usize, d: usize, scale: f64, shift: f64, rng: &mut SeededRng) -> PointCloud {
    let axis: Vec<f64> = (0..d).map(|_| 0.5 + rng.random::<f64>()).collect();
    let data = (0..n * d)
        .map(|i| shift + scale * axis[i % d] * normal(rng))
        .collect();
    PointCloud::from_flat(n, d, data).unwrap()
}

/// Two clouds that differ only in the first coordinate; every other
/// coordinate is the same constant for all points.
pub fn axis_separated(n: usize, d: usize, rng: &mut SeededRng) -> (PointCloud, PointCloud) {
    let mut mu = Vec::with_capacity(n * d);
    let mut nu = Vec::with_capacity(n * d);
    for _ in 0..n {
        mu.push(normal(rng));
        nu.push(1.0 + 2.0 * normal(rng));
        for j in 1..d {
            mu.push(0.3 * j as f64);
            nu.push(0.3 * j as f64);
        }
    }
    (
        PointCloud::from_flat(n, d, mu).unwrap(),
        PointCloud::from_flat(n, d, nu).unwrap(),
    )
}

/// Location ascent long enough to actually move the slicing distribution.
pub fn tuned_opt(num_projections: usize) -> OptimizerConfig {
    OptimizerConfig {
        learning_rate: 0.05,
        max_iter: 60,
        num_projections,
        ..OptimizerConfig::default()
    }
}

pub fn max_opt() -> OptimizerConfig {
    OptimizerConfig {
        learning_rate: 0.05,
        max_iter: 150,
        restarts: 8,
        ..OptimizerConfig::default()
    }
}

pub fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Writes straight to the process stderr so the line is visible even when
/// the harness captures test output.
pub fn verdict(label: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] {label}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}
