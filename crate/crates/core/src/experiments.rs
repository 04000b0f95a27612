//! Desk-scale experiments: concentration sweeps, sample-complexity rates,
//! particle flows toward a target cloud and ex-post GMM fitting.
//!
//! Particle flows and GMM fits stand in for the neural generators of the
//! original image experiments. Both push the discrepancy gradient through
//! the same sliced machinery, but nothing here claims to reproduce those
//! figures quantitatively.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::discrepancies::{
    ascend_direction, ascend_locations, max_sfg, mean_and_se, sfg, DiscrepancyKind,
    OptimizerConfig, SlicedFgw,
};
use crate::error::{Error, Result};
use crate::fgw1d::{fgw_1d, FgwConfig, PointCloud, Projected1D};
use crate::rng::SeededRng;
use crate::sphere_opt::{AdamState, SliceObjective};
use crate::sphere_sampling::{sample_categorical, sample_uniform_sphere, Direction};

/// One row of a long-format result table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub metric: String,
    pub parameter: String,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub records: Vec<Record>,
    pub metadata: Value,
}

impl ExperimentResult {
    fn push(&mut self, metric: &str, parameter: impl Into<String>, value: f64, std_error: f64) -> Result<()> {
        if !value.is_finite() || !std_error.is_finite() {
            return Err(Error::Divergence {
                step: self.records.len(),
            });
        }
        self.records.push(Record {
            metric: metric.to_owned(),
            parameter: parameter.into(),
            value,
            std_error,
        });
        Ok(())
    }

    /// First record with the given metric and parameter.
    pub fn find(&self, metric: &str, parameter: &str) -> Option<&Record> {
        self.records
            .iter()
            .find(|r| r.metric == metric && r.parameter == parameter)
    }
}

fn opt_json(opt: &OptimizerConfig) -> Value {
    serde_json::to_value(opt).unwrap_or(Value::Null)
}

fn fgw_json(cfg: &FgwConfig) -> Value {
    json!({ "beta": cfg.beta(), "exponent": cfg.exponent() })
}

/// Runs `trial` for every index on its own stream of `base`, in parallel,
/// returning results in index order.
fn run_trials<T: Send>(
    base: u64,
    trials: usize,
    trial: impl Fn(&mut SeededRng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut SeededRng::with_stream(base, t as u64)))
        .collect()
}

/// SSFG over a grid of concentrations, with SFG and max-SFG reference rows.
/// Each row is the mean and standard error over `trials` independent runs.
pub fn kappa_sweep(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    kappas: &[f64],
    opt: &OptimizerConfig,
    trials: usize,
    rng: &mut SeededRng,
) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if kappas.is_empty() {
        return Err(Error::InvalidParameter("need at least one kappa".into()));
    }
    let base = rng.next_u64();
    let mut result = ExperimentResult {
        records: Vec::new(),
        metadata: json!({
            "experiment": "sweep-kappa",
            "base_seed": base,
            "trials": trials,
            "kappas": kappas,
            "fgw": fgw_json(cfg),
            "optimizer": opt_json(opt),
        }),
    };
    let mut row = |metric: &str, parameter: String, values: Vec<f64>| {
        let (m, se) = mean_and_se(&values);
        result.push(metric, parameter, m, se)
    };
    for (i, &kappa) in kappas.iter().enumerate() {
        let values = run_trials(base.wrapping_add(i as u64 + 2), trials, |r| {
            Ok(DiscrepancyKind::Ssfg { kappa }.compute(mu, nu, cfg, opt, r)?.value)
        })?;
        row("ssfg", format!("kappa={kappa}"), values)?;
    }
    let values = run_trials(base, trials, |r| Ok(sfg(mu, nu, cfg, opt.num_projections, r)?.value))?;
    row("sfg", String::new(), values)?;
    let values = run_trials(base.wrapping_add(1), trials, |r| Ok(max_sfg(mu, nu, cfg, opt, r)?.value))?;
    row("max-sfg", String::new(), values)?;
    Ok(result)
}

fn uniform_cube(n: usize, d: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..n * d).map(|_| rng.random::<f64>()).collect()
}

/// Row-major `rows` repeated `times` times each.
fn replicate_rows(flat: &[f64], d: usize, times: usize) -> Vec<f64> {
    flat.chunks(d)
        .flat_map(|row| std::iter::repeat_n(row, times).flatten().copied())
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Shared harness: for each trial draw a reference of `16 * max(n)` points
/// uniform on `[0,1]^d`, then for each `n` an independent sample of `n`
/// points, replicated to the reference size, and record `measure` on the
/// two row-major arrays.
fn rate_harness(
    d: usize,
    sample_sizes: &[usize],
    trials: usize,
    base: u64,
    measure: impl Fn(&[f64], &[f64], &mut SeededRng) -> Result<f64> + Sync,
    metadata: Value,
) -> Result<ExperimentResult> {
    if trials == 0 || sample_sizes.is_empty() {
        return Err(Error::InvalidParameter("need trials >= 1 and at least one sample size".into()));
    }
    if sample_sizes.windows(2).any(|w| w[0] >= w[1]) || sample_sizes[0] == 0 {
        return Err(Error::InvalidParameter("sample sizes must be positive and increasing".into()));
    }
    let m = 16 * sample_sizes[sample_sizes.len() - 1];
    if let Some(&n) = sample_sizes.iter().find(|&&n| m % n != 0) {
        return Err(Error::InvalidParameter(format!(
            "sample size {n} does not divide the reference size {m}"
        )));
    }
    let per_trial = run_trials(base, trials, |rng| {
        let reference = uniform_cube(m, d, rng);
        sample_sizes
            .iter()
            .map(|&n| {
                let sample = replicate_rows(&uniform_cube(n, d, rng), d, m / n);
                measure(&sample, &reference, rng)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut result = ExperimentResult {
        records: Vec::new(),
        metadata,
    };
    let mut means = Vec::with_capacity(sample_sizes.len());
    for (j, &n) in sample_sizes.iter().enumerate() {
        let column: Vec<f64> = per_trial.iter().map(|t| t[j]).collect();
        let (mean, se) = mean_and_se(&column);
        means.push(mean);
        result.push("mean", format!("n={n}"), mean, se)?;
    }
    let xs: Vec<f64> = sample_sizes.iter().map(|&n| n as f64).collect();
    if means.len() >= 2 && means.iter().all(|&v| v > 0.0) {
        result.push("slope", "", log_log_slope(&xs, &means), 0.0)?;
    }
    Ok(result)
}

/// Mean SSFG between `n`-point samples and a large reference sample of the
/// uniform distribution on `[0,1]^d`, with the fitted log-log slope.
pub fn convergence_rate(
    d: usize,
    sample_sizes: &[usize],
    trials: usize,
    cfg: &FgwConfig,
    kappa: f64,
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<ExperimentResult> {
    if d < 2 {
        return Err(Error::Dimension("convergence experiment needs d >= 2".into()));
    }
    let base = rng.next_u64();
    let metadata = json!({
        "experiment": "convergence",
        "base_seed": base,
        "d": d,
        "sample_sizes": sample_sizes,
        "trials": trials,
        "kappa": kappa,
        "fgw": fgw_json(cfg),
        "optimizer": opt_json(opt),
    });
    let kind = DiscrepancyKind::Ssfg { kappa };
    rate_harness(
        d,
        sample_sizes,
        trials,
        base,
        |a, b, r| {
            let a = PointCloud::from_flat(a.len() / d, d, a.to_vec())?;
            let b = PointCloud::from_flat(b.len() / d, d, b.to_vec())?;
            Ok(kind.compute(&a, &b, cfg, opt, r)?.value)
        },
        metadata,
    )
}

/// The same harness on the line with the squared 2-Wasserstein distance,
/// whose `1/n` rate is classical.
pub fn wasserstein_control_rate(
    sample_sizes: &[usize],
    trials: usize,
    rng: &mut SeededRng,
) -> Result<ExperimentResult> {
    let base = rng.next_u64();
    let metadata = json!({
        "experiment": "convergence-control",
        "base_seed": base,
        "sample_sizes": sample_sizes,
        "trials": trials,
    });
    let w2 = FgwConfig::new(0.0, 2)?;
    rate_harness(
        1,
        sample_sizes,
        trials,
        base,
        |a, b, _| {
            let xs = Projected1D::from_values(a.to_vec());
            let ys = Projected1D::from_values(b.to_vec());
            fgw_1d(&xs, &ys, &w2)
        },
        metadata,
    )
}

/// Slicing state carried across the steps of a flow or fit: the current
/// location(s), warm-started from the previous step.
struct SlicingState {
    kind: DiscrepancyKind,
    locations: Option<Vec<Direction>>,
}

impl SlicingState {
    fn new(kind: DiscrepancyKind) -> Self {
        Self {
            kind,
            locations: None,
        }
    }

    /// Updates the locations with `opt.max_iter` ascent iterations and
    /// returns the directions for this step.
    fn directions(
        &mut self,
        objective: &SlicedFgw<'_>,
        opt: &OptimizerConfig,
        rng: &mut SeededRng,
    ) -> Result<Vec<Direction>> {
        let d = objective.dim();
        match &self.kind {
            DiscrepancyKind::Sfg => (0..opt.num_projections)
                .map(|_| sample_uniform_sphere(d, rng))
                .collect(),
            DiscrepancyKind::MaxSfg => {
                let start = match self.locations.take() {
                    Some(mut l) => l.remove(0),
                    None => sample_uniform_sphere(d, rng)?,
                };
                let best = ascend_direction(objective, start, opt)?.best;
                self.locations = Some(vec![best.clone()]);
                Ok(vec![best])
            }
            kind => {
                let components = kind.components().expect("location family");
                let ascent =
                    ascend_locations(objective, &components, self.locations.take(), opt, rng)?;
                let slicing = kind.slicing_at(&ascent.locations)?;
                self.locations = Some(ascent.locations);
                (0..opt.num_projections).map(|_| slicing.sample(d, rng)).collect()
            }
        }
    }
}

/// Mean slice value over `dirs` and its gradient in the points of the
/// first cloud (row-major).
fn first_cloud_gradient(objective: &SlicedFgw<'_>, dirs: &[Direction]) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, Vec<f64>)> = dirs
        .par_iter()
        .map(|t| {
            let (v, gx, _) = objective.point_gradients(t.as_slice())?;
            Ok((v, gx))
        })
        .collect::<Result<_>>()?;
    let count = dirs.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; parts[0].1.len()];
    for (v, g) in parts {
        value += v;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|g| *g /= count);
    Ok((value / count, grad))
}

/// Numerical failures inside an iterative run are reported as divergence
/// at that step.
fn diverged(e: Error, step: usize) -> Error {
    if e.is_numeric() {
        Error::Divergence { step }
    } else {
        e
    }
}

/// Settings for [`particle_flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub discrepancy: DiscrepancyKind,
    pub fgw: FgwConfig,
    /// Slicing optimizer; `max_iter` is the number of location-ascent
    /// iterations per flow step.
    pub opt: OptimizerConfig,
    pub steps: usize,
    pub step_size: f64,
    pub snapshot_every: usize,
    /// Uniform directions, fixed for the whole run, of the common SFG
    /// yardstick. Zero disables it.
    pub yardstick_projections: usize,
    pub yardstick_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            discrepancy: DiscrepancyKind::Ssfg { kappa: 1000.0 },
            fgw: FgwConfig::default(),
            opt: OptimizerConfig {
                learning_rate: 0.01,
                max_iter: 1,
                ..OptimizerConfig::default()
            },
            steps: 3000,
            step_size: 0.01,
            snapshot_every: 100,
            yardstick_projections: 0,
            yardstick_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    /// `(step, particles before that step)`, every `snapshot_every` steps,
    /// plus the final particles.
    pub snapshots: Vec<(usize, PointCloud)>,
    /// Monte Carlo discrepancy at each step, before the move.
    pub trace: Vec<f64>,
    /// `(step, yardstick value)` pairs.
    pub yardstick: Vec<(usize, f64)>,
    pub final_particles: PointCloud,
}

/// Gaussian cloud `scale * N(0, I)`.
pub fn gaussian_cloud(n: usize, d: usize, scale: f64, rng: &mut SeededRng) -> PointCloud {
    let data = (0..n * d)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    PointCloud::from_flat(n, d, data).expect("valid shape")
}

/// Equal-weight Gaussian modes with isotropic spread `std`, `n` points total,
/// assigned round-robin so every mode holds `n / modes` points (+1).
pub fn gaussian_modes(centers: &[Vec<f64>], std: f64, n: usize, rng: &mut SeededRng) -> PointCloud {
    let d = centers[0].len();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = &centers[i % centers.len()];
        data.extend(c.iter().map(|m| m + std * rng.sample::<f64, _>(StandardNormal)));
    }
    PointCloud::from_flat(n, d, data).expect("valid shape")
}

/// Modes at `(+-4, +-4)` with standard deviation 0.5.
pub fn four_mode_centers() -> Vec<Vec<f64>> {
    vec![vec![4.0, 4.0], vec![-4.0, 4.0], vec![-4.0, -4.0], vec![4.0, -4.0]]
}

fn yardstick_value(particles: &PointCloud, target: &PointCloud, cfg: &FgwConfig, dirs: &[Direction]) -> Result<f64> {
    let objective = SlicedFgw::new(particles, target, *cfg)?;
    let values: Vec<f64> = dirs
        .par_iter()
        .map(|t| objective.value(t.as_slice()))
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Particle flow from `0.1 * N(0, I)` toward `target`.
pub fn particle_flow(
    target: &PointCloud,
    num_particles: usize,
    flow: &FlowConfig,
    rng: &mut SeededRng,
) -> Result<FlowTrajectory> {
    if num_particles != target.len() {
        return Err(Error::SizeMismatch(num_particles, target.len()));
    }
    let start = gaussian_cloud(num_particles, target.dim(), 0.1, rng);
    particle_flow_from(start, target, flow, rng)
}

/// Gradient descent of the chosen discrepancy in the particle positions,
/// starting from `particles`. Each particle moves by `-step_size * n * grad`
/// so the step is independent of the cloud size.
pub fn particle_flow_from(
    mut particles: PointCloud,
    target: &PointCloud,
    flow: &FlowConfig,
    rng: &mut SeededRng,
) -> Result<FlowTrajectory> {
    if flow.steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    if !(flow.step_size > 0.0 && flow.step_size.is_finite()) {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    if flow.snapshot_every == 0 || flow.yardstick_every == 0 {
        return Err(Error::InvalidParameter("snapshot and yardstick intervals must be >= 1".into()));
    }
    flow.opt.validate()?;
    SlicedFgw::new(&particles, target, flow.fgw)?;
    let d = target.dim();
    let scale = flow.step_size * particles.len() as f64;
    let yardstick_dirs = {
        let mut yr = SeededRng::with_stream(rng.next_u64(), 1);
        (0..flow.yardstick_projections)
            .map(|_| sample_uniform_sphere(d, &mut yr))
            .collect::<Result<Vec<_>>>()?
    };

    let mut state = SlicingState::new(flow.discrepancy.clone());
    let mut trace = Vec::with_capacity(flow.steps);
    let mut snapshots = Vec::new();
    let mut yardstick = Vec::new();
    for step in 0..flow.steps {
        if step % flow.snapshot_every == 0 {
            snapshots.push((step, particles.clone()));
        }
        if !yardstick_dirs.is_empty() && step % flow.yardstick_every == 0 {
            yardstick.push((step, yardstick_value(&particles, target, &flow.fgw, &yardstick_dirs)?));
        }
        let objective = SlicedFgw::new(&particles, target, flow.fgw)?;
        let (value, grad) = state
            .directions(&objective, &flow.opt, rng)
            .and_then(|dirs| first_cloud_gradient(&objective, &dirs))
            .map_err(|e| diverged(e, step))?;
        trace.push(value);
        particles
            .as_flat_mut()
            .iter_mut()
            .zip(&grad)
            .for_each(|(x, g)| *x -= scale * g);
        if !value.is_finite() || particles.as_flat().iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step });
        }
    }
    if !yardstick_dirs.is_empty() {
        yardstick.push((
            flow.steps,
            yardstick_value(&particles, target, &flow.fgw, &yardstick_dirs)?,
        ));
    }
    snapshots.push((flow.steps, particles.clone()));
    Ok(FlowTrajectory {
        snapshots,
        trace,
        yardstick,
        final_particles: particles,
    })
}

/// Fraction of points whose nearest center is each of `centers`.
pub fn mode_shares(cloud: &PointCloud, centers: &[Vec<f64>]) -> Vec<f64> {
    let mut counts = vec![0usize; centers.len()];
    for row in cloud.rows() {
        let nearest = centers
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .expect("at least one center");
        counts[nearest] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / cloud.len() as f64)
        .collect()
}

/// Diagonal Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmParams {
    /// `k` rows of length `d`.
    pub means: Vec<Vec<f64>>,
    pub log_std_devs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl GmmParams {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn std_devs(&self) -> Vec<Vec<f64>> {
        self.log_std_devs
            .iter()
            .map(|row| row.iter().map(|s| s.exp()).collect())
            .collect()
    }

    fn is_finite(&self) -> bool {
        self.means.iter().chain(&self.log_std_devs).flatten().all(|x| x.is_finite())
    }

    fn flatten(&self) -> Vec<f64> {
        self.means.iter().chain(&self.log_std_devs).flatten().copied().collect()
    }

    fn unflatten(&mut self, flat: &[f64]) {
        let d = self.dim();
        let k = self.k();
        for c in 0..k {
            self.means[c].copy_from_slice(&flat[c * d..(c + 1) * d]);
            self.log_std_devs[c].copy_from_slice(&flat[(k + c) * d..(k + c + 1) * d]);
        }
    }
}

/// Settings for [`gmm_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFitConfig {
    pub k: usize,
    pub discrepancy: DiscrepancyKind,
    pub fgw: FgwConfig,
    pub opt: OptimizerConfig,
    pub steps: usize,
    /// Adam learning rate for the mixture parameters.
    pub step_size: f64,
    pub batch: usize,
}

impl Default for GmmFitConfig {
    fn default() -> Self {
        Self {
            k: 10,
            discrepancy: DiscrepancyKind::Ssfg { kappa: 10.0 },
            fgw: FgwConfig::default(),
            opt: OptimizerConfig {
                learning_rate: 0.01,
                max_iter: 1,
                ..OptimizerConfig::default()
            },
            steps: 1000,
            step_size: 0.05,
            batch: 256,
        }
    }
}

/// Fits a `k`-component diagonal GMM with fixed uniform weights to `target`
/// by descending the chosen discrepancy between GMM sample batches and
/// target batches.
///
/// Samples are `mean_c + exp(log_std_c) * eta`; the component draw is not
/// differentiated, so each sample's gradient goes only to the component
/// that produced it.
pub fn gmm_fit(target: &PointCloud, fit: &GmmFitConfig, rng: &mut SeededRng) -> Result<GmmParams> {
    if fit.k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if fit.batch == 0 || fit.batch > target.len() {
        return Err(Error::InvalidParameter(format!(
            "batch must lie in 1..={}, got {}",
            target.len(),
            fit.batch
        )));
    }
    fit.opt.validate()?;
    let d = target.dim();
    let mut params = GmmParams {
        means: (0..fit.k)
            .map(|_| (0..d).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect(),
        log_std_devs: vec![vec![0.0; d]; fit.k],
        weights: vec![1.0 / fit.k as f64; fit.k],
    };
    let mut adam = AdamState::new(2 * fit.k * d, fit.step_size, 0.9, 0.999);
    let mut state = SlicingState::new(fit.discrepancy.clone());
    for step in 0..fit.steps {
        let mut labels = Vec::with_capacity(fit.batch);
        let mut noise = Vec::with_capacity(fit.batch * d);
        let mut data = Vec::with_capacity(fit.batch * d);
        for _ in 0..fit.batch {
            let c = sample_categorical(&params.weights, rng);
            labels.push(c);
            for j in 0..d {
                let eta: f64 = rng.sample(StandardNormal);
                noise.push(eta);
                data.push(params.means[c][j] + params.log_std_devs[c][j].exp() * eta);
            }
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step });
        }
        let samples = PointCloud::from_flat(fit.batch, d, data)?;
        let picked = sample_indices(rng, target.len(), fit.batch);
        let rows: Vec<Vec<f64>> = picked.iter().map(|i| target.row(i).to_vec()).collect();
        let batch = PointCloud::from_rows(&rows)?;

        let objective = SlicedFgw::new(&samples, &batch, fit.fgw)?;
        let (value, grad_z) = state
            .directions(&objective, &fit.opt, rng)
            .and_then(|dirs| first_cloud_gradient(&objective, &dirs))
            .map_err(|e| diverged(e, step))?;
        if !value.is_finite() {
            return Err(Error::Divergence { step });
        }
        let k = fit.k;
        let mut grad = vec![0.0; 2 * k * d];
        for (i, &c) in labels.iter().enumerate() {
            for j in 0..d {
                let g = grad_z[i * d + j];
                grad[c * d + j] += g;
                grad[(k + c) * d + j] += g * params.log_std_devs[c][j].exp() * noise[i * d + j];
            }
        }
        let (next, next_state) = adam.step(&grad, &params.flatten(), false)?;
        adam = next_state;
        params.unflatten(&next);
        if !params.is_finite() {
            return Err(Error::Divergence { step });
        }
    }
    Ok(params)
}
