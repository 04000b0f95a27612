//! Sliced discrepancies built from [`crate::fgw1d`].
//!
//! Every discrepancy is an expectation of the 1D fused cost over a slicing
//! distribution on the sphere. SFG uses the uniform distribution. max-SFG
//! searches for the single best direction. SSFG, PSSFG and MSSFG ascend the
//! location(s) of a von Mises-Fisher, power spherical or mixture-of-vMF
//! distribution with stochastic Adam steps, reprojecting onto the sphere
//! after each step, then report a fresh Monte Carlo estimate at the final
//! location(s).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgw1d::{fgw_1d, fgw_1d_grad, project_values, FgwConfig, PointCloud, Projected1D};
use crate::rng::SeededRng;
use crate::sphere_opt::{
    gradient_sum, project_to_sphere, tangent_project, AdamState, DirectionalKernel, GradientMethod,
    SliceObjective,
};
use crate::sphere_sampling::{
    norm, sample_categorical, sample_mixture_vmf, sample_power_spherical, sample_uniform_sphere,
    sample_vmf, validate_weights, Direction, MixtureVmfParams, PowerSphericalParams,
    VmfParams,
};

/// Location change below which the ascent is considered converged.
pub const LOCATION_TOL: f64 = 1e-6;

/// Distribution of slicing directions.
#[derive(Debug, Clone, PartialEq)]
pub enum SlicingDistribution {
    Uniform,
    Dirac(Direction),
    Vmf(VmfParams),
    PowerSpherical(PowerSphericalParams),
    MixtureVmf(MixtureVmfParams),
}

impl SlicingDistribution {
    pub fn sample(&self, d: usize, rng: &mut SeededRng) -> Result<Direction> {
        let dir = match self {
            SlicingDistribution::Uniform => sample_uniform_sphere(d, rng)?,
            SlicingDistribution::Dirac(theta) => theta.clone(),
            SlicingDistribution::Vmf(p) => sample_vmf(p, rng)?,
            SlicingDistribution::PowerSpherical(p) => sample_power_spherical(p, rng)?,
            SlicingDistribution::MixtureVmf(p) => sample_mixture_vmf(p, rng)?.0,
        };
        if dir.dim() != d {
            return Err(Error::Dimension(format!(
                "slicing distribution has dimension {} but clouds have {d}",
                dir.dim()
            )));
        }
        Ok(dir)
    }

    /// Location parameters, if the distribution has any.
    pub fn locations(&self) -> Vec<Direction> {
        match self {
            SlicingDistribution::Uniform => Vec::new(),
            SlicingDistribution::Dirac(t) => vec![t.clone()],
            SlicingDistribution::Vmf(p) => vec![p.location.clone()],
            SlicingDistribution::PowerSpherical(p) => vec![p.location.clone()],
            SlicingDistribution::MixtureVmf(p) => {
                p.components().iter().map(|c| c.location.clone()).collect()
            }
        }
    }
}

/// Settings for the stochastic ascent over slicing locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub max_iter: usize,
    pub num_projections: usize,
    pub gradient_method: GradientMethodConfig,
    /// Independent random starts for max-SFG.
    pub restarts: usize,
    pub seed: u64,
}

/// Serializable mirror of [`GradientMethod`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethodConfig {
    Pathwise,
    FiniteDifference,
}

impl From<GradientMethodConfig> for GradientMethod {
    fn from(m: GradientMethodConfig) -> Self {
        match m {
            GradientMethodConfig::Pathwise => GradientMethod::Pathwise,
            GradientMethodConfig::FiniteDifference => GradientMethod::FiniteDifference,
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            max_iter: 10,
            num_projections: 50,
            gradient_method: GradientMethodConfig::Pathwise,
            restarts: 8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1)")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if self.num_projections == 0 {
            return Err(Error::InvalidParameter("number of projections must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        Ok(())
    }

    /// Generator seeded from [`seed`](Self::seed).
    pub fn rng(&self) -> SeededRng {
        SeededRng::new(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub value: f64,
    /// Monte Carlo standard error of `value`; zero for deterministic values.
    pub std_error: f64,
    pub final_slicing: SlicingDistribution,
    pub trace: Vec<TracePoint>,
    pub num_projections_used: usize,
}

/// `theta -> fgw_1d(theta # mu, theta # nu)` as a [`SliceObjective`].
#[derive(Debug, Clone, Copy)]
pub struct SlicedFgw<'a> {
    mu: &'a PointCloud,
    nu: &'a PointCloud,
    cfg: FgwConfig,
}

impl<'a> SlicedFgw<'a> {
    pub fn new(mu: &'a PointCloud, nu: &'a PointCloud, cfg: FgwConfig) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::Dimension(format!(
                "clouds have dimensions {} and {}",
                mu.dim(),
                nu.dim()
            )));
        }
        if mu.len() != nu.len() {
            return Err(Error::SizeMismatch(mu.len(), nu.len()));
        }
        Ok(Self { mu, nu, cfg })
    }

    fn projections(&self, theta: &[f64]) -> (Projected1D, Projected1D) {
        (
            Projected1D::from_values(project_values(self.mu, theta)),
            Projected1D::from_values(project_values(self.nu, theta)),
        )
    }

    /// Value and gradients with respect to every point of both clouds
    /// (row-major, same layout as the clouds).
    pub fn point_gradients(&self, theta: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let (xs, ys) = self.projections(theta);
        let g = fgw_1d_grad(&xs, &ys, &self.cfg)?;
        let spread = |grad: &[f64]| {
            grad.iter()
                .flat_map(|gi| theta.iter().map(move |t| gi * t))
                .collect::<Vec<f64>>()
        };
        Ok((g.value, spread(&g.grad_xs), spread(&g.grad_ys)))
    }
}

fn weighted_row_sum(cloud: &PointCloud, weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cloud.dim()];
    for (row, w) in cloud.rows().zip(weights) {
        out.iter_mut().zip(row).for_each(|(o, x)| *o += w * x);
    }
    out
}

impl SliceObjective for SlicedFgw<'_> {
    fn dim(&self) -> usize {
        self.mu.dim()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        let (xs, ys) = self.projections(theta);
        fgw_1d(&xs, &ys, &self.cfg)
    }

    fn value_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (xs, ys) = self.projections(theta);
        let g = fgw_1d_grad(&xs, &ys, &self.cfg)?;
        let from_mu = weighted_row_sum(self.mu, &g.grad_xs);
        let from_nu = weighted_row_sum(self.nu, &g.grad_ys);
        let grad = from_mu.iter().zip(&from_nu).map(|(a, b)| a + b).collect();
        Ok((g.value, grad))
    }
}

pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn evaluate_directions(objective: &SlicedFgw<'_>, dirs: &[Direction]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    dirs.par_iter().map(|t| objective.value(t.as_slice())).collect()
}

/// Monte Carlo estimate of `E_{theta ~ slicing} fgw_1d` with no optimization.
/// Returns the mean and its standard error.
pub fn estimate_fixed(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    slicing: &SlicingDistribution,
    num_projections: usize,
    rng: &mut SeededRng,
) -> Result<(f64, f64)> {
    if num_projections == 0 {
        return Err(Error::InvalidParameter("number of projections must be >= 1".into()));
    }
    let objective = SlicedFgw::new(mu, nu, *cfg)?;
    let dirs = (0..num_projections)
        .map(|_| slicing.sample(mu.dim(), rng))
        .collect::<Result<Vec<_>>>()?;
    let values = evaluate_directions(&objective, &dirs)?;
    Ok(mean_and_se(&values))
}

/// Sliced fused Gromov-Wasserstein with `num_projections` uniform directions.
pub fn sfg(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    num_projections: usize,
    rng: &mut SeededRng,
) -> Result<DiscrepancyReport> {
    let (value, std_error) =
        estimate_fixed(mu, nu, cfg, &SlicingDistribution::Uniform, num_projections, rng)?;
    Ok(DiscrepancyReport {
        value,
        std_error,
        final_slicing: SlicingDistribution::Uniform,
        trace: Vec::new(),
        num_projections_used: num_projections,
    })
}

/// Outcome of a projected-Adam ascent over one direction.
pub(crate) struct DiracAscent {
    pub best: Direction,
    pub best_value: f64,
    pub trace: Vec<TracePoint>,
}

/// Projected Adam ascent of the exact slice objective from `start`. Keeps
/// the best iterate seen.
pub(crate) fn ascend_direction(
    objective: &SlicedFgw<'_>,
    start: Direction,
    opt: &OptimizerConfig,
) -> Result<DiracAscent> {
    let mut theta = start;
    let mut adam = AdamState::new(theta.dim(), opt.learning_rate, opt.adam_beta1, opt.adam_beta2);
    let mut best = theta.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    for iteration in 0..opt.max_iter {
        let (value, grad) = objective.value_and_grad(theta.as_slice())?;
        if value > best_value {
            best_value = value;
            best = theta.clone();
        }
        trace.push(TracePoint {
            iteration,
            objective: value,
        });
        let tangent = tangent_project(theta.as_slice(), &grad);
        let (next, state) = adam.step(&tangent, theta.as_slice(), true)?;
        adam = state;
        let next = project_to_sphere(&next)?;
        let moved = distance(next.as_slice(), theta.as_slice());
        theta = next;
        if moved < LOCATION_TOL {
            break;
        }
    }
    let last = objective.value(theta.as_slice())?;
    if last > best_value {
        best_value = last;
        best = theta;
    }
    Ok(DiracAscent {
        best,
        best_value,
        trace,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff)
}

/// Max-sliced fused Gromov-Wasserstein: the best single direction found by
/// `opt.restarts` projected-gradient ascents from uniform starts.
pub fn max_sfg(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<DiscrepancyReport> {
    opt.validate()?;
    if cfg.exponent() != 2 {
        return Err(Error::UnsupportedExponent(cfg.exponent()));
    }
    let objective = SlicedFgw::new(mu, nu, *cfg)?;
    let mut winner: Option<DiracAscent> = None;
    for _ in 0..opt.restarts {
        let start = sample_uniform_sphere(mu.dim(), rng)?;
        let run = ascend_direction(&objective, start, opt)?;
        if winner.as_ref().is_none_or(|w| run.best_value > w.best_value) {
            winner = Some(run);
        }
    }
    let winner = winner.expect("at least one restart");
    Ok(DiscrepancyReport {
        value: winner.best_value,
        std_error: 0.0,
        final_slicing: SlicingDistribution::Dirac(winner.best),
        trace: winner.trace,
        num_projections_used: 1,
    })
}

/// One mixture component of a location family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Component {
    pub kernel: DirectionalKernel,
    pub weight: f64,
}

pub(crate) struct LocationAscent {
    pub locations: Vec<Direction>,
    pub trace: Vec<TracePoint>,
}

/// Stochastic projected-Adam ascent of `E_{theta ~ sum_i w_i q_i(eps_i)} f`
/// over the locations `eps_i`.
///
/// Each iteration draws `L` (component, canonical noise) pairs. A sample's
/// pathwise gradient is routed to the location of the component that
/// produced it, and every location gradient is divided by `L`, so that
/// location `i` receives an unbiased estimate of `w_i * grad E_{q_i} f`.
pub(crate) fn ascend_locations(
    objective: &SlicedFgw<'_>,
    components: &[Component],
    init: Option<Vec<Direction>>,
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<LocationAscent> {
    let d = objective.dim();
    let k = components.len();
    let mut locations = match init {
        Some(locs) => {
            if locs.len() != k {
                return Err(Error::SizeMismatch(locs.len(), k));
            }
            locs
        }
        None => (0..k)
            .map(|_| sample_uniform_sphere(d, rng))
            .collect::<Result<Vec<_>>>()?,
    };
    let weights: Vec<f64> = components.iter().map(|c| c.weight).collect();
    let mut adams: Vec<AdamState> = (0..k)
        .map(|_| AdamState::new(d, opt.learning_rate, opt.adam_beta1, opt.adam_beta2))
        .collect();
    let method: GradientMethod = opt.gradient_method.into();
    let count = opt.num_projections as f64;
    let mut trace = Vec::with_capacity(opt.max_iter);

    for iteration in 0..opt.max_iter {
        let mut groups: Vec<Vec<Vec<f64>>> = vec![Vec::new(); k];
        for _ in 0..opt.num_projections {
            let i = sample_categorical(&weights, rng);
            groups[i].push(components[i].kernel.sample_canonical(d, rng)?);
        }
        let mut total = 0.0;
        let mut moved: f64 = 0.0;
        for i in 0..k {
            if groups[i].is_empty() {
                continue;
            }
            let (values, sum) = gradient_sum(objective, &locations[i], &groups[i], method)?;
            total += values.iter().sum::<f64>();
            let grad: Vec<f64> = tangent_project(locations[i].as_slice(), &sum)
                .into_iter()
                .map(|g| g / count)
                .collect();
            let (next, state) = adams[i].step(&grad, locations[i].as_slice(), true)?;
            adams[i] = state;
            let next = project_to_sphere(&next)?;
            moved = moved.max(distance(next.as_slice(), locations[i].as_slice()));
            locations[i] = next;
        }
        let estimate = total / count;
        if !estimate.is_finite() {
            return Err(Error::Divergence { step: iteration });
        }
        trace.push(TracePoint {
            iteration,
            objective: estimate,
        });
        if moved < LOCATION_TOL {
            break;
        }
    }
    Ok(LocationAscent { locations, trace })
}

fn optimized_report(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    components: &[Component],
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
    slicing: impl Fn(Vec<Direction>) -> Result<SlicingDistribution>,
) -> Result<DiscrepancyReport> {
    opt.validate()?;
    let objective = SlicedFgw::new(mu, nu, *cfg)?;
    if matches!(opt.gradient_method, GradientMethodConfig::Pathwise) && cfg.exponent() != 2 {
        return Err(Error::UnsupportedExponent(cfg.exponent()));
    }
    let ascent = ascend_locations(&objective, components, None, opt, rng)?;
    let final_slicing = slicing(ascent.locations)?;
    let (value, std_error) = estimate_fixed(mu, nu, cfg, &final_slicing, opt.num_projections, rng)?;
    Ok(DiscrepancyReport {
        value,
        std_error,
        final_slicing,
        trace: ascent.trace,
        num_projections_used: opt.num_projections,
    })
}

/// Spherical sliced fused Gromov-Wasserstein with a vMF slicing distribution
/// of concentration `kappa`.
pub fn ssfg(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    kappa: f64,
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<DiscrepancyReport> {
    VmfParams::new(Direction::axis(2, 0)?, kappa)?;
    let components = [Component {
        kernel: DirectionalKernel::Vmf { kappa },
        weight: 1.0,
    }];
    optimized_report(mu, nu, cfg, &components, opt, rng, |mut locs| {
        Ok(SlicingDistribution::Vmf(VmfParams::new(locs.remove(0), kappa)?))
    })
}

/// Power spherical variant of [`ssfg`].
pub fn pssfg(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    kappa: f64,
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<DiscrepancyReport> {
    PowerSphericalParams::new(Direction::axis(2, 0)?, kappa)?;
    let components = [Component {
        kernel: DirectionalKernel::PowerSpherical { kappa },
        weight: 1.0,
    }];
    optimized_report(mu, nu, cfg, &components, opt, rng, |mut locs| {
        Ok(SlicingDistribution::PowerSpherical(PowerSphericalParams::new(
            locs.remove(0),
            kappa,
        )?))
    })
}

/// Mixture-of-vMF variant of [`ssfg`] with concentrations `kappas` and
/// weights `alphas`. With one component it reproduces [`ssfg`] exactly.
pub fn mssfg(
    mu: &PointCloud,
    nu: &PointCloud,
    cfg: &FgwConfig,
    kappas: &[f64],
    alphas: &[f64],
    opt: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<DiscrepancyReport> {
    if kappas.len() != alphas.len() {
        return Err(Error::SizeMismatch(kappas.len(), alphas.len()));
    }
    validate_weights(alphas)?;
    for &kappa in kappas {
        VmfParams::new(Direction::axis(2, 0)?, kappa)?;
    }
    let components: Vec<Component> = kappas
        .iter()
        .zip(alphas)
        .map(|(&kappa, &weight)| Component {
            kernel: DirectionalKernel::Vmf { kappa },
            weight,
        })
        .collect();
    optimized_report(mu, nu, cfg, &components, opt, rng, |locs| {
        let comps = locs
            .into_iter()
            .zip(kappas)
            .map(|(loc, &kappa)| VmfParams::new(loc, kappa))
            .collect::<Result<Vec<_>>>()?;
        Ok(SlicingDistribution::MixtureVmf(MixtureVmfParams::new(
            comps,
            alphas.to_vec(),
        )?))
    })
}

/// Which discrepancy to compute, with its slicing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiscrepancyKind {
    Sfg,
    MaxSfg,
    Ssfg { kappa: f64 },
    Pssfg { kappa: f64 },
    Mssfg { kappas: Vec<f64>, alphas: Vec<f64> },
}

impl DiscrepancyKind {
    pub fn name(&self) -> &'static str {
        match self {
            DiscrepancyKind::Sfg => "sfg",
            DiscrepancyKind::MaxSfg => "max-sfg",
            DiscrepancyKind::Ssfg { .. } => "ssfg",
            DiscrepancyKind::Pssfg { .. } => "pssfg",
            DiscrepancyKind::Mssfg { .. } => "mssfg",
        }
    }

    pub fn compute(
        &self,
        mu: &PointCloud,
        nu: &PointCloud,
        cfg: &FgwConfig,
        opt: &OptimizerConfig,
        rng: &mut SeededRng,
    ) -> Result<DiscrepancyReport> {
        match self {
            DiscrepancyKind::Sfg => sfg(mu, nu, cfg, opt.num_projections, rng),
            DiscrepancyKind::MaxSfg => max_sfg(mu, nu, cfg, opt, rng),
            DiscrepancyKind::Ssfg { kappa } => ssfg(mu, nu, cfg, *kappa, opt, rng),
            DiscrepancyKind::Pssfg { kappa } => pssfg(mu, nu, cfg, *kappa, opt, rng),
            DiscrepancyKind::Mssfg { kappas, alphas } => mssfg(mu, nu, cfg, kappas, alphas, opt, rng),
        }
    }

    /// Location-family components, or `None` for SFG and max-SFG.
    pub(crate) fn components(&self) -> Option<Vec<Component>> {
        match self {
            DiscrepancyKind::Sfg | DiscrepancyKind::MaxSfg => None,
            DiscrepancyKind::Ssfg { kappa } => Some(vec![Component {
                kernel: DirectionalKernel::Vmf { kappa: *kappa },
                weight: 1.0,
            }]),
            DiscrepancyKind::Pssfg { kappa } => Some(vec![Component {
                kernel: DirectionalKernel::PowerSpherical { kappa: *kappa },
                weight: 1.0,
            }]),
            DiscrepancyKind::Mssfg { kappas, alphas } => Some(
                kappas
                    .iter()
                    .zip(alphas)
                    .map(|(&kappa, &weight)| Component {
                        kernel: DirectionalKernel::Vmf { kappa },
                        weight,
                    })
                    .collect(),
            ),
        }
    }

    /// Slicing distribution for the given locations (ignored by SFG).
    pub(crate) fn slicing_at(&self, locations: &[Direction]) -> Result<SlicingDistribution> {
        Ok(match self {
            DiscrepancyKind::Sfg => SlicingDistribution::Uniform,
            DiscrepancyKind::MaxSfg => SlicingDistribution::Dirac(locations[0].clone()),
            DiscrepancyKind::Ssfg { kappa } => {
                SlicingDistribution::Vmf(VmfParams::new(locations[0].clone(), *kappa)?)
            }
            DiscrepancyKind::Pssfg { kappa } => SlicingDistribution::PowerSpherical(
                PowerSphericalParams::new(locations[0].clone(), *kappa)?,
            ),
            DiscrepancyKind::Mssfg { kappas, alphas } => {
                let comps = locations
                    .iter()
                    .zip(kappas)
                    .map(|(loc, &kappa)| VmfParams::new(loc.clone(), kappa))
                    .collect::<Result<Vec<_>>>()?;
                SlicingDistribution::MixtureVmf(MixtureVmfParams::new(comps, alphas.clone())?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_cloud(n: usize, d: usize, scale: f64, rng: &mut SeededRng) -> PointCloud {
        let data = (0..n * d)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        PointCloud::from_flat(n, d, data).unwrap()
    }

    fn quick_opt() -> OptimizerConfig {
        OptimizerConfig {
            learning_rate: 0.05,
            max_iter: 30,
            num_projections: 20,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn identical_clouds_give_zero_everywhere() {
        let mut rng = SeededRng::new(0);
        let mu = gaussian_cloud(32, 3, 1.0, &mut rng);
        let cfg = FgwConfig::default();
        let opt = quick_opt();
        let kinds = [
            DiscrepancyKind::Sfg,
            DiscrepancyKind::MaxSfg,
            DiscrepancyKind::Ssfg { kappa: 10.0 },
            DiscrepancyKind::Pssfg { kappa: 10.0 },
            DiscrepancyKind::Mssfg {
                kappas: vec![5.0, 5.0],
                alphas: vec![0.5, 0.5],
            },
        ];
        for kind in kinds {
            let r = kind.compute(&mu, &mu, &cfg, &opt, &mut rng).unwrap();
            assert_eq!(r.value, 0.0, "{}", kind.name());
        }
    }

    #[test]
    fn size_and_dimension_mismatch() {
        let mut rng = SeededRng::new(1);
        let a = gaussian_cloud(10, 3, 1.0, &mut rng);
        let b = gaussian_cloud(11, 3, 1.0, &mut rng);
        let c = gaussian_cloud(10, 4, 1.0, &mut rng);
        let cfg = FgwConfig::default();
        assert!(matches!(sfg(&a, &b, &cfg, 5, &mut rng), Err(Error::SizeMismatch(10, 11))));
        assert!(matches!(sfg(&a, &c, &cfg, 5, &mut rng), Err(Error::Dimension(_))));
        assert!(mssfg(&a, &a, &cfg, &[1.0, 2.0], &[1.0], &quick_opt(), &mut rng).is_err());
        assert!(ssfg(&a, &a, &cfg, -1.0, &quick_opt(), &mut rng).is_err());
    }

    #[test]
    fn single_component_mixture_reproduces_ssfg() {
        let mut rng = SeededRng::new(2);
        let mu = gaussian_cloud(24, 4, 1.0, &mut rng);
        let nu = gaussian_cloud(24, 4, 2.0, &mut rng);
        let cfg = FgwConfig::default();
        let opt = quick_opt();
        let a = ssfg(&mu, &nu, &cfg, 7.0, &opt, &mut SeededRng::new(9)).unwrap();
        let b = mssfg(&mu, &nu, &cfg, &[7.0], &[1.0], &opt, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.value, b.value);
        assert_eq!(a.final_slicing.locations(), b.final_slicing.locations());
    }

    #[test]
    fn swapped_arguments_give_identical_values() {
        let mut rng = SeededRng::new(3);
        let mu = gaussian_cloud(20, 3, 1.0, &mut rng);
        let nu = gaussian_cloud(20, 3, 1.5, &mut rng);
        let cfg = FgwConfig::default();
        let opt = quick_opt();
        for kind in [
            DiscrepancyKind::Sfg,
            DiscrepancyKind::MaxSfg,
            DiscrepancyKind::Ssfg { kappa: 10.0 },
            DiscrepancyKind::Pssfg { kappa: 10.0 },
            DiscrepancyKind::Mssfg {
                kappas: vec![5.0, 20.0],
                alphas: vec![0.3, 0.7],
            },
        ] {
            let a = kind.compute(&mu, &nu, &cfg, &opt, &mut SeededRng::new(4)).unwrap();
            let b = kind.compute(&nu, &mu, &cfg, &opt, &mut SeededRng::new(4)).unwrap();
            assert_eq!(a, b, "{}", kind.name());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let mut rng = SeededRng::new(5);
        let mu = gaussian_cloud(16, 5, 1.0, &mut rng);
        let nu = gaussian_cloud(16, 5, 0.5, &mut rng);
        let cfg = FgwConfig::default();
        let opt = quick_opt();
        let kind = DiscrepancyKind::Mssfg {
            kappas: vec![1.0, 10.0, 100.0],
            alphas: vec![0.2, 0.3, 0.5],
        };
        let a = kind.compute(&mu, &nu, &cfg, &opt, &mut SeededRng::new(6)).unwrap();
        let b = kind.compute(&mu, &nu, &cfg, &opt, &mut SeededRng::new(6)).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.len() <= opt.max_iter);
        assert!(a.value >= 0.0);
    }

    #[test]
    fn sliced_gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(7);
        let mu = gaussian_cloud(12, 3, 1.0, &mut rng);
        let nu = gaussian_cloud(12, 3, 2.0, &mut rng);
        let obj = SlicedFgw::new(&mu, &nu, FgwConfig::default()).unwrap();
        let theta = sample_uniform_sphere(3, &mut rng).unwrap();
        let (_, g) = obj.value_and_grad(theta.as_slice()).unwrap();
        for i in 0..3 {
            let mut up = theta.as_slice().to_vec();
            let mut down = up.clone();
            up[i] += 1e-6;
            down[i] -= 1e-6;
            let fd = (obj.value(&up).unwrap() - obj.value(&down).unwrap()) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
