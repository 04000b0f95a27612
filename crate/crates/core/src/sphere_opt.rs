//! First-order optimization on the unit sphere: projection, tangent spaces,
//! Adam, and Monte Carlo gradients of `eps -> E_{theta ~ q(eps)} f(theta)`
//! for location families `q(eps)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sphere_sampling::{
    canonical_power_spherical, canonical_uniform, canonical_vmf, dot, norm, Direction, Householder,
};
use crate::rng::SeededRng;

/// Step used by the central finite-difference gradient.
pub const FD_STEP: f64 = 1e-4;

pub fn project_to_sphere(v: &[f64]) -> Result<Direction> {
    let len = norm(v);
    if !(len > 1e-12) || !len.is_finite() {
        return Err(Error::Projection(len));
    }
    if (len - 1.0).abs() <= 2.0 * f64::EPSILON {
        return Direction::new(v.to_vec());
    }
    Direction::new(v.iter().map(|x| x / len).collect())
}

/// Removes the component of `g` along the unit vector `eps`.
pub fn tangent_project(eps: &[f64], g: &[f64]) -> Vec<f64> {
    let radial = dot(eps, g);
    g.iter().zip(eps).map(|(gi, ei)| gi - radial * ei).collect()
}

/// Orthonormal basis of the tangent space at `eps`: the images of
/// `e_2, ..., e_d` under the reflection that carries `e_1` to `eps`.
pub fn tangent_basis(eps: &Direction) -> Vec<Vec<f64>> {
    let d = eps.dim();
    let h = Householder::new(eps.as_slice());
    (1..d)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            h.apply(&e)
        })
        .collect()
}

/// Adam moments and hyper-parameters for one optimized vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub learning_rate: f64,
    pub epsilon_stability: f64,
}

impl AdamState {
    pub fn new(dim: usize, learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
            beta1,
            beta2,
            learning_rate,
            epsilon_stability: 1e-8,
        }
    }

    /// One bias-corrected Adam update. `ascend` adds the step instead of
    /// subtracting it.
    pub fn step(&self, gradient: &[f64], current: &[f64], ascend: bool) -> Result<(Vec<f64>, AdamState)> {
        let dim = self.first_moment.len();
        if gradient.len() != dim {
            return Err(Error::SizeMismatch(gradient.len(), dim));
        }
        if current.len() != dim {
            return Err(Error::SizeMismatch(current.len(), dim));
        }
        let mut next = self.clone();
        next.step_count += 1;
        let t = next.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let sign = if ascend { 1.0 } else { -1.0 };
        let mut updated = Vec::with_capacity(dim);
        for i in 0..dim {
            let g = gradient[i];
            let m = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            let v = self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            next.first_moment[i] = m;
            next.second_moment[i] = v;
            let m_hat = m / c1;
            let v_hat = v / c2;
            updated.push(current[i] + sign * self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon_stability));
        }
        Ok((updated, next))
    }
}

pub fn adam_step(
    state: &AdamState,
    gradient: &[f64],
    current: &[f64],
    ascend: bool,
) -> Result<(Vec<f64>, AdamState)> {
    state.step(gradient, current, ascend)
}

/// A real function of a direction together with its Euclidean gradient.
pub trait SliceObjective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> Result<f64>;

    fn value_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// Location family whose samples are `T(h, eps)` for canonical noise `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectionalKernel {
    Uniform,
    Vmf { kappa: f64 },
    PowerSpherical { kappa: f64 },
}

impl DirectionalKernel {
    pub fn sample_canonical(&self, d: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
        match *self {
            DirectionalKernel::Uniform => canonical_uniform(d, rng),
            DirectionalKernel::Vmf { kappa } => canonical_vmf(d, kappa, rng),
            DirectionalKernel::PowerSpherical { kappa } => canonical_power_spherical(d, kappa, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMethod {
    Pathwise,
    FiniteDifference,
}

/// Ambient gradient in `eps` of `<g, U(eps) h>` where `U(eps)` is the
/// reflection through `w = e1 - eps`. Zero when the reflection degenerates.
pub fn householder_pullback(eps: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = eps.iter().map(|x| -x).collect();
    w[0] += 1.0;
    let s = dot(&w, &w);
    if s.sqrt() < 1e-12 {
        return vec![0.0; eps.len()];
    }
    let p = dot(&w, h);
    let gw = dot(g, &w);
    (0..eps.len())
        .map(|i| 2.0 * (g[i] * p / s + gw * h[i] / s - 2.0 * gw * p * w[i] / (s * s)))
        .collect()
}

/// Per-sample objective values at `eps` and the *sum* of ambient gradients
/// over the given canonical samples.
pub(crate) fn gradient_sum<O: SliceObjective + ?Sized>(
    objective: &O,
    eps: &Direction,
    canonical: &[Vec<f64>],
    method: GradientMethod,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = eps.dim();
    let reflect = Householder::new(eps.as_slice());
    match method {
        GradientMethod::Pathwise => {
            let parts: Vec<(f64, Vec<f64>)> = canonical
                .par_iter()
                .map(|h| {
                    let theta = reflect.apply(h);
                    let (f, g) = objective.value_and_grad(&theta)?;
                    Ok((f, householder_pullback(eps.as_slice(), h, &g)))
                })
                .collect::<Result<_>>()?;
            let mut sum = vec![0.0; d];
            let mut values = Vec::with_capacity(parts.len());
            for (f, g) in parts {
                values.push(f);
                sum.iter_mut().zip(&g).for_each(|(s, gi)| *s += gi);
            }
            Ok((values, sum))
        }
        GradientMethod::FiniteDifference => {
            let eval = |loc: &Direction| -> Result<Vec<f64>> {
                let reflect = Householder::new(loc.as_slice());
                canonical
                    .par_iter()
                    .map(|h| objective.value(&reflect.apply(h)))
                    .collect()
            };
            let total = |vals: Vec<f64>| vals.iter().sum::<f64>();
            let values = eval(eps)?;
            let mut sum = vec![0.0; d];
            for t in tangent_basis(eps) {
                let plus: Vec<f64> = eps.as_slice().iter().zip(&t).map(|(e, ti)| e + FD_STEP * ti).collect();
                let minus: Vec<f64> = eps.as_slice().iter().zip(&t).map(|(e, ti)| e - FD_STEP * ti).collect();
                let up = total(eval(&project_to_sphere(&plus)?)?);
                let down = total(eval(&project_to_sphere(&minus)?)?);
                let slope = (up - down) / (2.0 * FD_STEP);
                sum.iter_mut().zip(&t).for_each(|(s, ti)| *s += slope * ti);
            }
            Ok((values, sum))
        }
    }
}

/// Monte Carlo estimate at `eps` from fixed canonical noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationEstimate {
    /// Mean objective over the samples.
    pub value: f64,
    /// Tangent-space gradient of the mean objective in `eps`.
    pub gradient: Vec<f64>,
    pub samples: Vec<f64>,
}

pub fn location_estimate<O: SliceObjective + ?Sized>(
    objective: &O,
    eps: &Direction,
    canonical: &[Vec<f64>],
    method: GradientMethod,
) -> Result<LocationEstimate> {
    if canonical.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let (samples, sum) = gradient_sum(objective, eps, canonical, method)?;
    let count = canonical.len() as f64;
    let value = samples.iter().sum::<f64>() / count;
    let gradient = tangent_project(eps.as_slice(), &sum)
        .into_iter()
        .map(|g| g / count)
        .collect();
    Ok(LocationEstimate {
        value,
        gradient,
        samples,
    })
}

/// Gradient in `eps` of `E_{theta ~ kernel(eps)} objective(theta)` from
/// `num_samples` draws.
pub fn estimate_location_gradient<O: SliceObjective + ?Sized>(
    objective: &O,
    eps: &Direction,
    kernel: DirectionalKernel,
    num_samples: usize,
    method: GradientMethod,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if num_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if objective.dim() != eps.dim() {
        return Err(Error::Dimension(format!(
            "objective has dimension {} but location has {}",
            objective.dim(),
            eps.dim()
        )));
    }
    let canonical = (0..num_samples)
        .map(|_| kernel.sample_canonical(eps.dim(), rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(location_estimate(objective, eps, &canonical, method)?.gradient)
}
