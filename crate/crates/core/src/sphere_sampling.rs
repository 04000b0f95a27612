//! Directions on the unit sphere S^{d-1} and the slicing distributions used
//! to draw them: uniform, von Mises-Fisher, power spherical and finite
//! mixtures of von Mises-Fisher.
//!
//! The location-family samplers all follow the same two-stage recipe. A
//! *canonical* sample `h = (w, sqrt(1 - w^2) v)` is drawn around the first
//! axis `e1`, where the scalar `w` carries the concentration and `v` is
//! uniform on S^{d-2}. The sample is then carried onto the location with the
//! Householder reflection that swaps `e1` and the location. Keeping the two
//! stages apart lets the gradient estimators in [`crate::sphere_opt`] hold
//! the canonical noise fixed while the location moves.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::rng::SeededRng;

/// Tolerance on `| ||x|| - 1 |` accepted for a [`Direction`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Proposals allowed per von Mises-Fisher draw before giving up.
pub const MAX_REJECTION_PROPOSALS: usize = 1000;

/// A unit vector in R^d, d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension(format!(
                "directions need d >= 2, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite direction".into()));
        }
        let norm = norm(&coords);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "direction has norm {norm}, expected 1"
            )));
        }
        Ok(Self(coords))
    }

    /// The `index`-th coordinate axis of R^d.
    pub fn axis(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(Error::Dimension(format!("axis {index} out of range for d = {d}")));
        }
        let mut coords = vec![0.0; d];
        coords[index] = 1.0;
        Self::new(coords)
    }

    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() <= UNIT_NORM_TOL);
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }
}

impl AsRef<[f64]> for Direction {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_concentration(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "concentration must be finite and >= 0, got {kappa}"
        )));
    }
    Ok(())
}

/// von Mises-Fisher parameters: density proportional to `exp(kappa * <location, x>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    pub location: Direction,
    pub concentration: f64,
}

impl VmfParams {
    pub fn new(location: Direction, concentration: f64) -> Result<Self> {
        check_concentration(concentration)?;
        Ok(Self {
            location,
            concentration,
        })
    }
}

/// Power spherical parameters: density proportional to `(1 + <location, x>)^kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSphericalParams {
    pub location: Direction,
    pub concentration: f64,
}

impl PowerSphericalParams {
    pub fn new(location: Direction, concentration: f64) -> Result<Self> {
        check_concentration(concentration)?;
        Ok(Self {
            location,
            concentration,
        })
    }
}

/// Finite mixture `sum_i weights[i] * vMF(location_i, kappa_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureVmfParams {
    components: Vec<VmfParams>,
    weights: Vec<f64>,
}

impl MixtureVmfParams {
    pub fn new(components: Vec<VmfParams>, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        if components.len() != weights.len() {
            return Err(Error::SizeMismatch(components.len(), weights.len()));
        }
        let d = components[0].location.dim();
        if let Some(c) = components.iter().find(|c| c.location.dim() != d) {
            return Err(Error::Dimension(format!(
                "mixture components of dimension {d} and {}",
                c.location.dim()
            )));
        }
        Ok(Self {
            components,
            weights,
        })
    }

    pub fn components(&self) -> &[VmfParams] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.components[0].location.dim()
    }
}

/// Checks a probability vector: non-empty, non-negative, summing to one.
pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter("mixture needs at least one component".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("mixture weights must be finite and >= 0".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "mixture weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Householder reflection `I - 2 u u^T` with `u = (e1 - location) / ||e1 - location||`.
///
/// It maps `e1` to `location`. When the location is `e1` itself the
/// reflection is undefined and the identity is used instead.
#[derive(Debug, Clone)]
pub struct Householder {
    unit: Option<Vec<f64>>,
}

impl Householder {
    pub fn new(location: &[f64]) -> Self {
        let mut w = location.iter().map(|x| -x).collect::<Vec<_>>();
        w[0] += 1.0;
        let len = norm(&w);
        if len < 1e-12 {
            return Self { unit: None };
        }
        w.iter_mut().for_each(|x| *x /= len);
        Self { unit: Some(w) }
    }

    pub fn is_identity(&self) -> bool {
        self.unit.is_none()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.unit {
            None => x.to_vec(),
            Some(u) => {
                let s = 2.0 * dot(u, x);
                x.iter().zip(u).map(|(xi, ui)| xi - s * ui).collect()
            }
        }
    }
}

fn standard_normal_unit(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&v);
        if len > 1e-150 {
            v.iter_mut().for_each(|x| *x /= len);
            return v;
        }
    }
}

/// `Beta(a, b)` as `X / (X + Y)` with independent `X ~ Gamma(a)`, `Y ~ Gamma(b)`.
pub fn sample_beta(a: f64, b: f64, rng: &mut SeededRng) -> Result<f64> {
    let ga = Gamma::new(a, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let gb = Gamma::new(b, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    loop {
        let x: f64 = ga.sample(rng);
        let y: f64 = gb.sample(rng);
        let s = x + y;
        if s > 0.0 {
            return Ok(x / s);
        }
    }
}

/// `(w, sqrt(1 - w^2) v)` with `v ~ U(S^{d-2})` already drawn.
fn lift(omega: f64, tangent: &[f64]) -> Vec<f64> {
    let r = (1.0 - omega * omega).max(0.0).sqrt();
    std::iter::once(omega)
        .chain(tangent.iter().map(|t| r * t))
        .collect()
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension(format!("sphere sampling needs d >= 2, got {d}")));
    }
    Ok(())
}

/// Uniform direction in S^{d-1} expressed around `e1` (no reflection needed).
pub fn canonical_uniform(d: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    check_dim(d)?;
    Ok(standard_normal_unit(d, rng))
}

/// Rejection sampler for the cosine `w = <e1, theta>` of a vMF draw.
fn vmf_cosine(d: usize, kappa: f64, rng: &mut SeededRng) -> Result<f64> {
    let dm1 = (d - 1) as f64;
    let root = (4.0 * kappa * kappa + dm1 * dm1).sqrt();
    // (-2k + root) / (d-1) written without the cancellation for large k.
    let b = dm1 / (2.0 * kappa + root);
    let a = (dm1 + 2.0 * kappa + root) / 4.0;
    let m = 4.0 * a * b / (1.0 + b) - dm1 * dm1.ln();
    let proposal_shape = 0.5 * dm1;
    for _ in 0..MAX_REJECTION_PROPOSALS {
        let psi = sample_beta(proposal_shape, proposal_shape, rng)?;
        let denom = 1.0 - (1.0 - b) * psi;
        let omega = (1.0 - (1.0 + b) * psi) / denom;
        let t = 2.0 * a * b / denom;
        let u: f64 = rng.random();
        if dm1 * t.ln() - t + m >= u.ln() {
            return Ok(omega);
        }
    }
    Err(Error::RejectionLimit(MAX_REJECTION_PROPOSALS))
}

/// vMF(e1, kappa) sample. `kappa == 0` short-circuits to the uniform sampler.
pub fn canonical_vmf(d: usize, kappa: f64, rng: &mut SeededRng) -> Result<Vec<f64>> {
    check_dim(d)?;
    check_concentration(kappa)?;
    if kappa == 0.0 {
        return canonical_uniform(d, rng);
    }
    let v = standard_normal_unit(d - 1, rng);
    let omega = vmf_cosine(d, kappa, rng)?;
    Ok(lift(omega, &v))
}

/// PS(e1, kappa) sample: `w = 2z - 1` with `z ~ Beta((d-1)/2 + kappa, (d-1)/2)`.
pub fn canonical_power_spherical(d: usize, kappa: f64, rng: &mut SeededRng) -> Result<Vec<f64>> {
    check_dim(d)?;
    check_concentration(kappa)?;
    let half = 0.5 * (d - 1) as f64;
    let z = sample_beta(half + kappa, half, rng)?;
    let v = standard_normal_unit(d - 1, rng);
    Ok(lift(2.0 * z - 1.0, &v))
}

pub fn sample_uniform_sphere(d: usize, rng: &mut SeededRng) -> Result<Direction> {
    Ok(Direction::from_unit(canonical_uniform(d, rng)?))
}

pub fn sample_vmf(params: &VmfParams, rng: &mut SeededRng) -> Result<Direction> {
    let loc = params.location.as_slice();
    let h = canonical_vmf(loc.len(), params.concentration, rng)?;
    Ok(Direction::from_unit(Householder::new(loc).apply(&h)))
}

pub fn sample_power_spherical(params: &PowerSphericalParams, rng: &mut SeededRng) -> Result<Direction> {
    let loc = params.location.as_slice();
    let h = canonical_power_spherical(loc.len(), params.concentration, rng)?;
    Ok(Direction::from_unit(Householder::new(loc).apply(&h)))
}

/// Index drawn from the categorical law `weights`. A single-component law
/// consumes no randomness.
pub fn sample_categorical(weights: &[f64], rng: &mut SeededRng) -> usize {
    if weights.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Draws a mixture component index, then a vMF sample from that component.
pub fn sample_mixture_vmf(params: &MixtureVmfParams, rng: &mut SeededRng) -> Result<(Direction, usize)> {
    let index = sample_categorical(params.weights(), rng);
    let dir = sample_vmf(&params.components()[index], rng)?;
    Ok((dir, index))
}

/// `E[<location, theta>]` for `theta ~ vMF(location, kappa)` in dimension `d`,
/// by quadrature of `w exp(kappa w) (1 - w^2)^((d-3)/2)` over `[-1, 1]`.
///
/// The integral is taken in the polar angle (`w = cos phi`), which removes
/// the endpoint singularity for `d = 2`, with breakpoints scaled to the
/// `1/sqrt(kappa)` width of the peak.
pub fn vmf_mean_resultant_oracle(kappa: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    check_concentration(kappa)?;
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let pi = std::f64::consts::PI;
    let power = (d - 2) as i32;
    // cos(phi) - 1 written as -2 sin^2(phi / 2) to avoid cancellation near 0.
    let weight = |phi: f64| {
        let h = (0.5 * phi).sin();
        (-2.0 * kappa * h * h).exp() * phi.sin().powi(power)
    };

    let mut breaks = vec![0.0];
    let width = 1.0 / kappa.sqrt();
    let mut edge = width;
    while edge < pi {
        breaks.push(edge);
        edge *= 2.0;
    }
    for j in 1..4 {
        let p = pi * j as f64 / 4.0;
        if p > breaks[breaks.len() - 1] {
            breaks.push(p);
        }
    }
    breaks.push(pi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // Tolerances are relative to the normaliser; a coarse pass gives its scale.
    let scale = quadrature::integrate(weight, &breaks, 1e-3)?.abs();
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let den = quadrature::integrate(weight, &breaks, tol)?;
    let num = quadrature::integrate(|phi| phi.cos() * weight(phi), &breaks, tol)?;
    if !(den > 0.0) {
        return Err(Error::Quadrature("vanishing normaliser".into()));
    }
    Ok(num / den)
}
