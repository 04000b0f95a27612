//! One-dimensional fused Gromov-Wasserstein between projected point clouds.
//!
//! Both clouds carry uniform weights and the same number of points, so
//! couplings are permutations. The transport cost is evaluated on the two
//! monotone couplings of the sorted supports (ascending with ascending, and
//! ascending with descending) and the smaller one is kept. For `beta = 0`
//! (Wasserstein) and `beta = 1` (Gromov-Wasserstein) with the squared ground
//! cost one of these is optimal among all permutations;
//! [`fgw_1d_bruteforce`] checks that by enumeration.

use crate::error::{Error, Result};
use crate::sphere_sampling::{dot, Direction};
use std::cmp::Ordering;

/// Largest cloud accepted by [`fgw_1d_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 8;

/// `n` points in R^d stored row-major, each with weight `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if d < 2 {
            return Err(Error::Dimension(format!("point clouds need d >= 2, got {d}")));
        }
        if data.len() != n * d {
            return Err(Error::SizeMismatch(data.len(), n * d));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("point cloud has non-finite entries".into()));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::SizeMismatch(r.len(), d));
        }
        Self::from_flat(n, d, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Each row repeated `times` times in place; the empirical measure is unchanged.
    pub fn replicate(&self, times: usize) -> Self {
        let mut data = Vec::with_capacity(self.data.len() * times);
        for row in self.rows() {
            for _ in 0..times {
                data.extend_from_slice(row);
            }
        }
        Self {
            n: self.n * times,
            d: self.d,
            data,
        }
    }
}

/// Projected values `<theta, x_i>` together with their stable ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected1D {
    values: Vec<f64>,
    order: Vec<usize>,
}

impl Projected1D {
    pub fn from_values(values: Vec<f64>) -> Self {
        // Ties broken by index: the same order as a stable sort.
        let mut keyed: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
        keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let order = keyed.into_iter().map(|(_, i)| i).collect();
        Self { values, order }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices into [`values`](Self::values) in ascending order of value.
    pub fn sort_permutation(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.values[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn project_values(cloud: &PointCloud, theta: &[f64]) -> Vec<f64> {
    cloud.rows().map(|x| dot(theta, x)).collect()
}

pub fn project(cloud: &PointCloud, theta: &Direction) -> Result<Projected1D> {
    if cloud.dim() != theta.dim() {
        return Err(Error::Dimension(format!(
            "cloud has dimension {} but direction has {}",
            cloud.dim(),
            theta.dim()
        )));
    }
    Ok(Projected1D::from_values(project_values(cloud, theta.as_slice())))
}

/// Fused weight `beta` and ground cost `|x - y|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgwConfig {
    beta: f64,
    exponent: u32,
}

impl FgwConfig {
    pub fn new(beta: f64, exponent: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0, 1], got {beta}")));
        }
        if exponent < 1 {
            return Err(Error::InvalidParameter("ground-cost exponent must be >= 1".into()));
        }
        Ok(Self { beta, exponent })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    fn ground(&self, x: f64) -> f64 {
        let a = x.abs();
        match self.exponent {
            1 => a,
            2 => a * a,
            r => a.powi(r as i32),
        }
    }
}

impl Default for FgwConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            exponent: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneCoupling {
    Ascending,
    Reversed,
}

fn check_lengths(xs: &Projected1D, ys: &Projected1D) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::SizeMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Sorted supports in a canonical argument order, so that swapping the two
/// clouds reproduces every floating-point operation. The flag records
/// whether the arguments were swapped.
fn canonical_sorted(xs: &Projected1D, ys: &Projected1D) -> (Vec<f64>, Vec<f64>, bool) {
    let a = xs.sorted();
    let b = ys.sorted();
    if lex_cmp(&b, &a) == Ordering::Less {
        (b, a, true)
    } else {
        (a, b, false)
    }
}

fn oriented(b: &[f64], coupling: MonotoneCoupling) -> Vec<f64> {
    match coupling {
        MonotoneCoupling::Ascending => b.to_vec(),
        MonotoneCoupling::Reversed => b.iter().rev().copied().collect(),
    }
}

fn centered(a: &[f64]) -> Vec<f64> {
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter().map(|x| x - mean).collect()
}

/// `sum_{i,j} (p_i - p_j)^2 (q_i - q_j)^2` expanded into moments. The cross
/// terms are summed in an order symmetric in `p` and `q`.
fn pair_moment(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len() as f64;
    let (mut s_p, mut s_q, mut s_pp, mut s_qq) = (0.0, 0.0, 0.0, 0.0);
    let (mut s_pq, mut s_ppqq, mut s_ppq, mut s_pqq) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in p.iter().zip(q) {
        let xx = x * x;
        let yy = y * y;
        s_p += x;
        s_q += y;
        s_pp += xx;
        s_qq += yy;
        s_pq += x * y;
        s_ppqq += xx * yy;
        s_ppq += xx * y;
        s_pqq += x * yy;
    }
    let cross = s_q * s_ppq + s_p * s_pqq;
    2.0 * n * s_ppqq - 4.0 * cross + 2.0 * (s_pp * s_qq) + 4.0 * (s_pq * s_pq)
}

/// `sum_{i,j} ((a_i - a_j)^2 - (c_i - c_j)^2)^2` in O(n).
fn gw_squared_fast(a: &[f64], c: &[f64]) -> f64 {
    let p = centered(a);
    let q = centered(c);
    let total = (pair_moment(&p, &p) + pair_moment(&q, &q)) - 2.0 * pair_moment(&p, &q);
    total.max(0.0)
}

fn gw_direct(a: &[f64], c: &[f64], cfg: &FgwConfig) -> f64 {
    let mut total = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let diff = cfg.ground(a[i] - a[j]) - cfg.ground(c[i] - c[j]);
            total += diff * diff;
        }
    }
    total
}

fn coupling_cost(a: &[f64], c: &[f64], cfg: &FgwConfig, fast: bool) -> f64 {
    let n = a.len() as f64;
    let beta = cfg.beta;
    let mut cost = 0.0;
    if beta < 1.0 {
        let w: f64 = a.iter().zip(c).map(|(x, y)| cfg.ground(x - y)).sum();
        cost += (1.0 - beta) * w / n;
    }
    if beta > 0.0 {
        let gw = if fast && cfg.exponent == 2 {
            gw_squared_fast(a, c)
        } else {
            gw_direct(a, c, cfg)
        };
        cost += beta * gw / (n * n);
    }
    cost
}

fn best_monotone(a: &[f64], b: &[f64], cfg: &FgwConfig, fast: bool) -> (f64, MonotoneCoupling) {
    let asc = coupling_cost(a, b, cfg, fast);
    if a.len() < 2 {
        return (asc, MonotoneCoupling::Ascending);
    }
    let rev = coupling_cost(a, &oriented(b, MonotoneCoupling::Reversed), cfg, fast);
    if rev < asc {
        (rev, MonotoneCoupling::Reversed)
    } else {
        (asc, MonotoneCoupling::Ascending)
    }
}

/// Minimum fused Gromov-Wasserstein cost over the two monotone couplings.
///
/// With `r = 2` the Gromov-Wasserstein term is evaluated in O(n) from
/// moments after sorting; other exponents use the direct double sum.
pub fn fgw_1d(xs: &Projected1D, ys: &Projected1D, cfg: &FgwConfig) -> Result<f64> {
    check_lengths(xs, ys)?;
    let (a, b, _) = canonical_sorted(xs, ys);
    Ok(best_monotone(&a, &b, cfg, true).0)
}

/// Same objective as [`fgw_1d`] with the Gromov-Wasserstein term always
/// evaluated by the O(n^2) double sum.
pub fn fgw_1d_reference(xs: &Projected1D, ys: &Projected1D, cfg: &FgwConfig) -> Result<f64> {
    check_lengths(xs, ys)?;
    let (a, b, _) = canonical_sorted(xs, ys);
    Ok(best_monotone(&a, &b, cfg, false).0)
}

/// Exact minimum over all `n!` permutation couplings. Test oracle, `n <= 8`.
pub fn fgw_1d_bruteforce(xs: &Projected1D, ys: &Projected1D, cfg: &FgwConfig) -> Result<f64> {
    check_lengths(xs, ys)?;
    let n = xs.len();
    if n > BRUTEFORCE_LIMIT {
        return Err(Error::SizeLimit {
            limit: BRUTEFORCE_LIMIT,
            got: n,
        });
    }
    let a = xs.values();
    let b = ys.values();
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |perm: &[usize]| {
        let c: Vec<f64> = perm.iter().map(|&j| b[j]).collect();
        coupling_cost(a, &c, cfg, false)
    };
    let mut best = eval(&perm);
    // Heap's algorithm.
    let mut counters = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.min(eval(&perm));
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// Gradient of the fused cost with respect to the projected values, with
/// the optimal monotone coupling held fixed. Requires `r = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FgwGradient {
    pub value: f64,
    pub grad_xs: Vec<f64>,
    pub grad_ys: Vec<f64>,
    pub coupling: MonotoneCoupling,
}

/// Sorted-space gradient of `beta/n^2 * GW + (1-beta)/n * W` for `r = 2`.
fn sorted_gradient(a: &[f64], c: &[f64], beta: f64) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let nf = n as f64;
    let mut ga = vec![0.0; n];
    let mut gc = vec![0.0; n];
    if beta < 1.0 {
        let w = 2.0 * (1.0 - beta) / nf;
        for i in 0..n {
            let g = w * (a[i] - c[i]);
            ga[i] += g;
            gc[i] -= g;
        }
    }
    if beta > 0.0 && n > 1 {
        let p = centered(a);
        let q = centered(c);
        let (mut s1p, mut s2p, mut s3p) = (0.0, 0.0, 0.0);
        let (mut s1q, mut s2q, mut s3q) = (0.0, 0.0, 0.0);
        let (mut spq, mut sppq, mut spqq) = (0.0, 0.0, 0.0);
        for (&x, &y) in p.iter().zip(&q) {
            s1p += x;
            s2p += x * x;
            s3p += x * x * x;
            s1q += y;
            s2q += y * y;
            s3q += y * y * y;
            spq += x * y;
            sppq += x * x * y;
            spqq += x * y * y;
        }
        let scale = 8.0 * beta / (nf * nf);
        for i in 0..n {
            let (x, y) = (p[i], q[i]);
            // sum_j (x - p_j)^3 and sum_j (y - q_j)^2 (x - p_j)
            let cube_p = nf * x * x * x - 3.0 * x * x * s1p + 3.0 * x * s2p - s3p;
            let mixed_p = nf * y * y * x - y * y * s1p - 2.0 * y * x * s1q + 2.0 * y * spq + x * s2q
                - spqq;
            let cube_q = nf * y * y * y - 3.0 * y * y * s1q + 3.0 * y * s2q - s3q;
            let mixed_q = nf * x * x * y - x * x * s1q - 2.0 * x * y * s1p + 2.0 * x * spq + y * s2p
                - sppq;
            ga[i] += scale * (cube_p - mixed_p);
            gc[i] += scale * (cube_q - mixed_q);
        }
    }
    (ga, gc)
}

pub fn fgw_1d_grad(xs: &Projected1D, ys: &Projected1D, cfg: &FgwConfig) -> Result<FgwGradient> {
    check_lengths(xs, ys)?;
    if cfg.exponent != 2 {
        return Err(Error::UnsupportedExponent(cfg.exponent));
    }
    let (a, b, swapped) = canonical_sorted(xs, ys);
    let (value, coupling) = best_monotone(&a, &b, cfg, true);
    let c = oriented(&b, coupling);
    let (ga, gc) = sorted_gradient(&a, &c, cfg.beta);

    let n = a.len();
    let mut gb = vec![0.0; n];
    match coupling {
        MonotoneCoupling::Ascending => gb.copy_from_slice(&gc),
        MonotoneCoupling::Reversed => {
            for (i, g) in gc.iter().enumerate() {
                gb[n - 1 - i] = *g;
            }
        }
    }
    let (first, second) = if swapped { (ys, xs) } else { (xs, ys) };
    let scatter = |sorted_grad: &[f64], p: &Projected1D| {
        let mut out = vec![0.0; n];
        for (rank, &idx) in p.sort_permutation().iter().enumerate() {
            out[idx] = sorted_grad[rank];
        }
        out
    };
    let g_first = scatter(&ga, first);
    let g_second = scatter(&gb, second);
    let (grad_xs, grad_ys) = if swapped {
        (g_second, g_first)
    } else {
        (g_first, g_second)
    };
    Ok(FgwGradient {
        value,
        grad_xs,
        grad_ys,
        coupling,
    })
}
