//! Spherical sliced fused Gromov-Wasserstein discrepancies.
//!
//! Point clouds in R^d are compared through one-dimensional projections.
//! For each direction `theta` on the unit sphere both clouds are projected
//! onto `theta` and compared with the 1D fused Gromov-Wasserstein cost
//! ([`fgw1d`]), which mixes a Wasserstein term (positions) and a
//! Gromov-Wasserstein term (pairwise distances) with weight `beta`. The
//! discrepancies differ in how directions are weighted:
//!
//! | Discrepancy | Slicing distribution |
//! |-------------|----------------------|
//! | [`sfg`] | uniform on the sphere |
//! | [`max_sfg`] | single best direction |
//! | [`ssfg`] | von Mises-Fisher with optimized location |
//! | [`pssfg`] | power spherical with optimized location |
//! | [`mssfg`] | mixture of von Mises-Fisher with optimized locations |
//!
//! Randomness always comes from an explicit [`SeededRng`], so every result
//! is reproducible from its seed.

pub mod cli;
pub mod discrepancies;
pub mod error;
pub mod experiments;
pub mod fgw1d;
pub mod quadrature;
pub mod rng;
pub mod sphere_opt;
pub mod sphere_sampling;

pub use discrepancies::{
    max_sfg, mssfg, pssfg, sfg, ssfg, DiscrepancyReport, OptimizerConfig, SlicingDistribution,
};
pub use error::{Error, Result};
pub use fgw1d::{fgw_1d, fgw_1d_bruteforce, fgw_1d_grad, project, FgwConfig, PointCloud, Projected1D};
pub use rng::SeededRng;
pub use sphere_sampling::Direction;
