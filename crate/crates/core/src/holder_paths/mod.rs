//! Sampled driving signals: the [`GridPath`] container, fractional Brownian
//! motion sampling, discrete Hölder norms and the roughness modulus.

mod fbm;
mod grid_path;
mod holder;
mod roughness;

pub use fbm::{
    fgn_autocovariance, generate_fbm, generate_fbm_with, FbmGenerator, FbmMethod, HurstSpec,
    CHOLESKY_MAX_POINTS,
};
pub(crate) use grid_path::norm;
pub use grid_path::GridPath;
pub use holder::{holder_norm, holder_norm_full, holder_sup_on, HolderEstimate};
pub use roughness::{default_directions, roughness_modulus, RoughnessEstimate};
