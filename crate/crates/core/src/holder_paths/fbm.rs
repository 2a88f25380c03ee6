use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use super::GridPath;
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Largest point count for which [`FbmMethod::Auto`] uses the exact Cholesky factor.
pub const CHOLESKY_MAX_POINTS: usize = 1 << 10;

/// Hurst exponent, dimension and seed of an fBm sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HurstSpec {
    pub hurst: f64,
    pub dim: usize,
    pub seed: u64,
}

impl HurstSpec {
    /// Accepts any `H ∈ (0, 1)`; the integration theory in this crate needs `H > 1/2`,
    /// but `H = 1/2` is useful as a Brownian sanity check.
    pub fn new(hurst: f64, dim: usize, seed: u64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return invalid(format!("Hurst exponent must lie in (0,1), got {hurst}"));
        }
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(HurstSpec { hurst, dim, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmMethod {
    /// Cholesky up to [`CHOLESKY_MAX_POINTS`], circulant embedding above.
    #[default]
    Auto,
    Cholesky,
    Circulant,
}

/// Autocovariance of fractional Gaussian noise with step `h` at lag `k`.
pub fn fgn_autocovariance(hurst: f64, h: f64, k: usize) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    let lower = if k == 0.0 { 1.0 } else { (k - 1.0).powf(two_h) };
    0.5 * h.powf(two_h) * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + lower)
}

enum Factor {
    Cholesky(DMatrix<f64>),
    Circulant { scale: Vec<f64>, fft: Arc<dyn Fft<f64>> },
}

/// fBm sampler with the covariance factor computed once, for Monte-Carlo loops.
pub struct FbmGenerator {
    hurst: f64,
    n_points: usize,
    horizon: f64,
    factor: Factor,
}

impl FbmGenerator {
    pub fn new(hurst: f64, n_points: usize, horizon: f64, method: FbmMethod) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return invalid(format!("Hurst exponent must lie in (0,1), got {hurst}"));
        }
        if n_points < 2 {
            return invalid("n_points must be at least 2");
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        let n = n_points - 1;
        let h = horizon / n as f64;
        let use_cholesky = match method {
            FbmMethod::Auto => n_points <= CHOLESKY_MAX_POINTS,
            FbmMethod::Cholesky => true,
            FbmMethod::Circulant => false,
        };
        let factor = if use_cholesky {
            let acov: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, h, k)).collect();
            let cov = DMatrix::from_fn(n, n, |i, j| acov[i.abs_diff(j)]);
            let chol = cov.cholesky().ok_or_else(|| {
                Error::Factorization(format!("increment covariance not positive definite (n={n})"))
            })?;
            Factor::Cholesky(chol.unpack())
        } else {
            let m = n.next_power_of_two();
            let size = 2 * m;
            let mut row: Vec<Complex<f64>> = (0..size)
                .map(|j| {
                    let k = if j <= m { j } else { size - j };
                    Complex::new(fgn_autocovariance(hurst, h, k), 0.0)
                })
                .collect();
            let fft = FftPlanner::new().plan_fft_forward(size);
            fft.process(&mut row);
            let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
            let mut scale = Vec::with_capacity(size);
            for c in &row {
                if c.re < -1e-9 * max {
                    return Err(Error::Factorization(format!(
                        "circulant embedding has negative eigenvalue {}",
                        c.re
                    )));
                }
                scale.push((c.re.max(0.0) / size as f64).sqrt());
            }
            Factor::Circulant { scale, fft }
        };
        Ok(FbmGenerator { hurst, n_points, horizon, factor })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// Increments of one component, drawn from stream `stream` of `seed`.
    fn increments(&self, seed: u64, stream: u64) -> Vec<f64> {
        let n = self.n_points - 1;
        let mut rng = rng::stream(seed, stream);
        match &self.factor {
            Factor::Cholesky(l) => {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                (l * z).iter().copied().collect()
            }
            Factor::Circulant { scale, fft } => {
                let mut w: Vec<Complex<f64>> = scale
                    .iter()
                    .map(|s| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                w[..n].iter().map(|c| c.re).collect()
            }
        }
    }

    /// A `dim`-dimensional sample with independent components and `B_0 = 0`.
    pub fn sample(&self, dim: usize, seed: u64) -> Result<GridPath> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        let columns: Vec<Vec<f64>> = (0..dim)
            .map(|j| {
                let mut acc = 0.0;
                std::iter::once(0.0)
                    .chain(self.increments(seed, j as u64).into_iter().map(|dx| {
                        acc += dx;
                        acc
                    }))
                    .collect()
            })
            .collect();
        GridPath::from_columns(self.horizon, &columns)
    }
}

/// Samples fBm with covariance `½(t^{2H} + s^{2H} − |t−s|^{2H})` per component.
pub fn generate_fbm(spec: &HurstSpec, n_points: usize, horizon: f64) -> Result<GridPath> {
    generate_fbm_with(spec, n_points, horizon, FbmMethod::Auto)
}

pub fn generate_fbm_with(
    spec: &HurstSpec,
    n_points: usize,
    horizon: f64,
    method: FbmMethod,
) -> Result<GridPath> {
    FbmGenerator::new(spec.hurst, n_points, horizon, method)?.sample(spec.dim, spec.seed)
}
