use rand_distr::{Distribution, StandardNormal};

use super::GridPath;
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Discrete modulus of Hölder roughness at exponent `gamma_hat`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RoughnessEstimate {
    pub gamma_hat: f64,
    pub modulus: f64,
    pub scales_checked: Vec<f64>,
}

/// Default direction net: `{+1, −1}` for `d = 1`, otherwise `16 d` unit vectors
/// closed under negation.
pub fn default_directions(dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut rng = rng::stream(0x5eed_d12e, dim as u64);
    let mut dirs = Vec::with_capacity(16 * dim);
    for _ in 0..8 * dim {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        let v: Vec<f64> = v.iter().map(|x| x / n).collect();
        dirs.push(v.iter().map(|x| -x).collect());
        dirs.push(v);
    }
    dirs
}

/// `min` over base points `s`, scales `ε` and directions `φ` of
/// `max_{ε/2 < |t−s| < ε} |⟨φ, δx_{st}⟩| / ε^{γ̂}`.
pub fn roughness_modulus(
    path: &GridPath,
    gamma_hat: f64,
    scales: &[f64],
    directions: &[Vec<f64>],
) -> Result<RoughnessEstimate> {
    let d = path.dim();
    let horizon = path.horizon();
    if scales.is_empty() || directions.is_empty() {
        return invalid("scales and directions must be non-empty");
    }
    if let Some(e) = scales.iter().find(|&&e| !(e > 0.0 && e <= horizon / 2.0)) {
        return invalid(format!("scale {e} outside (0, T/2]"));
    }
    for phi in directions {
        let n: f64 = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if phi.len() != d || (n - 1.0).abs() > 1e-9 {
            return invalid("directions must be unit vectors of the path dimension");
        }
    }
    let n = path.n_points();
    let h = path.step();
    let proj: Vec<Vec<f64>> = directions
        .iter()
        .map(|phi| (0..n).map(|i| path.value(i).iter().zip(phi).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let mut modulus = f64::INFINITY;
    for &eps in scales {
        // lags k with ε/2 < k h < ε
        let lo = (0.5 * eps / h).floor() as usize + 1;
        let hi = (eps / h).ceil() as usize - 1;
        let norm = eps.powf(gamma_hat);
        for s in 0..n {
            let lags = (lo..=hi).flat_map(|k| {
                let back = s.checked_sub(k);
                let fwd = (s + k < n).then_some(s + k);
                back.into_iter().chain(fwd)
            });
            let ts: Vec<usize> = lags.collect();
            if ts.is_empty() {
                return Err(Error::GridTooCoarse(format!(
                    "no grid point at distance in ({}, {eps}) from t={}",
                    eps / 2.0,
                    path.time(s)
                )));
            }
            for p in &proj {
                let best = ts.iter().map(|&t| (p[t] - p[s]).abs()).fold(0.0, f64::max);
                modulus = modulus.min(best / norm);
            }
        }
    }
    Ok(RoughnessEstimate { gamma_hat, modulus, scales_checked: scales.to_vec() })
}
