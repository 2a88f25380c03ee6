use std::ops::Range;

use super::GridPath;
use crate::error::{invalid, Result};

/// Discrete Hölder seminorm of a sampled path.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HolderEstimate {
    pub gamma: f64,
    pub norm: f64,
    pub max_lag: usize,
}

/// `max |x_{t_j} − x_{t_i}| / |t_j − t_i|^γ` over pairs with `0 < j − i ≤ max_lag`.
pub fn holder_norm(path: &GridPath, gamma: f64, max_lag: usize) -> Result<HolderEstimate> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid(format!("gamma must lie in (0,1), got {gamma}"));
    }
    if max_lag < 1 || max_lag >= path.n_points() {
        return invalid(format!("max_lag must lie in [1, {}), got {max_lag}", path.n_points()));
    }
    let norm = holder_sup_on(path, gamma, 0..path.n_points(), max_lag);
    Ok(HolderEstimate { gamma, norm, max_lag })
}

/// [`holder_norm`] over all pairs.
pub fn holder_norm_full(path: &GridPath, gamma: f64) -> Result<HolderEstimate> {
    holder_norm(path, gamma, path.n_points() - 1)
}

/// Lags scanned exhaustively before pruning starts.
const DENSE_LAGS: usize = 32;

/// Hölder quotient sup restricted to grid indices in `range` and lags `≤ max_lag`.
///
/// Exact. Lags up to 32 are scanned directly; larger lags are grouped in dyadic
/// bands and a band starting at `i` is scanned only when a bound from the
/// range of the path over the band can beat the running maximum.
pub fn holder_sup_on(path: &GridPath, gamma: f64, range: Range<usize>, max_lag: usize) -> f64 {
    let h = path.step();
    let max_lag = max_lag.min(range.len().saturating_sub(1));
    let weights: Vec<f64> =
        (0..=max_lag).map(|k| if k == 0 { 0.0 } else { (k as f64 * h).powf(-gamma) }).collect();
    let d = path.dim();
    let v = path.values();
    let scan = |i: usize, lo: usize, hi: usize, best: &mut f64| {
        if d == 1 {
            let xi = v[i];
            for j in i + lo..=i + hi {
                *best = best.max((v[j] - xi).abs() * weights[j - i]);
            }
        } else {
            for j in i + lo..=i + hi {
                *best = best.max(path.increment_norm(i, j) * weights[j - i]);
            }
        }
    };
    let mut best: f64 = 0.0;
    let dense = max_lag.min(DENSE_LAGS);
    for i in range.clone() {
        let hi = dense.min(range.end - 1 - i);
        if hi >= 1 {
            scan(i, 1, hi, &mut best);
        }
    }
    if max_lag <= DENSE_LAGS {
        return best;
    }
    let tables: Vec<RangeTable> =
        (0..d).map(|c| RangeTable::new(range.clone().map(|i| v[i * d + c]).collect())).collect();
    let mut lo = DENSE_LAGS + 1;
    while lo <= max_lag {
        let hi = (2 * lo - 1).min(max_lag);
        for i in range.clone() {
            if i + lo >= range.end {
                break;
            }
            let top = hi.min(range.end - 1 - i);
            let (a, b) = (i + lo - range.start, i + top - range.start);
            let mut sq = 0.0;
            for (c, t) in tables.iter().enumerate() {
                let (mn, mx) = t.query(a, b);
                let xi = v[i * d + c];
                let e = (mx - xi).abs().max((xi - mn).abs());
                sq += e * e;
            }
            if sq.sqrt() * weights[lo] > best {
                scan(i, lo, top, &mut best);
            }
        }
        lo = hi + 1;
    }
    best
}

/// Sparse table answering range min/max queries in `O(1)`.
struct RangeTable {
    min: Vec<Vec<f64>>,
    max: Vec<Vec<f64>>,
}

impl RangeTable {
    fn new(values: Vec<f64>) -> Self {
        let mut min = vec![values.clone()];
        let mut max = vec![values];
        let n = min[0].len();
        let mut w = 1;
        while 2 * w <= n {
            let (pm, px) = (min.last().unwrap(), max.last().unwrap());
            let nm = (0..=n - 2 * w).map(|i| pm[i].min(pm[i + w])).collect();
            let nx = (0..=n - 2 * w).map(|i| px[i].max(px[i + w])).collect();
            min.push(nm);
            max.push(nx);
            w *= 2;
        }
        RangeTable { min, max }
    }

    /// `(min, max)` over indices `a..=b`.
    fn query(&self, a: usize, b: usize) -> (f64, f64) {
        let k = (usize::BITS - 1 - (b - a + 1).leading_zeros()) as usize;
        let w = 1 << k;
        (self.min[k][a].min(self.min[k][b + 1 - w]), self.max[k][a].max(self.max[k][b + 1 - w]))
    }
}
