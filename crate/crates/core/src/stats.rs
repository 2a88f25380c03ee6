/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual.
    pub residual: f64,
    pub points: usize,
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Some(LinearFit { slope, intercept, residual: (ss / n as f64).sqrt(), points: n })
}

/// Common slope over several groups, each with its own intercept (fixed effects).
///
/// The reported intercept is the point-weighted mean of the group intercepts.
pub(crate) fn pooled_fit(groups: &[(Vec<f64>, Vec<f64>)]) -> Option<LinearFit> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut means = Vec::with_capacity(groups.len());
    for (xs, ys) in groups.iter().filter(|(xs, _)| xs.len() > 1) {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        for (x, y) in xs.iter().zip(ys) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        means.push((mx, my, xs.len()));
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let points: usize = means.iter().map(|m| m.2).sum();
    let intercept =
        means.iter().map(|&(mx, my, k)| (my - slope * mx) * k as f64).sum::<f64>() / points as f64;
    let mut ss = 0.0;
    for ((xs, ys), &(mx, my, _)) in groups.iter().filter(|(xs, _)| xs.len() > 1).zip(&means) {
        for (x, y) in xs.iter().zip(ys) {
            ss += (y - my - slope * (x - mx)).powi(2);
        }
    }
    Some(LinearFit { slope, intercept, residual: (ss / points as f64).sqrt(), points })
}
