//! Riemann–Liouville fractional calculus on uniform grids, the fractional
//! representation of the Young integral and the extended integral `Λ(y)`.
//!
//! Sign convention: with the right derivative `D^{1−α}_{b−}` taken without the
//! `(−1)^α` factor, `∫_a^b D^α_{a+}f · D^{1−α}_{b−}g^{b−} = −∫_a^b f dg`.
//! The integral functions here return `∫ f dg`, so they carry the minus sign.

mod kernels;

use libm::tgamma;

use crate::coefficients::Field;
use crate::error::{invalid, Error, Result};
use crate::holder_paths::{holder_norm_full, norm, GridPath};

/// Exponents `(γ, κ, η, α)` constrained by
/// `(1−γ(1+κ))/γ < η < 1−κ` and `1−γ < α < γ(κ+η)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FracConfig {
    pub gamma: f64,
    pub kappa: f64,
    pub eta: f64,
    pub alpha: f64,
}

/// Open interval of admissible `η` for `(γ, κ)`.
pub fn eta_window(gamma: f64, kappa: f64) -> (f64, f64) {
    ((1.0 - gamma * (1.0 + kappa)) / gamma, 1.0 - kappa)
}

impl FracConfig {
    pub fn new(gamma: f64, kappa: f64, eta: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("kappa", kappa), ("eta", eta), ("alpha", alpha)] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0,1), got {v}"));
            }
        }
        let (lo, hi) = eta_window(gamma, kappa);
        if !(eta > lo && eta < hi) {
            return invalid(format!(
                "eta = {eta} outside the admissible window ({lo}, {hi}) for gamma = {gamma}, kappa = {kappa}"
            ));
        }
        let cfg = FracConfig { gamma, kappa, eta, alpha };
        let (alo, ahi) = cfg.alpha_window();
        if !(alpha > alo && alpha < ahi) {
            return invalid(format!("alpha = {alpha} outside ({alo}, {ahi}) = (1−γ, γ(κ+η))"));
        }
        Ok(cfg)
    }

    /// `α` at the midpoint of `(1−γ, γ(κ+η))`.
    pub fn with_default_alpha(gamma: f64, kappa: f64, eta: f64) -> Result<Self> {
        let alpha = 0.5 * ((1.0 - gamma) + gamma * (kappa + eta));
        FracConfig::new(gamma, kappa, eta, alpha)
    }

    pub fn alpha_window(&self) -> (f64, f64) {
        (1.0 - self.gamma, self.gamma * (self.kappa + self.eta))
    }

    pub fn eta_window(&self) -> (f64, f64) {
        eta_window(self.gamma, self.kappa)
    }

    /// `q = η / (γ(κ+η))`.
    pub fn q(&self) -> f64 {
        self.eta / (self.gamma * (self.kappa + self.eta))
    }
}

/// Grid values of a function on `[a, b]`, uniformly spaced.
#[derive(Debug, Clone, PartialEq)]
pub struct FracFunction {
    pub a: f64,
    pub b: f64,
    pub values: Vec<f64>,
}

impl FracFunction {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        if !(a < b) || values.len() < 2 {
            return invalid("need a < b and at least 2 values");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input values".into()));
        }
        Ok(FracFunction { a, b, values })
    }

    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return invalid("need at least 2 points");
        }
        let h = (b - a) / (n - 1) as f64;
        FracFunction::new(a, b, (0..n).map(|i| f(a + i as f64 * h)).collect())
    }

    /// Component `j` of `path` on the grid window `i0..=i1`.
    pub fn from_path(path: &GridPath, j: usize, i0: usize, i1: usize) -> Result<Self> {
        if i1 <= i0 || i1 >= path.n_points() || j >= path.dim() {
            return invalid("bad path window");
        }
        let values = (i0..=i1).map(|i| path.value(i)[j]).collect();
        FracFunction::new(path.time(i0), path.time(i1), values)
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.values.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.a + i as f64 * self.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("order must lie in (0,1), got {alpha}"));
    }
    Ok(())
}

/// `I^α_{a+} f` or `I^α_{b−} f` at the nodes.
pub fn frac_integral(f: &FracFunction, alpha: f64, side: Side) -> Result<FracFunction> {
    check_order(alpha)?;
    let h = f.step();
    let values = match side {
        Side::Left => kernels::rl_integral_left(&f.values, h, alpha),
        Side::Right => kernels::mirrored(&f.values, |v| kernels::rl_integral_left(v, h, alpha)),
    };
    Ok(FracFunction { a: f.a, b: f.b, values })
}

fn check_interior(values: &[f64], skip: usize) -> Result<()> {
    if let Some(i) = values.iter().enumerate().position(|(i, v)| i != skip && !v.is_finite()) {
        return Err(Error::NonFinite(format!("fractional derivative at node {i}")));
    }
    Ok(())
}

/// `D^α_{a+} f` at the nodes in Marchaud form.
///
/// Correction weights on the first three cells and on the last second
/// difference make the rule exact on `t^α`, `t`, `t^{1+α}` and `t²`, which covers
/// the leading terms of `I^α` of a smooth function. At `t = a` the derivative is singular unless
/// `f(a) = 0`; that node holds `0` or a signed infinity.
pub fn frac_derivative_left(f: &FracFunction, alpha: f64) -> Result<FracFunction> {
    check_order(alpha)?;
    let values = kernels::marchaud_left_corrected(&f.values, f.step(), alpha);
    check_interior(&values, 0)?;
    Ok(FracFunction { a: f.a, b: f.b, values })
}

/// `D^{1−α}_{b−} g^{b−}` at the nodes, where `g^{b−} = g − g(b)`.
pub fn frac_derivative_right_compensated(g: &FracFunction, alpha: f64) -> Result<FracFunction> {
    check_order(alpha)?;
    let gb = *g.values.last().unwrap();
    let shifted: Vec<f64> = g.values.iter().map(|v| v - gb).collect();
    let h = g.step();
    let values = kernels::mirrored(&shifted, |v| kernels::marchaud_left(v, h, 1.0 - alpha));
    check_interior(&values, usize::MAX)?;
    Ok(FracFunction { a: g.a, b: g.b, values })
}

/// Ratio above which a refinement counts as growth in the divergence test.
const GROWTH_RATIO: f64 = 1.5;

/// Declares divergence when `∫|D^α f · D^{1−α} g|` grows by more than 1.5
/// over two successive grid doublings (checked on the n/4, n/2, n grids).
fn divergence_check(f: &[f64], g: &[f64], h: f64, alpha: f64, full_abs: f64) -> Result<()> {
    let cells = f.len() - 1;
    if cells % 4 != 0 || cells < 16 {
        return Ok(());
    }
    let sub = |stride: usize| -> f64 {
        let fs: Vec<f64> = f.iter().step_by(stride).copied().collect();
        let gs: Vec<f64> = g.iter().step_by(stride).copied().collect();
        kernels::young_path(&fs, &gs, h * stride as f64, alpha).1
    };
    let a4 = sub(4);
    let a2 = sub(2);
    if a2 > GROWTH_RATIO * a4 && full_abs > GROWTH_RATIO * a2 {
        return Err(Error::NonIntegrable(format!(
            "∫|D^α f D^(1−α) g| grows under refinement: {a4:.4e}, {a2:.4e}, {full_abs:.4e}"
        )));
    }
    Ok(())
}

/// `∫_a^b f dg` through the fractional representation with order `config.alpha`.
pub fn young_integral_frac(f: &FracFunction, g: &FracFunction, config: &FracConfig) -> Result<f64> {
    if f.values.len() != g.values.len() || f.a != g.a || f.b != g.b {
        return invalid("f and g must share the grid and interval");
    }
    let h = f.step();
    let (path, abs) = kernels::young_path(&f.values, &g.values, h, config.alpha);
    let value = *path.last().unwrap();
    if !value.is_finite() {
        return Err(Error::NonFinite("fractional integral".into()));
    }
    divergence_check(&f.values, &g.values, h, config.alpha, abs)?;
    Ok(value)
}

fn sigma_columns<F: Field>(y: &GridPath, coeffs: &[F]) -> Vec<Vec<Vec<f64>>> {
    // [driver j][output c][time i]
    let n = y.n_points();
    coeffs
        .iter()
        .map(|s| {
            let m = s.output_dim();
            let mut cols = vec![vec![0.0; n]; m];
            let mut buf = vec![0.0; m];
            for i in 0..n {
                s.eval_into(y.value(i), &mut buf);
                for c in 0..m {
                    cols[c][i] = buf[c];
                }
            }
            cols
        })
        .collect()
}

fn check_shapes<F: Field>(y: &GridPath, x: &GridPath, coeffs: &[F]) -> Result<()> {
    if y.n_points() != x.n_points() || y.horizon() != x.horizon() {
        return invalid("y and x must share the grid");
    }
    if coeffs.len() != x.dim() {
        return invalid(format!(
            "need one coefficient per driver component ({}), got {}",
            x.dim(),
            coeffs.len()
        ));
    }
    if coeffs.iter().any(|c| c.output_dim() != y.dim()) {
        return invalid("coefficient output dimension must equal the dimension of y");
    }
    Ok(())
}

/// `[Λ(y)]_t = Σ_j ∫_0^t σ^j(y_s) dx^j_s` on the grid, with `Λ(y)_0 = 0`.
///
/// When `σ(y)` vanishes identically on the grid the result is exactly zero.
/// Otherwise `∫|y|^{−η}` must be finite ([`Error::CertificateFailed`] if not).
pub fn lambda_integral<F: Field>(
    y: &GridPath,
    x: &GridPath,
    coeffs: &[F],
    config: &FracConfig,
) -> Result<GridPath> {
    check_shapes(y, x, coeffs)?;
    let n = y.n_points();
    let m = y.dim();
    let sig = sigma_columns(y, coeffs);
    if sig.iter().flatten().flatten().all(|&v| v == 0.0) {
        return GridPath::new(y.horizon(), m, vec![0.0; n * m]);
    }
    let integral = inv_integrability(y, config.eta);
    if !integral.is_finite() {
        return Err(Error::CertificateFailed(format!("∫|y|^(-{}) diverges on this path", config.eta)));
    }
    let h = y.step();
    let mut out = vec![0.0; n * m];
    for (j, cols) in sig.iter().enumerate() {
        let xj = x.component(j);
        for (c, f) in cols.iter().enumerate() {
            if f.iter().all(|&v| v == 0.0) {
                continue;
            }
            let (path, abs) = kernels::young_path(f, &xj, h, config.alpha);
            divergence_check(f, &xj, h, config.alpha, abs)?;
            for i in 0..n {
                out[i * m + c] += path[i];
            }
        }
    }
    GridPath::new(y.horizon(), m, out)
}

/// `‖x‖_γ (‖σ(y)‖_∞ + N ‖y‖_γ^{κ+η} (∫|y|^{−q})^{γ(κ+η)})` with `q = η/(γ(κ+η))`.
///
/// `N` is the seminorm of the coefficients on the range of `y`.
pub fn lambda_bound(
    y: &GridPath,
    x: &GridPath,
    coeffs: &[crate::coefficients::Coefficient],
    config: &FracConfig,
) -> Result<f64> {
    check_shapes(y, x, coeffs)?;
    let g = config.gamma;
    let xn = holder_norm_full(x, g)?.norm;
    let yn = holder_norm_full(y, g)?.norm;
    let sup_y = y.sup_norm();
    let sup_sigma = (0..y.n_points())
        .flat_map(|i| coeffs.iter().map(move |c| norm(&c.eval(y.value(i)))))
        .fold(0.0, f64::max);
    let nks = coeffs.iter().map(|c| c.nominal_seminorm(sup_y)).fold(0.0, f64::max);
    let ke = config.kappa + config.eta;
    let tail = if yn == 0.0 {
        0.0
    } else {
        let integral = inv_integrability(y, config.q());
        nks * yn.powf(ke) * integral.powf(g * ke)
    };
    Ok(xn * (sup_sigma + tail))
}

/// Points used on each side of a zero when fitting the local power law, at
/// node offsets `0, 1, 3, 7, …` from the zero's cell.
const FIT_POINTS: usize = 7;

/// `∫_0^T |y_s|^{−p} ds`.
///
/// Cells away from zero are integrated exactly for the linear interpolant.
/// Around each zero `s₀` the path is modelled on either side by `c|s−s₀|^β`
/// over the cell holding the zero. One exponent `β` is fitted jointly over
/// dyadically spaced nodes on every side of every zero, up to `2^5` cells out
/// or the next sign change, so that each scale carries equal weight in the
/// log-log regression. `c` is matched at
/// the nearest node, and the model is integrated exactly. The result is `+∞` when
/// `βp ≥ 1` or when `y` vanishes on a whole cell.
pub fn inv_integrability(y: &GridPath, p: f64) -> f64 {
    let n = y.n_points();
    let h = y.step();
    let v: Vec<f64> = if y.dim() == 1 { y.values().to_vec() } else { (0..n).map(|i| y.norm_at(i)).collect() };
    let mut total = 0.0;
    let mut sides = Vec::new();
    for i in 0..n - 1 {
        let (v0, v1) = (v[i], v[i + 1]);
        let (t0, t1) = (i as f64 * h, (i + 1) as f64 * h);
        match (v0 == 0.0, v1 == 0.0) {
            (true, true) => return f64::INFINITY,
            (true, false) => sides.push(ZeroSide::collect(&v, h, i + 1, t0, true)),
            (false, true) => sides.push(ZeroSide::collect(&v, h, i, t1, false)),
            (false, false) if v0.signum() != v1.signum() => {
                let s0 = t0 + h * v0 / (v0 - v1);
                sides.push(ZeroSide::collect(&v, h, i, s0, false));
                sides.push(ZeroSide::collect(&v, h, i + 1, s0, true));
            }
            _ => total += linear_cell(v0.abs(), v1.abs(), h, p),
        }
    }
    if sides.is_empty() {
        return total;
    }
    let beta = pooled_exponent(&sides);
    if beta * p >= 1.0 {
        return f64::INFINITY;
    }
    for side in &sides {
        // c matched at the node nearest the zero
        let (d, val) = (side.log_dist[0].exp(), side.log_val[0].exp());
        let c = val / d.powf(beta);
        total += c.powf(-p) * d.powf(1.0 - beta * p) / (1.0 - beta * p);
    }
    total
}

/// Nodes on one side of a zero of `|y|`, as `(ln|s−s₀|, ln|y_s|)`.
struct ZeroSide {
    log_dist: Vec<f64>,
    log_val: Vec<f64>,
}

impl ZeroSide {
    /// Walks away from `s0` starting at node `start`, keeping the nodes at offsets
    /// `2^j − 1` until the sign changes or the grid ends.
    fn collect(v: &[f64], h: f64, start: usize, s0: f64, right: bool) -> Self {
        let sign = v[start].signum();
        let mut side =
            ZeroSide { log_dist: Vec::with_capacity(FIT_POINTS), log_val: Vec::with_capacity(FIT_POINTS) };
        let mut next_keep = 0;
        for off in 0.. {
            let k = if right {
                start + off
            } else if off <= start {
                start - off
            } else {
                break;
            };
            if k >= v.len() || v[k] == 0.0 || v[k].signum() != sign {
                break;
            }
            if off == next_keep {
                side.log_dist.push((k as f64 * h - s0).abs().ln());
                side.log_val.push(v[k].abs().ln());
                if side.log_dist.len() == FIT_POINTS {
                    break;
                }
                next_keep = 2 * next_keep + 1;
            }
        }
        side
    }
}

/// Common exponent `β` of `|y_s| ≈ c_i |s − s_i|^β` over all zeros, fitted by
/// least squares in log-log coordinates with one intercept per side.
fn pooled_exponent(sides: &[ZeroSide]) -> f64 {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for side in sides.iter().filter(|s| s.log_dist.len() > 1) {
        let m = side.log_dist.len() as f64;
        let xb = side.log_dist.iter().sum::<f64>() / m;
        let yb = side.log_val.iter().sum::<f64>() / m;
        for (x, y) in side.log_dist.iter().zip(&side.log_val) {
            sxy += (x - xb) * (y - yb);
            sxx += (x - xb) * (x - xb);
        }
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        1.0
    }
}

/// `∫` over one cell of `|linear|^{−p}` between positive end values.
fn linear_cell(a: f64, b: f64, h: f64, p: f64) -> f64 {
    let d = b - a;
    if d.abs() <= 1e-12 * a.max(b) {
        return h * (0.5 * (a + b)).powf(-p);
    }
    if p == 1.0 {
        h * (b / a).ln() / d
    } else {
        h * (b.powf(1.0 - p) - a.powf(1.0 - p)) / ((1.0 - p) * d)
    }
}

/// `Γ` re-exported for tests and examples.
pub fn gamma_fn(x: f64) -> f64 {
    tgamma(x)
}
