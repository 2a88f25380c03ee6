//! Multidimensional solves with absorption at the origin, the stopping-time
//! ladder of dyadic bands visited by `|y|`, and the regularity-gain diagnostics
//! measured along it.
//!
//! Bands: `I_{−1} = [1, ∞)`, `I_q = [2^{−q−1}, 2^{−q})` and
//! `J_{−1} = [3/4, ∞)`, `J_q = [3·2^{−q−3}, 3·2^{−q−2})` for `q ≥ 0`.
//! Starting with `|a| ∈ I_{q_0}` and `λ_0 = 0`, `τ_k` is the first exit of `|y|`
//! from `I_{q_k}`, which lands in `J_{q̂}` with `q̂ ∈ {q_k, q_k − 1}`, and
//! `λ_{k+1}` is the first exit from `J_{q̂}`, which lands in `I_{q_{k+1}}` with
//! `q_{k+1} ∈ {q̂, q̂ + 1}`.

use std::ops::Range;

use serde::Serialize;

use crate::coefficients::{regularize, Coefficient, Field, RegularizedCoefficient};
use crate::error::{invalid, Error, Result};
use crate::holder_paths::{holder_norm_full, holder_sup_on, norm, GridPath};
use crate::stats::{linear_fit, pooled_fit, LinearFit};

/// Lower band constant `b₁`.
pub const B1: f64 = 3.0 / 8.0;
/// Upper band constant `b₂` guaranteed by the construction.
pub const B2: f64 = 3.0 / 2.0;
/// The tighter upper constant `3/4`, reported for comparison only.
pub const B2_TIGHT: f64 = 3.0 / 4.0;
/// Rungs with fewer grid points are excluded from fits.
pub const MIN_RUNG_POINTS: usize = 8;
/// Extra dyadic levels between the current state and the regularization radius.
const REGULARIZATION_MARGIN: i32 = 5;

/// `q` with `r ∈ I_q`.
pub fn i_level(r: f64) -> i32 {
    if r >= 1.0 {
        return -1;
    }
    let (_, e) = libm::frexp(r);
    -e
}

/// `q` with `r ∈ J_q`.
pub fn j_level(r: f64) -> i32 {
    if r >= 0.75 {
        return -1;
    }
    let (_, e) = libm::frexp(r / 3.0);
    -e - 2
}

/// `â_q = 3·2^{−(q+2)}`.
pub fn a_hat(q: i32) -> f64 {
    3.0 * (-(q as f64) - 2.0).exp2()
}

/// One rung `[λ_k, λ_{k+1})` of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderEvent {
    pub k: usize,
    #[serde(rename = "lambda")]
    pub lambda_k: f64,
    /// Exit time from `I_{q_k}`; `None` when the path ends first.
    #[serde(rename = "tau")]
    pub tau_k: Option<f64>,
    #[serde(rename = "q")]
    pub q_k: i32,
    #[serde(skip)]
    pub lambda_index: usize,
    #[serde(skip)]
    pub tau_index: Option<usize>,
}

/// What to do when `|y|` skips a band within one grid step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderMode {
    /// Report [`Error::GridTooCoarse`].
    Strict,
    /// Stop the ladder at the unresolved step.
    #[default]
    Truncate,
}

/// Extracted ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ladder {
    pub events: Vec<LadderEvent>,
    /// One past the last grid index covered by the ladder.
    pub end_index: usize,
    pub end_time: f64,
    /// Time of the unresolved step when the ladder was truncated.
    pub truncated_at: Option<f64>,
}

impl Ladder {
    /// Grid index range `[λ_k, λ_{k+1})` of rung `k`.
    pub fn rung_range(&self, k: usize) -> Range<usize> {
        let start = self.events[k].lambda_index;
        let end = self.events.get(k + 1).map_or(self.end_index, |e| e.lambda_index);
        start..end
    }

    /// Rungs whose closing time `λ_{k+1}` is known.
    pub fn closed_rungs(&self) -> usize {
        self.events.len().saturating_sub(1)
    }
}

enum Phase {
    /// Between `λ_k` and `τ_k`, watching `I_q`.
    InI(i32),
    /// Between `τ_k` and `λ_{k+1}`, watching `J_q̂`.
    InJ(i32),
}

/// Outcome of feeding one grid point to the tracker.
enum Step {
    Stay,
    Jump(String),
}

struct Tracker {
    phase: Phase,
    events: Vec<LadderEvent>,
}

impl Tracker {
    fn new(r0: f64) -> Self {
        let q = i_level(r0);
        Tracker {
            phase: Phase::InI(q),
            events: vec![LadderEvent {
                k: 0,
                lambda_k: 0.0,
                tau_k: None,
                q_k: q,
                lambda_index: 0,
                tau_index: None,
            }],
        }
    }

    fn feed(&mut self, i: usize, t: f64, r: f64) -> Step {
        match self.phase {
            Phase::InI(q) => {
                if i_level(r) == q {
                    return Step::Stay;
                }
                let qh = j_level(r);
                if !(qh == q || (qh == q - 1 && q >= 0)) {
                    return Step::Jump(format!("|y| = {r:e} left I_{q} for J_{qh} at t = {t}"));
                }
                let last = self.events.last_mut().unwrap();
                last.tau_k = Some(t);
                last.tau_index = Some(i);
                self.phase = Phase::InJ(qh);
                Step::Stay
            }
            Phase::InJ(qh) => {
                if j_level(r) == qh {
                    return Step::Stay;
                }
                let q = i_level(r);
                if !(q == qh || q == qh + 1) {
                    return Step::Jump(format!("|y| = {r:e} left J_{qh} for I_{q} at t = {t}"));
                }
                let k = self.events.len();
                self.events.push(LadderEvent {
                    k,
                    lambda_k: t,
                    tau_k: None,
                    q_k: q,
                    lambda_index: i,
                    tau_index: None,
                });
                self.phase = Phase::InI(q);
                // the new point may already sit outside I_q's neighbour bands
                Step::Stay
            }
        }
    }
}

/// Replays the band construction on the grid values of `|y|`, up to the first
/// zero of `y` (or the end of the path).
pub fn extract_ladder(y: &GridPath, mode: LadderMode) -> Result<Ladder> {
    let n = y.n_points();
    let r0 = y.norm_at(0);
    if r0 == 0.0 {
        return invalid("the ladder needs y(0) ≠ 0");
    }
    let mut tracker = Tracker::new(r0);
    let mut end_index = n;
    let mut truncated_at = None;
    for i in 1..n {
        let r = y.norm_at(i);
        if r == 0.0 {
            end_index = i;
            break;
        }
        if let Step::Jump(msg) = tracker.feed(i, y.time(i), r) {
            match mode {
                LadderMode::Strict => return Err(Error::GridTooCoarse(msg)),
                LadderMode::Truncate => {
                    end_index = i;
                    truncated_at = Some(y.time(i));
                    break;
                }
            }
        }
    }
    let end_time = if end_index < n { y.time(end_index) } else { y.horizon() };
    Ok(Ladder { events: tracker.events, end_index, end_time, truncated_at })
}

/// Band membership summary for a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandCheck {
    /// Points on `[λ_k, λ_{k+1})` outside `[b₁, b₂]·2^{−q_k}` (upper bound waived for `q_k ≤ 1`).
    pub violations: usize,
    /// Same count with `b₂ = 3/4`.
    pub tight_violations: usize,
    /// Successive rungs whose levels differ by more than one.
    pub level_jumps: usize,
    /// Rungs with `λ_k < τ_k < λ_{k+1}` violated.
    pub order_violations: usize,
    pub points_checked: usize,
}

impl BandCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.level_jumps == 0 && self.order_violations == 0
    }
}

/// Checks the rung invariants of `ladder` against the path it came from.
pub fn verify_ladder(y: &GridPath, ladder: &Ladder) -> BandCheck {
    let mut check = BandCheck {
        violations: 0,
        tight_violations: 0,
        level_jumps: 0,
        order_violations: 0,
        points_checked: 0,
    };
    for (k, ev) in ladder.events.iter().enumerate() {
        let scale = (-(ev.q_k as f64)).exp2();
        let waived = ev.q_k <= 1;
        for i in ladder.rung_range(k) {
            let r = y.norm_at(i);
            check.points_checked += 1;
            let low = r < B1 * scale;
            if low || (!waived && r > B2 * scale) {
                check.violations += 1;
            }
            if low || (!waived && r > B2_TIGHT * scale) {
                check.tight_violations += 1;
            }
        }
        if let Some(next) = ladder.events.get(k + 1) {
            if (next.q_k - ev.q_k).abs() > 1 {
                check.level_jumps += 1;
            }
            match ev.tau_k {
                Some(t) if ev.lambda_k < t && t < next.lambda_k => {}
                _ => check.order_violations += 1,
            }
        }
    }
    check
}

/// Time-stepping rule of [`solve_multidim`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `y_{i+1} = y_i + Σ_j σ^j(y_i) δx^j`.
    #[default]
    Euler,
    /// Euler predictor `ỹ`, then `y_{i+1} = y_i + ½ Σ_j (σ^j(y_i) + σ^j(ỹ)) δx^j`.
    Heun,
}

/// Options of [`solve_multidim`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Absorption radius; `None` means `2^{−40}|a|`.
    pub absorb_threshold: Option<f64>,
    pub scheme: Scheme,
    /// Evaluate the regularized coefficients `σ_n` (the default) instead of `σ`.
    pub regularize: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { absorb_threshold: None, scheme: Scheme::Euler, regularize: true }
    }
}

/// Default absorption radius relative to `|a|`.
pub const DEFAULT_ABSORB_FACTOR: f64 = 1.0 / (1u64 << 40) as f64;

/// The two outcomes of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// No absorption on `[0, T]`.
    A,
    /// Absorbed at `τ < T`; `y = 0` from then on.
    B,
}

/// Result of [`solve_multidim`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOutput {
    #[serde(skip)]
    pub y: GridPath,
    pub case: Case,
    /// Absorption time (interpolated inside the absorbing step).
    pub tau: Option<f64>,
    /// First grid index with `y = 0`.
    #[serde(skip)]
    pub tau_index: Option<usize>,
    pub events: Vec<LadderEvent>,
    #[serde(skip)]
    pub ladder: Ladder,
    pub absorb_threshold: f64,
    /// `min_t |y_t|` before absorption, for auditing near misses.
    pub min_abs: f64,
    pub scheme: Scheme,
}

/// Per-level cache of `σ_n`.
struct RegularizedSet<'a> {
    coeffs: &'a [Coefficient],
    levels: Vec<Option<Vec<RegularizedCoefficient>>>,
}

impl<'a> RegularizedSet<'a> {
    fn get(&mut self, n: u32) -> &[RegularizedCoefficient] {
        let idx = n as usize;
        if self.levels.len() <= idx {
            self.levels.resize(idx + 1, None);
        }
        self.levels[idx].get_or_insert_with(|| self.coeffs.iter().map(|c| regularize(c, n)).collect())
    }
}

/// `Σ_j σ^j(ξ) δx^j` into `out`.
fn drift(
    set: &mut RegularizedSet,
    regularized: bool,
    xi: &[f64],
    dx: &[f64],
    out: &mut [f64],
    tmp: &mut [f64],
) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let r = norm(xi);
    if regularized {
        let n = (i_level(r) + REGULARIZATION_MARGIN).max(0) as u32;
        for (c, d) in set.get(n).iter().zip(dx) {
            c.eval_into(xi, tmp);
            out.iter_mut().zip(tmp.iter()).for_each(|(o, s)| *o += s * d);
        }
    } else {
        for (c, d) in set.coeffs.iter().zip(dx) {
            c.eval_into(xi, tmp);
            out.iter_mut().zip(tmp.iter()).for_each(|(o, s)| *o += s * d);
        }
    }
}

/// Parameter `s ∈ [0, 1]` of the point of `[p, q]` closest to the origin, and its norm.
fn closest_to_origin(p: &[f64], q: &[f64]) -> (f64, f64) {
    let mut dd = 0.0;
    let mut pd = 0.0;
    for (a, b) in p.iter().zip(q) {
        dd += (b - a) * (b - a);
        pd += a * (b - a);
    }
    let s = if dd > 0.0 { (-pd / dd).clamp(0.0, 1.0) } else { 0.0 };
    let dist = p.iter().zip(q).map(|(a, b)| (a + s * (b - a)).powi(2)).sum::<f64>().sqrt();
    (s, dist)
}

/// Left-point Young scheme for `dy = Σ_j σ^j(y) dx^j`, `y_0 = a`, absorbed at 0.
///
/// Each step evaluates `σ_n` with `2^{−n} ≤ 2^{−5}|y|`, so the clamp never acts
/// at an evaluation point. A step is absorbing when the segment between the
/// old and the new state (or the Heun predictor) passes within the absorption
/// radius of the origin; then `τ` is the time of closest approach on that step
/// and every later grid value is exactly zero.
pub fn solve_multidim(
    x: &GridPath,
    coeffs: &[Coefficient],
    a: &[f64],
    options: &SolverOptions,
) -> Result<SolverOutput> {
    let d = x.dim();
    let m = a.len();
    if coeffs.len() != d {
        return invalid(format!("{} coefficients for a {d}-dimensional driver", coeffs.len()));
    }
    if coeffs.iter().any(|c| c.output_dim() != m) {
        return invalid(format!("coefficient output dimension differs from dim a = {m}"));
    }
    let a_norm = norm(a);
    if a_norm == 0.0 || !a_norm.is_finite() {
        return invalid("the initial condition must be finite and nonzero");
    }
    let threshold = options.absorb_threshold.unwrap_or(DEFAULT_ABSORB_FACTOR * a_norm);
    if !(threshold >= 0.0) {
        return invalid("absorb_threshold must be nonnegative");
    }
    let n = x.n_points();
    let h = x.step();
    let mut set = RegularizedSet { coeffs, levels: Vec::new() };
    let mut values = vec![0.0; n * m];
    values[..m].copy_from_slice(a);
    let mut cur = a.to_vec();
    let mut next = vec![0.0; m];
    let mut pred = vec![0.0; m];
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    let mut dx = vec![0.0; d];
    let mut tau = None;
    let mut tau_index = None;
    let mut min_abs = a_norm;
    for i in 0..n - 1 {
        let (x0, x1) = (x.value(i), x.value(i + 1));
        dx.iter_mut().enumerate().for_each(|(j, v)| *v = x1[j] - x0[j]);
        drift(&mut set, options.regularize, &cur, &dx, &mut k1, &mut tmp);
        pred.iter_mut().enumerate().for_each(|(c, p)| *p = cur[c] + k1[c]);
        let mut hit = closest_to_origin(&cur, &pred);
        if hit.1 > threshold && options.scheme == Scheme::Heun {
            drift(&mut set, options.regularize, &pred, &dx, &mut k2, &mut tmp);
            next.iter_mut().enumerate().for_each(|(c, v)| *v = cur[c] + 0.5 * (k1[c] + k2[c]));
            hit = closest_to_origin(&cur, &next);
        } else {
            next.copy_from_slice(&pred);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state blew up at t = {}", x.time(i + 1))));
        }
        if hit.1 <= threshold {
            tau = Some(x.time(i) + hit.0 * h);
            tau_index = Some(i + 1);
            break;
        }
        min_abs = min_abs.min(norm(&next));
        values[(i + 1) * m..(i + 2) * m].copy_from_slice(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    let y = GridPath::new(x.horizon(), m, values)?;
    let ladder = extract_ladder(&y, LadderMode::Truncate)?;
    Ok(SolverOutput {
        case: if tau.is_some() { Case::B } else { Case::A },
        events: ladder.events.clone(),
        ladder,
        y,
        tau,
        tau_index,
        absorb_threshold: threshold,
        min_abs,
        scheme: options.scheme,
    })
}

/// Terms of `δy_{st} = σ(y_s)δx_{st} + Σ_l K^l_{st}` on grid indices `s < t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicDecomposition {
    /// `σ(y_s) δx_{st}`.
    pub main: Vec<f64>,
    /// `K^l_{st}` for `l = 0..L`, where `K^l = S_{l+1} − S_l` and `S_l` is the
    /// left-point sum on the dyadic partition with `2^l` cells.
    pub tails: Vec<Vec<f64>>,
    /// `r_{st} = δy_{st} − σ(y_s) δx_{st}`.
    pub remainder: Vec<f64>,
    /// `|δy_{st} − main − Σ_l K^l|`.
    pub truncation_gap: f64,
}

/// Dyadic decomposition of `δy` over grid indices `[s, t]`, down to `2^levels` cells.
pub fn dyadic_decomposition(
    y: &GridPath,
    x: &GridPath,
    coeffs: &[Coefficient],
    s: usize,
    t: usize,
    levels: u32,
) -> Result<DyadicDecomposition> {
    let m = y.dim();
    let d = x.dim();
    if coeffs.len() != d || y.n_points() != x.n_points() {
        return invalid("y, x and the coefficients do not match");
    }
    if !(s < t && t < y.n_points()) {
        return invalid(format!("need s < t < n, got s = {s}, t = {t}"));
    }
    let cells = 1usize << levels;
    if (t - s) % cells != 0 {
        return Err(Error::GridTooCoarse(format!(
            "{} grid cells between s and t do not split into 2^{levels} equal parts",
            t - s
        )));
    }
    let sigma_dx = |i: usize, j: usize| -> Vec<f64> {
        let mut out = vec![0.0; m];
        let (xi, xj) = (x.value(i), x.value(j));
        for (c, coeff) in coeffs.iter().enumerate() {
            let v = coeff.eval(y.value(i));
            let dxc = xj[c] - xi[c];
            out.iter_mut().zip(&v).for_each(|(o, s)| *o += s * dxc);
        }
        out
    };
    let main = sigma_dx(s, t);
    let mut tails = Vec::with_capacity(levels as usize);
    for l in 0..levels {
        // K^l pairs the left half-cells of level l+1 with their right neighbours
        let fine = (t - s) >> (l + 1);
        let mut k = vec![0.0; m];
        for i in 0..1usize << l {
            let t0 = s + 2 * i * fine;
            let t1 = t0 + fine;
            let t2 = t1 + fine;
            let left = sigma_dx(t0, t2);
            let a = sigma_dx(t0, t1);
            let b = sigma_dx(t1, t2);
            for c in 0..m {
                k[c] += a[c] + b[c] - left[c];
            }
        }
        tails.push(k);
    }
    let dy: Vec<f64> = y.value(t).iter().zip(y.value(s)).map(|(p, q)| p - q).collect();
    let remainder: Vec<f64> = dy.iter().zip(&main).map(|(a, b)| a - b).collect();
    let gap: Vec<f64> = (0..m).map(|c| remainder[c] - tails.iter().map(|k| k[c]).sum::<f64>()).collect();
    Ok(DyadicDecomposition { main, tails, remainder, truncation_gap: norm(&gap) })
}

/// Admissible exponents for the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainExponents {
    pub gamma: f64,
    pub kappa: f64,
    /// `α = (1 − κ)/γ`.
    pub alpha: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// `κ + α ε₁`.
    pub kappa_eps1: f64,
    /// `κ − (1 − γ) ε₂`.
    pub kappa_minus_eps2: f64,
    /// `κ + α ε₁ − ε₂ − ε₁ ε₂`.
    pub kappa_eps1_eps2: f64,
    /// `γ (1 + κ⁻_{ε₂}/(1 − κ))`.
    pub mu_eps2: f64,
    /// `min(α, κ/(1−γ), (κ + α ε₁)/(1 + ε₁))`, the bound on `ε₂`.
    pub eps2_bound: f64,
    pub eps2_admissible: bool,
    /// `γ + ε₁ + γκ < 1`.
    pub eps1_admissible: bool,
}

impl GainExponents {
    pub fn new(gamma: f64, kappa: f64, eps1: f64, eps2: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0 && kappa > 0.0 && kappa < 1.0) {
            return invalid("gamma and kappa must lie in (0,1)");
        }
        if !(eps1 > 0.0 && eps2 > 0.0) {
            return invalid("eps1 and eps2 must be positive");
        }
        let alpha = (1.0 - kappa) / gamma;
        let kappa_minus_eps2 = kappa - (1.0 - gamma) * eps2;
        let eps2_bound = alpha.min(kappa / (1.0 - gamma)).min((kappa + alpha * eps1) / (1.0 + eps1));
        Ok(GainExponents {
            gamma,
            kappa,
            alpha,
            eps1,
            eps2,
            kappa_eps1: kappa + alpha * eps1,
            kappa_minus_eps2,
            kappa_eps1_eps2: kappa + alpha * eps1 - eps2 - eps1 * eps2,
            mu_eps2: gamma * (1.0 + kappa_minus_eps2 / (1.0 - kappa)),
            eps2_bound,
            eps2_admissible: eps2 < eps2_bound,
            eps1_admissible: gamma + eps1 + gamma * kappa < 1.0,
        })
    }

    /// `ε₁ = (H − γ)/2` for an fBm driver with Hurst index `H > γ`.
    pub fn default_eps1(hurst: f64, gamma: f64) -> f64 {
        0.5 * (hurst - gamma)
    }
}

/// One rung's measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RungDiagnostic {
    pub k: usize,
    pub q: i32,
    pub points: usize,
    /// Local Hölder constant over pairs with `|t − s| ≤ c₀ 2^{−α q}`.
    pub holder_constant: f64,
    /// `λ_{k+1} − λ_k`, for closed rungs.
    pub gap: Option<f64>,
    /// Fewer than [`MIN_RUNG_POINTS`] points or no admissible pair.
    pub excluded: bool,
}

/// Regularity-gain diagnostics of one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainDiagnostics {
    pub exponents: GainExponents,
    /// Window constant `c₀` of the scale condition (in time units).
    pub c0: f64,
    pub rungs: Vec<RungDiagnostic>,
    pub excluded_rungs: usize,
    /// Fit of `log₂ c_k` against `q_k` (expected slope ≈ −κ).
    pub gain_fit: Option<LinearFit>,
    /// Fit of `log₂(λ_{k+1} − λ_k)` against `q_k`.
    pub gap_fit: Option<LinearFit>,
    /// Fit through the smallest gap at each level.
    pub gap_fit_low: Option<LinearFit>,
    /// Fit through the largest gap at each level.
    pub gap_fit_high: Option<LinearFit>,
    /// `min_k (λ_{k+1} − λ_k) 2^{α q_k}`.
    pub min_scaled_gap: Option<f64>,
    /// Fewer than four resolved rungs.
    pub inconclusive: bool,
}

/// Measures per-rung Hölder constants and gaps along the ladder of `output`.
pub fn gain_diagnostics(output: &SolverOutput, exponents: GainExponents, c0: f64) -> GainDiagnostics {
    let y = &output.y;
    let ladder = &output.ladder;
    let h = y.step();
    let alpha = exponents.alpha;
    let mut rungs = Vec::with_capacity(ladder.events.len());
    for (k, ev) in ladder.events.iter().enumerate() {
        let range = ladder.rung_range(k);
        let points = range.len();
        let window = c0 * (-(alpha * ev.q_k as f64)).exp2();
        let max_lag = ((window / h).floor() as usize).min(points.saturating_sub(1));
        let excluded = points < MIN_RUNG_POINTS || max_lag == 0;
        let holder_constant = if excluded { 0.0 } else { holder_sup_on(y, exponents.gamma, range, max_lag) };
        let gap = ladder.events.get(k + 1).map(|next| next.lambda_k - ev.lambda_k);
        rungs.push(RungDiagnostic { k, q: ev.q_k, points, holder_constant, gap, excluded });
    }
    let used: Vec<&RungDiagnostic> =
        rungs.iter().filter(|r| !r.excluded && r.holder_constant > 0.0).collect();
    let gain_fit = linear_fit(
        &used.iter().map(|r| r.q as f64).collect::<Vec<_>>(),
        &used.iter().map(|r| r.holder_constant.log2()).collect::<Vec<_>>(),
    );
    let gaps: Vec<(i32, f64)> =
        rungs.iter().filter(|r| !r.excluded).filter_map(|r| r.gap.map(|g| (r.q, g))).collect();
    let gap_fit = linear_fit(
        &gaps.iter().map(|g| g.0 as f64).collect::<Vec<_>>(),
        &gaps.iter().map(|g| g.1.log2()).collect::<Vec<_>>(),
    );
    let envelope = |pick: fn(f64, f64) -> f64| {
        let mut levels: Vec<(i32, f64)> = Vec::new();
        for &(q, g) in &gaps {
            match levels.iter_mut().find(|l| l.0 == q) {
                Some(l) => l.1 = pick(l.1, g),
                None => levels.push((q, g)),
            }
        }
        linear_fit(
            &levels.iter().map(|l| l.0 as f64).collect::<Vec<_>>(),
            &levels.iter().map(|l| l.1.log2()).collect::<Vec<_>>(),
        )
    };
    let min_scaled_gap =
        rungs.iter().filter_map(|r| r.gap.map(|g| g * (alpha * r.q as f64).exp2())).reduce(f64::min);
    GainDiagnostics {
        exponents,
        c0,
        excluded_rungs: rungs.iter().filter(|r| r.excluded).count(),
        inconclusive: used.len() < 4,
        rungs,
        gain_fit,
        gap_fit,
        gap_fit_low: envelope(f64::min),
        gap_fit_high: envelope(f64::max),
        min_scaled_gap,
    }
}

/// Slopes pooled over many solves, each solve keeping its own intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleFits {
    pub solves: usize,
    pub gain: Option<LinearFit>,
    pub gap: Option<LinearFit>,
}

/// Fixed-effects fits of the gain and gap exponents over an ensemble.
pub fn ensemble_fits(diagnostics: &[GainDiagnostics]) -> EnsembleFits {
    let gain: Vec<(Vec<f64>, Vec<f64>)> = diagnostics
        .iter()
        .map(|g| {
            g.rungs
                .iter()
                .filter(|r| !r.excluded && r.holder_constant > 0.0)
                .map(|r| (r.q as f64, r.holder_constant.log2()))
                .unzip()
        })
        .collect();
    let gap: Vec<(Vec<f64>, Vec<f64>)> = diagnostics
        .iter()
        .map(|g| {
            g.rungs
                .iter()
                .filter(|r| !r.excluded)
                .filter_map(|r| r.gap.map(|v| (r.q as f64, v.log2())))
                .unzip()
        })
        .collect();
    EnsembleFits { solves: diagnostics.len(), gain: pooled_fit(&gain), gap: pooled_fit(&gap) }
}

/// Discrete `‖y‖_γ` over the whole horizon, across the absorption time.
pub fn global_holder_check(output: &SolverOutput, gamma: f64) -> Result<f64> {
    Ok(holder_norm_full(&output.y, gamma)?.norm)
}
