//! Riemann sums for `∫ σ(y) dx`, the cell-averaged integrands `z^n`, convergence
//! tables, and partitions refined around an absorption time.
//!
//! Integrands are stacked per driver: for drivers `x^1..x^d` and an output of
//! dimension `m`, a grid function has `m·d` columns, block `j` holding `σ^j(y)`.

use std::io::Write;

use serde::Serialize;

use crate::coefficients::{Coefficient, Field};
use crate::error::{invalid, Error, Result};
use crate::frac_calc::FracConfig;
use crate::holder_paths::{holder_norm_full, GridPath};

/// Relative tolerance for deciding that a partition node sits on a grid point.
const GRID_SNAP: f64 = 1e-9;

/// How a partition was built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionKind {
    Uniform,
    /// Refined so that the last node before `tau` lies in `[tau − 2η, tau − η]`.
    TauAware {
        tau: f64,
        epsilon: f64,
        eta: f64,
        j_star: usize,
    },
}

/// Nodes `a = t_1 < ... < t_n = b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    nodes: Vec<f64>,
    kind: PartitionKind,
}

impl Partition {
    /// `n` equally spaced nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(a < b) {
            return invalid(format!("uniform partition needs n ≥ 2 and a < b (n = {n})"));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        nodes[n - 1] = b;
        Self::with_kind(nodes, PartitionKind::Uniform)
    }

    fn with_kind(nodes: Vec<f64>, kind: PartitionKind) -> Result<Self> {
        let p = Partition { nodes, kind };
        p.validate()?;
        Ok(p)
    }

    /// Checks monotonicity, the uniform mesh formula and the τ-window.
    pub fn validate(&self) -> Result<()> {
        let t = &self.nodes;
        if t.len() < 2 || t.iter().any(|v| !v.is_finite()) {
            return invalid("a partition needs at least two finite nodes");
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("partition nodes must be strictly increasing");
        }
        match self.kind {
            PartitionKind::Uniform => {
                if !self.is_uniform() {
                    return invalid("uniform partition with unequal steps");
                }
            }
            PartitionKind::TauAware { tau, eta, j_star, .. } => {
                if j_star + 1 >= t.len() || !(t[j_star] < tau && tau <= t[j_star + 1]) {
                    return invalid(format!("node {j_star} does not precede tau = {tau}"));
                }
                let gap = tau - t[j_star];
                let slack = 1e-12 * (1.0 + tau.abs());
                if gap < eta - slack || gap > 2.0 * eta + slack {
                    return invalid(format!("gap {gap:e} outside [{eta:e}, {:e}]", 2.0 * eta));
                }
            }
        }
        Ok(())
    }

    fn is_uniform(&self) -> bool {
        let mesh = self.mesh();
        let tol = 1e-9 * mesh;
        self.nodes.windows(2).all(|w| ((w[1] - w[0]) - mesh).abs() <= tol)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `|Π|`, the largest step; `(b − a)/(n − 1)` for uniform partitions.
    pub fn mesh(&self) -> f64 {
        match self.kind {
            PartitionKind::Uniform => (self.end() - self.start()) / (self.len() - 1) as f64,
            PartitionKind::TauAware { .. } => self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
        }
    }
}

/// Result of a Riemann sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiemannSum {
    /// `Σ_i f(t_i) δx_{t_i t_{i+1}}`, one entry per output component.
    pub value: Vec<f64>,
    /// Nodes that fell between grid points and were linearly interpolated.
    pub interpolated_nodes: usize,
}

/// Grid index of `t` if it sits on a grid point.
fn grid_index(path: &GridPath, t: f64) -> Option<usize> {
    let pos = t / path.step();
    let i = pos.round();
    ((pos - i).abs() <= GRID_SNAP && i >= 0.0 && (i as usize) < path.n_points()).then_some(i as usize)
}

fn sample(path: &GridPath, t: f64) -> Vec<f64> {
    match grid_index(path, t) {
        Some(i) => path.value(i).to_vec(),
        None => path.interpolate(t),
    }
}

/// Left-point sum `Σ_i f(t_i) δx_{t_i t_{i+1}}`.
///
/// `f` has `m·d` columns for a `d`-dimensional driver `x` on the same grid.
pub fn riemann_sum(f: &GridPath, x: &GridPath, pi: &Partition) -> Result<RiemannSum> {
    let d = x.dim();
    if f.n_points() != x.n_points() || f.horizon() != x.horizon() {
        return invalid("integrand and driver must share the grid");
    }
    if f.dim() % d != 0 {
        return invalid(format!("integrand has {} columns, not a multiple of {d}", f.dim()));
    }
    if pi.start() < -GRID_SNAP || pi.end() > x.horizon() * (1.0 + GRID_SNAP) {
        return invalid("partition leaves the grid horizon");
    }
    let m = f.dim() / d;
    let mut value = vec![0.0; m];
    let mut x_prev = sample(x, pi.start());
    for w in pi.nodes().windows(2) {
        let fv = sample(f, w[0]);
        let x_next = sample(x, w[1]);
        for j in 0..d {
            let dx = x_next[j] - x_prev[j];
            for c in 0..m {
                value[c] += fv[j * m + c] * dx;
            }
        }
        x_prev = x_next;
    }
    let interpolated_nodes = pi.nodes().iter().filter(|&&t| grid_index(x, t).is_none()).count();
    Ok(RiemannSum { value, interpolated_nodes })
}

/// `σ(y)` stacked per driver: column block `j` holds `σ^j(y)`.
pub fn integrand_path<F: Field>(y: &GridPath, coeffs: &[F]) -> Result<GridPath> {
    if coeffs.is_empty() {
        return invalid("at least one coefficient is required");
    }
    let m = coeffs[0].output_dim();
    if coeffs.iter().any(|c| c.output_dim() != m) {
        return invalid("coefficients disagree on the output dimension");
    }
    let width = m * coeffs.len();
    let mut values = Vec::with_capacity(y.n_points() * width);
    for i in 0..y.n_points() {
        for c in coeffs {
            values.extend(c.eval(y.value(i)));
        }
    }
    GridPath::new(y.horizon(), width, values)
}

/// Fine-grid index of every node of a uniform partition.
fn aligned_indices(y: &GridPath, pi: &Partition) -> Result<Vec<usize>> {
    if pi.kind() != PartitionKind::Uniform {
        return invalid("averaged integrands need a uniform partition");
    }
    let cells = pi.len() - 1;
    let fine = y.n_points() - 1;
    if fine < cells || fine % cells != 0 {
        return Err(Error::GridTooCoarse(format!(
            "fine grid with {fine} cells cannot carry a partition with {cells} cells"
        )));
    }
    if (pi.start()).abs() > GRID_SNAP * y.horizon()
        || (pi.end() - y.horizon()).abs() > GRID_SNAP * y.horizon()
    {
        return invalid("averaged integrands need a partition of the whole horizon");
    }
    let stride = fine / cells;
    Ok((0..=cells).map(|i| i * stride).collect())
}

/// Cell averages `(1/|Π|) ∫_{t_{i−1}}^{t_i} σ(y_r) dr` by the trapezoid rule on the fine grid.
fn cell_averages(sigma: &GridPath, idx: &[usize]) -> Vec<Vec<f64>> {
    let w = sigma.dim();
    idx.windows(2)
        .map(|c| {
            let len = (c[1] - c[0]) as f64;
            let mut acc = vec![0.0; w];
            for k in c[0]..c[1] {
                let (a, b) = (sigma.value(k), sigma.value(k + 1));
                for (s, (p, q)) in acc.iter_mut().zip(a.iter().zip(b)) {
                    *s += 0.5 * (p + q);
                }
            }
            acc.iter().map(|s| s / len).collect()
        })
        .collect()
}

/// The step function `z^n` on the fine grid of `y`.
///
/// Inside a cell `z^n` is the cell average of `σ(y)`. A partition node itself
/// carries the average of the cell it opens (the last node that of the last
/// cell), so that left-point sums of `z^n` reproduce [`averaged_riemann_integral`].
pub fn averaged_integrand<F: Field>(y: &GridPath, coeffs: &[F], pi: &Partition) -> Result<GridPath> {
    let idx = aligned_indices(y, pi)?;
    let sigma = integrand_path(y, coeffs)?;
    let avg = cell_averages(&sigma, &idx);
    Ok(step_function(&sigma, &idx, &avg))
}

fn step_function(sigma: &GridPath, idx: &[usize], avg: &[Vec<f64>]) -> GridPath {
    let w = sigma.dim();
    let n = sigma.n_points();
    let mut values = vec![0.0; n * w];
    for (cell, c) in idx.windows(2).enumerate() {
        for k in c[0]..c[1] {
            values[k * w..(k + 1) * w].copy_from_slice(&avg[cell]);
        }
    }
    values[(n - 1) * w..].copy_from_slice(avg.last().unwrap());
    GridPath::new(sigma.horizon(), w, values).expect("shape fixed by construction")
}

/// `Σ_i (1/|Π|)(∫_{t_{i−1}}^{t_i} σ(y_s) ds) δx_{t_{i−1} t_i}`.
pub fn averaged_riemann_integral<F: Field>(
    y: &GridPath,
    x: &GridPath,
    coeffs: &[F],
    pi: &Partition,
) -> Result<Vec<f64>> {
    let z = averaged_integrand(y, coeffs, pi)?;
    Ok(riemann_sum(&z, x, pi)?.value)
}

/// Where a convergence table's reference value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    LampertiClosedForm,
    LambdaIntegral,
    Supplied,
}

/// Reference value of `∫_0^T σ(y) dx` for a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    pub kind: ReferenceKind,
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Number of partition nodes.
    pub n: usize,
    pub mesh: f64,
    pub value: f64,
    pub abs_error: f64,
    /// `sup_s |σ(y_s) − z^n_s|` over the fine grid.
    pub sup_integrand_error: f64,
    /// `N_{κ,σ} ‖y‖_γ^κ |Π_n|^{κγ}`.
    pub lemma27_bound: f64,
}

/// Convergence of `∫ z^n dx` towards a reference value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub reference: Reference,
    pub gamma: f64,
    pub holder_norm_y: f64,
    pub seminorm: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Finest grid multiple over the coarsest partition accepted by [`convergence_study`].
pub const MIN_FINE_FACTOR: usize = 8;

/// Rows of `∫ z^n dx` for each partition size in `ns` (node counts), against
/// `reference`. The integrand must be scalar (1-D `y`, one 1-D driver).
pub fn convergence_study(
    y: &GridPath,
    x: &GridPath,
    coeff: &Coefficient,
    config: &FracConfig,
    ns: &[usize],
    reference: Reference,
) -> Result<ConvergenceTable> {
    if y.dim() != 1 || x.dim() != 1 || coeff.output_dim() != 1 {
        return invalid("convergence studies take a scalar equation");
    }
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("partition sizes must be strictly increasing");
    }
    let fine = y.n_points() - 1;
    if fine < MIN_FINE_FACTOR * (ns[0] - 1) {
        return Err(Error::GridTooCoarse(format!(
            "fine grid has {fine} cells; need at least {MIN_FINE_FACTOR}× the {} cells of the coarsest partition",
            ns[0] - 1
        )));
    }
    let gamma = config.gamma;
    let yn = holder_norm_full(y, gamma)?.norm;
    let seminorm = coeff.nominal_seminorm(y.sup_norm());
    let coeffs = std::slice::from_ref(coeff);
    let sigma = integrand_path(y, coeffs)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let pi = Partition::uniform(0.0, y.horizon(), n)?;
        let idx = aligned_indices(y, &pi)?;
        let avg = cell_averages(&sigma, &idx);
        let z = step_function(&sigma, &idx, &avg);
        let value = riemann_sum(&z, x, &pi)?.value[0];
        // sup over the closure of each cell, so both cells meet at a node
        let mut sup: f64 = 0.0;
        for (cell, c) in idx.windows(2).enumerate() {
            for k in c[0]..=c[1] {
                sup = sup.max((sigma.value(k)[0] - avg[cell][0]).abs());
            }
        }
        let mesh = pi.mesh();
        rows.push(ConvergenceRow {
            n,
            mesh,
            value,
            abs_error: (value - reference.value).abs(),
            sup_integrand_error: sup,
            lemma27_bound: seminorm * yn.powf(coeff.kappa()) * mesh.powf(coeff.kappa() * gamma),
        });
    }
    Ok(ConvergenceTable { reference, gamma, holder_norm_y: yn, seminorm, rows })
}

impl ConvergenceTable {
    /// CSV with columns `n,mesh,value,abs_error,sup_integrand_err,lemma27_bound`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,mesh,value,abs_error,sup_integrand_err,lemma27_bound")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?}",
                r.n, r.mesh, r.value, r.abs_error, r.sup_integrand_error, r.lemma27_bound
            )?;
        }
        Ok(())
    }

    /// Every row satisfies `sup_integrand_error ≤ lemma27_bound`.
    pub fn lemma27_holds(&self) -> bool {
        self.rows.iter().all(|r| r.sup_integrand_error <= r.lemma27_bound)
    }

    /// The last three rows have strictly decreasing errors.
    pub fn tail_decreasing(&self) -> bool {
        let k = self.rows.len();
        k >= 3 && self.rows[k - 3..].windows(2).all(|w| w[1].abs_error < w[0].abs_error)
    }
}

/// Half-width `η` of the window `[τ − 2η, τ − η]` for the last node before `τ`.
///
/// Chosen so that `‖y‖_γ (2η)^γ ≤ ε/3`, i.e. `η = c_x ε^{1/γ}` with
/// `c_x = (3 · 2^γ ‖y‖_γ)^{−1/γ}`.
pub fn tau_window(epsilon: f64, gamma: f64, holder_norm_y: f64) -> f64 {
    ((epsilon / 3.0) / (2f64.powf(gamma) * holder_norm_y)).powf(1.0 / gamma)
}

/// Uniform partition of `[a, b]` with `base_n` nodes, with the nodes in
/// `(τ − 2η, τ)` replaced by one node at `τ − 3η/2`.
pub fn tau_aware_partition(
    a: f64,
    b: f64,
    tau: f64,
    epsilon: f64,
    gamma: f64,
    holder_norm_y: f64,
    base_n: usize,
) -> Result<Partition> {
    if !(a < tau && tau <= b) {
        return invalid(format!("tau = {tau} must lie in ({a}, {b}]"));
    }
    if !(epsilon > 0.0 && gamma > 0.0 && gamma < 1.0 && holder_norm_y > 0.0) {
        return invalid("epsilon, gamma and the Hölder norm must be positive (gamma < 1)");
    }
    let eta = tau_window(epsilon, gamma, holder_norm_y);
    if tau - 2.0 * eta <= a {
        return invalid(format!(
            "epsilon = {epsilon} gives a window 2η = {:e} reaching past a = {a}",
            2.0 * eta
        ));
    }
    let base = Partition::uniform(a, b, base_n)?;
    let node = tau - 1.5 * eta;
    let mut nodes: Vec<f64> = base.nodes().iter().copied().filter(|&t| t <= tau - 2.0 * eta).collect();
    let j_star = nodes.len();
    nodes.push(node);
    nodes.extend(base.nodes().iter().copied().filter(|&t| t >= tau));
    Partition::with_kind(nodes, PartitionKind::TauAware { tau, epsilon, eta, j_star })
}
