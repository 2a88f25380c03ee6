//! Product-integration kernels on uniform grids. All routines treat the data
//! as piecewise linear between nodes and integrate the singular kernels exactly.

use libm::tgamma;

/// `m^p` for `m = 0..=n`.
pub(crate) fn power_table(n: usize, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|m| {
            if m == 0 {
                if p > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (m as f64).powf(p)
            }
        })
        .collect()
}

/// `I^α_{0+} f` at the nodes.
pub(crate) fn rl_integral_left(f: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    let n = f.len();
    let p = power_table(n, alpha);
    let q = power_table(n, alpha + 1.0);
    let c = h.powf(alpha) / tgamma(alpha);
    let delta: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![0.0; n];
    for k in 1..n {
        let mut acc = 0.0;
        for j in 0..k {
            let m = k - j;
            let ext = f[j] + m as f64 * delta[j];
            acc += ext * (p[m] - p[m - 1]) / alpha - delta[j] * (q[m] - q[m - 1]) / (alpha + 1.0);
        }
        out[k] = c * acc;
    }
    out
}

/// Marchaud form of `D^α_{0+} f` split as `regular[k] + f_0 / (Γ(1−α) t_k^α)`.
///
/// `regular[0]` is 0, the limit of the regular part at the left end.
pub(crate) fn marchaud_left_regular(f: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    let n = f.len();
    let r = power_table(n, -alpha);
    let s = power_table(n, 1.0 - alpha);
    let c = h.powf(-alpha) / tgamma(1.0 - alpha);
    let lin = alpha / (1.0 - alpha);
    let delta: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out = vec![0.0; n];
    for k in 1..n {
        let fk = f[k];
        let mut acc = (fk - f[0]) * r[k] + lin * delta[k - 1];
        for j in 0..k - 1 {
            let m = k - j;
            let a = fk - f[j] - m as f64 * delta[j];
            acc += a * (r[m - 1] - r[m]) + lin * delta[j] * (s[m] - s[m - 1]);
        }
        out[k] = c * acc;
    }
    out
}

/// `D^α_{0+} f` at the nodes; the value at the left end is the limit
/// (0 when `f_0 = 0`, otherwise an infinity with the sign of `f_0`).
pub(crate) fn marchaud_left(f: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    let mut out = marchaud_left_regular(f, h, alpha);
    let c = h.powf(-alpha) / tgamma(1.0 - alpha);
    let f0 = f[0];
    if f0 != 0.0 {
        out[0] = f0.signum() * f64::INFINITY;
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            *o += c * f0 * (k as f64).powf(-alpha);
        }
    }
    out
}

/// Reverses, applies `op`, reverses back: turns a left operator into a right one.
pub(crate) fn mirrored(f: &[f64], op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let mut out = op(&rev);
    out.reverse();
    out
}

/// `marchaud_left` with correction weights making it exact on `t^α`, `t`,
/// `t^{1+α}` and `t²` (it is exact on constants already).
///
/// Starting weights act on `f_1 − f_0, f_2 − f_0, f_3 − f_0`: data of the form
/// `I^α f` behave like `c₀t^α + c₁t^{1+α}` near the left end, which linear
/// interpolation resolves only to `O(1)` relative accuracy in the first cells.
/// An end weight on the last second difference cancels the `h^{2−α} f''(t)` term
/// that linear interpolation leaves next to the kernel singularity.
pub(crate) fn marchaud_left_corrected(f: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
    let n = f.len();
    let mut out = marchaud_left(f, h, alpha);
    if n < 5 {
        return out;
    }
    // basis (t/h)^σ; exactness does not depend on the scaling
    let sigmas = [alpha, 1.0, 1.0 + alpha, 2.0];
    let basis: Vec<Vec<f64>> =
        sigmas.iter().map(|&sg| (0..n).map(|i| (i as f64).powf(sg)).collect()).collect();
    let approx: Vec<Vec<f64>> = basis.iter().map(|b| marchaud_left_regular(b, h, alpha)).collect();
    let coef: Vec<f64> =
        sigmas.iter().map(|&sg| tgamma(1.0 + sg) / tgamma(1.0 + sg - alpha) * h.powf(-sg)).collect();
    let df = [f[1] - f[0], f[2] - f[0], f[3] - f[0]];
    for k in 1..n.min(5) {
        // the end difference would reuse the starting nodes here
        let t = k as f64 * h;
        let a = Matrix3::from_fn(|r, c| basis[r][c + 1]);
        let r = Vector3::from_fn(|i, _| coef[i] * t.powf(sigmas[i] - alpha) - approx[i][k]);
        if let Some(w) = a.lu().solve(&r) {
            out[k] += w[0] * df[0] + w[1] * df[1] + w[2] * df[2];
        }
    }
    for k in 5..n {
        let t = k as f64 * h;
        let a = Matrix4::from_fn(|r, c| {
            let b = &basis[r];
            if c < 3 {
                b[c + 1]
            } else {
                b[k] - 2.0 * b[k - 1] + b[k - 2]
            }
        });
        let r = Vector4::from_fn(|i, _| coef[i] * t.powf(sigmas[i] - alpha) - approx[i][k]);
        let Some(w) = a.lu().solve(&r) else {
            continue;
        };
        let d2 = f[k] - 2.0 * f[k - 1] + f[k - 2];
        out[k] += w[0] * df[0] + w[1] * df[1] + w[2] * df[2] + w[3] * d2;
    }
    out
}

/// Right-derivative cusps integrated against every left-derivative cusp.
const NEAR_G: usize = 3;
/// Left-derivative cusps integrated against every right-derivative cusp.
const NEAR_F: usize = 3;

/// `(1+x)^p − 1` without cancellation.
fn pow1m(x: f64, p: f64) -> f64 {
    (p * x.ln_1p()).exp_m1()
}

/// Chord-free cusp shape `(U+m)^p` minus its chord over `[0, 1]`.
fn cusp(m: usize, p: f64, u: f64) -> f64 {
    if m == 0 {
        u.powf(p) - u
    } else {
        let m = m as f64;
        m.powf(p) * (pow1m(u / m, p) - u * pow1m(1.0 / m, p))
    }
}

/// Quadrature on `[0, 1]` for integrands with cusps at either end: each half is
/// mapped by `U = ½w³` (resp. `1 − ½w³`) and integrated by Gauss–Legendre.
struct UnitRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl UnitRule {
    fn new() -> Self {
        let (xs, ws) = crate::quad::gauss_legendre_unit(24);
        let mut nodes = Vec::with_capacity(48);
        let mut weights = Vec::with_capacity(48);
        for (w, wt) in xs.iter().zip(&ws) {
            let u = 0.5 * w * w * w;
            let jac = 1.5 * w * w * wt;
            nodes.push(u);
            weights.push(jac);
            nodes.push(1.0 - u);
            weights.push(jac);
        }
        UnitRule { nodes, weights }
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&u, w)| w * f(u)).sum()
    }
}

/// Linear convolution `out[j] = Σ_{m ≤ j} a[j−m] b[m]` for `j < a.len()`.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    use rustfft::{num_complex::Complex, FftPlanner};
    let n = a.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> =
        (0..size).map(|i| Complex::new(if i < n { a[i] } else { 0.0 }, 0.0)).collect();
    let mut fb: Vec<Complex<f64>> =
        (0..size).map(|i| Complex::new(if i < n && i < b.len() { b[i] } else { 0.0 }, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa[..n].iter().map(|c| c.re / size as f64).collect()
}

/// Unit-cell integrals of the cusp shapes, for offsets `0..n`.
struct CuspTables {
    /// `∫c_m`, `∫U c_m` for left-derivative cusps `c_m(U) = cusp(m, 1−α, U)`.
    c0: Vec<f64>,
    c1: Vec<f64>,
    /// `∫d_q`, `∫U d_q` for right-derivative cusps `d_q(U) = cusp(q, α, 1−U)`.
    d0: Vec<f64>,
    d1: Vec<f64>,
    /// `∫c_m d_q` for `q ≤ NEAR_G`, all `m`.
    cd_near_g: Vec<Vec<f64>>,
    /// `∫c_m d_q` for `m ≤ NEAR_F`, all `q`.
    cd_near_f: Vec<Vec<f64>>,
}

fn cusp_tables(n: usize, alpha: f64) -> CuspTables {
    let rule = UnitRule::new();
    let p = 1.0 - alpha;
    let c = |m: usize, u: f64| cusp(m, p, u);
    let d = |q: usize, u: f64| cusp(q, alpha, 1.0 - u);
    CuspTables {
        c0: (0..n).map(|m| rule.integrate(|u| c(m, u))).collect(),
        c1: (0..n).map(|m| rule.integrate(|u| u * c(m, u))).collect(),
        d0: (0..n).map(|q| rule.integrate(|u| d(q, u))).collect(),
        d1: (0..n).map(|q| rule.integrate(|u| u * d(q, u))).collect(),
        cd_near_g: (0..=NEAR_G)
            .map(|q| (0..n).map(|m| rule.integrate(|u| c(m, u) * d(q, u))).collect())
            .collect(),
        cd_near_f: (0..=NEAR_F)
            .map(|m| (0..n).map(|q| rule.integrate(|u| c(m, u) * d(q, u))).collect())
            .collect(),
    }
}

/// Fractional integral `∫_0^{t_K} f dg` for every `K`, i.e.
/// `−∫ D^α_{0+}f · D^{1−α}_{t_K−} g^{t_K−}`, in `O(n²)`.
///
/// For piecewise-linear data the regular part of the left derivative is, on each
/// cell, the linear interpolant of its nodal values plus the chord-free cusps
/// `(s−t_i)_+^{1−α}` born at the slope changes of `f`; the right derivative is the
/// interpolant of its nodal values plus the chord-free cusps `(t_i−s)_+^α` at the
/// slope changes of `g`. The outer integral integrates this model cell by cell,
/// dropping only products of two distant cusps. The `f_0 s^{−α}` part of the left
/// derivative is integrated exactly: it contributes `f_0 (g(t_K) − g(0))`.
///
/// Also returns `∫_0^T |D^α f · D^{1−α} g^{T−}|` (nodal trapezoid) for the last `K`.
pub(crate) fn young_path(f: &[f64], g: &[f64], h: f64, alpha: f64) -> (Vec<f64>, f64) {
    let n = f.len();
    let beta = 1.0 - alpha;
    let freg = marchaud_left_regular(f, h, alpha);
    let f0 = f[0];
    let sing = f0 / tgamma(1.0 - alpha);
    let tab = cusp_tables(n, alpha);
    let rp = power_table(n, -beta);
    let sp = power_table(n, 1.0 - beta);
    let hb = h.powf(-beta);
    let ga = 1.0 / tgamma(alpha);
    let lin = 1.0 / (1.0 - beta);

    let fs: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let gs: Vec<f64> = g.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    // left-derivative cusp amplitude born at node i (cells 0..n−1)
    let kf = h.powf(1.0 - alpha) / tgamma(2.0 - alpha);
    let kap: Vec<f64> = (0..n - 1).map(|i| kf * if i == 0 { fs[0] } else { fs[i] - fs[i - 1] }).collect();
    // right-derivative cusp amplitude at interior node i
    let kg = h.powf(alpha) / tgamma(1.0 + alpha);
    let mu: Vec<f64> =
        (0..n).map(|i| if i == 0 || i + 1 >= n { 0.0 } else { kg * (gs[i] - gs[i - 1]) }).collect();
    // all left cusps of cell j against linear / near right cusps (independent of K)
    let sc0 = convolve(&kap, &tab.c0);
    let sc1 = convolve(&kap, &tab.c1);
    let scd: Vec<Vec<f64>> = tab.cd_near_g.iter().map(|t| convolve(&kap, t)).collect();

    let mut c = vec![0.0; n];
    let mut gk = vec![0.0; n];
    let mut out = vec![0.0; n];
    // running sums over interior right cusps at offsets q > NEAR_G
    let mut rd0 = vec![0.0; n];
    let mut rd1 = vec![0.0; n];
    let mut rx = vec![[0.0; NEAR_F + 1]; n];
    let mut abs_last = 0.0;
    for k in 1..n {
        let d = g[k] - g[k - 1];
        let gkm1 = g[k - 1];
        let gkk = g[k];
        // extend C(i, k−1) to C(i, k) by the cell [t_{k−1}, t_k]
        c[k - 1] += -d * hb * lin;
        for i in 0..k - 1 {
            let m = k - i;
            let b = g[i] - gkm1 + (m - 1) as f64 * d;
            c[i] += hb * (b * (rp[m - 1] - rp[m]) / beta - d * lin * (sp[m] - sp[m - 1]));
        }
        for i in 0..k {
            gk[i] = ga * ((g[i] - gkk) * hb * rp[k - i] + beta * c[i]);
        }
        gk[k] = 0.0;
        // node k−1 turns interior: add it to the far sums of cells j with offset > NEAR_G
        if k >= 2 {
            let node = k - 1;
            let mk = mu[node];
            if mk != 0.0 {
                for j in 0..node.saturating_sub(NEAR_G + 1) {
                    let q = node - j - 1;
                    rd0[j] += mk * tab.d0[q];
                    rd1[j] += mk * tab.d1[q];
                    for (mm, r) in rx[j].iter_mut().enumerate() {
                        *r += mk * tab.cd_near_f[mm][q];
                    }
                }
            }
        }
        let mu_end = -kg * gs[k - 1];
        let mut reg = 0.0;
        for j in 0..k {
            let p0 = freg[j];
            let dp = freg[j + 1] - p0;
            let l0 = gk[j];
            let dl = gk[j + 1] - l0;
            let mut cell = p0 * l0 + 0.5 * (p0 * dl + l0 * dp) + dp * dl / 3.0;
            cell += l0 * sc0[j] + dl * sc1[j];
            // right cusps at nodes j+1+q
            let last_q = k - j - 1;
            for q in 0..=NEAR_G.min(last_q) {
                let node = j + 1 + q;
                let nu = if node == k { mu_end } else { mu[node] };
                cell += nu * (p0 * tab.d0[q] + dp * tab.d1[q] + scd[q][j]);
            }
            let near_f = NEAR_F.min(j);
            if last_q > NEAR_G {
                cell += p0 * rd0[j] + dp * rd1[j];
                for mm in 0..=near_f {
                    cell += kap[j - mm] * rx[j][mm];
                }
                cell += mu_end * (p0 * tab.d0[last_q] + dp * tab.d1[last_q]);
                for mm in 0..=near_f {
                    cell += mu_end * kap[j - mm] * tab.cd_near_f[mm][last_q];
                }
            }
            reg += cell;
        }
        out[k] = -h * reg + f0 * (gkk - g[0]);
        if k == n - 1 {
            let mut a = 0.0;
            for i in 1..k {
                let fi = freg[i] + sing * (i as f64 * h).powf(-alpha);
                a += (fi * gk[i]).abs();
            }
            abs_last = a * h;
        }
    }
    (out, abs_last)
}
