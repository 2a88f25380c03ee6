//! One-dimensional exact solutions through the Lamperti map
//! `φ(ξ) = ∫_0^ξ ds/σ(s)` and its regularized variant `φ_n`.
//!
//! `σ` is extended evenly to `ℝ₋` (it is radial), so `φ` and `φ_n` are odd.

use crate::coefficients::{Coefficient, Field};
use crate::error::{invalid, Error, Result};
use crate::frac_calc::{eta_window, inv_integrability, lambda_integral, FracConfig};
use crate::holder_paths::GridPath;
use crate::quad;

/// Knot exponents of the quadrature table used for non-power profiles.
const KNOT_MIN: i32 = -60;
const KNOT_MAX: i32 = 60;

#[derive(Debug, Clone)]
enum Kind {
    Power {
        scale: f64,
    },
    /// `φ(2^k)` for `k = KNOT_MIN..=KNOT_MAX`.
    Table(Vec<f64>),
}

/// `φ` (or `φ_n` when a level is set) for a one-dimensional coefficient.
#[derive(Debug, Clone)]
pub struct LampertiMap {
    coeff: Coefficient,
    level: Option<u32>,
    kind: Kind,
    /// `(2^{−n}, σ(2^{−n}), φ(2^{−n}))` when regularized.
    clamp: Option<(f64, f64, f64)>,
}

impl LampertiMap {
    /// Unregularized `φ`; fails when `1/σ` is not integrable near 0.
    pub fn new(coeff: &Coefficient) -> Result<Self> {
        if coeff.output_dim() != 1 {
            return invalid("the Lamperti map needs a one-dimensional coefficient");
        }
        let kind = match coeff.power_scale() {
            Some(scale) => Kind::Power { scale },
            None => {
                let k = coeff.kappa();
                let rho = |s: f64| coeff.radial(s);
                let mut table = Vec::with_capacity((KNOT_MAX - KNOT_MIN + 1) as usize);
                let mut acc = quad::inverse_profile_integral(&rho, k, (KNOT_MIN as f64).exp2());
                table.push(acc);
                for e in KNOT_MIN..KNOT_MAX {
                    let (lo, hi) = ((e as f64).exp2(), ((e + 1) as f64).exp2());
                    acc += quad::adaptive_simpson(&|s| 1.0 / rho(s), lo, hi, 1e-14 * acc.max(1e-300));
                    table.push(acc);
                }
                if table.iter().any(|v| !v.is_finite()) || !(table[0] >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "1/σ is not integrable near 0 (or σ vanishes away from 0)".into(),
                    ));
                }
                Kind::Table(table)
            }
        };
        Ok(LampertiMap { coeff: coeff.clone(), level: None, kind, clamp: None })
    }

    /// `φ_n`, built from `σ_n` with threshold `2^{−n}`.
    pub fn regularized(coeff: &Coefficient, n: u32) -> Result<Self> {
        let mut map = LampertiMap::new(coeff)?;
        let t = (-(n as f64)).exp2();
        map.clamp = Some((t, coeff.radial(t), map.phi_base(t)));
        map.level = Some(n);
        Ok(map)
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coeff
    }

    pub fn level(&self) -> Option<u32> {
        self.level
    }

    /// True when `φ` and `φ⁻¹` are evaluated in closed form.
    pub fn closed_form(&self) -> bool {
        matches!(self.kind, Kind::Power { .. })
    }

    /// Unregularized `φ(r)` for `r ≥ 0`.
    fn phi_base(&self, r: f64) -> f64 {
        let k = self.coeff.kappa();
        match &self.kind {
            Kind::Power { scale } => r.powf(1.0 - k) / (scale * (1.0 - k)),
            Kind::Table(table) => {
                if r == 0.0 {
                    return 0.0;
                }
                let rho = |s: f64| self.coeff.radial(s);
                let e = r.log2().floor() as i32;
                if e < KNOT_MIN {
                    return quad::inverse_profile_integral(&rho, k, r);
                }
                let e = e.min(KNOT_MAX);
                let lo = (e as f64).exp2();
                let base = table[(e - KNOT_MIN) as usize];
                base + quad::adaptive_simpson(&|s| 1.0 / rho(s), lo, r, 1e-14 * base)
            }
        }
    }

    /// Inverse of [`Self::phi_base`] for `v ≥ 0`.
    fn phi_base_inv(&self, v: f64) -> f64 {
        let k = self.coeff.kappa();
        match &self.kind {
            Kind::Power { scale } => (scale * (1.0 - k) * v).powf(1.0 / (1.0 - k)),
            Kind::Table(_) => bisect(|r| self.phi_base(r), v),
        }
    }

    /// `φ(ξ)` or `φ_n(ξ)`.
    pub fn phi(&self, xi: f64) -> f64 {
        let r = xi.abs();
        let v = match self.clamp {
            None => self.phi_base(r),
            Some((t, st, pt)) => {
                if r <= t {
                    r / st
                } else {
                    t / st + self.phi_base(r) - pt
                }
            }
        };
        v.copysign(xi)
    }

    /// `φ⁻¹(v)` or `φ_n⁻¹(v)`.
    pub fn phi_inverse(&self, v: f64) -> f64 {
        let w = v.abs();
        let r = match self.clamp {
            None => self.phi_base_inv(w),
            Some((t, st, pt)) => {
                if w <= t / st {
                    w * st
                } else {
                    self.phi_base_inv(w - t / st + pt)
                }
            }
        };
        if v == 0.0 {
            0.0
        } else {
            r.copysign(v)
        }
    }
}

/// Root of the increasing `f` on `[0, ∞)` with `f(0) = 0`, to relative accuracy `10⁻¹³` in `f`.
fn bisect(f: impl Fn(f64) -> f64, v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let tol = 1e-13 * v.abs();
    let mut hi = 1.0;
    while f(hi) < v {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if (fm - v).abs() <= tol {
            return mid;
        }
        if fm < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn check_driver(x: &GridPath) -> Result<()> {
    if x.dim() != 1 {
        return invalid("the Lamperti solution needs a one-dimensional driver");
    }
    if x.value(0)[0] != 0.0 {
        return invalid(format!("driver must start at 0, got {}", x.value(0)[0]));
    }
    Ok(())
}

/// `y_t = φ⁻¹(x_t + φ(a))` on the grid of `x`.
pub fn solve_lamperti(x: &GridPath, map: &LampertiMap, a: f64) -> Result<GridPath> {
    check_driver(x)?;
    let shift = map.phi(a);
    let mut values = x.map(|v| map.phi_inverse(v + shift)).into_values();
    values[0] = a;
    GridPath::new(x.horizon(), 1, values)
}

/// `y^n_t = φ_n⁻¹(x_t)`, the solution of the equation with `σ_n` started at 0.
pub fn solve_regularized(x: &GridPath, coeff: &Coefficient, n: u32) -> Result<GridPath> {
    let map = LampertiMap::regularized(coeff, n)?;
    solve_lamperti(x, &map, 0.0)
}

/// Integrability certificate for a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Certificate {
    pub eta: f64,
    /// `∫_0^T |y|^{−η}`, possibly infinite.
    pub integral_value: f64,
    pub admissible_eta_window: (f64, f64),
    pub eta_in_window: bool,
    pub passed: bool,
}

/// Checks `∫|y|^{−η} < ∞` and `η` inside `((1−γ(1+κ))/γ, 1−κ)`.
pub fn certify(y: &GridPath, gamma: f64, kappa: f64, eta: f64) -> Certificate {
    let window = eta_window(gamma, kappa);
    let integral_value = inv_integrability(y, eta);
    let eta_in_window = eta > window.0 && eta < window.1;
    Certificate {
        eta,
        integral_value,
        admissible_eta_window: window,
        eta_in_window,
        passed: eta_in_window && integral_value.is_finite(),
    }
}

/// [`certify`] with the exponents of a validated configuration.
pub fn certify_config(y: &GridPath, config: &FracConfig) -> Certificate {
    certify(y, config.gamma, config.kappa, config.eta)
}

/// `max_t |y_t − a − Λ(y)_t|`.
pub fn fixed_point_residual(
    y: &GridPath,
    x: &GridPath,
    coeff: &Coefficient,
    a: f64,
    config: &FracConfig,
) -> Result<f64> {
    let lam = lambda_integral(y, x, std::slice::from_ref(coeff), config)?;
    Ok((0..y.n_points()).map(|i| (y.value(i)[0] - a - lam.value(i)[0]).abs()).fold(0.0, f64::max))
}
