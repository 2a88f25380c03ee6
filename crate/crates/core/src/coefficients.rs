//! Radial power-type coefficients `σ(ξ) = ρ(|ξ|) u`, their regularizations
//! `σ_n`, the seminorm `N_{κ,σ}` and hypothesis reports.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::holder_paths::norm;
use crate::quad;
use crate::rng;

/// Scalar radial profile `ρ`.
#[derive(Clone)]
pub enum Profile {
    /// `ρ(r) = C r^κ`.
    Power { scale: f64 },
    /// `ρ(r) = C min(r^κ, cap)`.
    CappedPower { scale: f64, cap: f64 },
    /// `ρ(r) = C r^κ + L r`.
    PowerPlusLinear { scale: f64, slope: f64 },
    /// User supplied profile.
    Custom { name: String, rho: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Power { scale } => write!(f, "Power {{ scale: {scale} }}"),
            Profile::CappedPower { scale, cap } => {
                write!(f, "CappedPower {{ scale: {scale}, cap: {cap} }}")
            }
            Profile::PowerPlusLinear { scale, slope } => {
                write!(f, "PowerPlusLinear {{ scale: {scale}, slope: {slope} }}")
            }
            Profile::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Common interface of [`Coefficient`] and [`RegularizedCoefficient`].
pub trait Field: Send + Sync {
    fn kappa(&self) -> f64;
    /// Radial value `ρ(r)`.
    fn radial(&self, r: f64) -> f64;
    /// Unit output direction; its length is the output dimension `m`.
    fn direction(&self) -> &[f64];

    fn output_dim(&self) -> usize {
        self.direction().len()
    }

    /// `σ(ξ) = ρ(|ξ|) u`, written into `out`.
    fn eval_into(&self, xi: &[f64], out: &mut [f64]) {
        let v = self.radial(norm(xi));
        for (o, u) in out.iter_mut().zip(self.direction()) {
            *o = v * u;
        }
    }

    fn eval(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.eval_into(xi, &mut out);
        out
    }
}

/// A radial coefficient with exponent `κ ∈ (0,1)` and `σ(0) = 0`.
#[derive(Clone, Debug)]
pub struct Coefficient {
    kappa: f64,
    profile: Profile,
    direction: Vec<f64>,
}

impl Coefficient {
    /// `σ(ξ) = C |ξ|^κ`.
    pub fn power(scale: f64, kappa: f64) -> Result<Self> {
        Coefficient::radial(Profile::Power { scale }, kappa)
    }

    pub fn radial(profile: Profile, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return invalid(format!("kappa must lie in (0,1), got {kappa}"));
        }
        let scale = match &profile {
            Profile::Power { scale }
            | Profile::CappedPower { scale, .. }
            | Profile::PowerPlusLinear { scale, .. } => Some(*scale),
            Profile::Custom { .. } => None,
        };
        if let Some(c) = scale {
            if !(c > 0.0 && c.is_finite()) {
                return invalid(format!("scale must be positive, got {c}"));
            }
        }
        if let Profile::CappedPower { cap, .. } = profile {
            if !(cap > 0.0) {
                return invalid(format!("cap must be positive, got {cap}"));
            }
        }
        let c = Coefficient { kappa, profile, direction: vec![1.0] };
        let at_zero = c.radial(0.0);
        if at_zero != 0.0 {
            return invalid(format!("profile must vanish at 0, got ρ(0) = {at_zero}"));
        }
        Ok(c)
    }

    pub fn custom(name: &str, kappa: f64, rho: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Coefficient::radial(Profile::Custom { name: name.to_string(), rho: Arc::new(rho) }, kappa)
    }

    /// Output along the unit vector `u` (output dimension `u.len()`).
    pub fn with_direction(mut self, u: Vec<f64>) -> Result<Self> {
        let n = norm(&u);
        if u.is_empty() || (n - 1.0).abs() > 1e-12 {
            return invalid("direction must be a unit vector");
        }
        self.direction = u;
        Ok(self)
    }

    /// Parses `power C=1.0 kappa=0.5` or `radial kappa=0.5 profile=capped [C=..] [cap=..]`.
    ///
    /// Built-in profiles: `power`, `capped` (`min(r^κ, cap)`, cap 1 by default) and
    /// `power-plus-linear` (`r^κ + slope·r`, slope 1 by default).
    pub fn parse(spec: &str) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let kind = words.next().ok_or_else(|| Error::Parse("empty coefficient spec".into()))?;
        let mut scale = 1.0;
        let mut kappa = None;
        let mut profile = None;
        let mut cap = 1.0;
        let mut slope = 1.0;
        for w in words {
            let (k, v) =
                w.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{w}`")))?;
            let num = || v.parse::<f64>().map_err(|e| Error::Parse(format!("`{w}`: {e}")));
            match k {
                "C" => scale = num()?,
                "kappa" => kappa = Some(num()?),
                "cap" => cap = num()?,
                "slope" => slope = num()?,
                "profile" => profile = Some(v.to_string()),
                _ => return Err(Error::Parse(format!("unknown coefficient key `{k}`"))),
            }
        }
        let kappa = kappa.ok_or_else(|| Error::Parse("coefficient spec needs kappa=".into()))?;
        let profile = match (kind, profile.as_deref()) {
            ("power", None) | ("radial", Some("power")) => Profile::Power { scale },
            ("radial", Some("capped")) => Profile::CappedPower { scale, cap },
            ("radial", Some("power-plus-linear")) => Profile::PowerPlusLinear { scale, slope },
            ("radial", Some(other)) => {
                return Err(Error::Parse(format!("unknown built-in profile `{other}`")))
            }
            ("radial", None) => return Err(Error::Parse("radial spec needs profile=".into())),
            _ => return Err(Error::Parse(format!("unknown coefficient kind `{kind}`"))),
        };
        Coefficient::radial(profile, kappa)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `Some(C)` for the pure power `C|ξ|^κ`.
    pub fn power_scale(&self) -> Option<f64> {
        match self.profile {
            Profile::Power { scale } => Some(scale),
            _ => None,
        }
    }

    /// `N_{κ,σ}` restricted to radii in `[0, radius]`: exact for the built-in
    /// profiles, a dense radius scan for custom ones.
    pub fn nominal_seminorm(&self, radius: f64) -> f64 {
        let k = self.kappa;
        match &self.profile {
            Profile::Power { scale } | Profile::CappedPower { scale, .. } => *scale,
            Profile::PowerPlusLinear { scale, slope } => scale + slope * radius.powf(1.0 - k) / k,
            Profile::Custom { .. } => radius_scan(self, radius, 2000),
        }
    }
}

impl Field for Coefficient {
    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn radial(&self, r: f64) -> f64 {
        let k = self.kappa;
        match &self.profile {
            Profile::Power { scale } => scale * r.powf(k),
            Profile::CappedPower { scale, cap } => scale * r.powf(k).min(*cap),
            Profile::PowerPlusLinear { scale, slope } => scale * r.powf(k) + slope * r,
            Profile::Custom { rho, .. } => rho(r),
        }
    }

    fn direction(&self) -> &[f64] {
        &self.direction
    }
}

/// `σ_n`: the coefficient frozen at radius `2^{−n}` inside the ball of that radius.
#[derive(Clone, Debug)]
pub struct RegularizedCoefficient {
    base: Coefficient,
    level: u32,
    threshold: f64,
    floor_value: f64,
}

impl RegularizedCoefficient {
    pub fn base(&self) -> &Coefficient {
        &self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// The threshold radius `2^{−n}`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Field for RegularizedCoefficient {
    fn kappa(&self) -> f64 {
        self.base.kappa
    }

    fn radial(&self, r: f64) -> f64 {
        if r > self.threshold {
            self.base.radial(r)
        } else {
            self.floor_value
        }
    }

    fn direction(&self) -> &[f64] {
        &self.base.direction
    }
}

/// Builds `σ_n` with threshold `2^{−n}`.
pub fn regularize(coeff: &Coefficient, n: u32) -> RegularizedCoefficient {
    let threshold = (-(n as f64)).exp2();
    RegularizedCoefficient { floor_value: coeff.radial(threshold), base: coeff.clone(), level: n, threshold }
}

/// Sampled value of `N_{κ,σ}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SeminormEstimate {
    pub value: f64,
    /// True when `value` is the exact seminorm rather than a sampled lower bound.
    pub exact: bool,
    pub samples: usize,
    pub max_ratio_pair: (Vec<f64>, Vec<f64>),
}

/// Random pairs `(ξ₁, ξ₂)` with radii uniform in `[0, radius]` and uniform directions.
pub fn sample_pairs(dim: usize, n: usize, radius: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = rng::stream(seed, 0);
    let mut point = move || -> Vec<f64> {
        let r = radius * rng.random::<f64>();
        if dim == 1 {
            return vec![if rng.random::<bool>() { r } else { -r }];
        }
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        v.iter().map(|x| r * x / n).collect()
    };
    (0..n).map(|_| (point(), point())).collect()
}

/// `sup |σ(ξ₂) − σ(ξ₁)| / ||ξ₂|^κ − |ξ₁|^κ|` over the given pairs, ignoring equal radii.
/// Returns `None` when every pair has equal radii.
pub fn seminorm_on_pairs(field: &dyn Field, pairs: &[(Vec<f64>, Vec<f64>)]) -> Option<(f64, usize)> {
    let k = field.kappa();
    let mut best: Option<(f64, usize)> = None;
    for (idx, (a, b)) in pairs.iter().enumerate() {
        let (ra, rb) = (norm(a), norm(b));
        let den = (rb.powf(k) - ra.powf(k)).abs();
        if den == 0.0 {
            continue;
        }
        let diff: Vec<f64> = field.eval(b).iter().zip(field.eval(a)).map(|(p, q)| p - q).collect();
        let ratio = norm(&diff) / den;
        if best.map_or(true, |(v, _)| ratio > v) {
            best = Some((ratio, idx));
        }
    }
    best
}

/// Sampled lower bound of `N_{κ,σ}` on the ball of radius `radius`; exact for pure powers.
pub fn seminorm_estimate(
    coeff: &dyn Field,
    n_samples: usize,
    radius: f64,
    seed: u64,
) -> Result<SeminormEstimate> {
    if n_samples < 2 || !(radius > 0.0) {
        return invalid("need n_samples ≥ 2 and radius > 0");
    }
    let pairs = sample_pairs(coeff.output_dim(), n_samples, radius, seed);
    let (value, idx) = seminorm_on_pairs(coeff, &pairs)
        .ok_or_else(|| Error::DegenerateSampling("all sampled pairs have equal radii".into()))?;
    Ok(SeminormEstimate { value, exact: false, samples: n_samples, max_ratio_pair: pairs[idx].clone() })
}

impl Coefficient {
    /// [`seminorm_estimate`], replaced by the exact value `C` for pure powers.
    pub fn seminorm(&self, n_samples: usize, radius: f64, seed: u64) -> Result<SeminormEstimate> {
        let mut est = seminorm_estimate(self, n_samples, radius, seed)?;
        if let Some(c) = self.power_scale() {
            est.value = c;
            est.exact = true;
        }
        Ok(est)
    }
}

/// Sup of the seminorm ratio over pairs of a uniform radius grid on `[0, radius]`.
pub fn radius_scan(field: &dyn Field, radius: f64, points: usize) -> f64 {
    let k = field.kappa();
    let rs: Vec<f64> = (0..=points).map(|i| radius * i as f64 / points as f64).collect();
    let vals: Vec<f64> = rs.iter().map(|&r| field.radial(r)).collect();
    let pows: Vec<f64> = rs.iter().map(|r| r.powf(k)).collect();
    let mut best: f64 = 0.0;
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            let den = pows[j] - pows[i];
            if den > 0.0 {
                best = best.max((vals[j] - vals[i]).abs() / den);
            }
        }
    }
    best
}

/// Both sides of the interpolation inequality
/// `|σ(ξ₂)−σ(ξ₁)| ≤ κ/(κ+η) N (|ξ₂|^{−η}+|ξ₁|^{−η}) |ξ₂−ξ₁|^{κ+η}`.
pub fn lemma23_bound(coeff: &Coefficient, xi1: &[f64], xi2: &[f64], eta: f64) -> Result<(f64, f64)> {
    let k = coeff.kappa;
    if !(eta >= 0.0 && eta <= 1.0 - k) {
        return invalid(format!("eta must lie in [0, {}], got {eta}", 1.0 - k));
    }
    let (r1, r2) = (norm(xi1), norm(xi2));
    if r1 == 0.0 || r2 == 0.0 {
        return invalid("points must be non-zero");
    }
    let diff: Vec<f64> = coeff.eval(xi2).iter().zip(coeff.eval(xi1)).map(|(a, b)| a - b).collect();
    let lhs = norm(&diff);
    let dist: Vec<f64> = xi2.iter().zip(xi1).map(|(a, b)| a - b).collect();
    let n = coeff.nominal_seminorm(r1.max(r2));
    let rhs = k / (k + eta) * n * (r2.powf(-eta) + r1.powf(-eta)) * norm(&dist).powf(k + eta);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    /// `γ(1+κ) ≤ 1`.
    SuperYoung,
    /// `γ(1+κ) > 1`.
    ClassicalYoung,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SuperYoung => "super-Young",
            Regime::ClassicalYoung => "classical Young",
        })
    }
}

/// A pass/fail flag with its numeric witness.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Check {
    pub passed: bool,
    pub witness: f64,
}

/// Report of [`check_hypotheses`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HypothesisReport {
    pub regime: Regime,
    /// `γ(1+κ)`.
    pub regime_witness: f64,
    /// Witness: smallest increment of `ρ` over the sampled grid.
    pub increasing: Check,
    /// Witness: `∫₀¹ ds/ρ(s)`.
    pub inverse_integrable: Check,
    /// Witness: fitted `c` in `ρ(r) ≥ c r^κ` on the sampled grid.
    pub power_lower_bound: Check,
    /// Hölder regularity of `∇σ` away from 0 is assumed, not verified.
    pub gradient_regularity: &'static str,
}

/// Classifies the regime and checks the profile on a sampled grid.
pub fn check_hypotheses(coeff: &Coefficient, gamma: f64) -> HypothesisReport {
    let k = coeff.kappa;
    let w = gamma * (1.0 + k);
    let regime = if w <= 1.0 { Regime::SuperYoung } else { Regime::ClassicalYoung };
    // log-spaced radii from 1e-12 to 1e4
    let rs: Vec<f64> = (0..=1600).map(|i| 10f64.powf(-12.0 + i as f64 * 0.01)).collect();
    let vals: Vec<f64> = rs.iter().map(|&r| coeff.radial(r)).collect();
    let min_step = vals.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let all_finite = vals.iter().all(|v| v.is_finite());
    let integral = quad::inverse_profile_integral(&|s| coeff.radial(s), k, 1.0);
    let lower = rs.iter().zip(&vals).map(|(r, v)| v / r.powf(k)).fold(f64::INFINITY, f64::min);
    HypothesisReport {
        regime,
        regime_witness: w,
        increasing: Check { passed: all_finite && min_step >= 0.0 && vals[0] > 0.0, witness: min_step },
        inverse_integrable: Check { passed: integral.is_finite(), witness: integral },
        power_lower_bound: Check { passed: lower > 0.0 && lower.is_finite(), witness: lower },
        gradient_regularity: "assumed",
    }
}
