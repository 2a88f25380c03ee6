use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;

use young_power::coefficients::{Coefficient, Field};
use young_power::frac_calc::{eta_window, FracConfig};
use young_power::holder_paths::{
    default_directions, generate_fbm_with, roughness_modulus, FbmMethod, GridPath, HurstSpec,
};
use young_power::ladder::{
    ensemble_fits, gain_diagnostics, global_holder_check, solve_multidim, verify_ladder, Case,
    GainDiagnostics, GainExponents, Scheme, SolverOptions, SolverOutput, DEFAULT_ABSORB_FACTOR,
};
use young_power::lamperti::{certify, fixed_point_residual, solve_lamperti, LampertiMap};
use young_power::riemann::{convergence_study, Reference, ReferenceKind};
use young_power::Error;

use crate::config::{parse_sizes, ConfigError, ConfigResult, Reader};
use crate::output::{render_json_doc, write_atomic, Cell, Format, Provenance, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    FbmGen,
    Lamperti,
    Converge,
    Multidim,
    LadderDiag,
    Roughness,
    Certify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FbmGen => "fbm-gen",
            Command::Lamperti => "lamperti",
            Command::Converge => "converge",
            Command::Multidim => "multidim",
            Command::LadderDiag => "ladder-diag",
            Command::Roughness => "roughness",
            Command::Certify => "certify",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        [
            Command::FbmGen,
            Command::Lamperti,
            Command::Converge,
            Command::Multidim,
            Command::LadderDiag,
            Command::Roughness,
            Command::Certify,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

/// Settings shared by every command.
pub struct Env {
    pub out_dir: PathBuf,
    pub format: Format,
    pub seeds: Vec<u64>,
    pub prov: Provenance,
}

impl Env {
    fn write_table(&self, stem: &str, table: &Table, prov: &Provenance) -> Result<PathBuf> {
        let name = format!("{stem}.{}", self.format.extension());
        write_atomic(&self.out_dir, &name, &table.render(prov, self.format)?)
    }

    fn write_json(&self, name: &str, prov: &Provenance, body: serde_json::Value) -> Result<PathBuf> {
        write_atomic(&self.out_dir, name, &render_json_doc(prov, body)?)
    }

    fn path_file(&self, stem: &str) -> String {
        format!("{stem}.{}", self.format.extension())
    }
}

/// Keys understood by some command; anything else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "seed",
    "seeds",
    "driver",
    "hurst",
    "dim",
    "n_points",
    "horizon",
    "fbm_method",
    "slope",
    "driver_path",
    "coefficient",
    "a",
    "gamma",
    "kappa",
    "eta",
    "alpha",
    "eps1",
    "eps2",
    "ns",
    "fine_points",
    "absorb_threshold",
    "scheme",
    "regularize",
    "c0",
    "gamma_hat",
    "scales",
    "residual",
    "path",
];

fn bad<T>(key: &str, msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError::Value { key: key.into(), msg: msg.into() })
}

fn lib_value<T>(key: &str, r: young_power::Result<T>) -> ConfigResult<T> {
    r.or_else(|e| bad(key, e.to_string()))
}

#[derive(Debug, Clone)]
enum DriverKind {
    Fbm { hurst: f64, dim: usize, method: FbmMethod },
    Linear { slope: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone)]
struct Driver {
    kind: DriverKind,
    n_points: usize,
    horizon: f64,
}

impl Driver {
    fn read(r: &mut Reader, default_points: usize) -> ConfigResult<Driver> {
        let kind = r.string_or("driver", "fbm");
        let points = r.string_or("n_points", &default_points.to_string());
        let n_points = match parse_sizes(&points) {
            Ok(v) if v.len() == 1 && v[0] >= 2 => v[0],
            Ok(_) => return bad("n_points", "expected one grid size of at least 2 points"),
            Err(msg) => return bad("n_points", msg),
        };
        let horizon: f64 = r.or("horizon", 1.0)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return bad("horizon", "must be positive");
        }
        let kind = match kind.as_str() {
            "fbm" => {
                let hurst: f64 = r.or("hurst", 0.6)?;
                if !(hurst > 0.0 && hurst < 1.0) {
                    return bad("hurst", format!("must lie in (0,1), got {hurst}"));
                }
                let dim: usize = r.or("dim", 1)?;
                if dim == 0 {
                    return bad("dim", "must be at least 1");
                }
                let method = match r.string_or("fbm_method", "auto").as_str() {
                    "auto" => FbmMethod::Auto,
                    "cholesky" => FbmMethod::Cholesky,
                    "circulant" => FbmMethod::Circulant,
                    other => {
                        return bad("fbm_method", format!("expected auto|cholesky|circulant, got `{other}`"))
                    }
                };
                DriverKind::Fbm { hurst, dim, method }
            }
            "linear" => DriverKind::Linear { slope: r.or("slope", 1.0)? },
            "file" => match r.string("driver_path") {
                Some(p) => DriverKind::File(PathBuf::from(p)),
                None => return bad("driver_path", "required when driver = file"),
            },
            other => return bad("driver", format!("expected fbm|linear|file, got `{other}`")),
        };
        Ok(Driver { kind, n_points, horizon })
    }

    fn hurst(&self) -> Option<f64> {
        match self.kind {
            DriverKind::Fbm { hurst, .. } => Some(hurst),
            _ => None,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self.kind {
            DriverKind::Fbm { dim, .. } => Some(dim),
            DriverKind::Linear { .. } => Some(1),
            DriverKind::File(_) => None,
        }
    }

    fn sample(&self, seed: u64) -> Result<GridPath> {
        self.sample_on(seed, self.n_points)
    }

    fn sample_on(&self, seed: u64, n_points: usize) -> Result<GridPath> {
        Ok(match &self.kind {
            DriverKind::Fbm { hurst, dim, method } => {
                generate_fbm_with(&HurstSpec::new(*hurst, *dim, seed)?, n_points, self.horizon, *method)?
            }
            DriverKind::Linear { slope } => GridPath::from_fn(self.horizon, n_points, |t| slope * t)?,
            DriverKind::File(p) => read_path(p)?,
        })
    }

    /// Default Hölder exponent: `H − 0.05` for fBm, `0.9` otherwise.
    fn default_gamma(&self) -> f64 {
        self.hurst().map_or(0.9, |h| h - 0.05)
    }
}

fn read_path(p: &Path) -> Result<GridPath> {
    let file = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
    let reader = std::io::BufReader::new(file);
    let path = if p.extension().is_some_and(|e| e == "bin") {
        GridPath::read_binary(reader)?
    } else {
        GridPath::read_csv(reader)?
    };
    Ok(path)
}

/// The last component of `path`, so solver outputs `t,x1,y1` can be certified directly.
fn last_column(path: GridPath) -> Result<GridPath> {
    if path.dim() == 1 {
        return Ok(path);
    }
    let col = path.component(path.dim() - 1);
    Ok(GridPath::new(path.horizon(), 1, col)?)
}

/// `power(C, κ)` shorthand or the library's spec syntax.
pub fn parse_coefficient(s: &str) -> young_power::Result<Coefficient> {
    let t = s.trim();
    if let Some(args) = t.strip_prefix("power(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if let [c, k] = parts[..] {
            let num = |v: &str| v.parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}")));
            return Coefficient::power(num(c)?, num(k)?);
        }
        return Err(Error::Parse(format!("expected power(C, kappa), got `{t}`")));
    }
    Coefficient::parse(t)
}

fn read_coefficient(r: &mut Reader) -> ConfigResult<Coefficient> {
    let spec = r.string_or("coefficient", "power(1, 0.5)");
    lib_value("coefficient", parse_coefficient(&spec))
}

/// `γ`, `η` (default: window midpoint) and `α` (default: window midpoint), validated.
fn read_frac_config(r: &mut Reader, kappa: f64, default_gamma: f64) -> ConfigResult<FracConfig> {
    let gamma: f64 = r.or("gamma", default_gamma)?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return bad("gamma", format!("must lie in (0,1), got {gamma}"));
    }
    let (lo, hi) = eta_window(gamma, kappa);
    let eta: f64 = r.or("eta", 0.5 * (lo.max(0.0) + hi))?;
    let config = match r.parsed::<f64>("alpha")? {
        Some(alpha) => lib_value("alpha", FracConfig::new(gamma, kappa, eta, alpha))?,
        None => lib_value("eta", FracConfig::with_default_alpha(gamma, kappa, eta))?,
    };
    r.materialize("alpha", config.alpha);
    Ok(config)
}

fn scalar_a(r: &mut Reader, default: f64) -> ConfigResult<f64> {
    match r.vector("a")? {
        None => {
            r.materialize("a", default);
            Ok(default)
        }
        Some(v) if v.len() == 1 => Ok(v[0]),
        Some(_) => bad("a", "this command takes a scalar initial condition"),
    }
}

fn run_seeds<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

fn path_table(x: &GridPath, y: Option<&GridPath>) -> Table {
    let mut cols = vec![("t".to_string(), "time".to_string())];
    for j in 1..=x.dim() {
        cols.push((format!("x{j}"), format!("driver component {j}")));
    }
    if let Some(y) = y {
        for j in 1..=y.dim() {
            cols.push((format!("y{j}"), format!("solution component {j}")));
        }
    }
    let mut table = Table::with_columns(cols);
    for i in 0..x.n_points() {
        let mut row: Vec<Cell> = vec![x.time(i).into()];
        row.extend(x.value(i).iter().map(|&v| Cell::from(v)));
        if let Some(y) = y {
            row.extend(y.value(i).iter().map(|&v| Cell::from(v)));
        }
        table.push(row);
    }
    table
}

pub type Job = Box<dyn FnOnce(&Env) -> Result<()> + Send>;

/// Reads every parameter of `command` and returns the job that runs it.
pub fn plan(command: Command, r: &mut Reader) -> ConfigResult<Job> {
    match command {
        Command::FbmGen => plan_fbm_gen(r),
        Command::Lamperti => plan_lamperti(r),
        Command::Converge => plan_converge(r),
        Command::Multidim => plan_multidim(r, false),
        Command::LadderDiag => plan_multidim(r, true),
        Command::Roughness => plan_roughness(r),
        Command::Certify => plan_certify(r),
    }
}

fn plan_fbm_gen(r: &mut Reader) -> ConfigResult<Job> {
    let driver = Driver::read(r, 4097)?;
    if driver.hurst().is_none() {
        return bad("driver", "fbm-gen generates fBm only");
    }
    Ok(Box::new(move |env: &Env| {
        run_seeds(&env.seeds, |seed| {
            let x = driver.sample(seed)?;
            env.write_table(&format!("fbm_seed{seed}"), &path_table(&x, None), &env.prov.with_seed(seed))?;
            Ok(())
        })?;
        Ok(())
    }))
}

fn plan_lamperti(r: &mut Reader) -> ConfigResult<Job> {
    let driver = Driver::read(r, 4097)?;
    if driver.dim().is_some_and(|d| d != 1) {
        return bad("dim", "the Lamperti solution needs a one-dimensional driver");
    }
    let coeff = read_coefficient(r)?;
    let map = lib_value("coefficient", LampertiMap::new(&coeff))?;
    let a = scalar_a(r, 0.0)?;
    let config = read_frac_config(r, coeff.kappa(), driver.default_gamma())?;
    let residual: bool = r.or("residual", false)?;
    Ok(Box::new(move |env: &Env| {
        let rows = run_seeds(&env.seeds, |seed| {
            let x = driver.sample(seed)?;
            let y = solve_lamperti(&x, &map, a)?;
            let cert = certify(&y, config.gamma, config.kappa, config.eta);
            let res = if residual { Some(fixed_point_residual(&y, &x, &coeff, a, &config)?) } else { None };
            env.write_table(
                &format!("lamperti_seed{seed}"),
                &path_table(&x, Some(&y)),
                &env.prov.with_seed(seed),
            )?;
            let n = y.n_points();
            Ok(vec![
                Cell::from(seed),
                y.value(n - 1)[0].into(),
                y.sup_norm().into(),
                cert.integral_value.into(),
                cert.passed.into(),
                res.into(),
            ])
        })?;
        let mut table = Table::new(&[
            ("seed", "RNG seed of the driver"),
            ("y_T", "solution value at the horizon"),
            ("max_abs_y", "max over grid points of |y|"),
            ("inv_integral", "∫|y|^(−η) dt (inf when divergent)"),
            ("certificate", "η admissible and ∫|y|^(−η) finite"),
            ("residual", "max_t |y_t − a − Λ(y)_t| when requested"),
        ]);
        rows.into_iter().for_each(|r| table.push(r));
        env.write_table("lamperti_summary", &table, &env.prov)?;
        Ok(())
    }))
}

fn plan_converge(r: &mut Reader) -> ConfigResult<Job> {
    let ns = match parse_sizes(&r.string_or("ns", "2^8..2^14")) {
        Ok(v) => v,
        Err(msg) => return bad("ns", msg),
    };
    let top = *ns.iter().max().unwrap();
    let fine: usize = r.or("fine_points", 8 * (top - 1) + 1)?;
    let mut driver = Driver::read(r, fine)?;
    driver.n_points = fine;
    if driver.dim().is_some_and(|d| d != 1) {
        return bad("dim", "convergence studies take a one-dimensional driver");
    }
    let coeff = read_coefficient(r)?;
    let map = lib_value("coefficient", LampertiMap::new(&coeff))?;
    let a = scalar_a(r, 0.0)?;
    let config = read_frac_config(r, coeff.kappa(), driver.default_gamma())?;
    Ok(Box::new(move |env: &Env| {
        let rows = run_seeds(&env.seeds, |seed| {
            let x = driver.sample(seed)?;
            let y = solve_lamperti(&x, &map, a)?;
            let reference = Reference {
                value: y.value(y.n_points() - 1)[0] - a,
                kind: ReferenceKind::LampertiClosedForm,
            };
            let study = convergence_study(&y, &x, &coeff, &config, &ns, reference)?;
            let mut table = Table::new(&[
                ("n", "partition nodes"),
                ("mesh", "partition mesh (time)"),
                ("value", "Riemann sum of the cell-averaged integrand"),
                ("abs_error", "|value − δy over [0,T]|"),
                ("sup_integrand_err", "max over cells of |σ(y_t) − z^n_t|"),
                ("lemma27_bound", "[σ]_κ ‖y‖_γ^κ mesh^(κγ)"),
            ]);
            for row in &study.rows {
                table.push(vec![
                    row.n.into(),
                    row.mesh.into(),
                    row.value.into(),
                    row.abs_error.into(),
                    row.sup_integrand_error.into(),
                    row.lemma27_bound.into(),
                ]);
            }
            env.write_table(&format!("converge_seed{seed}"), &table, &env.prov.with_seed(seed))?;
            Ok(vec![
                Cell::from(seed),
                reference.value.into(),
                study.holder_norm_y.into(),
                study.tail_decreasing().into(),
                study.lemma27_holds().into(),
            ])
        })?;
        let mut table = Table::new(&[
            ("seed", "RNG seed of the driver"),
            ("reference", "y_T − a from the Lamperti formula"),
            ("holder_norm_y", "discrete ‖y‖_γ on the fine grid"),
            ("tail_decreasing", "abs_error strictly decreasing over the last three rows"),
            ("lemma27_holds", "sup_integrand_err ≤ lemma27_bound in every row"),
        ]);
        rows.into_iter().for_each(|r| table.push(r));
        env.write_table("converge_summary", &table, &env.prov)?;
        Ok(())
    }))
}

struct SolvePlan {
    driver: Driver,
    coeffs: Vec<Coefficient>,
    a: Vec<f64>,
    options: SolverOptions,
    exponents: GainExponents,
    c0: f64,
}

impl SolvePlan {
    fn read(r: &mut Reader) -> ConfigResult<SolvePlan> {
        let driver = Driver::read(r, 16385)?;
        let d = driver.dim().unwrap_or(1);
        let a = r.vector("a")?.unwrap_or_else(|| vec![0.25]);
        r.materialize("a", a.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        let a_norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if a_norm == 0.0 {
            return bad("a", "the multidimensional solver needs a ≠ 0");
        }
        let m = a.len();
        let base = read_coefficient(r)?;
        let coeffs = (0..d)
            .map(|j| {
                if m == 1 {
                    return Ok(base.clone());
                }
                let mut u = vec![0.0; m];
                u[j % m] = 1.0;
                lib_value("coefficient", base.clone().with_direction(u))
            })
            .collect::<ConfigResult<Vec<_>>>()?;
        let threshold: f64 = r.or("absorb_threshold", DEFAULT_ABSORB_FACTOR * a_norm)?;
        let scheme = match r.string_or("scheme", "euler").as_str() {
            "euler" => Scheme::Euler,
            "heun" => Scheme::Heun,
            other => return bad("scheme", format!("expected euler|heun, got `{other}`")),
        };
        let regularize: bool = r.or("regularize", true)?;
        let kappa = base.kappa();
        let gamma: f64 = r.or("gamma", driver.default_gamma())?;
        let default_eps1 = match driver.hurst() {
            Some(h) if h > gamma => GainExponents::default_eps1(h, gamma),
            _ => 0.5 * (1.0 - gamma - gamma * kappa),
        };
        let eps1: f64 = r.or("eps1", default_eps1)?;
        let probe = lib_value("gamma", GainExponents::new(gamma, kappa, eps1, 1e-9))?;
        if !probe.eps1_admissible {
            return bad("eps1", format!("need γ + ε₁ + γκ < 1, got {}", gamma + eps1 + gamma * kappa));
        }
        let eps2: f64 = r.or("eps2", 0.5 * probe.eps2_bound)?;
        let exponents = lib_value("eps2", GainExponents::new(gamma, kappa, eps1, eps2))?;
        if !exponents.eps2_admissible {
            return bad("eps2", format!("must be below {}", exponents.eps2_bound));
        }
        let c0: f64 = r.or("c0", driver.horizon)?;
        Ok(SolvePlan {
            driver,
            coeffs,
            a,
            options: SolverOptions { absorb_threshold: Some(threshold), scheme, regularize },
            exponents,
            c0,
        })
    }

    fn solve(&self, seed: u64) -> Result<(GridPath, SolverOutput)> {
        let x = self.driver.sample(seed)?;
        let out = solve_multidim(&x, &self.coeffs, &self.a, &self.options)?;
        Ok((x, out))
    }
}

fn fits_json(g: &GainDiagnostics) -> serde_json::Value {
    let slope = |f: &Option<young_power::LinearFit>| f.map(|f| f.slope);
    let resid = |f: &Option<young_power::LinearFit>| f.map(|f| f.residual);
    json!({
        "gain_slope": slope(&g.gain_fit),
        "gap_slope": slope(&g.gap_fit),
        "gap_slope_low": slope(&g.gap_fit_low),
        "gap_slope_high": slope(&g.gap_fit_high),
        "residuals": {
            "gain": resid(&g.gain_fit),
            "gap": resid(&g.gap_fit),
            "gap_low": resid(&g.gap_fit_low),
            "gap_high": resid(&g.gap_fit_high),
        },
        "min_scaled_gap": g.min_scaled_gap,
        "excluded_rungs": g.excluded_rungs,
        "inconclusive": g.inconclusive,
    })
}

fn plan_multidim(r: &mut Reader, ensemble: bool) -> ConfigResult<Job> {
    let plan = SolvePlan::read(r)?;
    Ok(Box::new(move |env: &Env| {
        let results = run_seeds(&env.seeds, |seed| {
            let (x, out) = plan.solve(seed)?;
            let diag = gain_diagnostics(&out, plan.exponents, plan.c0);
            let bands = verify_ladder(&out.y, &out.ladder);
            let prov = env.prov.with_seed(seed);
            let stem = if ensemble { "ladder" } else { "multidim" };
            let path_stem = format!("{stem}_seed{seed}");
            if !ensemble {
                env.write_table(&path_stem, &path_table(&x, Some(&out.y)), &prov)?;
                let holder = match out.case {
                    Case::B => Some(global_holder_check(&out, plan.exponents.gamma)?),
                    Case::A => None,
                };
                let mut body = serde_json::to_value(&out)?;
                let obj = body.as_object_mut().unwrap();
                obj.insert("path".into(), json!(env.path_file(&path_stem)));
                obj.insert("fits".into(), fits_json(&diag));
                obj.insert("exponents".into(), serde_json::to_value(diag.exponents)?);
                obj.insert("bands".into(), serde_json::to_value(bands)?);
                obj.insert("global_holder_norm".into(), json!(holder));
                env.write_json(&format!("{path_stem}.summary.json"), &prov, body)?;
            }
            Ok((seed, out, diag, bands))
        })?;
        if !ensemble {
            return Ok(());
        }
        let mut rungs = Table::new(&[
            ("seed", "RNG seed of the driver"),
            ("k", "rung index"),
            ("q", "dyadic level q_k"),
            ("lambda", "rung start λ_k (time)"),
            ("tau", "exit time τ_k from I_q (time)"),
            ("points", "grid points in [λ_k, λ_{k+1})"),
            ("holder_constant", "local Hölder constant c_k"),
            ("gap", "λ_{k+1} − λ_k (time)"),
            ("excluded", "too few points for the fits"),
        ]);
        let mut per_seed = Vec::new();
        let mut absorbed = Vec::new();
        for (seed, out, diag, bands) in &results {
            for (ev, rung) in out.events.iter().zip(&diag.rungs) {
                rungs.push(vec![
                    Cell::from(*seed),
                    ev.k.into(),
                    ev.q_k.into(),
                    ev.lambda_k.into(),
                    ev.tau_k.into(),
                    rung.points.into(),
                    rung.holder_constant.into(),
                    rung.gap.into(),
                    rung.excluded.into(),
                ]);
            }
            per_seed.push(json!({
                "seed": seed,
                "case": out.case,
                "tau": out.tau,
                "min_abs": out.min_abs,
                "rungs": out.events.len(),
                "bands": bands,
                "fits": fits_json(diag),
            }));
            if out.case == Case::B {
                absorbed.push(diag.clone());
            }
        }
        env.write_table("ladder_rungs", &rungs, &env.prov)?;
        let fits = ensemble_fits(&absorbed);
        let exponents = plan.exponents;
        let body = json!({
            "exponents": exponents,
            "solves": results.len(),
            "absorbed": absorbed.len(),
            "band_failures": results.iter().filter(|r| !r.3.holds()).count(),
            "ensemble": {
                "gain_slope": fits.gain.map(|f| f.slope),
                "gain_residual": fits.gain.map(|f| f.residual),
                "gap_slope": fits.gap.map(|f| f.slope),
                "gap_residual": fits.gap.map(|f| f.residual),
                "expected_gain_slope": -exponents.kappa,
                "gap_slope_floor": -exponents.alpha,
            },
            "per_seed": per_seed,
        });
        env.write_json("ladder_summary.json", &env.prov, body)?;
        Ok(())
    }))
}

fn plan_roughness(r: &mut Reader) -> ConfigResult<Job> {
    let driver = Driver::read(r, 4097)?;
    let default_hat = driver.hurst().map_or("1".to_string(), |h| (h + 0.02).to_string());
    let gamma_hats = match crate::config::parse_vector(&r.string_or("gamma_hat", &default_hat)) {
        Ok(v) => v,
        Err(msg) => return bad("gamma_hat", msg),
    };
    let default_scales: Vec<String> =
        (1..=6).map(|k| (driver.horizon / (1u32 << k) as f64).to_string()).collect();
    let scales = match crate::config::parse_vector(&r.string_or("scales", &default_scales.join(","))) {
        Ok(v) => v,
        Err(msg) => return bad("scales", msg),
    };
    Ok(Box::new(move |env: &Env| {
        run_seeds(&env.seeds, |seed| {
            let x = driver.sample(seed)?;
            let dirs = default_directions(x.dim());
            let mut table = Table::new(&[
                ("gamma_hat", "roughness exponent γ + ε̂"),
                ("modulus", "min over (s, ε, φ) of max |⟨φ, δx_st⟩| / ε^γ̂"),
                ("scales_checked", "number of scales ε tested"),
            ]);
            for &g in &gamma_hats {
                let est = roughness_modulus(&x, g, &scales, &dirs)?;
                table.push(vec![g.into(), est.modulus.into(), est.scales_checked.len().into()]);
            }
            env.write_table(&format!("roughness_seed{seed}"), &table, &env.prov.with_seed(seed))?;
            Ok(())
        })?;
        Ok(())
    }))
}

fn plan_certify(r: &mut Reader) -> ConfigResult<Job> {
    let source = match r.string("path") {
        Some(p) => Err(PathBuf::from(p)),
        None => {
            let driver = Driver::read(r, 4097)?;
            if driver.dim().is_some_and(|d| d != 1) {
                return bad("dim", "certify takes a one-dimensional solution");
            }
            Ok(driver)
        }
    };
    let coeff = read_coefficient(r)?;
    let map = lib_value("coefficient", LampertiMap::new(&coeff))?;
    let a = scalar_a(r, 0.0)?;
    let kappa = coeff.kappa();
    let gamma: f64 = r.or("gamma", source.as_ref().map_or(0.9, |d| d.default_gamma()))?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return bad("gamma", format!("must lie in (0,1), got {gamma}"));
    }
    let (lo, hi) = eta_window(gamma, kappa);
    let eta: f64 = r.or("eta", 0.5 * (lo.max(0.0) + hi))?;
    Ok(Box::new(move |env: &Env| {
        if !(eta > lo && eta < hi) {
            return Err(Error::CertificateFailed(format!(
                "η = {eta} is outside the admissible window ({lo}, {hi}) = ((1−γ(1+κ))/γ, 1−κ) for γ = {gamma}, κ = {kappa}"
            ))
            .into());
        }
        let certs = run_seeds(&env.seeds, |seed| {
            let y = match &source {
                Ok(driver) => solve_lamperti(&driver.sample(seed)?, &map, a)?,
                Err(p) => last_column(read_path(p)?)?,
            };
            let cert = certify(&y, gamma, kappa, eta);
            env.write_json(
                &format!("certify_seed{seed}.json"),
                &env.prov.with_seed(seed),
                json!({ "certificate": cert }),
            )?;
            Ok((seed, cert))
        })?;
        if let Some((seed, cert)) = certs.iter().find(|c| !c.1.passed) {
            return Err(Error::CertificateFailed(format!(
                "seed {seed}: ∫|y|^(−η) = {} for η = {eta}",
                cert.integral_value
            ))
            .into());
        }
        Ok(())
    }))
}
