//! Flat `key = value` experiment configuration and the CSV and gnuplot
//! outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::coeffs::{choose_weights_at, CoefficientSet, LimitFormulas, WeightInputs, Weights};
use crate::diagnostics::{EntropyReport, FIELD_TOL};
use crate::error::{Error, Result};
use crate::functional::FunctionalReport;
use crate::gas::FlowParams;
use crate::polar::critical_pressure;
use crate::riemann::WaveType;
use crate::scheme::{PressureCurve, Sampling, SchemeConfig, SchemeState, Trajectory};
use crate::selfsim::BackgroundSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Run,
    Refine,
    SweepMach,
    Coeffs,
    Background,
}

impl RunMode {
    pub fn name(&self) -> &'static str {
        match self {
            RunMode::Run => "run",
            RunMode::Refine => "refine",
            RunMode::SweepMach => "sweep-mach",
            RunMode::Coeffs => "coeffs",
            RunMode::Background => "background",
        }
    }
}

/// `p0` either absolute or as a multiple of the critical pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum P0Spec {
    Absolute(f64),
    OfCritical(f64),
}

impl P0Spec {
    pub fn resolve(&self, gamma: f64) -> Result<f64> {
        match *self {
            P0Spec::Absolute(p) => Ok(p),
            P0Spec::OfCritical(k) => Ok(k * critical_pressure(gamma)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PressureSpec {
    Inline(Vec<(f64, f64)>),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightOverrides {
    pub k: Option<f64>,
    pub xi: f64,
    pub k2_fraction: f64,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub k4: Option<f64>,
}

impl Default for WeightOverrides {
    fn default() -> Self {
        WeightOverrides { k: Some(3.0), xi: 0.1, k2_fraction: 0.5, k1: None, k2: None, k3: None, k4: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub gamma: f64,
    pub mach_inf: f64,
    pub p0: P0Spec,
    pub x0: f64,
    /// `None` puts about [`DEFAULT_CELLS`] rays across the layer.
    pub dx: Option<f64>,
    pub dsigma: Option<f64>,
    pub steps: usize,
    pub seed: u64,
    pub sampling: Sampling,
    pub epsilon0: f64,
    pub pressure_spec: Option<PressureSpec>,
    pub output_dir: PathBuf,
    pub levels: usize,
    pub mach_list: Vec<f64>,
    /// Rows written as `field_<h>.csv` (every `field_every`-th and the last).
    pub field_every: usize,
    pub weights: WeightOverrides,
}

pub const DEFAULT_CELLS: f64 = 6.0;

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SchemeConfig::default();
        ExperimentConfig {
            mode: RunMode::Run,
            gamma: 1.4,
            mach_inf: 10.0,
            p0: P0Spec::OfCritical(0.5),
            x0: s.x0,
            dx: None,
            dsigma: None,
            steps: s.steps,
            seed: s.seed,
            sampling: s.sampling,
            epsilon0: s.epsilon0,
            pressure_spec: None,
            output_dir: PathBuf::from("out"),
            levels: 3,
            mach_list: vec![1e2, 1e3, 1e4],
            field_every: 0,
            weights: WeightOverrides::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "mode",
    "gamma",
    "mach_inf",
    "p0",
    "x0",
    "dx",
    "dsigma",
    "steps",
    "seed",
    "sampling_mode",
    "epsilon0",
    "pressure_spec",
    "output_dir",
    "levels",
    "mach_list",
    "field_every",
    "weight_k",
    "weight_xi",
    "weight_k2_fraction",
    "weight_k1",
    "weight_k2",
    "weight_k3",
    "weight_k4",
];

fn invalid(key: &str, msg: impl Into<String>) -> Error {
    Error::Validation { key: key.to_string(), msg: msg.into() }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| invalid(key, format!("`{v}` is not a number")))
}

fn int(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>().map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_p0(v: &str) -> Result<P0Spec> {
    let t: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(k) = t.strip_suffix("*pstar") {
        return Ok(P0Spec::OfCritical(num("p0", k)?));
    }
    if let Some(d) = t.strip_prefix("pstar/") {
        return Ok(P0Spec::OfCritical(1.0 / num("p0", d)?));
    }
    if t == "pstar" {
        return Ok(P0Spec::OfCritical(1.0));
    }
    Ok(P0Spec::Absolute(num("p0", &t)?))
}

/// `(x, p), (x, p), ...`
pub fn parse_breakpoints(v: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut rest = v.trim();
    while !rest.is_empty() {
        rest = rest.trim_start_matches([',', ' ', '\t']);
        if rest.is_empty() {
            break;
        }
        let body = rest.strip_prefix('(').ok_or_else(|| invalid("pressure_spec", "expected `(`"))?;
        let end = body.find(')').ok_or_else(|| invalid("pressure_spec", "missing `)`"))?;
        let mut parts = body[..end].split(',');
        let (Some(x), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(invalid("pressure_spec", "breakpoints are `(x, p)` pairs"));
        };
        out.push((num("pressure_spec", x.trim())?, num("pressure_spec", p.trim())?));
        rest = &body[end + 1..];
    }
    if out.is_empty() {
        return Err(invalid("pressure_spec", "no breakpoints"));
    }
    Ok(out)
}

pub fn format_breakpoints(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, p)| format!("({x}, {p})")).collect::<Vec<_>>().join(", ")
}

/// Two-column CSV `x, p`; a non-numeric first line is a header.
pub fn read_pressure_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse { line: i + 1, msg: format!("{}: expected two columns", path.display()) });
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(p)) => out.push((x, p)),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse { line: i + 1, msg: format!("{}: not a number", path.display()) }),
        }
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) =
            body.split_once('=').ok_or(Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = KEYS.iter().copied().find(|x| *x == k) else {
            return Err(Error::Parse { line, msg: format!("unknown key `{k}`") });
        };
        if seen.contains(&key) {
            return Err(Error::Parse { line, msg: format!("duplicate key `{k}`") });
        }
        seen.push(key);
        set(&mut cfg, key, v)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn set(cfg: &mut ExperimentConfig, key: &str, v: &str) -> Result<()> {
    let w = &mut cfg.weights;
    match key {
        "mode" => {
            cfg.mode = match v {
                "run" => RunMode::Run,
                "refine" => RunMode::Refine,
                "sweep-mach" => RunMode::SweepMach,
                "coeffs" => RunMode::Coeffs,
                "background" => RunMode::Background,
                _ => {
                    return Err(invalid(
                        key,
                        format!("`{v}` is not one of run, refine, sweep-mach, coeffs, background"),
                    ))
                }
            }
        }
        "gamma" => cfg.gamma = num(key, v)?,
        "mach_inf" => cfg.mach_inf = num(key, v)?,
        "p0" => cfg.p0 = parse_p0(v)?,
        "x0" => cfg.x0 = num(key, v)?,
        "dx" => cfg.dx = Some(num(key, v)?),
        "dsigma" => cfg.dsigma = Some(num(key, v)?),
        "steps" => cfg.steps = int(key, v)? as usize,
        "seed" => cfg.seed = int(key, v)?,
        "sampling_mode" => {
            cfg.sampling = match v {
                "prng" => Sampling::Prng,
                "vdc" => Sampling::VanDerCorput,
                _ => return Err(invalid(key, format!("`{v}` is not prng or vdc"))),
            }
        }
        "epsilon0" => cfg.epsilon0 = num(key, v)?,
        "pressure_spec" => {
            cfg.pressure_spec = Some(if v.starts_with('(') {
                PressureSpec::Inline(parse_breakpoints(v)?)
            } else {
                PressureSpec::File(PathBuf::from(v))
            })
        }
        "output_dir" => cfg.output_dir = PathBuf::from(v),
        "levels" => cfg.levels = int(key, v)? as usize,
        "mach_list" => {
            cfg.mach_list = v.split(',').map(|s| num(key, s.trim())).collect::<Result<_>>()?;
        }
        "field_every" => cfg.field_every = int(key, v)? as usize,
        "weight_k" => w.k = Some(num(key, v)?),
        "weight_xi" => w.xi = num(key, v)?,
        "weight_k2_fraction" => w.k2_fraction = num(key, v)?,
        "weight_k1" => w.k1 = Some(num(key, v)?),
        "weight_k2" => w.k2 = Some(num(key, v)?),
        "weight_k3" => w.k3 = Some(num(key, v)?),
        "weight_k4" => w.k4 = Some(num(key, v)?),
        _ => unreachable!("key list and setter disagree on `{key}`"),
    }
    Ok(())
}

pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if !(cfg.gamma > 1.0 && cfg.gamma < 3.0) {
        return Err(invalid("gamma", format!("{} is outside (1, 3)", cfg.gamma)));
    }
    if !(cfg.mach_inf > 1.0) {
        return Err(invalid("mach_inf", format!("{} is not supersonic", cfg.mach_inf)));
    }
    let pstar = critical_pressure(cfg.gamma)?;
    let p0 = cfg.p0.resolve(cfg.gamma)?;
    if !(p0 > 0.0 && p0 < pstar) {
        return Err(invalid("p0", format!("{p0} is outside (0, p*) with p* = {pstar}")));
    }
    let positive = [("x0", Some(cfg.x0)), ("dx", cfg.dx), ("dsigma", cfg.dsigma), ("epsilon0", Some(cfg.epsilon0))];
    for (k, v) in positive {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(invalid(k, format!("{v} must be positive")));
            }
        }
    }
    if cfg.steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if cfg.mode == RunMode::Refine && cfg.levels < 2 {
        return Err(invalid("levels", "a refinement study needs at least 2 levels"));
    }
    if cfg.mach_list.is_empty() || cfg.mach_list.iter().any(|m| !(*m > 1.0)) {
        return Err(invalid("mach_list", "needs supersonic Mach numbers"));
    }
    let w = &cfg.weights;
    if !(w.xi > 0.0 && w.xi < 1.0) {
        return Err(invalid("weight_xi", format!("{} is outside (0, 1)", w.xi)));
    }
    if !(w.k2_fraction > 0.0 && w.k2_fraction < 1.0) {
        return Err(invalid("weight_k2_fraction", format!("{} is outside (0, 1)", w.k2_fraction)));
    }
    for (k, v) in
        [("weight_k", w.k), ("weight_k1", w.k1), ("weight_k2", w.k2), ("weight_k3", w.k3), ("weight_k4", w.k4)]
    {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(invalid(k, format!("{v} must be positive")));
            }
        }
    }
    if let Some(PressureSpec::Inline(pts)) = &cfg.pressure_spec {
        PressureCurve::new(pts.clone()).map_err(|e| invalid("pressure_spec", e.to_string()))?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn flow_params(&self) -> Result<FlowParams> {
        FlowParams::new(self.gamma, self.mach_inf)
    }

    pub fn p0_value(&self) -> Result<f64> {
        self.p0.resolve(self.gamma)
    }

    /// Surface pressure; constant `p0` when no spec is given. File paths
    /// are relative to `base`.
    pub fn pressure_curve(&self, base: &Path) -> Result<PressureCurve> {
        let pts = match &self.pressure_spec {
            None => return Ok(PressureCurve::constant(self.p0_value()?)),
            Some(PressureSpec::Inline(pts)) => pts.clone(),
            Some(PressureSpec::File(f)) => read_pressure_csv(&base.join(f))?,
        };
        PressureCurve::new(pts).map_err(|e| invalid("pressure_spec", e.to_string()))
    }

    pub fn scheme_config(&self, bg: &BackgroundSolution, p: &FlowParams) -> Result<SchemeConfig> {
        let dx = match self.dx {
            Some(d) => d,
            None => crate::scheme::dx_for_cells(self.x0, DEFAULT_CELLS, bg, p)?,
        };
        Ok(SchemeConfig {
            x0: self.x0,
            dx,
            dsigma: self.dsigma,
            steps: self.steps,
            seed: self.seed,
            sampling: self.sampling,
            epsilon0: self.epsilon0,
            ..SchemeConfig::default()
        })
    }
}

/// Weights from the configured `xi` and `K2` fraction, then the explicit
/// overrides.
pub fn weights_for(cfg: &ExperimentConfig, set: &CoefficientSet) -> Result<Weights> {
    let o = &cfg.weights;
    let mut w = choose_weights_at(&WeightInputs::from_set(set), o.xi, o.k2_fraction)?;
    if let Some(k) = o.k {
        w.k = k;
    }
    for (slot, v) in [(&mut w.k1, o.k1), (&mut w.k2, o.k2), (&mut w.k3, o.k3), (&mut w.k4, o.k4)] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    Ok(w)
}

/// Text of the effective configuration; parses back to the same value.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("mode", cfg.mode.name().into());
    put("gamma", cfg.gamma.to_string());
    put("mach_inf", cfg.mach_inf.to_string());
    put(
        "p0",
        match cfg.p0 {
            P0Spec::Absolute(p) => p.to_string(),
            P0Spec::OfCritical(k) => format!("{k}*pstar"),
        },
    );
    put("x0", cfg.x0.to_string());
    if let Some(d) = cfg.dx {
        put("dx", d.to_string());
    }
    if let Some(d) = cfg.dsigma {
        put("dsigma", d.to_string());
    }
    put("steps", cfg.steps.to_string());
    put("seed", cfg.seed.to_string());
    put("sampling_mode", if cfg.sampling == Sampling::Prng { "prng" } else { "vdc" }.into());
    put("epsilon0", cfg.epsilon0.to_string());
    match &cfg.pressure_spec {
        Some(PressureSpec::Inline(pts)) => put("pressure_spec", format_breakpoints(pts)),
        Some(PressureSpec::File(f)) => put("pressure_spec", f.display().to_string()),
        None => {}
    }
    put("output_dir", cfg.output_dir.display().to_string());
    put("levels", cfg.levels.to_string());
    put("mach_list", cfg.mach_list.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "));
    put("field_every", cfg.field_every.to_string());
    let w = &cfg.weights;
    if let Some(k) = w.k {
        put("weight_k", k.to_string());
    }
    put("weight_xi", w.xi.to_string());
    put("weight_k2_fraction", w.k2_fraction.to_string());
    for (k, v) in [("weight_k1", w.k1), ("weight_k2", w.k2), ("weight_k3", w.k3), ("weight_k4", w.k4)] {
        if let Some(v) = v {
            put(k, v.to_string());
        }
    }
    s
}

fn table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn f(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_boundary(path: &Path, traj: &Trajectory) -> Result<()> {
    table(path, &["x", "b", "bprime"], traj.rows.iter().map(|r| vec![f(r.x), f(r.b), f(r.bprime)]))
}

pub fn write_shock(path: &Path, traj: &Trajectory) -> Result<()> {
    table(path, &["x", "chi", "s"], traj.rows.iter().map(|r| vec![f(r.x), f(r.chi), f(r.s)]))
}

/// Cell ends and midpoints of one row, from the front to the surface.
pub fn write_field(path: &Path, row: &SchemeState, p: &FlowParams) -> Result<()> {
    let mut rows = Vec::new();
    for c in &row.cells {
        for s in [c.lo, 0.5 * (c.lo + c.hi), c.hi] {
            let u = c.eval(s, p, FIELD_TOL)?;
            let rho = p.density(u)?;
            rows.push(vec![f(s), f(u.u), f(u.v), f(rho), f(rho.powf(p.gamma)), f(p.mach_number(u)?)]);
        }
    }
    table(path, &["sigma", "u", "v", "rho", "p", "M"], rows)
}

fn kind_name(k: WaveType) -> &'static str {
    match k {
        WaveType::Shock => "shock",
        WaveType::Rarefaction => "rarefaction",
        WaveType::StrongShock => "strong",
    }
}

/// Weak waves crossing each row; `n` is the ray index of the issuing point.
pub fn write_waves(path: &Path, traj: &Trajectory) -> Result<()> {
    let g = &traj.grid;
    let rows = traj.rows.iter().flat_map(|r| {
        r.waves.iter().map(move |w| {
            let n = ((w.sigma - g.b0) / g.dsigma).round() as i64;
            vec![r.h.to_string(), n.to_string(), w.family.to_string(), f(w.strength), kind_name(w.kind).into()]
        })
    });
    table(path, &["h", "n", "family", "strength", "kind"], rows)
}

pub fn write_functional(path: &Path, rep: &FunctionalReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            r.h.to_string(),
            f(r.l),
            f(r.q0),
            f(r.q1),
            f(r.q2),
            f(r.q),
            f(r.f),
            f(r.e),
            f(r.decrement),
            (r.violation as u8).to_string(),
        ]
    });
    table(path, &["h", "L", "Q0", "Q1", "Q2", "Q", "F", "E", "decrement", "violation"], rows)
}

/// Finite-`M` coefficients next to their hypersonic limits, where one exists.
pub fn coefficient_rows(c: &CoefficientSet, l: &LimitFormulas, margin: f64) -> Vec<(&'static str, f64, Option<f64>)> {
    let b = &c.boundary;
    let fr = &c.front;
    vec![
        ("K_r1", b.k_r1.value, Some(l.k_r1)),
        ("K_r2", b.k_r2.value, None),
        ("K_sigma1", b.k_sigma1.value, None),
        ("K_sigma2", b.k_sigma2.value, None),
        ("K_b1", b.k_b1.value, None),
        ("K_b2", b.k_b2.value, None),
        ("K_c2", b.k_c2.value, Some(l.k_c2)),
        ("K_csigma", b.k_csigma.value, Some(l.k_csigma)),
        ("K_cb", b.k_cb.value, None),
        ("K_w1", fr.k_w1.value, None),
        ("K_w2", fr.k_w2.value, Some(l.k_w2)),
        ("K_s", fr.k_s.value, Some(l.k_s)),
        ("mu_w1", fr.mu_w1.value, None),
        ("mu_w2", fr.mu_w2.value, Some(l.mu_w2)),
        ("mu_s", fr.mu_s.value, Some(l.mu_s)),
        ("margin", margin, Some(l.margin())),
    ]
}

pub struct CoefficientRow {
    pub gamma: f64,
    pub p0: f64,
    pub mach_inf: f64,
    pub name: &'static str,
    pub value: f64,
    pub limit: Option<f64>,
}

pub fn write_coefficients(path: &Path, rows: &[CoefficientRow]) -> Result<()> {
    let out = rows.iter().map(|r| {
        let (lim, gap) = match r.limit {
            Some(l) => (f(l), f(((r.value - l) / l).abs())),
            None => (String::new(), String::new()),
        };
        vec![f(r.gamma), f(r.p0), f(r.mach_inf), r.name.into(), f(r.value), lim, gap]
    });
    table(path, &["gamma", "p0", "mach_inf", "name", "finite_M_value", "limit_value", "relative_gap"], out)
}

pub fn write_residuals(path: &Path, rows: &[(f64, usize, f64, f64)]) -> Result<()> {
    let out = rows.iter().map(|&(dx, id, m, c)| vec![f(dx), id.to_string(), f(m), f(c)]);
    table(path, &["dx", "test_id", "residual_mass", "residual_curl"], out)
}

pub fn write_asymptotics(path: &Path, rows: &[(usize, f64, f64, f64)]) -> Result<()> {
    let out = rows.iter().map(|&(h, d, s, b)| vec![h.to_string(), f(d), f(s), f(b)]);
    table(path, &["h", "deviation", "s_gap", "bprime_gap"], out)
}

pub fn write_entropy(path: &Path, rep: &EntropyReport) -> Result<()> {
    table(path, &["h", "min_lax_margin"], rep.rows.iter().map(|&(h, m)| vec![h.to_string(), f(m)]))
}

/// `PROFILE_POINTS` evenly spaced rays from the shock to the surface.
pub fn write_profile(path: &Path, bg: &BackgroundSolution, p: &FlowParams) -> Result<()> {
    let pr = &bg.profile;
    let mut rows = Vec::with_capacity(PROFILE_POINTS);
    for i in 0..PROFILE_POINTS {
        let t = i as f64 / (PROFILE_POINTS - 1) as f64;
        let s = pr.sigma_start + t * (pr.sigma_end - pr.sigma_start);
        let u = pr.eval(s);
        let rho = p.density(u)?;
        rows.push(vec![f(s), f(u.u), f(u.v), f(rho), f(rho.powf(p.gamma)), f(p.mach_number(u)?)]);
    }
    table(path, &["sigma", "u", "v", "rho", "p", "M"], rows)
}

pub const PROFILE_POINTS: usize = 101;

/// Limit gaps of one background, for `sweep-mach`.
pub fn write_sweep(path: &Path, rows: &[(f64, [f64; 5])]) -> Result<()> {
    let out = rows.iter().map(|(m, g)| {
        let mut r = vec![f(*m)];
        r.extend(g.iter().map(|x| f(*x)));
        r
    });
    table(path, &["mach_inf", "gap_u", "gap_v", "gap_c2", "gap_s0", "gap_b0"], out)
}

/// Gnuplot scripts for the CSVs of `mode`, written next to them.
pub fn write_plots(dir: &Path, mode: RunMode) -> Result<Vec<PathBuf>> {
    let head = "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n";
    let scripts: Vec<(&str, String)> = match mode {
        RunMode::Run => vec![
            (
                "fronts.gp",
                format!(
                    "{head}set output 'fronts.png'\nset xlabel 'x'\nplot 'shock.csv' using 1:3 with lines title 's', \\\n     'boundary.csv' using 1:3 with lines title \"b'\"\n"
                ),
            ),
            (
                "functional.gp",
                format!(
                    "{head}set output 'functional.png'\nset xlabel 'h'\nset logscale y\nplot 'functional.csv' using 1:7 with lines title 'F', \\\n     '' using 1:2 with lines title 'L', \\\n     '' using 1:6 with lines title 'Q'\n"
                ),
            ),
            (
                "entropy.gp",
                format!("{head}set output 'entropy.png'\nset xlabel 'h'\nplot 'entropy.csv' using 1:2 with points pt 7 ps 0.4 title 'min Lax margin'\n"),
            ),
        ],
        RunMode::Refine => vec![(
            "residuals.gp",
            format!(
                "{head}set output 'residuals.png'\nset logscale xy\nset xlabel 'dx'\nplot 'residuals.csv' using 1:(abs($3)) with linespoints title 'mass', \\\n     '' using 1:(abs($4)) with linespoints title 'curl'\n"
            ),
        )],
        RunMode::SweepMach => vec![(
            "sweep.gp",
            format!(
                "{head}set output 'sweep.png'\nset logscale xy\nset xlabel 'M_inf'\nplot for [k=2:6] 'sweep.csv' using 1:k with linespoints\n"
            ),
        )],
        RunMode::Coeffs => vec![(
            "coefficients.gp",
            format!(
                "{head}set output 'coefficients.png'\nset logscale xy\nset xlabel 'M_inf'\nplot 'coefficients.csv' using 3:(strcol(4) eq 'margin' ? $7 : NaN) with linespoints title 'margin gap'\n"
            ),
        )],
        RunMode::Background => vec![(
            "profile.gp",
            format!("{head}set output 'profile.png'\nset xlabel 'sigma'\nplot 'profile.csv' using 1:2 with lines title 'u', '' using 1:3 with lines title 'v'\n"),
        )],
    };
    let mut out = Vec::new();
    for (name, body) in scripts {
        let p = dir.join(name);
        fs::write(&p, body)?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.mode, RunMode::Run);
        let c = parse_config("# only a comment\n\n").unwrap();
        assert_eq!(c.mode, RunMode::Run);
    }

    #[test]
    fn rejects_bad_values_by_key() {
        match parse_config("gamma=3.5") {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "gamma"),
            other => panic!("{other:?}"),
        }
        match parse_config("mach_inf = fast") {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "mach_inf"),
            other => panic!("{other:?}"),
        }
        match parse_config("p0 = 2*pstar") {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "p0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_config("gamma = 1.4\n\nbogus = 1\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("steps 10"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("steps = 1\nsteps = 2"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn full_config() {
        let text = "mode = refine # study\ngamma = 2\nmach_inf = 1000\np0 = pstar/4\nsteps = 50\nseed = 9\n\
                    sampling_mode = vdc\npressure_spec = (0, 0.004), (1.1, 0.004), (1.1, 0.0041)\nlevels = 3\n\
                    mach_list = 100, 1000\nweight_k = 5\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.mode, RunMode::Refine);
        assert_eq!(c.p0, P0Spec::OfCritical(0.25));
        assert!((c.p0_value().unwrap() - 1.0 / 256.0).abs() < 1e-15);
        assert_eq!(c.sampling, Sampling::VanDerCorput);
        assert_eq!(c.pressure_spec, Some(PressureSpec::Inline(vec![(0.0, 0.004), (1.1, 0.004), (1.1, 0.0041)])));
        assert_eq!(c.mach_list, vec![100.0, 1000.0]);
        assert_eq!(c.weights.k, Some(5.0));
        assert_eq!(parse_config(&emit_config(&c)).unwrap(), c);
    }

    #[test]
    fn pressure_csv() {
        let dir = std::env::temp_dir().join(format!("conic_glimm_io_{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.csv");
        fs::write(&path, "x,p\n0,1e-4\n2,1.1e-4\n").unwrap();
        assert_eq!(read_pressure_csv(&path).unwrap(), vec![(0.0, 1e-4), (2.0, 1.1e-4)]);
        fs::write(&path, "x,p\n0,1e-4\n2,oops\n").unwrap();
        assert!(matches!(read_pressure_csv(&path), Err(Error::Parse { line: 3, .. })));
        fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn breakpoints_round_trip(pts in proptest::collection::vec((0.0f64..10.0, 1e-8f64..1e-2), 1..8)) {
            let back = parse_breakpoints(&format_breakpoints(&pts)).unwrap();
            prop_assert_eq!(back, pts);
        }
    }
}
