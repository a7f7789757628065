//! The modified random-choice scheme on the fixed ray/line grid.
//!
//! Each mesh row carries a list of cells; a cell is a self-similar field
//! `U~(sigma; anchor, state)`. A step solves the strong-shock problem at the
//! leading front, the reflection problem at the cone surface and weak Riemann
//! problems between cells, then samples the composite field on the next row.
//!
//! When the layer between front and surface is narrower than two ray
//! spacings the row holds a single cell; the front and surface waves of the
//! step then cross inside the layer and are resolved by one Riemann problem
//! at the middle of the layer ("thin" mode).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gas::{FlowParams, GasState};
use crate::riemann::{self, WaveFan, WaveType};
use crate::selfsim::{self, BackgroundSolution};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    pub x0: f64,
    pub dx: f64,
    pub dsigma: f64,
    pub b0: f64,
}

impl GridGeometry {
    pub fn x(&self, h: usize) -> f64 {
        self.x0 + h as f64 * self.dx
    }

    pub fn sigma(&self, n: i64) -> f64 {
        self.b0 + n as f64 * self.dsigma
    }

    pub fn y(&self, n: i64, h: usize) -> f64 {
        self.sigma(n) * self.x(h)
    }

    /// Index of the last ray at or below `sigma`.
    pub fn ray_below(&self, sigma: f64) -> i64 {
        ((sigma - self.b0) / self.dsigma).floor() as i64
    }

    pub fn n_chi(&self, sigma_chi: f64) -> i64 {
        self.ray_below(sigma_chi) + 1
    }

    pub fn n_b(&self, sigma_b: f64) -> i64 {
        self.ray_below(sigma_b)
    }
}

/// `4 dx / x0 * max |lambda_i|` over the given states.
pub fn cfl_bound(x0: f64, dx: f64, states: &[GasState], p: &FlowParams) -> Result<f64> {
    let mut m = 0.0f64;
    for s in states {
        let (l1, l2) = p.eigenvalues(*s)?;
        m = m.max(l1.abs()).max(l2.abs());
    }
    Ok(4.0 * dx / x0 * m)
}

pub fn build_grid(
    x0: f64,
    dx: f64,
    dsigma: Option<f64>,
    bg: &BackgroundSolution,
    p: &FlowParams,
) -> Result<GridGeometry> {
    if !(x0 > 0.0) {
        return Err(Error::Validation { key: "x0".into(), msg: "must be positive".into() });
    }
    if !(dx > 0.0) {
        return Err(Error::Validation { key: "dx".into(), msg: "must be positive".into() });
    }
    let bound = cfl_bound(x0, dx, &[bg.shock_state()], p)?;
    let dsigma = match dsigma {
        None => 1.5 * bound,
        Some(d) if d > bound => d,
        Some(d) => return Err(Error::Cfl { dsigma: d, bound }),
    };
    Ok(GridGeometry { x0, dx, dsigma, b0: bg.b0 })
}

/// Step size whose default `dsigma` puts about `cells` rays across the layer.
pub fn dx_for_cells(x0: f64, cells: f64, bg: &BackgroundSolution, p: &FlowParams) -> Result<f64> {
    let unit = build_grid(x0, 1.0, None, bg, p)?.dsigma;
    Ok((bg.b0 - bg.s0) / cells / unit)
}

/// Surface pressure `p^b(x)`: piecewise linear through breakpoints, constant
/// outside them. A repeated abscissa makes a jump (the later value holds at
/// the breakpoint).
#[derive(Clone, Debug, PartialEq)]
pub struct PressureCurve {
    pub points: Vec<(f64, f64)>,
}

impl PressureCurve {
    pub fn constant(p0: f64) -> Self {
        PressureCurve { points: vec![(0.0, p0)] }
    }

    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation { key: "pressure".into(), msg: "no breakpoints".into() });
        }
        for &(x, p) in &points {
            if !x.is_finite() || !(p > 0.0) || !p.is_finite() {
                return Err(Error::Validation { key: "pressure".into(), msg: format!("bad breakpoint ({x}, {p})") });
            }
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(PressureCurve { points })
    }

    /// Two levels: `p0` up to `x1`, `p1` after.
    pub fn step(p0: f64, x1: f64, p1: f64) -> Self {
        PressureCurve { points: vec![(0.0, p0), (x1, p0), (x1, p1)] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let k = pts.partition_point(|q| q.0 <= x);
        if k == 0 {
            return pts[0].1;
        }
        if k == pts.len() {
            return pts[k - 1].1;
        }
        let (xa, pa) = pts[k - 1];
        let (xb, pb) = pts[k];
        pa + (pb - pa) * (x - xa) / (xb - xa)
    }

    pub fn tv(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum()
    }
}

/// Piecewise-constant surface pressure on the mesh: `values[h]` holds on
/// `[x_h, x_{h+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureSchedule {
    pub p0: f64,
    pub values: Vec<f64>,
}

impl PressureSchedule {
    pub fn at(&self, h: usize) -> f64 {
        self.values[h.min(self.values.len() - 1)]
    }

    /// `omega_h = p_h - p_{h-1}`.
    pub fn omega(&self, h: usize) -> f64 {
        if h == 0 || h >= self.values.len() {
            return 0.0;
        }
        self.values[h] - self.values[h - 1]
    }

    pub fn tv(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// `sum_{k > h} |omega_k|`.
    pub fn remaining(&self, h: usize) -> f64 {
        (h + 1..self.values.len()).map(|k| self.omega(k).abs()).sum()
    }
}

/// Left-endpoint sampling `p_h = p^b(x_h)`, with `p_0 = p0`.
pub fn discretize_pressure(
    curve: &PressureCurve,
    grid: &GridGeometry,
    steps: usize,
    p0: f64,
) -> Result<PressureSchedule> {
    let close = |a: f64| (a - p0).abs() <= 1e-14 * p0;
    let mut checks = vec![curve.eval(0.0), curve.eval(grid.x0)];
    checks.extend(curve.points.iter().filter(|q| q.0 <= grid.x0).map(|q| q.1));
    if let Some(bad) = checks.iter().find(|&&v| !close(v)) {
        return Err(Error::Assumption(format!("surface pressure {bad} differs from p0 = {p0} on [0, x0]")));
    }
    let mut values = Vec::with_capacity(steps + 2);
    values.push(p0);
    for h in 1..=steps + 1 {
        values.push(curve.eval(grid.x(h)));
    }
    let sched = PressureSchedule { p0, values };
    if sched.tv() > curve.tv() * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::Assumption(format!("discrete TV {} exceeds TV {}", sched.tv(), curve.tv())));
    }
    Ok(sched)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Prng,
    VanDerCorput,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub x0: f64,
    pub dx: f64,
    pub dsigma: Option<f64>,
    pub steps: usize,
    pub seed: u64,
    pub sampling: Sampling,
    pub epsilon0: f64,
    pub ode_tol: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            x0: 1.0,
            dx: 0.02,
            dsigma: None,
            steps: 200,
            seed: 1,
            sampling: Sampling::Prng,
            epsilon0: 0.05,
            ode_tol: 1e-12,
        }
    }
}

/// Deterministic sequence of draws in `[0, 1)`.
pub struct Draws {
    mode: Sampling,
    rng: ChaCha8Rng,
    k: u64,
}

impl Draws {
    pub fn new(mode: Sampling, seed: u64) -> Self {
        Draws { mode, rng: ChaCha8Rng::seed_from_u64(seed), k: 0 }
    }

    pub fn next_draw(&mut self) -> f64 {
        self.k += 1;
        match self.mode {
            Sampling::Prng => self.rng.gen::<f64>(),
            Sampling::VanDerCorput => van_der_corput(self.k),
        }
    }
}

pub fn van_der_corput(mut k: u64) -> f64 {
    let mut x = 0.0;
    let mut f = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            x += f;
        }
        k >>= 1;
        f *= 0.5;
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Regular,
    Thin,
}

/// Self-similar field `U~(sigma; anchor, state)` on `[lo, hi]`. End cells
/// join the partial ray interval at the front or the surface to its
/// neighbour, so their width is between one and two ray spacings; the sample
/// sits at `lo + theta (hi - lo)` in every cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub anchor: f64,
    pub state: GasState,
}

impl Cell {
    pub fn eval(&self, sigma: f64, p: &FlowParams, tol: f64) -> Result<GasState> {
        selfsim::evolve_tol(self.state, self.anchor, sigma, p, tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Front,
    Interior,
    Mid,
    Boundary,
}

/// A fan issued at `(x_h, sigma x_h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FanRecord {
    pub role: Role,
    pub sigma: f64,
    pub fan: WaveFan,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvWave {
    pub family: usize,
    pub strength: f64,
    /// Ray slope of the issuing point.
    pub sigma: f64,
    pub speed: f64,
    pub kind: WaveType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Interior,
    Boundary,
    Front,
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::Interior => "interior",
            Case::Boundary => "boundary",
            Case::Front => "front",
        }
    }

    pub fn parse(s: &str) -> Result<Case> {
        match s {
            "interior" => Ok(Case::Interior),
            "boundary" => Ok(Case::Boundary),
            "front" => Ok(Case::Front),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    pub case: Case,
    pub sigma: f64,
    pub incoming: Vec<InvWave>,
    pub outgoing: Vec<InvWave>,
    /// Pressure increment consumed (boundary case).
    pub omega: f64,
    /// `Delta sigma_b` or `Delta sigma_chi` of the step.
    pub dsigma: f64,
}

/// Geometry and data of one mesh row.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeState {
    pub h: usize,
    pub x: f64,
    pub chi: f64,
    pub b: f64,
    /// `s_h`, slope of the front on the previous strip.
    pub s: f64,
    /// `b'_h`.
    pub bprime: f64,
    pub sigma_chi_prev: f64,
    pub sigma_b_prev: f64,
    /// Surface state `U^b_h`.
    pub ub: GasState,
    pub mode: Mode,
    pub n_chi: i64,
    pub n_b: i64,
    pub cells: Vec<Cell>,
    /// Weak waves crossing this row.
    pub waves: Vec<InvWave>,
}

impl SchemeState {
    pub fn sigma_chi(&self) -> f64 {
        self.chi / self.x
    }

    pub fn sigma_b(&self) -> f64 {
        self.b / self.x
    }

    pub fn theta_chi(&self) -> f64 {
        (self.sigma_chi_prev - self.s).abs()
    }

    pub fn theta_b(&self) -> f64 {
        (self.sigma_b_prev - self.bprime).abs()
    }

    /// Field on this row at slope `sigma`.
    pub fn field(&self, sigma: f64, p: &FlowParams, tol: f64) -> Result<GasState> {
        if sigma < self.sigma_chi() {
            return Ok(p.u_inf());
        }
        let k = self.cells.partition_point(|c| c.hi < sigma).min(self.cells.len() - 1);
        self.cells[k].eval(sigma, p, tol)
    }
}

/// Everything the step from row `h` to row `h+1` produced.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub h: usize,
    pub theta: f64,
    pub mode: Mode,
    pub x: f64,
    pub chi: f64,
    pub b: f64,
    pub dx: f64,
    pub s_next: f64,
    pub bprime_next: f64,
    pub omega: f64,
    pub dsigma_chi: f64,
    pub dsigma_b: f64,
    pub fans: Vec<FanRecord>,
    pub interactions: Vec<Interaction>,
    pub cfl_needed: f64,
    pub max_weak: f64,
}

impl StepRecord {
    pub fn chi_at(&self, x: f64) -> f64 {
        self.chi + self.s_next * (x - self.x)
    }

    pub fn b_at(&self, x: f64) -> f64 {
        self.b + self.bprime_next * (x - self.x)
    }

    /// Fan owning slope `sigma` (nearest issuing ray).
    pub fn owner(&self, sigma: f64) -> &FanRecord {
        let mut best = &self.fans[0];
        for f in &self.fans {
            if (f.sigma - sigma).abs() < (best.sigma - sigma).abs() {
                best = f;
            }
        }
        best
    }

    /// The composite field of the strip at `(x, y)`, `x_h < x <= x_{h+1}`.
    pub fn field(&self, x: f64, y: f64, p: &FlowParams, tol: f64) -> Result<GasState> {
        if y < self.chi_at(x) {
            return Ok(p.u_inf());
        }
        let sigma = y / x;
        let f = self.owner(sigma);
        let eta = (y - f.sigma * self.x) / (x - self.x);
        let u = riemann::sample_fan(&f.fan, eta, p)?;
        if f.role == Role::Front && u == p.u_inf() {
            return Ok(u);
        }
        selfsim::evolve_tol(u, f.sigma, sigma, p, tol)
    }
}

fn weak_waves(f: &FanRecord) -> impl Iterator<Item = InvWave> + '_ {
    f.fan.waves.iter().filter(|w| w.kind != WaveType::StrongShock).map(move |w| InvWave {
        family: w.family,
        strength: w.strength,
        sigma: f.sigma,
        speed: 0.5 * (w.speed_lo + w.speed_hi),
        kind: w.kind,
    })
}

/// Distance from `u` to the background states.
fn background_distance(u: GasState, bg: &BackgroundSolution) -> f64 {
    let mut d = u.dist(&bg.shock_state());
    for (_, s) in bg.profile.states() {
        d = d.min(u.dist(&s));
    }
    d
}

pub struct Scheme<'a> {
    pub params: FlowParams,
    pub background: &'a BackgroundSolution,
    pub grid: GridGeometry,
    pub schedule: &'a PressureSchedule,
    pub config: SchemeConfig,
}

impl<'a> Scheme<'a> {
    pub fn new(
        params: FlowParams,
        background: &'a BackgroundSolution,
        schedule: &'a PressureSchedule,
        config: SchemeConfig,
    ) -> Result<Self> {
        let grid = build_grid(config.x0, config.dx, config.dsigma, background, &params)?;
        Ok(Scheme { params, background, grid, schedule, config })
    }

    fn tol(&self) -> f64 {
        self.config.ode_tol
    }

    /// Row 0: the background flow.
    pub fn init(&self, theta: f64) -> Result<SchemeState> {
        let bg = self.background;
        let g = &self.grid;
        let x = g.x0;
        let (sc, sb) = (bg.s0, bg.b0);
        let n_chi = g.n_chi(sc);
        let n_b = g.n_b(sb);
        let ub = bg.surface_state();
        let (mode, cells) = if n_b - n_chi >= 2 {
            let mut cells = Vec::new();
            for n in n_chi..n_b {
                let lo = if n == n_chi { sc } else { g.sigma(n) };
                let hi = if n == n_b - 1 { sb } else { g.sigma(n + 1) };
                let anchor = lo + theta * (hi - lo);
                let state = selfsim::evolve_tol(ub, sb, anchor, &self.params, self.tol())?;
                cells.push(Cell { lo, hi, anchor, state });
            }
            (Mode::Regular, cells)
        } else {
            (Mode::Thin, vec![Cell { lo: sc, hi: sb, anchor: sb, state: ub }])
        };
        Ok(SchemeState {
            h: 0,
            x,
            chi: sc * x,
            b: sb * x,
            s: sc,
            bprime: sb,
            sigma_chi_prev: sc,
            sigma_b_prev: sb,
            ub,
            mode,
            n_chi,
            n_b,
            cells,
            waves: Vec::new(),
        })
    }

    /// One step of the scheme with draw `theta` for the sampling on row `h+1`.
    pub fn advance(&self, st: &SchemeState, theta: f64) -> Result<(SchemeState, StepRecord)> {
        let p = &self.params;
        let g = &self.grid;
        let tol = self.tol();
        let h = st.h;
        let xh = st.x;
        let sig_chi = st.sigma_chi();
        let sig_b = st.sigma_b();
        let dsig_chi = sig_chi - st.sigma_chi_prev;
        let dsig_b = sig_b - st.sigma_b_prev;
        let p_next = self.schedule.at(h + 1);
        let omega = self.schedule.omega(h + 1);

        // front
        let first = st.cells[0];
        let ur = first.eval(sig_chi, p, tol)?;
        let (s1, beta2) = riemann::solve_strong_shock(ur, st.s, p)?;
        let front = riemann::strong_shock_fan(s1, beta2, p)?;
        let g1 = front.states[1];

        // boundary
        let last = st.cells[st.cells.len() - 1];
        let ul = last.eval(sig_b, p, tol)?;
        let (beta1, ub1) = riemann::solve_boundary(ul, p_next, p)?;
        let bfan = riemann::boundary_fan(ul, beta1, p)?;
        let bprime1 = ub1.v / ub1.u;

        let mut fans = vec![FanRecord { role: Role::Front, sigma: sig_chi, fan: front }];
        match st.mode {
            Mode::Regular => {
                for k in 1..st.cells.len() {
                    let sig = st.cells[k].lo;
                    let l = st.cells[k - 1].eval(sig, p, tol)?;
                    let r = st.cells[k].eval(sig, p, tol)?;
                    let fan = riemann::solve_riemann(l, r, p)?;
                    fans.push(FanRecord { role: Role::Interior, sigma: sig, fan });
                }
            }
            Mode::Thin => {
                let sig = 0.5 * (sig_chi + sig_b);
                let l = selfsim::evolve_tol(g1, sig_chi, sig, p, tol)?;
                let r = selfsim::evolve_tol(ub1, sig_b, sig, p, tol)?;
                let fan = riemann::solve_riemann(l, r, p)?;
                fans.push(FanRecord { role: Role::Mid, sigma: sig, fan });
            }
        }
        fans.push(FanRecord { role: Role::Boundary, sigma: sig_b, fan: bfan });

        // checks on every state of the step
        let mut states: Vec<GasState> = Vec::new();
        let mut max_weak = 0.0f64;
        for f in &fans {
            let skip = if f.role == Role::Front { 1 } else { 0 };
            states.extend(f.fan.states.iter().skip(skip).copied());
            for w in f.fan.waves.iter().filter(|w| w.kind != WaveType::StrongShock) {
                max_weak = max_weak.max(w.strength.abs());
            }
        }
        let cfl_needed = cfl_bound(g.x0, g.dx, &states, p)?;
        if g.dsigma <= cfl_needed {
            return Err(Error::Cfl { dsigma: g.dsigma, bound: cfl_needed });
        }
        let eps0 = self.config.epsilon0;
        if (s1 - self.background.s0).abs() >= eps0 {
            return Err(Error::NeighborhoodExit { h, detail: format!("shock slope {s1} left the neighborhood") });
        }
        for u in &states {
            let d = background_distance(*u, self.background);
            if d >= eps0 {
                return Err(Error::NeighborhoodExit {
                    h,
                    detail: format!("state ({}, {}) at distance {d} from the background", u.u, u.v),
                });
            }
        }

        // geometry of the next row
        let x1 = xh + g.dx;
        let chi1 = st.chi + s1 * g.dx;
        let b1 = st.b + bprime1 * g.dx;
        if !(chi1 < b1) {
            return Err(Error::NeighborhoodExit { h, detail: format!("front {chi1} crossed the surface {b1}") });
        }
        let sc1 = chi1 / x1;
        let sb1 = b1 / x1;
        let n_chi1 = g.n_chi(sc1);
        let n_b1 = g.n_b(sb1);
        let mode1 = if n_b1 - n_chi1 >= 2 { Mode::Regular } else { Mode::Thin };

        let rec_base = StepRecord {
            h,
            theta,
            mode: st.mode,
            x: xh,
            chi: st.chi,
            b: st.b,
            dx: g.dx,
            s_next: s1,
            bprime_next: bprime1,
            omega,
            dsigma_chi: dsig_chi,
            dsigma_b: dsig_b,
            fans,
            interactions: Vec::new(),
            cfl_needed,
            max_weak,
        };

        let mut cells = Vec::new();
        match mode1 {
            Mode::Regular => {
                for n in n_chi1..n_b1 {
                    let lo = if n == n_chi1 { sc1 } else { g.sigma(n) };
                    let hi = if n == n_b1 - 1 { sb1 } else { g.sigma(n + 1) };
                    let anchor = lo + theta * (hi - lo);
                    let state = rec_base.field(x1, anchor * x1, p, tol)?;
                    cells.push(Cell { lo, hi, anchor, state });
                }
            }
            Mode::Thin => {
                let anchor = 0.5 * (sc1 + sb1);
                let state = rec_base.field(x1, anchor * x1, p, tol)?;
                cells.push(Cell { lo: sc1, hi: sb1, anchor, state });
            }
        }

        let interactions = self.interactions(st, &rec_base, dsig_chi, dsig_b, omega);
        let waves: Vec<InvWave> = match st.mode {
            Mode::Regular => rec_base.fans.iter().flat_map(weak_waves).collect(),
            Mode::Thin => rec_base.fans.iter().filter(|f| f.role == Role::Mid).flat_map(weak_waves).collect(),
        };
        let next = SchemeState {
            h: h + 1,
            x: x1,
            chi: chi1,
            b: b1,
            s: s1,
            bprime: bprime1,
            sigma_chi_prev: sig_chi,
            sigma_b_prev: sig_b,
            ub: ub1,
            mode: mode1,
            n_chi: n_chi1,
            n_b: n_b1,
            cells,
            waves,
        };
        Ok((next, StepRecord { interactions, ..rec_base }))
    }

    /// Assigns the waves crossing row `h` to the fans of the step.
    fn interactions(
        &self,
        st: &SchemeState,
        rec: &StepRecord,
        dsig_chi: f64,
        dsig_b: f64,
        omega: f64,
    ) -> Vec<Interaction> {
        let nf = rec.fans.len();
        let mut incoming: Vec<Vec<InvWave>> = vec![Vec::new(); nf];
        for w in &st.waves {
            let k = match st.mode {
                Mode::Thin => {
                    if w.family == 1 {
                        0
                    } else {
                        nf - 1
                    }
                }
                Mode::Regular => {
                    let xprev = st.x - self.grid.dx;
                    let pos = (w.sigma * xprev + w.speed * self.grid.dx) / st.x;
                    let anchors: Vec<f64> = st.cells.iter().map(|c| c.anchor).collect();
                    // fans are front, one per cell boundary, boundary
                    anchors.partition_point(|a| *a < pos)
                }
            };
            incoming[k].push(*w);
        }
        let mut out = Vec::with_capacity(nf + 1);
        for (k, f) in rec.fans.iter().enumerate() {
            let outgoing: Vec<InvWave> = weak_waves(f).collect();
            let (case, om, ds) = match f.role {
                Role::Front => (Case::Front, 0.0, dsig_chi),
                Role::Boundary => (Case::Boundary, omega, dsig_b),
                Role::Interior | Role::Mid => (Case::Interior, 0.0, 0.0),
            };
            let mut inc = std::mem::take(&mut incoming[k]);
            if f.role == Role::Mid {
                // the front and surface waves of this step cross in the layer
                inc.extend(weak_waves(&rec.fans[0]));
                inc.extend(weak_waves(&rec.fans[nf - 1]));
            }
            out.push(Interaction { case, sigma: f.sigma, incoming: inc, outgoing, omega: om, dsigma: ds });
        }
        out
    }

    /// Runs `config.steps` steps; on failure the partial trajectory is kept.
    pub fn run_partial(&self, mut sink: impl FnMut(&SchemeState, &StepRecord)) -> (Trajectory, Option<Error>) {
        let mut draws = Draws::new(self.config.sampling, self.config.seed);
        let theta0 = draws.next_draw();
        let init = match self.init(theta0) {
            Ok(s) => s,
            Err(e) => {
                return (Trajectory::empty(self), Some(e));
            }
        };
        let mut traj =
            Trajectory { rows: vec![init], steps: Vec::new(), grid: self.grid, schedule: self.schedule.clone() };
        for h in 0..self.config.steps {
            let theta = draws.next_draw();
            let cur = traj.rows.last().unwrap();
            match self.advance(cur, theta) {
                Ok((next, rec)) => {
                    sink(&next, &rec);
                    traj.rows.push(next);
                    traj.steps.push(rec);
                }
                Err(e) => return (traj, Some(e.at_step(h))),
            }
        }
        (traj, None)
    }

    pub fn run(&self) -> Result<Trajectory> {
        match self.run_partial(|_, _| {}) {
            (t, None) => Ok(t),
            (_, Some(e)) => Err(e),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Rows `0..=steps`.
    pub rows: Vec<SchemeState>,
    /// Step `h` leads from `rows[h]` to `rows[h+1]`.
    pub steps: Vec<StepRecord>,
    pub grid: GridGeometry,
    pub schedule: PressureSchedule,
}

impl Trajectory {
    fn empty(s: &Scheme) -> Self {
        Trajectory { rows: Vec::new(), steps: Vec::new(), grid: s.grid, schedule: s.schedule.clone() }
    }

    pub fn shock_slopes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.s).collect()
    }

    pub fn boundary_slopes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.bprime).collect()
    }

    pub fn max_weak(&self) -> f64 {
        self.steps.iter().map(|s| s.max_weak).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::critical_pressure;
    use crate::selfsim::background_solution;

    fn setup(m: f64, g: f64) -> (FlowParams, BackgroundSolution) {
        let p = FlowParams::new(g, m).unwrap();
        let bg = background_solution(critical_pressure(g).unwrap() / 2.0, &p).unwrap();
        (p, bg)
    }

    #[test]
    fn grid_defaults_and_cfl() {
        let (p, bg) = setup(10.0, 1.4);
        let g = build_grid(1.0, 0.02, None, &bg, &p).unwrap();
        let bound = cfl_bound(1.0, 0.02, &[bg.shock_state()], &p).unwrap();
        assert!((g.dsigma / bound - 1.5).abs() < 1e-12);
        assert!(matches!(build_grid(1.0, 0.02, Some(0.5 * bound), &bg, &p), Err(Error::Cfl { .. })));
        let fine = build_grid(1.0, 0.0002, None, &bg, &p).unwrap();
        assert!(fine.dsigma < g.dsigma / 50.0);
        assert_eq!(g.n_b(bg.b0), 0);
        assert!(g.sigma(g.n_chi(bg.s0) - 1) < bg.s0);
    }

    #[test]
    fn pressure_discretization() {
        let (p, bg) = setup(10.0, 1.4);
        let g = build_grid(1.0, 0.02, None, &bg, &p).unwrap();
        let p0 = bg.p0;
        let flat = discretize_pressure(&PressureCurve::constant(p0), &g, 50, p0).unwrap();
        assert!((1..=51).all(|h| flat.omega(h) == 0.0));
        let jump = discretize_pressure(&PressureCurve::step(p0, 1.5, p0 * 1.01), &g, 50, p0).unwrap();
        let nz: Vec<usize> = (1..=51).filter(|&h| jump.omega(h) != 0.0).collect();
        assert_eq!(nz, vec![25]);
        assert!((jump.tv() - p0 * 0.01).abs() < 1e-18);
        let ramp = PressureCurve::new(vec![(0.0, p0), (1.0, p0), (1.33, p0 * 1.02), (1.71, p0 * 0.99)]).unwrap();
        let r = discretize_pressure(&ramp, &g, 60, p0).unwrap();
        assert!(r.tv() <= ramp.tv() + 1e-18);
        let early = PressureCurve::step(p0, 0.5, p0 * 1.01);
        assert!(matches!(discretize_pressure(&early, &g, 10, p0), Err(Error::Assumption(_))));
    }

    #[test]
    fn van_der_corput_is_equidistributed() {
        let n = 10_000;
        let mean: f64 = (1..=n).map(van_der_corput).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 1e-3);
        let mut d = Draws::new(Sampling::Prng, 7);
        let mean: f64 = (0..n).map(|_| d.next_draw()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 1e-2);
    }

    #[test]
    fn background_is_a_fixed_point() {
        let (p, bg) = setup(10.0, 1.4);
        let cfg = SchemeConfig { steps: 20, ..Default::default() };
        let g = build_grid(cfg.x0, cfg.dx, None, &bg, &p).unwrap();
        let sched = discretize_pressure(&PressureCurve::constant(bg.p0), &g, cfg.steps, bg.p0).unwrap();
        let scheme = Scheme::new(p, &bg, &sched, cfg).unwrap();
        let t = scheme.run().unwrap();
        for r in &t.rows {
            assert!((r.s - bg.s0).abs() < 1e-9, "{}", r.s - bg.s0);
            assert!((r.bprime - bg.b0).abs() < 1e-9);
        }
        assert!(t.max_weak() < 1e-9);
        let last = t.rows.last().unwrap();
        let u = last.field(0.5 * (last.sigma_chi() + last.sigma_b()), &p, 1e-12).unwrap();
        assert!(u.dist(&bg.at(0.5 * (bg.s0 + bg.b0))) < 1e-8);
        // surface state satisfies the slip condition at the start of each strip
        for r in &t.rows[1..] {
            assert!((r.ub.v - r.bprime * r.ub.u).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let (p, bg) = setup(10.0, 1.4);
        let cfg = SchemeConfig { steps: 15, seed: 3, ..Default::default() };
        let g = build_grid(cfg.x0, cfg.dx, None, &bg, &p).unwrap();
        let curve = PressureCurve::step(bg.p0, 1.1, bg.p0 * 1.01);
        let sched = discretize_pressure(&curve, &g, cfg.steps, bg.p0).unwrap();
        let scheme = Scheme::new(p, &bg, &sched, cfg).unwrap();
        let a = scheme.run().unwrap();
        let b = scheme.run().unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.steps, b.steps);
        assert!(a.max_weak() > 0.0);
    }
}
