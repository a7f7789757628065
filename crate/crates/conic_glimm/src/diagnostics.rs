//! Post-processing of trajectories: total variation, far-field state, weak
//! form residuals and shock admissibility.

use crate::error::{Error, Result};
use crate::gas::{FlowParams, GasState};
use crate::polar::attached_state;
use crate::riemann::{self, WaveType};
use crate::scheme::{SchemeState, StepRecord, Trajectory};
use crate::selfsim::{self, background_solution, BackgroundSolution, SelfSimilarProfile};

/// Tolerance for field evaluations in post-processing.
pub const FIELD_TOL: f64 = 1e-11;

/// Variation of `U` across row `h`: the jump at the front, the jumps between
/// cells and the profile variation inside each cell.
pub fn tv_slice(traj: &Trajectory, h: usize, p: &FlowParams) -> Result<f64> {
    row_tv(&traj.rows[h], p)
}

pub fn row_tv(row: &SchemeState, p: &FlowParams) -> Result<f64> {
    let mut tv = 0.0;
    let mut prev = p.u_inf();
    for c in &row.cells {
        let mut pts = vec![c.lo, c.hi];
        if c.anchor > c.lo && c.anchor < c.hi {
            pts.insert(1, c.anchor);
        }
        for s in pts {
            let u = c.eval(s, p, FIELD_TOL)?;
            tv += u.dist(&prev);
            prev = u;
        }
    }
    Ok(tv)
}

/// `sum |alpha|` over the weak waves crossing row `h`.
pub fn weak_tv(row: &SchemeState) -> f64 {
    row.waves.iter().map(|w| w.strength.abs()).sum()
}

pub fn total_variation(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Least-squares line through the origin; `r2` is measured against the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OriginFit {
    pub slope: f64,
    pub r2: f64,
}

pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> OriginFit {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let slope = sxy / sxx;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    OriginFit { slope, r2 }
}

/// Slope of `ln y` against `ln x` by least squares.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Gaps of `(u~, v~, c~^2, s0, b0)` to their hypersonic limits
/// `(cos^2 t, sin t cos t, c0^2, tan t, tan t)`; profile gaps are sup-norms.
pub fn background_limit_gaps(bg: &BackgroundSolution, p: &FlowParams) -> Result<[f64; 5]> {
    let ls = attached_state(bg.p0, p)?;
    let t = ls.theta0;
    let (ul, vl, cl) = (t.cos().powi(2), t.sin() * t.cos(), ls.c0 * ls.c0);
    let mut gaps = [0.0; 5];
    for (_, u) in bg.profile.states() {
        gaps[0] = f64::max(gaps[0], (u.u - ul).abs());
        gaps[1] = f64::max(gaps[1], (u.v - vl).abs());
        gaps[2] = f64::max(gaps[2], (p.sound_speed_sq(u) - cl).abs());
    }
    gaps[3] = (bg.s0 - t.tan()).abs();
    gaps[4] = (bg.b0 - t.tan()).abs();
    Ok(gaps)
}

/// Far-field state for a surface pressure tending to `p_b_inf`.
#[derive(Clone, Debug)]
pub struct AsymptoticState {
    pub p_b_inf: f64,
    pub s_inf: f64,
    pub b_prime_inf: f64,
    pub profile: SelfSimilarProfile,
}

impl AsymptoticState {
    /// `U~(sigma; s_inf, G(s_inf))`, continued by the ODE outside `[s_inf, b'_inf]`.
    pub fn eval(&self, sigma: f64, p: &FlowParams) -> Result<GasState> {
        if sigma < self.s_inf {
            selfsim::evolve_tol(self.profile.start(), self.s_inf, sigma, p, FIELD_TOL)
        } else if sigma > self.b_prime_inf {
            selfsim::evolve_tol(self.profile.end(), self.b_prime_inf, sigma, p, FIELD_TOL)
        } else {
            Ok(self.profile.eval(sigma))
        }
    }

    pub fn identities(&self, p: &FlowParams) -> (f64, f64) {
        surface_identities(self.profile.end(), self.b_prime_inf, self.p_b_inf, p)
    }
}

pub fn asymptotic_state(p_b_inf: f64, p: &FlowParams) -> Result<AsymptoticState> {
    let bg = background_solution(p_b_inf, p)?;
    Ok(AsymptoticState { p_b_inf, s_inf: bg.s0, b_prime_inf: bg.b0, profile: bg.profile })
}

/// Slip `U.(-b', 1)` and Bernoulli residual of a surface state at pressure
/// `p_b`.
pub fn surface_identities(u: GasState, bprime: f64, p_b: f64, p: &FlowParams) -> (f64, f64) {
    let slip = u.v - bprime * u.u;
    let bern = 0.5 * (u.speed_sq() - p.speed_sq_of_pressure(p_b));
    (slip, bern)
}

/// Identities at fitted limits: `U~(b'; s, G(s))` is integrated from the
/// front state of slope `s`.
pub fn identities_at(s: f64, bprime: f64, p_b: f64, p: &FlowParams) -> Result<(f64, f64)> {
    let g = crate::polar::state_behind_shock(s, p)?.behind;
    let u = selfsim::evolve_tol(g, s, bprime, p, FIELD_TOL)?;
    Ok(surface_identities(u, bprime, p_b, p))
}

/// Mean of the last `frac` of a sequence.
pub fn tail_mean(xs: &[f64], frac: f64) -> f64 {
    let k = ((xs.len() as f64 * frac).ceil() as usize).clamp(1, xs.len());
    xs[xs.len() - k..].iter().sum::<f64>() / k as f64
}

/// Sup over the cells of row `h` of `|U - U~(sigma; s_inf, G(s_inf))|`.
pub fn asymptotic_deviation(traj: &Trajectory, h: usize, asym: &AsymptoticState, p: &FlowParams) -> Result<f64> {
    let row = &traj.rows[h];
    let mut dev: f64 = 0.0;
    for c in &row.cells {
        for s in [c.lo, c.anchor.clamp(c.lo, c.hi), 0.5 * (c.lo + c.hi), c.hi] {
            let u = c.eval(s, p, FIELD_TOL)?;
            dev = dev.max(u.dist(&asym.eval(s, p)?));
        }
    }
    Ok(dev)
}

/// Separable bump `B((x - xc)/rx) B((y/x - sc)/rs)` with `B(t) = (1 - t^2)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub xc: f64,
    pub rx: f64,
    pub sc: f64,
    pub rs: f64,
}

fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let a = 1.0 - t * t;
    (a * a, -4.0 * t * a)
}

impl TestFunction {
    /// `(phi, phi_x, phi_y)`.
    pub fn eval(&self, x: f64, y: f64) -> [f64; 3] {
        let s = y / x;
        let (a, da) = bump((x - self.xc) / self.rx);
        let (b, db) = bump((s - self.sc) / self.rs);
        let bs = db / self.rs;
        [a * b, da / self.rx * b - a * bs * s / x, a * bs / x]
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xc - self.rx, self.xc + self.rx)
    }

    pub fn sigma_range(&self) -> (f64, f64) {
        (self.sc - self.rs, self.sc + self.rs)
    }
}

/// Three bumps inside the layer over a run of length `len` from `x0`.
pub fn default_test_functions(x0: f64, len: f64, bg: &BackgroundSolution) -> Vec<TestFunction> {
    let w = bg.b0 - bg.s0;
    vec![
        TestFunction { xc: x0 + 0.3 * len, rx: 0.25 * len, sc: bg.s0 + 0.2 * w, rs: 0.6 * w },
        TestFunction { xc: x0 + 0.6 * len, rx: 0.3 * len, sc: bg.s0 + 0.4 * w, rs: 0.4 * w },
        TestFunction { xc: x0 + 0.5 * len, rx: 0.4 * len, sc: bg.s0, rs: 0.5 * w },
    ]
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residual {
    pub mass: f64,
    pub curl: f64,
}

impl std::ops::Sub for Residual {
    type Output = Residual;
    fn sub(self, o: Residual) -> Residual {
        Residual { mass: self.mass - o.mass, curl: self.curl - o.curl }
    }
}

/// Weak-form integrals split into the jumps of the sampled data at the mesh
/// rows and the remainder, which is the consistency defect of the strips.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeakResidual {
    pub total: Residual,
    pub sampling: Residual,
}

impl WeakResidual {
    pub fn consistency(&self) -> Residual {
        self.total - self.sampling
    }
}

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
const GAUSS3: [(f64, f64); 3] =
    [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// Checks that the support lies in `x0 <= x <= x_N` below the surface.
pub fn check_support(traj: &Trajectory, tf: &TestFunction) -> Result<()> {
    let (xa, xb) = tf.x_range();
    let (first, last) = (traj.rows.first(), traj.rows.last());
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::Support("empty trajectory".into()));
    };
    if xa < first.x || xb > last.x {
        return Err(Error::Support(format!("x in [{xa}, {xb}] outside [{}, {}]", first.x, last.x)));
    }
    let top = tf.sigma_range().1;
    for r in traj.rows.iter().filter(|r| r.x >= xa - traj.grid.dx && r.x <= xb + traj.grid.dx) {
        if top >= r.sigma_b() {
            return Err(Error::Support(format!("sigma {top} reaches the surface {} at x = {}", r.sigma_b(), r.x)));
        }
    }
    Ok(())
}

/// Both weak-form integrals of the strip fields against `tf`.
pub fn weak_form_residual(traj: &Trajectory, tf: &TestFunction, p: &FlowParams) -> Result<WeakResidual> {
    Ok(weak_form_residuals(traj, std::slice::from_ref(tf), p)?[0])
}

/// As [`weak_form_residual`] for several test functions sharing the field
/// evaluations.
pub fn weak_form_residuals(traj: &Trajectory, tfs: &[TestFunction], p: &FlowParams) -> Result<Vec<WeakResidual>> {
    let total = strip_integrals(traj, tfs, p)?;
    let sampling = row_jumps(traj, tfs, p)?;
    Ok(total.into_iter().zip(sampling).map(|(total, sampling)| WeakResidual { total, sampling }).collect())
}

struct Support {
    xa: f64,
    xb: f64,
    sa: f64,
    sb: f64,
    rs: f64,
}

fn support(tfs: &[TestFunction]) -> Support {
    Support {
        xa: tfs.iter().map(|t| t.x_range().0).fold(f64::INFINITY, f64::min),
        xb: tfs.iter().map(|t| t.x_range().1).fold(f64::NEG_INFINITY, f64::max),
        sa: tfs.iter().map(|t| t.sigma_range().0).fold(f64::INFINITY, f64::min),
        sb: tfs.iter().map(|t| t.sigma_range().1).fold(f64::NEG_INFINITY, f64::max),
        rs: tfs.iter().map(|t| t.rs).fold(f64::INFINITY, f64::min),
    }
}

/// Segments of the column at `x` with `brk` and the supports as breakpoints.
fn column(mut brk: Vec<f64>, tfs: &[TestFunction], x: f64, rs: f64) -> Vec<(f64, f64)> {
    for tf in tfs {
        let (lo, hi) = tf.sigma_range();
        brk.extend([lo * x, hi * x]);
    }
    brk.sort_by(f64::total_cmp);
    brk.windows(2).flat_map(|s| subdivide(s[0], s[1], 0.25 * rs * x)).collect()
}

/// `sum_h int phi(x_h, y) [F(x_h-) - F(x_h+)] dy` with `F = rho u` and `F = v`.
fn row_jumps(traj: &Trajectory, tfs: &[TestFunction], p: &FlowParams) -> Result<Vec<Residual>> {
    let sup = support(tfs);
    let mut out = vec![Residual::default(); tfs.len()];
    for (st, row) in traj.steps.iter().zip(traj.rows.iter().skip(1)) {
        let x = row.x;
        if x <= sup.xa || x >= sup.xb {
            continue;
        }
        let (ya, yb) = (sup.sa * x, sup.sb * x);
        let mut brk = breakpoints(st, x, ya, yb);
        brk.push(row.chi.clamp(ya, yb));
        for c in &row.cells {
            brk.extend([c.lo * x, c.hi * x].iter().map(|y| y.clamp(ya, yb)));
        }
        for (a, b) in column(brk, tfs, x, sup.rs) {
            for (gy, wy) in GAUSS3 {
                let y = 0.5 * (a + b) + 0.5 * (b - a) * gy;
                let w = 0.5 * (b - a) * wy;
                let ul = st.field(x, y, p, FIELD_TOL)?;
                let ur = row.field(y / x, p, FIELD_TOL)?;
                let dm = p.density(ul)? * ul.u - p.density(ur)? * ur.u;
                for (tf, r) in tfs.iter().zip(out.iter_mut()) {
                    let f = tf.eval(x, y)[0];
                    r.mass += w * f * dm;
                    r.curl += w * f * (ul.v - ur.v);
                }
            }
        }
    }
    Ok(out)
}

fn strip_integrals(traj: &Trajectory, tfs: &[TestFunction], p: &FlowParams) -> Result<Vec<Residual>> {
    for tf in tfs {
        check_support(traj, tf)?;
    }
    let Support { xa, xb, sa, sb, rs } = support(tfs);
    let mut out = vec![Residual::default(); tfs.len()];
    for st in &traj.steps {
        let (x0, x1) = (st.x, st.x + st.dx);
        if x1 <= xa || x0 >= xb {
            continue;
        }
        for (gx, wx) in GAUSS2 {
            let x = 0.5 * (x0 + x1) + 0.5 * st.dx * gx;
            let wx = 0.5 * st.dx * wx;
            for (ya, yb) in column(breakpoints(st, x, sa * x, sb * x), tfs, x, rs) {
                for (gy, wy) in GAUSS3 {
                    let y = 0.5 * (ya + yb) + 0.5 * (yb - ya) * gy;
                    let w = wx * 0.5 * (yb - ya) * wy;
                    let u = st.field(x, y, p, FIELD_TOL)?;
                    let rho = p.density(u)?;
                    for (tf, r) in tfs.iter().zip(out.iter_mut()) {
                        let [f, fx, fy] = tf.eval(x, y);
                        if f == 0.0 && fx == 0.0 && fy == 0.0 {
                            continue;
                        }
                        r.mass += w * (rho * u.u * fx + rho * u.v * fy - rho * u.v / y * f);
                        r.curl += w * (u.v * fx - u.u * fy);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn subdivide(a: f64, b: f64, hmax: f64) -> impl Iterator<Item = (f64, f64)> {
    let n = ((b - a) / hmax).ceil().max(1.0) as usize;
    let d = (b - a) / n as f64;
    (0..n).map(move |k| (a + k as f64 * d, if k + 1 == n { b } else { a + (k + 1) as f64 * d }))
}

/// Ordinates in `[ya, yb]` where the strip field is not smooth at abscissa `x`.
fn breakpoints(st: &StepRecord, x: f64, ya: f64, yb: f64) -> Vec<f64> {
    let t = x - st.x;
    let mut ys = vec![ya, yb, st.chi_at(x)];
    for f in &st.fans {
        let y0 = f.sigma * st.x;
        for w in &f.fan.waves {
            ys.push(y0 + w.speed_lo * t);
            if w.kind == WaveType::Rarefaction {
                ys.push(y0 + w.speed_hi * t);
            }
        }
    }
    for pair in st.fans.windows(2) {
        ys.push(0.5 * (pair[0].sigma + pair[1].sigma) * x);
    }
    let mut ys: Vec<f64> = ys.into_iter().filter(|y| *y >= ya && *y <= yb).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1.0));
    ys
}

/// Lax margins and density jumps over every shock issued by a step.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    /// `(h, min Lax margin)` for steps that issued a shock.
    pub rows: Vec<(usize, f64)>,
    pub shocks: usize,
    pub min_lax_margin: f64,
    pub min_compression: f64,
    pub strong_min_margin: f64,
}

impl EntropyReport {
    pub fn admissible(&self) -> bool {
        self.min_lax_margin > 0.0 && self.min_compression > 0.0
    }
}

/// Shocks weaker than this carry no measurable margin in double precision.
pub const AUDIT_FLOOR: f64 = 1e-10;

pub fn entropy_audit(traj: &Trajectory, p: &FlowParams) -> Result<EntropyReport> {
    let mut rep = EntropyReport {
        rows: Vec::new(),
        shocks: 0,
        min_lax_margin: f64::INFINITY,
        min_compression: f64::INFINITY,
        strong_min_margin: f64::INFINITY,
    };
    for st in &traj.steps {
        let mut row_min = f64::INFINITY;
        for f in &st.fans {
            for (k, w) in f.fan.waves.iter().enumerate() {
                let strong = w.kind == WaveType::StrongShock;
                if w.kind == WaveType::Rarefaction || (!strong && w.strength.abs() < AUDIT_FLOOR) {
                    continue;
                }
                let (Some(m), Some(c)) = (riemann::lax_margin(&f.fan, k, p)?, riemann::compression(&f.fan, k, p)?)
                else {
                    continue;
                };
                rep.shocks += 1;
                row_min = row_min.min(m);
                rep.min_compression = rep.min_compression.min(c);
                if strong {
                    rep.strong_min_margin = rep.strong_min_margin.min(m);
                }
            }
        }
        if row_min.is_finite() {
            rep.rows.push((st.h, row_min));
            rep.min_lax_margin = rep.min_lax_margin.min(row_min);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::critical_pressure;
    use crate::scheme::{discretize_pressure, PressureCurve, Scheme, SchemeConfig};

    fn background_run(steps: usize) -> (FlowParams, BackgroundSolution, Trajectory) {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let bg = background_solution(critical_pressure(1.4).unwrap() / 2.0, &p).unwrap();
        let cfg = SchemeConfig { steps, dx: 0.02, ..Default::default() };
        let grid = crate::scheme::build_grid(cfg.x0, cfg.dx, None, &bg, &p).unwrap();
        let sched = discretize_pressure(&PressureCurve::constant(bg.p0), &grid, steps, bg.p0).unwrap();
        let t = Scheme::new(p, &bg, &sched, cfg).unwrap().run().unwrap();
        (p, bg, t)
    }

    #[test]
    fn origin_fit_of_exact_line() {
        let f = fit_through_origin(&[1.0, 2.0, 4.0], &[3.0, 6.0, 12.0]);
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((loglog_slope(&[1.0, 10.0, 100.0], &[1.0, 1e-2, 1e-4]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn bump_derivatives() {
        let tf = TestFunction { xc: 1.1, rx: 0.05, sc: -0.95, rs: 0.01 };
        let (x, y, h) = (1.12, -0.95 * 1.12 + 0.003, 1e-7);
        let [_, fx, fy] = tf.eval(x, y);
        let dx = (tf.eval(x + h, y)[0] - tf.eval(x - h, y)[0]) / (2.0 * h);
        let dy = (tf.eval(x, y + h)[0] - tf.eval(x, y - h)[0]) / (2.0 * h);
        assert!((fx - dx).abs() < 1e-5 * fx.abs().max(1.0));
        assert!((fy - dy).abs() < 1e-5 * fy.abs().max(1.0));
    }

    #[test]
    fn background_diagnostics() {
        let (p, bg, t) = background_run(20);
        let tv0 = tv_slice(&t, 0, &p).unwrap();
        let jump = bg.shock_state().dist(&p.u_inf());
        assert!(tv0 >= jump);
        for h in 1..t.rows.len() {
            assert!((tv_slice(&t, h, &p).unwrap() - tv0).abs() < 1e-8);
            assert!(weak_tv(&t.rows[h]) < 1e-12);
        }
        let asym = asymptotic_state(bg.p0, &p).unwrap();
        assert_eq!(asym.s_inf, bg.s0);
        let (slip, bern) = asym.identities(&p);
        assert!(slip.abs() < 1e-9 && bern.abs() < 1e-9, "{slip:e} {bern:e}");
        for h in [0, 10, 20] {
            assert!(asymptotic_deviation(&t, h, &asym, &p).unwrap() < 1e-8);
        }
        let rep = entropy_audit(&t, &p).unwrap();
        assert!(rep.admissible() && rep.strong_min_margin > 0.0);
    }

    #[test]
    fn residual_of_background_is_small() {
        let (p, bg, t) = background_run(20);
        let x1 = t.rows.last().unwrap().x;
        let mid = 0.5 * (bg.s0 + bg.b0);
        let w = bg.b0 - bg.s0;
        let below = TestFunction { xc: 1.2, rx: 0.1, sc: bg.s0 - 2.0 * w, rs: w };
        let across = TestFunction { xc: 1.2, rx: 0.1, sc: mid - 0.25 * w, rs: 0.6 * w };
        let r = weak_form_residuals(&t, &[below, across], &p).unwrap();
        let (r0, r1) = (r[0].total, r[1].total);
        assert!(r0.mass.abs() < 1e-12 && r0.curl.abs() < 1e-12, "{r0:?}");
        let s = r[1].sampling;
        assert!(s.mass.abs() < 1e-10 && s.curl.abs() < 1e-8, "{s:?}");
        assert!(r1.mass.abs() < 1e-10 && r1.curl.abs() < 1e-8, "{r1:?}");
        let out = TestFunction { xc: x1, ..across };
        assert!(matches!(weak_form_residual(&t, &out, &p), Err(Error::Support(_))));
        let high = TestFunction { sc: bg.b0, ..across };
        assert!(matches!(weak_form_residual(&t, &high, &p), Err(Error::Support(_))));
    }

    #[test]
    fn hypersonic_gaps_shrink() {
        let g = 2.0;
        let mut gaps = Vec::new();
        for m in [1e2, 1e3] {
            let p = FlowParams::new(g, m).unwrap();
            let bg = background_solution(critical_pressure(g).unwrap() / 4.0, &p).unwrap();
            gaps.push(background_limit_gaps(&bg, &p).unwrap());
        }
        for k in 0..5 {
            assert!(gaps[1][k] < 0.05 * gaps[0][k], "{k}: {gaps:?}");
        }
    }
}
