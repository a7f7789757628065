//! Elementary wave curves and the three Riemann-type solvers.

use crate::error::{Error, Result};
use crate::gas::{det, FlowParams, GasState};
use crate::ode::{self, OdeOptions};
use crate::polar;

pub const CURVE_RADIUS: f64 = 0.3;
/// Below this strength the shock and rarefaction branches agree to round-off.
const TINY_SHOCK: f64 = 1e-5;
const FD_STEP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanKind {
    WeakPair,
    Boundary,
    StrongShock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveType {
    Shock,
    Rarefaction,
    StrongShock,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    pub family: usize,
    /// `alpha` for weak waves, the shock slope for the strong shock.
    pub strength: f64,
    pub kind: WaveType,
    /// Slowest and fastest speeds (equal for shocks).
    pub speed_lo: f64,
    pub speed_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFan {
    pub kind: FanKind,
    pub waves: Vec<Wave>,
    /// `states[k]` lies below wave `k`; the last entry is the right state.
    pub states: Vec<GasState>,
}

impl WaveFan {
    pub fn left(&self) -> GasState {
        self.states[0]
    }

    pub fn right(&self) -> GasState {
        self.states[self.states.len() - 1]
    }

    /// Strength of the weak wave of family `i`, zero if absent.
    pub fn weak(&self, i: usize) -> f64 {
        self.waves.iter().filter(|w| w.family == i && w.kind != WaveType::StrongShock).map(|w| w.strength).sum()
    }

    pub fn strengths(&self) -> (f64, f64) {
        (self.weak(1), self.weak(2))
    }
}

fn check_radius(alpha: f64, radius: f64) -> Result<()> {
    if !(alpha.abs() <= radius) {
        return Err(Error::CurveRange { alpha, radius });
    }
    Ok(())
}

fn rarefaction(alpha: f64, i: usize, u: GasState, p: &FlowParams) -> Result<GasState> {
    let opts = OdeOptions { rtol: 1e-13, atol: 1e-15, max_steps: 100_000 };
    let y = ode::solve_to(|_, y| p.right_eigenvector(GasState::from_array(y), i), 0.0, u.to_array(), alpha, &opts)?;
    Ok(GasState::from_array(y))
}

/// Hugoniot residual `[u][rho u] + [v][rho v]`, the jump relations with the
/// shock slope eliminated.
fn hugoniot(u: GasState, w: GasState, rho_u: f64, p: &FlowParams) -> Result<f64> {
    let rho_w = p.density(w)?;
    Ok((w.u - u.u) * (rho_w * w.u - rho_u * u.u) + (w.v - u.v) * (rho_w * w.v - rho_u * u.v))
}

fn shock_branch(alpha: f64, i: usize, u: GasState, p: &FlowParams) -> Result<GasState> {
    let rho_u = p.density(u)?;
    let lam = p.eigenvalue(u, i)?;
    let r = p.right_eigenvector(u, i)?;
    let rn = (r[0] * r[0] + r[1] * r[1]).sqrt();
    // unknowns: jump length t and direction phi
    let mut x = [alpha * rn, r[1].atan2(r[0])];
    let eval = |x: [f64; 2]| -> Result<[f64; 2]> {
        let w = GasState::new(u.u + x[0] * x[1].cos(), u.v + x[0] * x[1].sin());
        let h = hugoniot(u, w, rho_u, p)? / (rho_u * x[0] * x[0]);
        Ok([h, p.eigenvalue(w, i)? - lam - alpha])
    };
    let mut f = eval(x)?;
    for _ in 0..60 {
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let hk = FD_STEP * x[k].abs().max(if k == 0 { alpha.abs() } else { 1.0 });
            let mut xp = x;
            let mut xm = x;
            xp[k] += hk;
            xm[k] -= hk;
            let fp = eval(xp)?;
            let fm = eval(xm)?;
            jac[0][k] = (fp[0] - fm[0]) / (2.0 * hk);
            jac[1][k] = (fp[1] - fm[1]) / (2.0 * hk);
        }
        let d = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let dx0 = (f[0] * jac[1][1] - f[1] * jac[0][1]) / d;
        let dx1 = (jac[0][0] * f[1] - jac[1][0] * f[0]) / d;
        let mut lam_step = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let xn = [x[0] - lam_step * dx0, x[1] - lam_step * dx1];
            if let Ok(fnew) = eval(xn) {
                if fnew[0].abs() + fnew[1].abs() < f[0].abs() + f[1].abs() || lam_step < 1e-3 {
                    x = xn;
                    f = fnew;
                    accepted = true;
                    break;
                }
            }
            lam_step *= 0.5;
        }
        if !accepted {
            break;
        }
        if (dx0.abs() <= 1e-15 * x[0].abs() && dx1.abs() <= 1e-15) || f[0].abs() + f[1].abs() < 1e-15 {
            break;
        }
    }
    if f[1].abs() > 1e-11 || f[0].abs() > 1e-9f64.max(1e-14 / x[0].abs()) {
        return Err(Error::Convergence { what: "shock curve", iters: 60, residual: f[0].abs() + f[1].abs() });
    }
    Ok(GasState::new(u.u + x[0] * x[1].cos(), u.v + x[0] * x[1].sin()))
}

/// `Phi_i(alpha; U)`: rarefaction for `alpha > 0`, admissible shock for `alpha < 0`.
/// Along both branches `lambda_i` changes by exactly `alpha`.
pub fn wave_curve_with(alpha: f64, i: usize, u: GasState, p: &FlowParams, radius: f64) -> Result<GasState> {
    check_radius(alpha, radius)?;
    p.check_supersonic(u)?;
    if alpha == 0.0 {
        return Ok(u);
    }
    let w =
        if alpha > 0.0 || alpha > -TINY_SHOCK { rarefaction(alpha, i, u, p)? } else { shock_branch(alpha, i, u, p)? };
    p.check_supersonic(w)?;
    Ok(w)
}

pub fn wave_curve(alpha: f64, i: usize, u: GasState, p: &FlowParams) -> Result<GasState> {
    wave_curve_with(alpha, i, u, p, CURVE_RADIUS)
}

/// `Phi(a1, a2; U) = Phi_2(a2; Phi_1(a1; U))`.
pub fn phi(a1: f64, a2: f64, u: GasState, p: &FlowParams) -> Result<GasState> {
    let m = wave_curve(a1, 1, u, p)?;
    wave_curve(a2, 2, m, p)
}

/// Slope of the discontinuity joining `l` and `r`.
pub fn shock_speed(l: GasState, r: GasState) -> f64 {
    -(r.u - l.u) / (r.v - l.v)
}

fn make_wave(family: usize, alpha: f64, l: GasState, r: GasState, p: &FlowParams) -> Result<Wave> {
    let ll = p.eigenvalue(l, family)?;
    let lr = p.eigenvalue(r, family)?;
    if alpha >= 0.0 {
        Ok(Wave { family, strength: alpha, kind: WaveType::Rarefaction, speed_lo: ll, speed_hi: lr })
    } else {
        let sp = if -alpha < TINY_SHOCK { 0.5 * (ll + lr) } else { shock_speed(l, r) };
        Ok(Wave { family, strength: alpha, kind: WaveType::Shock, speed_lo: sp, speed_hi: sp })
    }
}

pub fn weak_fan(a1: f64, a2: f64, l: GasState, p: &FlowParams) -> Result<WaveFan> {
    let m = wave_curve(a1, 1, l, p)?;
    let r = wave_curve(a2, 2, m, p)?;
    Ok(WaveFan {
        kind: FanKind::WeakPair,
        waves: vec![make_wave(1, a1, l, m, p)?, make_wave(2, a2, m, r, p)?],
        states: vec![l, m, r],
    })
}

fn solve2<F>(mut f: F, x0: [f64; 2], scale: [f64; 2], what: &'static str, tol: f64) -> Result<[f64; 2]>
where
    F: FnMut([f64; 2]) -> Result<[f64; 2]>,
{
    let mut x = x0;
    let mut r = f(x)?;
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    for _ in 0..50 {
        if norm(r) < tol {
            return Ok(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let hk = FD_STEP * scale[k].max(x[k].abs());
            let mut xp = x;
            let mut xm = x;
            xp[k] += hk;
            xm[k] -= hk;
            let fp = f(xp)?;
            let fm = f(xm)?;
            jac[0][k] = (fp[0] - fm[0]) / (2.0 * hk);
            jac[1][k] = (fp[1] - fm[1]) / (2.0 * hk);
        }
        let d = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Convergence { what, iters: 0, residual: norm(r) });
        }
        let dx = [(r[0] * jac[1][1] - r[1] * jac[0][1]) / d, (jac[0][0] * r[1] - jac[1][0] * r[0]) / d];
        let mut t = 1.0;
        loop {
            let xn = [x[0] - t * dx[0], x[1] - t * dx[1]];
            match f(xn) {
                Ok(rn) if norm(rn) < norm(r) || t < 1e-4 => {
                    x = xn;
                    r = rn;
                    break;
                }
                Err(e) if t < 1e-4 => return Err(e),
                _ => t *= 0.5,
            }
        }
        if dx[0].abs() <= 1e-16 * scale[0].max(x[0].abs()) && dx[1].abs() <= 1e-16 * scale[1].max(x[1].abs()) {
            break;
        }
    }
    if norm(r) < tol * 1e3 {
        return Ok(x);
    }
    Err(Error::Convergence { what, iters: 50, residual: norm(r) })
}

/// Weak-wave Riemann problem: `U_r = Phi(a1, a2; U_l)`.
pub fn solve_riemann(l: GasState, r: GasState, p: &FlowParams) -> Result<WaveFan> {
    if l == r {
        return weak_fan(0.0, 0.0, l, p);
    }
    // linearized start
    let r1 = p.right_eigenvector(l, 1)?;
    let r2 = p.right_eigenvector(l, 2)?;
    let d = [r.u - l.u, r.v - l.v];
    let dd = det(r1, r2);
    let x0 = [det(d, r2) / dd, det(r1, d) / dd];
    let x = solve2(
        |a| {
            let w = phi(a[0], a[1], l, p)?;
            Ok([w.u - r.u, w.v - r.v])
        },
        x0,
        [1e-3, 1e-3],
        "riemann",
        1e-13,
    )?;
    weak_fan(x[0], x[1], l, p)
}

/// `|delta - alpha - beta|` (l1 over families) for the wave pattern
/// `alpha` on the left of `beta`, `delta` being the resolved pair.
pub fn interaction_error(alpha: (f64, f64), beta: (f64, f64), l: GasState, p: &FlowParams) -> Result<f64> {
    let m = phi(alpha.0, alpha.1, l, p)?;
    let r = phi(beta.0, beta.1, m, p)?;
    let (d1, d2) = solve_riemann(l, r, p)?.strengths();
    Ok((d1 - alpha.0 - beta.0).abs() + (d2 - alpha.1 - beta.1).abs())
}

/// Reflection off the boundary: `p(Phi_1(delta; U_l)) = p_target`.
pub fn solve_boundary(l: GasState, p_target: f64, p: &FlowParams) -> Result<(f64, GasState)> {
    solve_boundary_speed(l, p.speed_sq_of_pressure(p_target), p)
}

/// `|Phi_1(delta; U_l)|^2 = q2`.
pub fn solve_boundary_speed(l: GasState, q2: f64, p: &FlowParams) -> Result<(f64, GasState)> {
    let f = |d: f64| -> Result<f64> {
        let w = wave_curve(d, 1, l, p)?;
        Ok(w.speed_sq() - q2)
    };
    let r1 = p.right_eigenvector(l, 1)?;
    let slope0 = 2.0 * l.dot(r1);
    let mut d = -(l.speed_sq() - q2) / slope0;
    let mut res = f(d)?;
    for _ in 0..50 {
        if res.abs() < 1e-15 {
            break;
        }
        let h = FD_STEP * d.abs().max(1e-3);
        let df = (f(d + h)? - f(d - h)?) / (2.0 * h);
        let step = res / df;
        let mut t = 1.0;
        loop {
            let dn = d - t * step;
            match f(dn) {
                Ok(rn) if rn.abs() < res.abs() || t < 1e-4 => {
                    d = dn;
                    res = rn;
                    break;
                }
                Err(e) if t < 1e-4 => return Err(e),
                _ => t *= 0.5,
            }
        }
        if step.abs() <= 1e-16 * d.abs().max(1e-12) {
            break;
        }
    }
    if res.abs() > 1e-12 {
        return Err(Error::Convergence { what: "boundary", iters: 50, residual: res });
    }
    Ok((d, wave_curve(d, 1, l, p)?))
}

pub fn boundary_fan(l: GasState, delta: f64, p: &FlowParams) -> Result<WaveFan> {
    let ub = wave_curve(delta, 1, l, p)?;
    Ok(WaveFan { kind: FanKind::Boundary, waves: vec![make_wave(1, delta, l, ub, p)?], states: vec![l, ub] })
}

/// Strong shock from `U_inf` followed by a weak 2-wave: `Phi_2(beta2; G(s1)) = U_r`.
pub fn solve_strong_shock(r: GasState, s_guess: f64, p: &FlowParams) -> Result<(f64, f64)> {
    let x = solve2(
        |x| {
            let g = polar::state_behind_shock(x[0], p)?.behind;
            let w = wave_curve(x[1], 2, g, p)?;
            Ok([w.u - r.u, w.v - r.v])
        },
        [s_guess, 0.0],
        [1.0, 1e-3],
        "strong shock",
        1e-13,
    )?;
    Ok((x[0], x[1]))
}

pub fn strong_shock_fan(s1: f64, beta2: f64, p: &FlowParams) -> Result<WaveFan> {
    let g = polar::state_behind_shock(s1, p)?.behind;
    let r = wave_curve(beta2, 2, g, p)?;
    let strong = Wave { family: 1, strength: s1, kind: WaveType::StrongShock, speed_lo: s1, speed_hi: s1 };
    Ok(WaveFan {
        kind: FanKind::StrongShock,
        waves: vec![strong, make_wave(2, beta2, g, r, p)?],
        states: vec![p.u_inf(), g, r],
    })
}

/// Value of the fan along the ray of slope `eta`.
pub fn sample_fan(fan: &WaveFan, eta: f64, p: &FlowParams) -> Result<GasState> {
    for (k, w) in fan.waves.iter().enumerate() {
        if eta < w.speed_lo {
            return Ok(fan.states[k]);
        }
        if w.kind == WaveType::Rarefaction && eta < w.speed_hi {
            let l = fan.states[k];
            let a = eta - p.eigenvalue(l, w.family)?;
            return wave_curve(a.clamp(0.0, w.strength), w.family, l, p);
        }
    }
    Ok(fan.right())
}

/// `lambda_i(right) < speed < lambda_i(left)` margin of a shock, or `None`
/// for a rarefaction.
pub fn lax_margin(fan: &WaveFan, k: usize, p: &FlowParams) -> Result<Option<f64>> {
    let w = fan.waves[k];
    if w.kind == WaveType::Rarefaction {
        return Ok(None);
    }
    let l = fan.states[k];
    let r = fan.states[k + 1];
    let ll = p.eigenvalue(l, w.family)?;
    let lr = p.eigenvalue(r, w.family)?;
    Ok(Some((w.speed_lo - lr).min(ll - w.speed_lo)))
}

/// Density increase in the flow direction across shock `k` (1-shocks are
/// entered from below, 2-shocks from above).
pub fn compression(fan: &WaveFan, k: usize, p: &FlowParams) -> Result<Option<f64>> {
    let w = fan.waves[k];
    if w.kind == WaveType::Rarefaction {
        return Ok(None);
    }
    let rl = p.density(fan.states[k])?;
    let rr = p.density(fan.states[k + 1])?;
    Ok(Some(if w.family == 1 { rr - rl } else { rl - rr }))
}
