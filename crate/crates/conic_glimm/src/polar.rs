//! The strong 1-shock polar through the incoming state.

use crate::error::{Error, Result};
use crate::gas::{FlowParams, GasState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShockSolution {
    pub s: f64,
    pub behind: GasState,
    pub rho_behind: f64,
    /// v - s u behind the shock, evaluated without cancellation.
    pub tangency_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitStates {
    pub p0: f64,
    pub rho0: f64,
    pub u_sharp: f64,
    pub v_sharp: f64,
    pub s_sharp: f64,
    pub u_a: f64,
    pub v_a: f64,
    pub c_a: f64,
    pub rho_d: f64,
    pub u_d: f64,
    pub v_d: f64,
    pub s_d: f64,
    pub u_flat: f64,
    pub v_flat: f64,
    pub c0: f64,
    pub theta0: f64,
    pub thetam0: f64,
}

pub fn critical_pressure(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma < 3.0) {
        return Err(Error::Domain(format!("gamma = {gamma} outside (1, 3)")));
    }
    let base = ((gamma + 7.0).sqrt() - (gamma - 1.0).sqrt()) * ((gamma - 1.0) / (16.0 * gamma)).sqrt();
    Ok(base.powf(2.0 * gamma / (gamma - 1.0)))
}

/// RH + Bernoulli residual divided by the trivial root, as a function of
/// the compression ratio excess `d = rho/rho_inf - 1`.
fn reduced_residual(s: f64, d: f64, p: &FlowParams) -> f64 {
    let g = p.gamma;
    let s2 = s * s;
    let kinetic = -s2 * (2.0 + d) / (2.0 * (1.0 + d) * (1.0 + d) * (1.0 + s2));
    let thermal = if d < 1e-8 { 1.0 + 0.5 * (g - 2.0) * d } else { ((g - 1.0) * d.ln_1p()).exp_m1() / ((g - 1.0) * d) };
    kinetic + p.c_inf * p.c_inf * thermal
}

fn velocities(s: f64, d: f64) -> (GasState, f64) {
    // rho_inf / rho_bar = 1/(1+d)
    let r = 1.0 / (1.0 + d);
    let s2 = s * s;
    let u = (1.0 + r * s2) / (1.0 + s2);
    let v = (1.0 - r) * s / (1.0 + s2);
    (GasState::new(u, v), -s * r)
}

pub fn state_behind_shock(s: f64, p: &FlowParams) -> Result<ShockSolution> {
    if !s.is_finite() || s >= 0.0 {
        return Err(Error::NoIntersection { s });
    }
    let lam1 = p.eigenvalues(p.u_inf())?.0;
    if s >= lam1 {
        return Err(Error::NoIntersection { s });
    }
    let rho_max = ((p.gamma - 1.0) * p.bernoulli / p.gamma).powf(1.0 / (p.gamma - 1.0));
    let d_max = rho_max / p.rho_inf - 1.0;
    let f0 = reduced_residual(s, 0.0, p);
    if f0 >= 0.0 {
        return Err(Error::NoIntersection { s });
    }
    // safeguarded Newton in ln(d)
    let mut lo = 1e-14f64.ln();
    let mut hi = d_max.ln();
    if reduced_residual(s, lo.exp(), p) >= 0.0 {
        lo = f64::MIN_POSITIVE.ln();
    }
    if reduced_residual(s, hi.exp(), p) <= 0.0 {
        return Err(Error::NoIntersection { s });
    }
    let phi = |t: f64| reduced_residual(s, t.exp(), p);
    let mut t = 0.5 * (lo + hi);
    let mut resid = f64::INFINITY;
    let mut converged = false;
    for _ in 0..200 {
        let f = phi(t);
        resid = f.abs();
        if f == 0.0 {
            converged = true;
            break;
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            converged = true;
            break;
        }
        let ht = 1e-6 * t.abs().max(1.0);
        let df = (phi(t + ht) - phi(t - ht)) / (2.0 * ht);
        let tn = t - f / df;
        if (tn - t).abs() <= 2.0 * f64::EPSILON * t.abs().max(1.0) && tn > lo && tn < hi {
            t = tn;
            resid = phi(t).abs();
            converged = true;
            break;
        }
        t = if tn > lo && tn < hi && tn.is_finite() { tn } else { 0.5 * (lo + hi) };
        if (t - lo).min(hi - t) <= 0.0 {
            t = 0.5 * (lo + hi);
        }
    }
    if !converged {
        return Err(Error::Convergence { what: "shock polar", iters: 200, residual: resid });
    }
    let d = t.exp();
    let (behind, gap) = velocities(s, d);
    let rho_behind = p.rho_inf * (1.0 + d);
    let sol = ShockSolution { s, behind, rho_behind, tangency_gap: gap };
    let c = (p.gamma * rho_behind.powf(p.gamma - 1.0)).sqrt();
    if behind.u <= c || !resid.is_finite() {
        return Err(Error::NoIntersection { s });
    }
    Ok(sol)
}

/// Residuals of the two jump conditions and of Bernoulli.
pub fn rh_residuals(sol: &ShockSolution, p: &FlowParams) -> [f64; 3] {
    let ShockSolution { s, behind, rho_behind, .. } = *sol;
    let mass = rho_behind * (behind.u * s - behind.v) - p.rho_inf * s;
    let curl = behind.u + behind.v * s - 1.0;
    let bern = p.bernoulli_residual(behind, rho_behind);
    [mass / rho_behind.max(1.0), curl, bern]
}

pub fn shock_polar_derivative_step(s: f64, p: &FlowParams, rel: f64) -> Result<[f64; 2]> {
    let h = rel * s.abs().max(1.0);
    let a = state_behind_shock(s + h, p)?.behind;
    let b = state_behind_shock(s - h, p)?.behind;
    Ok([(a.u - b.u) / (2.0 * h), (a.v - b.v) / (2.0 * h)])
}

pub fn shock_polar_derivative(s: f64, p: &FlowParams) -> Result<[f64; 2]> {
    shock_polar_derivative_step(s, p, 1e-6)
}

/// Slope of the polar point whose density is `rho` (closed form).
fn slope_at_density(rho: f64, c2: f64, p: &FlowParams) -> Result<f64> {
    let k = 2.0 * (c2 - p.c_inf * p.c_inf);
    let den = (p.gamma - 1.0) * (rho * rho - p.rho_inf * p.rho_inf) - k * rho * rho;
    if den <= 0.0 || k <= 0.0 {
        return Err(Error::Domain("no attached polar point at this density".into()));
    }
    Ok(-(k * rho * rho / den).sqrt())
}

pub fn attached_state(p0: f64, p: &FlowParams) -> Result<LimitStates> {
    let g = p.gamma;
    let pstar = critical_pressure(g)?;
    if !(p0 > 0.0 && p0 < pstar) {
        return Err(Error::Domain(format!("p0 = {p0} outside (0, p*) with p* = {pstar}")));
    }
    let rho0 = p0.powf(1.0 / g);
    let c0sq = g * p0.powf((g - 1.0) / g);
    let cinf2 = p.c_inf * p.c_inf;
    if g - 1.0 - 2.0 * (c0sq - cinf2) <= 0.0 {
        return Err(Error::Domain("M_inf too small for an attached limit state".into()));
    }
    let s_sharp = slope_at_density(rho0, c0sq, p)?;
    let r = p.rho_inf / rho0;
    let ss2 = s_sharp * s_sharp;
    let u_sharp = (1.0 + r * ss2) / (1.0 + ss2);
    let v_sharp = (1.0 - r) * s_sharp / (1.0 + ss2);
    let u_a = 1.0 / (1.0 + ss2);
    let v_a = s_sharp / (1.0 + ss2);
    let c_a = ((g - 1.0) * ss2 / (2.0 * (1.0 + ss2)) + cinf2).sqrt();

    // rho_d from rho0^(g-1) (rho_d^2 - rho_inf^2) = rho_d^(g+1) - rho_inf^(g+1),
    // in y = rho_d / rho0: y^2 (1 - y^(g-1)) = r^2 (1 - r^(g-1))
    let ri = p.rho_inf;
    let r = ri / rho0;
    let w = |y: f64| -y * y * ((g - 1.0) * y.ln()).exp_m1();
    let target = w(r);
    let f = |y: f64| w(y) - target;
    let ymax = (2.0 / (g + 1.0)).powf(1.0 / (g - 1.0));
    let (mut lo, mut hi) = if r < ymax { (ymax, 1.0) } else { (f64::MIN_POSITIVE, ymax) };
    if (r - ymax).abs() < 1e-12 || f(lo) * f(hi) > 0.0 {
        return Err(Error::Domain("rho_d identity has no root below rho0".into()));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-16 * hi {
            break;
        }
    }
    let rho_d = rho0 * 0.5 * (lo + hi);
    let c_d2 = g * rho_d.powf(g - 1.0);
    let s_d = slope_at_density(rho_d, c_d2, p)?;
    let rd = ri / rho_d;
    let sd2 = s_d * s_d;
    let u_d = (1.0 + rd * sd2) / (1.0 + sd2);
    let v_d = (1.0 - rd) * s_d / (1.0 + sd2);
    let theta0 = -(2.0 * c0sq / (g - 1.0 - 2.0 * c0sq)).sqrt().atan();
    let q0sq = 1.0 - 2.0 * c0sq / (g - 1.0);
    let thetam0 = (c0sq.sqrt() / (q0sq - c0sq).sqrt()).atan();
    Ok(LimitStates {
        p0,
        rho0,
        u_sharp,
        v_sharp,
        s_sharp,
        u_a,
        v_a,
        c_a,
        rho_d,
        u_d,
        v_d,
        s_d,
        u_flat: 1.0 / (1.0 + sd2),
        v_flat: s_d / (1.0 + sd2),
        c0: c0sq.sqrt(),
        theta0,
        thetam0,
    })
}

/// Residual of the defining identity of `rho_d`, relative to its terms.
pub fn rho_d_residual(ls: &LimitStates, p: &FlowParams) -> f64 {
    let g = p.gamma;
    let t = ls.rho_d / p.rho_inf;
    let lhs = (ls.rho0 / p.rho_inf).powf(g - 1.0);
    let rhs = (t.powf(g + 1.0) - 1.0) / (t * t - 1.0);
    (lhs - rhs) / lhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_pressure_values() {
        let p14 = critical_pressure(1.4).unwrap();
        assert!((p14 - 2.333e-4).abs() < 1e-6, "{p14}");
        let p2 = critical_pressure(2.0).unwrap();
        assert!((p2 - 1.0 / 64.0).abs() < 1e-15);
        assert!(critical_pressure(1.0 + 1e-3).unwrap() < 1e-100);
        assert!(critical_pressure(3.0).is_err());
    }

    #[test]
    fn residuals_vanish_along_branch() {
        for m in [5.0, 10.0, 1000.0] {
            let p = FlowParams::new(1.4, m).unwrap();
            let lam1 = p.eigenvalues(p.u_inf()).unwrap().0;
            for k in 1..40 {
                let s = lam1 - 0.02 * k as f64;
                if let Ok(sol) = state_behind_shock(s, &p) {
                    for r in rh_residuals(&sol, &p) {
                        assert!(r.abs() < 1e-10, "m={m} s={s} r={r}");
                    }
                    assert!(sol.rho_behind > p.rho_inf);
                    let gap = sol.behind.v - s * sol.behind.u;
                    assert!((gap - sol.tangency_gap).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weak_shock_limit() {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let lam1 = p.eigenvalues(p.u_inf()).unwrap().0;
        let sol = state_behind_shock(lam1 - 1e-7, &p).unwrap();
        assert!(sol.behind.dist(&p.u_inf()) < 1e-5);
        assert!(state_behind_shock(lam1 + 1e-3, &p).is_err());
    }

    #[test]
    fn monotone_branch() {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let lam1 = p.eigenvalues(p.u_inf()).unwrap().0;
        let mut prev: Option<ShockSolution> = None;
        for k in 0..100 {
            let s = lam1 - 0.001 - 0.008 * (99 - k) as f64;
            let sol = state_behind_shock(s, &p).unwrap();
            if let Some(pr) = prev {
                assert!(sol.rho_behind < pr.rho_behind);
                assert!(sol.behind.u > pr.behind.u);
            }
            prev = Some(sol);
        }
    }

    #[test]
    fn attached_limits_at_high_mach() {
        let g = 1.4;
        let p0 = critical_pressure(g).unwrap() / 2.0;
        let p = FlowParams::new(g, 1000.0).unwrap();
        let ls = attached_state(p0, &p).unwrap();
        let c0 = g * p0.powf((g - 1.0) / g);
        let ulim = 1.0 - 2.0 * c0 / (g - 1.0);
        let vlim = -(2.0 * c0 / (g - 1.0 - 2.0 * c0)).sqrt() * ulim;
        assert!((ls.u_sharp - ulim).abs() < 10.0 / 1e6);
        assert!((ls.v_sharp - vlim).abs() < 10.0 / 1e6);
        let sol = state_behind_shock(ls.s_sharp, &p).unwrap();
        assert!((sol.behind.u - ulim).abs() < 10.0 / 1e6);
        assert!(rho_d_residual(&ls, &p).abs() < 1e-10);
        assert!(ls.s_sharp < 0.0 && ls.s_d < 0.0);
        assert!(attached_state(2.0 * p0 * 1.01, &p).is_err());
    }

    #[test]
    fn c_a_approaches_c0_monotonically() {
        // at gamma = 1.4 the gap is O(M^-10) and lost in rounding; gamma = 2 makes it O(M^-4)
        let g = 2.0;
        let p0 = critical_pressure(g).unwrap() / 2.0;
        let mut gaps = vec![];
        for m in [1e2, 1e3, 1e4] {
            let p = FlowParams::new(g, m).unwrap();
            let ls = attached_state(p0, &p).unwrap();
            gaps.push(ls.c_a * ls.c_a - ls.c0 * ls.c0);
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] >= 0.0, "{gaps:?}");
        let p = FlowParams::new(1.4, 100.0).unwrap();
        let ls = attached_state(critical_pressure(1.4).unwrap() / 2.0, &p).unwrap();
        assert!((ls.c_a * ls.c_a - ls.c0 * ls.c0).abs() < 1e-14);
    }

    #[test]
    fn derivative_converges_quadratically() {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let s = -0.95;
        let exact = shock_polar_derivative_step(s, &p, 1e-5).unwrap();
        let a = shock_polar_derivative_step(s, &p, 4e-3).unwrap();
        let b = shock_polar_derivative_step(s, &p, 2e-3).unwrap();
        let ea = (a[0] - exact[0]).abs();
        let eb = (b[0] - exact[0]).abs();
        assert!(ea / eb > 3.0 && ea / eb < 5.0, "{}", ea / eb);
        let d = shock_polar_derivative(s, &p).unwrap();
        assert!(d[0] > 0.0);
    }
}
