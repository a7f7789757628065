//! Self-similar (conical) solutions `U(y/x)`, the apple curve and the
//! straight-cone background flow.

use crate::error::{Error, Result};
use crate::gas::{FlowParams, GasState};
use crate::ode::{self, Node, OdeOptions};
use crate::polar::{self, ShockSolution};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SelfSimilarProfile {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub nodes: Vec<Node>,
    pub params: FlowParams,
}

impl SelfSimilarProfile {
    pub fn eval(&self, sigma: f64) -> GasState {
        GasState::from_array(ode::hermite(&self.nodes, sigma))
    }

    pub fn start(&self) -> GasState {
        GasState::from_array(self.nodes[0].y)
    }

    pub fn end(&self) -> GasState {
        GasState::from_array(self.nodes[self.nodes.len() - 1].y)
    }

    /// Node-wise states, in integration order.
    pub fn states(&self) -> impl Iterator<Item = (f64, GasState)> + '_ {
        self.nodes.iter().map(|n| (n.t, GasState::from_array(n.y)))
    }

    /// Rows `sigma, u, v, rho, c, M` for CSV output.
    pub fn table(&self) -> Vec<[f64; 6]> {
        self.states()
            .map(|(s, st)| {
                let rho = self.params.density(st).unwrap_or(f64::NAN);
                let c = self.params.sound_speed(st).unwrap_or(f64::NAN);
                [s, st.u, st.v, rho, c, st.speed() / c]
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct BackgroundSolution {
    pub s0: f64,
    pub b0: f64,
    pub p0: f64,
    pub shock: ShockSolution,
    pub profile: SelfSimilarProfile,
}

impl BackgroundSolution {
    pub fn surface_state(&self) -> GasState {
        self.profile.end()
    }

    pub fn shock_state(&self) -> GasState {
        self.shock.behind
    }

    /// Background field at slope `sigma`, clamped to `[s0, b0]`.
    pub fn at(&self, sigma: f64) -> GasState {
        self.profile.eval(sigma.clamp(self.s0, self.b0))
    }
}

pub fn conical_sonic_margin(sigma: f64, u: GasState, p: &FlowParams) -> f64 {
    let c2 = p.sound_speed_sq(u);
    let w = u.v - sigma * u.u;
    (1.0 + sigma * sigma) * c2 - w * w
}

pub fn ode_rhs(sigma: f64, u: GasState, p: &FlowParams) -> Result<[f64; 2]> {
    if sigma.abs() < 1e-12 {
        return Err(Error::Axis { sigma });
    }
    let c2 = p.sound_speed_sq(u);
    if c2 <= 0.0 {
        return Err(Error::Cavitation { q: u.speed(), q_star: p.q_star });
    }
    let den = conical_sonic_margin(sigma, u, p);
    if den.abs() < 1e-12 {
        return Err(Error::ConicalSonic { sigma });
    }
    let us = c2 * u.v / den;
    Ok([us, -us / sigma])
}

fn rhs_fn(p: &FlowParams) -> impl FnMut(f64, [f64; 2]) -> Result<[f64; 2]> + '_ {
    move |t, y| ode_rhs(t, GasState::from_array(y), p)
}

pub fn integrate(sigma0: f64, u0: GasState, sigma1: f64, p: &FlowParams, tol: f64) -> Result<SelfSimilarProfile> {
    let nodes = ode::integrate(rhs_fn(p), sigma0, u0.to_array(), sigma1, &OdeOptions::with_rtol(tol))?;
    Ok(SelfSimilarProfile { sigma_start: sigma0, sigma_end: sigma1, nodes, params: *p })
}

/// End state of the self-similar evolution from `sigma0` to `sigma1`.
pub fn evolve(u0: GasState, sigma0: f64, sigma1: f64, p: &FlowParams) -> Result<GasState> {
    evolve_tol(u0, sigma0, sigma1, p, DEFAULT_TOL)
}

pub fn evolve_tol(u0: GasState, sigma0: f64, sigma1: f64, p: &FlowParams, tol: f64) -> Result<GasState> {
    if sigma0 == sigma1 {
        return Ok(u0);
    }
    let y = ode::solve_to(rhs_fn(p), sigma0, u0.to_array(), sigma1, &OdeOptions::with_rtol(tol))?;
    Ok(GasState::from_array(y))
}

/// Flow-ray gap `v - sigma u`.
fn gap(sigma: f64, u: GasState) -> f64 {
    u.v - sigma * u.u
}

/// First `sigma > s` where the profile through `(s, G(s))` becomes tangent to the ray.
pub fn apple_point(s: f64, p: &FlowParams) -> Result<(f64, GasState)> {
    let sol = polar::state_behind_shock(s, p)?;
    let (se, ue, _) = tangency(s, sol.behind, sol.tangency_gap, p)?;
    Ok((se, ue))
}

/// Locates the tangency point and returns it with the profile up to it.
fn tangency(s: f64, start: GasState, gap0: f64, p: &FlowParams) -> Result<(f64, GasState, SelfSimilarProfile)> {
    let mut rhs = rhs_fn(p);
    // thin layers: Newton from the start point first
    let d0 = rhs(s, start.to_array())?;
    let dg0 = d0[1] - start.u - s * d0[0];
    let guess = s - gap0 / dg0;
    let mut lo_node = Node { t: s, y: start.to_array(), dy: d0 };
    let mut hi_t = f64::NAN;
    if gap0 > 0.0 && dg0 < 0.0 && (guess - s) < 1e-3 * s.abs() {
        let end = ode::solve_to(rhs_fn(p), s, start.to_array(), guess + (guess - s), &OdeOptions::default());
        if let Ok(y) = end {
            if gap(guess + (guess - s), GasState::from_array(y)) <= 0.0 {
                hi_t = guess + (guess - s);
            }
        }
    }
    if hi_t.is_nan() {
        let t1 = -1e-11;
        let nodes = ode::integrate_with(
            rhs_fn(p),
            s,
            start.to_array(),
            t1,
            &OdeOptions::default(),
            Some(|t: f64, y: [f64; 2]| gap(t, GasState::from_array(y))),
        )
        .map_err(|e| match e {
            Error::Axis { .. } | Error::ConicalSonic { .. } | Error::Cavitation { .. } => Error::NoTangency { s },
            e => e,
        })?;
        let last = nodes[nodes.len() - 1];
        if gap(last.t, GasState::from_array(last.y)) > 0.0 {
            return Err(Error::NoTangency { s });
        }
        lo_node = nodes[nodes.len() - 2];
        hi_t = last.t;
    }
    // safeguarded Newton with re-integration from the last node before the crossing
    let mut lo = lo_node.t;
    let mut hi = hi_t;
    let mut t = 0.5 * (lo + hi);
    let mut state = GasState::from_array(lo_node.y);
    for _ in 0..200 {
        state = GasState::from_array(ode::solve_to(rhs_fn(p), lo_node.t, lo_node.y, t, &OdeOptions::default())?);
        let g = gap(t, state);
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = ode_rhs(t, state, p)?;
        let dg = d[1] - state.u - t * d[0];
        let tn = t - g / dg;
        if g == 0.0 || (hi - lo) <= 4.0 * f64::EPSILON * t.abs() || (tn - t).abs() <= 2.0 * f64::EPSILON * t.abs() {
            if (tn - t).abs() <= 2.0 * f64::EPSILON * t.abs() && tn > lo && tn < hi {
                t = tn;
                state =
                    GasState::from_array(ode::solve_to(rhs_fn(p), lo_node.t, lo_node.y, t, &OdeOptions::default())?);
            }
            let profile = integrate(s, start, t, p, DEFAULT_TOL)?;
            return Ok((t, state, profile));
        }
        t = if tn > lo && tn < hi { tn } else { 0.5 * (lo + hi) };
    }
    Err(Error::Convergence { what: "apple point", iters: 200, residual: gap(t, state) })
}

/// Straight-cone flow with surface pressure `p0`, by bisection shooting on the shock slope.
pub fn background_solution(p0: f64, p: &FlowParams) -> Result<BackgroundSolution> {
    let ls = polar::attached_state(p0, p)?;
    let rho0 = ls.rho0;
    let lam1 = p.eigenvalues(p.u_inf())?.0;
    let resid = |s: f64| -> Result<f64> {
        let (_, ue) = apple_point(s, p)?;
        Ok(p.density(ue)? - rho0)
    };
    let mut lo = ls.s_sharp;
    let mut hi = lam1 - 1e-6 * lam1.abs();
    let rlo = resid(lo)?;
    let rhi = match resid(hi) {
        Ok(r) => r,
        Err(Error::NoTangency { .. } | Error::ConicalSonic { .. }) => -rho0,
        Err(e) => return Err(e),
    };
    if !(rlo > 0.0 && rhi < 0.0) {
        // at s_sharp the residual is O(rho_inf) and may sit at round-off
        if rlo.abs() <= 64.0 * f64::EPSILON * rho0 {
            hi = lo;
        } else {
            return Err(Error::Bracket { lo, hi });
        }
    }
    for _ in 0..200 {
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = match resid(mid) {
            Ok(r) => r,
            Err(Error::NoTangency { .. } | Error::ConicalSonic { .. }) => -rho0,
            Err(e) => return Err(e),
        };
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the end with the smaller residual
    let pick = if resid(lo)?.abs() <= resid(hi).map(f64::abs).unwrap_or(f64::INFINITY) { lo } else { hi };
    let shock = polar::state_behind_shock(pick, p)?;
    let (b0, _, profile) = tangency(pick, shock.behind, shock.tangency_gap, p)?;
    Ok(BackgroundSolution { s0: pick, b0, p0, shock, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::critical_pressure;
    use proptest::prelude::*;

    fn bg(m: f64, g: f64) -> (FlowParams, BackgroundSolution) {
        let p = FlowParams::new(g, m).unwrap();
        let p0 = critical_pressure(g).unwrap() / 2.0;
        let b = background_solution(p0, &p).unwrap();
        (p, b)
    }

    #[test]
    fn background_exists_across_gases() {
        for g in [1.4, 1.67, 2.0, 2.5, 2.9] {
            let p = FlowParams::new(g, 1e3).unwrap();
            for f in [0.1, 0.25, 0.5, 0.75] {
                let p0 = f * critical_pressure(g).unwrap();
                let b = background_solution(p0, &p).unwrap_or_else(|e| panic!("{g} {f}: {e}"));
                assert!(b.s0 < b.b0 && b.b0 < 0.0);
                assert!((p.pressure(b.surface_state()).unwrap() - p0).abs() < 1e-9 * p0);
            }
        }
    }

    #[test]
    fn horizontal_flow_is_stationary() {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let d = ode_rhs(-0.5, GasState::new(0.9, 0.0), &p).unwrap();
        assert_eq!(d, [0.0, 0.0]);
        assert!(matches!(ode_rhs(0.0, GasState::new(0.9, 0.1), &p), Err(Error::Axis { .. })));
    }

    #[test]
    fn zero_length_and_reversibility() {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let u0 = GasState::new(0.6, -0.4);
        let prof = integrate(-0.9, u0, -0.9, &p, 1e-10).unwrap();
        assert_eq!(prof.end(), u0);
        let fwd = integrate(-0.9, u0, -0.7, &p, 1e-10).unwrap().end();
        let back = integrate(-0.7, fwd, -0.9, &p, 1e-10).unwrap().end();
        assert!(back.dist(&u0) < 1e-9);
    }

    #[test]
    fn background_at_mach_10() {
        let (p, b) = bg(10.0, 1.4);
        assert!((b.s0 + 0.9539508).abs() < 1e-6, "{}", b.s0);
        assert!((b.b0 + 0.9514195).abs() < 1e-6, "{}", b.b0);
        let ue = b.surface_state();
        assert!((p.density(ue).unwrap() - b.p0.powf(1.0 / p.gamma)).abs() < 1e-9);
        assert!((ue.v - b.b0 * ue.u).abs() < 1e-9);
        // monotone decrease of both components through the layer
        let st: Vec<_> = b.profile.states().collect();
        for w in st.windows(2) {
            assert!(w[1].1.u < w[0].1.u && w[1].1.v < w[0].1.v);
        }
        // bounds on u along the profile
        for (_, s) in &st[1..] {
            assert!(s.u > 1.0 / (1.0 + b.s0 * b.s0) && s.u < st[0].1.u);
        }
    }

    #[test]
    fn background_at_high_mach_is_thin() {
        let (p, b) = bg(1000.0, 1.4);
        assert!((b.s0 + 1.05435307).abs() < 1e-7, "{}", b.s0);
        assert!(b.b0 > b.s0 && b.b0 - b.s0 < 1e-10);
        let ls = polar::attached_state(b.p0, &p).unwrap();
        assert!(ls.s_sharp <= b.s0 && b.s0 < 0.0);
    }

    #[test]
    fn apple_point_near_weak_shock() {
        let p = FlowParams::new(1.4, 10.0).unwrap();
        let lam1 = p.eigenvalues(p.u_inf()).unwrap().0;
        let mut prev = f64::INFINITY;
        for e in [1e-2, 1e-3, 1e-4, 1e-5] {
            let (se, ue) = apple_point(lam1 - e, &p).unwrap();
            let d = ue.dist(&p.u_inf());
            assert!(d < prev);
            assert!((ue.v - se * ue.u).abs() < 1e-10);
            prev = d;
        }
        assert!(prev < 1e-2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn constraint_identity(sig in -1.5f64..-0.1, q in 0.4f64..0.95, th in -0.7f64..0.0) {
            let p = FlowParams::new(1.4, 10.0).unwrap();
            let u = GasState::new(q * th.cos(), q * th.sin());
            if let Ok(d) = ode_rhs(sig, u, &p) {
                prop_assert!((d[0] + sig * d[1]).abs() <= 1e-14 * (1.0 + d[0].abs()));
            }
        }

        #[test]
        fn tangency_gap_is_positive_and_closes(s in -1.3f64..-0.5) {
            let p = FlowParams::new(1.4, 10.0).unwrap();
            if let Ok(sol) = polar::state_behind_shock(s, &p) {
                prop_assert!(sol.tangency_gap > 0.0);
                if let Ok((se, ue)) = apple_point(s, &p) {
                    prop_assert!(se > s);
                    prop_assert!((ue.v - se * ue.u).abs() < 1e-10);
                }
            }
        }
    }
}
