//! Reflection and transmission coefficients of the boundary and front
//! interactions, their hypersonic limits, the stability margin and the
//! weights of the functional.

use crate::error::{Error, Result};
use crate::gas::{det, FlowParams};
use crate::polar::{self, attached_state};
use crate::riemann;
use crate::selfsim::{self, BackgroundSolution};

pub const FD_STEP: f64 = 1e-6;
const TOL: f64 = 1e-13;

/// Central difference of `f` at 0 with step `h`.
fn central<F: FnMut(f64) -> Result<f64>>(f: &mut F, h: f64) -> Result<f64> {
    Ok((f(h)? - f(-h)?) / (2.0 * h))
}

/// A partial derivative with its step-halving check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partial {
    pub value: f64,
    /// `(D(4h) - D(2h)) / (D(2h) - D(h))`, about 4 for a smooth map.
    pub richardson_ratio: f64,
    /// Richardson extrapolation from the coarse steps.
    pub extrapolated: f64,
}

impl Partial {
    /// True when the fine-step value agrees with the extrapolation.
    pub fn consistent(&self) -> bool {
        (self.value - self.extrapolated).abs() < 1e-4 * (1.0 + self.value.abs())
    }
}

fn partial<F: FnMut(f64) -> Result<f64>>(mut f: F, scale: f64) -> Result<Partial> {
    let value = central(&mut f, FD_STEP * scale)?;
    let h = 1e-4 * scale;
    let d1 = central(&mut f, 4.0 * h)?;
    let d2 = central(&mut f, 2.0 * h)?;
    let d3 = central(&mut f, h)?;
    let ratio = (d1 - d2) / (d2 - d3);
    Ok(Partial { value, richardson_ratio: ratio, extrapolated: d3 + (d3 - d2) / 3.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryCoefficients {
    pub k_r1: Partial,
    pub k_r2: Partial,
    pub k_sigma1: Partial,
    pub k_sigma2: Partial,
    pub k_b1: Partial,
    pub k_b2: Partial,
    pub k_c2: Partial,
    pub k_csigma: Partial,
    /// `d(b'_{h+1} - b'_h) / d omega`.
    pub k_cb: Partial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontCoefficients {
    pub k_w1: Partial,
    pub k_w2: Partial,
    pub k_s: Partial,
    pub mu_w1: Partial,
    pub mu_w2: Partial,
    pub mu_s: Partial,
    pub cramer: Cramer,
}

/// The front coefficients from the linearized interaction equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cramer {
    pub k_w2: f64,
    pub k_s: f64,
    pub mu_w2: f64,
    pub mu_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientSet {
    pub gamma: f64,
    pub mach_inf: f64,
    pub p0: f64,
    pub s0: f64,
    pub b0: f64,
    pub boundary: BoundaryCoefficients,
    pub front: FrontCoefficients,
}

/// Outputs of the boundary interaction for
/// `x = [alpha_r1, alpha_r2, dsigma_alpha, dsigma_b, omega]`:
/// `(beta_1, delta_1, delta_2, b'_{h+1} - b'_h)`.
pub fn boundary_map(bg: &BackgroundSolution, p: &FlowParams, x: [f64; 5]) -> Result<[f64; 4]> {
    let [ar1, ar2, ds_alpha, ds_b, omega] = x;
    let sb_prev = bg.b0;
    let s_alpha = sb_prev - ds_alpha;
    let sb = sb_prev + ds_b;
    let ul = selfsim::evolve_tol(bg.surface_state(), bg.b0, s_alpha, p, TOL)?;
    let v = selfsim::evolve_tol(riemann::phi(ar1, ar2, ul, p)?, s_alpha, sb_prev, p, TOL)?;
    let w = selfsim::evolve_tol(ul, s_alpha, sb, p, TOL)?;
    let enthalpy = |q: f64| p.c2_of_pressure(q) / (p.gamma - 1.0);
    let q2 = v.speed_sq() + 2.0 * (enthalpy(bg.p0) - enthalpy(bg.p0 + omega));
    let (beta1, ub) = riemann::solve_boundary_speed(w, q2, p)?;
    let back = selfsim::evolve_tol(ub, sb, s_alpha, p, TOL)?;
    let (d1, d2) = riemann::solve_riemann(ul, back, p)?.strengths();
    Ok([beta1, d1, d2, ub.v / ub.u - v.v / v.u])
}

/// Outputs of the front interaction for `x = [alpha_l1, dsigma_chi]`:
/// `(s_{h+1}, beta_2, delta_1, delta_2)`.
pub fn front_map(bg: &BackgroundSolution, p: &FlowParams, x: [f64; 2]) -> Result<[f64; 4]> {
    let [al1, ds_chi] = x;
    let s_alpha = bg.s0;
    let sc = bg.s0 + ds_chi;
    let target = riemann::wave_curve(al1, 1, bg.shock_state(), p)?;
    let r = selfsim::evolve_tol(target, s_alpha, sc, p, TOL)?;
    let (s1, beta2) = riemann::solve_strong_shock(r, bg.s0, p)?;
    let g1 = polar::state_behind_shock(s1, p)?.behind;
    let lower = selfsim::evolve_tol(g1, sc, s_alpha, p, TOL)?;
    let (d1, d2) = riemann::solve_riemann(lower, target, p)?.strengths();
    Ok([s1, beta2, d1, d2])
}

pub fn reflection_coeff_boundary(bg: &BackgroundSolution, p: &FlowParams) -> Result<BoundaryCoefficients> {
    let d = |k: usize, out: usize, scale: f64| {
        partial(
            |t| {
                let mut x = [0.0; 5];
                x[k] = t;
                Ok(boundary_map(bg, p, x)?[out])
            },
            scale,
        )
    };
    let ws = bg.p0;
    Ok(BoundaryCoefficients {
        k_r1: d(1, 0, 1.0)?,
        k_r2: d(1, 2, 1.0)?,
        k_sigma1: d(3, 0, 1.0)?,
        k_sigma2: d(3, 2, 1.0)?,
        k_b1: d(4, 0, ws)?,
        k_b2: d(4, 2, ws)?,
        k_c2: d(1, 3, 1.0)?,
        k_csigma: d(3, 3, 1.0)?,
        k_cb: d(4, 3, ws)?,
    })
}

pub fn front_cramer(bg: &BackgroundSolution, p: &FlowParams) -> Result<Cramer> {
    let g = bg.shock_state();
    let r1 = p.right_eigenvector(g, 1)?;
    let r2 = p.right_eigenvector(g, 2)?;
    let gs = polar::shock_polar_derivative(bg.s0, p)?;
    let dd = selfsim::ode_rhs(bg.s0, g, p)?;
    let den = det(r2, gs);
    Ok(Cramer { k_w2: det(r1, gs) / den, k_s: det(r2, r1) / den, mu_w2: det(dd, gs) / den, mu_s: det(r2, dd) / den })
}

pub fn reflection_coeff_front(bg: &BackgroundSolution, p: &FlowParams) -> Result<FrontCoefficients> {
    let d = |k: usize, out: usize| {
        partial(
            |t| {
                let mut x = [0.0; 2];
                x[k] = t;
                Ok(front_map(bg, p, x)?[out])
            },
            1.0,
        )
    };
    Ok(FrontCoefficients {
        k_w1: d(0, 2)?,
        k_w2: d(0, 3)?,
        k_s: d(0, 0)?,
        mu_w1: d(1, 2)?,
        mu_w2: d(1, 3)?,
        mu_s: d(1, 0)?,
        cramer: front_cramer(bg, p)?,
    })
}

pub fn coefficients(p: &FlowParams, p0: f64) -> Result<CoefficientSet> {
    let bg = selfsim::background_solution(p0, p)?;
    coefficients_for(&bg, p)
}

pub fn coefficients_for(bg: &BackgroundSolution, p: &FlowParams) -> Result<CoefficientSet> {
    Ok(CoefficientSet {
        gamma: p.gamma,
        mach_inf: p.mach_inf,
        p0: bg.p0,
        s0: bg.s0,
        b0: bg.b0,
        boundary: reflection_coeff_boundary(bg, p)?,
        front: reflection_coeff_front(bg, p)?,
    })
}

/// Closed-form hypersonic limits in terms of the surface flow angle and the
/// surface Mach angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitFormulas {
    pub theta0: f64,
    pub thetam0: f64,
    pub det_r1_r2: f64,
    pub det_gs_r1: f64,
    pub det_r2_gs: f64,
    pub det_du_gs: f64,
    pub det_r2_du: f64,
    pub det_r1_du: f64,
    pub k_r1: f64,
    pub k_w2: f64,
    pub k_s: f64,
    pub mu_w2: f64,
    pub mu_s: f64,
    pub k_c2: f64,
    pub k_csigma: f64,
    /// `|K_r1||K_w2|`.
    pub margin_reflect: f64,
    /// `|K_r1||K_s||mu_w2|`.
    pub margin_shift: f64,
}

impl LimitFormulas {
    pub fn margin(&self) -> f64 {
        self.margin_reflect + self.margin_shift
    }
}

pub fn limit_formulas(theta0: f64, thetam0: f64, gamma: f64) -> Result<LimitFormulas> {
    use std::f64::consts::FRAC_PI_2;
    if !(theta0 > -FRAC_PI_2 && theta0 < 0.0) {
        return Err(Error::Domain(format!("theta0 = {theta0} outside (-pi/2, 0)")));
    }
    if !(thetam0 > 0.0 && thetam0 < FRAC_PI_2) {
        return Err(Error::Domain(format!("thetam0 = {thetam0} outside (0, pi/2)")));
    }
    if (theta0 - thetam0).abs() >= FRAC_PI_2 || (theta0 + thetam0).abs() >= FRAC_PI_2 {
        return Err(Error::Domain("theta0 +/- thetam0 outside (-pi/2, pi/2)".into()));
    }
    let (t, m) = (theta0, thetam0);
    let g1 = gamma + 1.0;
    let (cp, cm) = ((t + m).cos(), (t - m).cos());
    let (sp, sm) = ((t + m).sin(), (t - m).sin());
    let (ct, st, cmm, smm) = (t.cos(), t.sin(), m.cos(), m.sin());
    let det_r1_r2 = 4.0 * cp * cp * cm * cm * ct * ct * cmm * cmm * (2.0 * m).sin() / (g1 * g1);
    let det_gs_r1 = -2.0 * cm * cm * cmm * ct.powi(3) * sp / g1;
    let det_r2_gs = 2.0 * cp * cp * cmm * ct.powi(3) * sm / g1;
    let det_du_gs = -ct.powi(5) * st;
    let det_r2_du = 2.0 / g1 * ct.powi(4) * cp * cp * cmm * smm;
    let det_r1_du = -2.0 / g1 * ct.powi(4) * cm * cm * cmm * smm;
    let k_r1 = -cp * cp / (cm * cm);
    let k_w2 = -det_gs_r1 / det_r2_gs;
    let k_s = -det_r1_r2 / det_r2_gs;
    let mu_w2 = det_du_gs / det_r2_gs;
    let mu_s = det_r2_du / det_r2_gs;
    Ok(LimitFormulas {
        theta0,
        thetam0,
        det_r1_r2,
        det_gs_r1,
        det_r2_gs,
        det_du_gs,
        det_r2_du,
        det_r1_du,
        k_r1,
        k_w2,
        k_s,
        mu_w2,
        mu_s,
        k_c2: -4.0 / g1 * cmm * cmm * cp * cp / (ct * ct),
        k_csigma: -1.0,
        margin_reflect: (sp / sm).abs(),
        margin_shift: (2.0 * m).sin() * ct * st.abs() / (sm * sm),
    })
}

/// Limits at the surface angles of the attached limit state for `p0`.
pub fn limits_for(p: &FlowParams, p0: f64) -> Result<LimitFormulas> {
    let ls = attached_state(p0, p)?;
    limit_formulas(ls.theta0, ls.thetam0, p.gamma)
}

/// Limit of `d beta_1 / d omega`.
pub fn k_b1_limit(p: &FlowParams, p0: f64) -> Result<f64> {
    let ls = attached_state(p0, p)?;
    let (t, m) = (ls.theta0, ls.thetam0);
    let r1_dot_g = 2.0 * t.cos().powi(2) * m.cos() * m.sin() * (t - m).cos().powi(2) / (p.gamma + 1.0);
    Ok(-p0.powf(-1.0 / p.gamma) / r1_dot_g)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityMargin {
    pub margin: f64,
    pub limit: f64,
    pub pass: bool,
}

pub fn margin_of(c: &CoefficientSet) -> f64 {
    let kr = c.boundary.k_r1.value.abs();
    kr * c.front.k_w2.value.abs() + kr * c.front.k_s.value.abs() * c.front.mu_w2.value.abs()
}

pub fn stability_margin(p: &FlowParams, p0: f64) -> Result<(CoefficientSet, StabilityMargin)> {
    let c = coefficients(p, p0)?;
    let margin = margin_of(&c);
    let limit = limits_for(p, p0)?.margin();
    Ok((c, StabilityMargin { margin, limit, pass: margin < 1.0 }))
}

/// The inputs of the weight selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightInputs {
    pub k_r1: f64,
    pub k_r2: f64,
    pub k_w1: f64,
    pub k_w2: f64,
    pub k_s: f64,
    pub mu_w1: f64,
    pub mu_w2: f64,
    pub k_sigma1: f64,
    pub k_sigma2: f64,
    pub k_b1: f64,
    pub k_b2: f64,
    pub k_c2: f64,
    pub k_cb: f64,
}

impl WeightInputs {
    pub fn from_set(c: &CoefficientSet) -> Self {
        let b = &c.boundary;
        let f = &c.front;
        WeightInputs {
            k_r1: b.k_r1.value,
            k_r2: b.k_r2.value,
            k_w1: f.k_w1.value,
            k_w2: f.k_w2.value,
            k_s: f.k_s.value,
            mu_w1: f.mu_w1.value,
            mu_w2: f.mu_w2.value,
            k_sigma1: b.k_sigma1.value,
            k_sigma2: b.k_sigma2.value,
            k_b1: b.k_b1.value,
            k_b2: b.k_b2.value,
            k_c2: b.k_c2.value,
            k_cb: b.k_cb.value,
        }
    }

    pub fn margin(&self) -> f64 {
        self.k_r1.abs() * (self.k_w2.abs() + self.k_s.abs() * self.mu_w2.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k: f64,
    pub xi: f64,
}

/// Relative slack of the three weight inequalities for the front and the
/// reflection, and of the angle weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSlack {
    /// `1 - K2|K_w2| - K3|K_s| - |K_w1|`.
    pub front: f64,
    /// `(K3 - K2|mu_w2| - |mu_w1|) / K3`.
    pub shift: f64,
    /// `(K2 - |K_r1|) / K2`.
    pub reflect: f64,
    /// `K2 - |K_r1| - K4|K_c2| - K2|K_r2|`.
    pub boundary: f64,
    /// `K4 - |K_sigma1| - K2|K_sigma2|`.
    pub angle: f64,
}

pub fn weight_slack(c: &WeightInputs, w: &Weights) -> WeightSlack {
    WeightSlack {
        front: 1.0 - w.k2 * c.k_w2.abs() - w.k3 * c.k_s.abs() - c.k_w1.abs(),
        shift: (w.k3 - w.k2 * c.mu_w2.abs() - c.mu_w1.abs()) / w.k3,
        reflect: (w.k2 - c.k_r1.abs()) / w.k2,
        boundary: w.k2 - c.k_r1.abs() - w.k4 * c.k_c2.abs() - w.k2 * c.k_r2.abs(),
        angle: w.k4 - c.k_sigma1.abs() - w.k2 * c.k_sigma2.abs(),
    }
}

/// `K2` 10% into its feasible interval, see [`choose_weights_at`].
pub fn choose_weights(c: &WeightInputs, xi: f64) -> Result<Weights> {
    choose_weights_at(c, xi, 0.1)
}

/// `K2` at `fraction` of its feasible interval, `K3` and `K4` at the
/// midpoints of theirs, `K1` ten times its lower bound and `K = 10 / xi`.
pub fn choose_weights_at(c: &WeightInputs, xi: f64, fraction: f64) -> Result<Weights> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Domain(format!("K2 fraction {fraction} outside (0, 1)")));
    }
    let m = c.margin();
    if !(m < 1.0) {
        return Err(Error::Infeasible(format!("stability margin {m} is not below 1")));
    }
    let kr = c.k_r1.abs();
    let hi2 = 1.0 / (c.k_w2.abs() + c.k_s.abs() * c.mu_w2.abs());
    let k2 = kr + fraction * (hi2 - kr);
    let lo3 = k2 * c.mu_w2.abs() + c.mu_w1.abs();
    let hi3 = (1.0 - k2 * c.k_w2.abs() - c.k_w1.abs()) / c.k_s.abs();
    if !(lo3 < hi3) {
        return Err(Error::Infeasible(format!("K3 interval ({lo3}, {hi3}) is empty")));
    }
    let k3 = 0.5 * (lo3 + hi3);
    let lo4 = c.k_sigma1.abs() + k2 * c.k_sigma2.abs();
    let room = k2 - kr - k2 * c.k_r2.abs();
    let xi0 = 0.25 * room;
    let hi4 = (room - xi0) / c.k_c2.abs();
    if !(lo4 < hi4) {
        return Err(Error::Infeasible(format!("K4 interval ({lo4}, {hi4}) is empty")));
    }
    let k4 = 0.5 * (lo4 + hi4);
    let k1 = 10.0 * (c.k_b1.abs() + k2 * c.k_b2.abs() + c.k_cb.abs() * k4);
    Ok(Weights { k1, k2, k3, k4, k: 10.0 / xi, xi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::critical_pressure;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn limit_margin_below_one_on_a_sweep() {
        for (g, frac) in [(1.4, 0.5), (2.0, 0.25), (2.5, 0.9)] {
            let p = FlowParams::new(g, 1e3).unwrap();
            let ls = attached_state(frac * critical_pressure(g).unwrap(), &p).unwrap();
            for k in 1..=50 {
                let t = -(ls.theta0.abs() * k as f64 / 50.0).min(1.5 - ls.thetam0);
                let l = limit_formulas(t, ls.thetam0, g).unwrap();
                assert!(l.margin() < 1.0, "{t} {}", l.margin());
            }
        }
    }

    #[test]
    fn limit_margin_tends_to_one_as_theta0_vanishes() {
        let m = 0.6;
        let mut prev = 0.0;
        for t in [-0.3, -0.1, -1e-2, -1e-3, -1e-4] {
            let l = limit_formulas(t, m, 1.4).unwrap();
            assert!(l.margin() < 1.0 && l.margin() > prev);
            prev = l.margin();
        }
        assert!(1.0 - prev < 1e-3);
        // the two bounds coincide on theta0 + thetam0 = 0
        let t = -m;
        let a = (2.0 * m.sin() * t.cos() - (t + m).sin()) / (m - t).sin();
        let b = (2.0 * m.cos() * t.sin().abs() + (t + m).sin()) / (m - t).sin();
        assert!((a - b).abs() < 1e-14 && (a - 1.0).abs() < 1e-14);
        assert!(matches!(limit_formulas(0.1, m, 1.4), Err(Error::Domain(_))));
    }

    #[test]
    fn limit_formulas_are_mutually_consistent() {
        let l = limit_formulas(-0.7, 0.5, 1.4).unwrap();
        assert!((l.k_r1.abs() * l.k_w2.abs() - l.margin_reflect).abs() < 1e-13);
        assert!((l.k_r1.abs() * l.k_s.abs() * l.mu_w2.abs() - l.margin_shift).abs() < 1e-13);
        assert!(l.mu_s > -1.0 && l.mu_s < 0.0);
    }

    #[test]
    fn boundary_coefficients_near_limits() {
        let g = 1.4;
        let p = FlowParams::new(g, 1e3).unwrap();
        let p0 = critical_pressure(g).unwrap() / 2.0;
        let bg = selfsim::background_solution(p0, &p).unwrap();
        let b = reflection_coeff_boundary(&bg, &p).unwrap();
        let lim = limits_for(&p, p0).unwrap();
        assert!(rel(b.k_r1.value, lim.k_r1) < 0.05, "{} {}", b.k_r1.value, lim.k_r1);
        assert!(b.k_r2.value.abs() < 0.05 && b.k_sigma1.value.abs() < 0.05 && b.k_sigma2.value.abs() < 0.05);
        assert!(rel(b.k_csigma.value, -1.0) < 0.05, "{}", b.k_csigma.value);
        assert!(rel(b.k_c2.value, lim.k_c2) < 0.05, "{} {}", b.k_c2.value, lim.k_c2);
        assert!(rel(b.k_b1.value, k_b1_limit(&p, p0).unwrap()) < 0.05);
        assert!(b.k_r1.consistent(), "{:?}", b.k_r1);
    }

    #[test]
    fn front_coefficients_match_cramer() {
        let g = 1.4;
        let p = FlowParams::new(g, 1e3).unwrap();
        let p0 = critical_pressure(g).unwrap() / 2.0;
        let bg = selfsim::background_solution(p0, &p).unwrap();
        let f = reflection_coeff_front(&bg, &p).unwrap();
        let c = f.cramer;
        for (a, b) in [(f.k_w2.value, c.k_w2), (f.k_s.value, c.k_s), (f.mu_w2.value, c.mu_w2), (f.mu_s.value, c.mu_s)] {
            assert!(rel(a, b) < 0.01, "{a} {b}");
        }
        assert!(f.k_w1.value.abs() < 0.05 && f.mu_w1.value.abs() < 0.05);
        let lim = limits_for(&p, p0).unwrap();
        assert!(rel(f.mu_s.value, lim.mu_s) < 0.05 && f.mu_s.value > -1.0 && f.mu_s.value < 0.0);
    }

    #[test]
    fn weights_satisfy_inequalities() {
        let g = 1.4;
        let p = FlowParams::new(g, 1e3).unwrap();
        let (c, m) = stability_margin(&p, critical_pressure(g).unwrap() / 2.0).unwrap();
        assert!(m.pass);
        let inp = WeightInputs::from_set(&c);
        let w = choose_weights(&inp, 0.1).unwrap();
        let s = weight_slack(&inp, &w);
        assert!(s.front > 0.01 && s.shift > 0.01 && s.reflect > 0.01, "{s:?}");
        assert!(s.boundary > 0.0 && s.angle > 0.0, "{s:?}");
    }

    #[test]
    fn margin_converges_to_limit() {
        let g = 1.4;
        let p0 = critical_pressure(g).unwrap() / 2.0;
        for (m, tol) in [(1e2, 0.05), (1e3, 0.005), (1e4, 0.0005)] {
            let p = FlowParams::new(g, m).unwrap();
            let (_, sm) = stability_margin(&p, p0).unwrap();
            assert!(sm.pass && rel(sm.margin, sm.limit) < tol, "{m} {sm:?}");
        }
    }

    #[test]
    fn eigenvector_determinant_near_limit() {
        let g = 1.4;
        let p = FlowParams::new(g, 1e3).unwrap();
        let p0 = critical_pressure(g).unwrap() / 2.0;
        let bg = selfsim::background_solution(p0, &p).unwrap();
        let u = bg.surface_state();
        let d = det(p.right_eigenvector(u, 1).unwrap(), p.right_eigenvector(u, 2).unwrap());
        let lim = limits_for(&p, p0).unwrap();
        assert!(rel(d, lim.det_r1_r2) < 0.05, "{d} {}", lim.det_r1_r2);
    }

    #[test]
    fn synthetic_margins() {
        let base = WeightInputs {
            k_r1: -0.9,
            k_r2: 0.0,
            k_w1: 0.0,
            k_w2: 0.5,
            k_s: 0.8,
            mu_w1: 0.0,
            mu_w2: 0.0,
            k_sigma1: 0.0,
            k_sigma2: 0.0,
            k_b1: 10.0,
            k_b2: 0.0,
            k_c2: 0.3,
            k_cb: 1.0,
        };
        let scale = |m: f64| {
            // |K_r1| (|K_w2| + |K_s||mu_w2|) = m
            let mu = (m / 0.9 - 0.5) / 0.8;
            WeightInputs { mu_w2: mu, ..base }
        };
        let thin = scale(0.99);
        assert!((thin.margin() - 0.99).abs() < 1e-12);
        let w = choose_weights(&thin, 0.1).unwrap();
        let s = weight_slack(&thin, &w);
        assert!(s.front > 0.0 && s.shift > 0.0 && s.reflect > 0.0 && s.reflect < 0.01);
        assert!(matches!(choose_weights(&scale(1.01), 0.1), Err(Error::Infeasible(_))));
    }
}
