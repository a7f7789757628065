//! Bernoulli closure and characteristic structure of the steady potential system.

use crate::error::{Error, Result};

/// Incoming-flow parameters with the normalization `u_inf = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub gamma: f64,
    pub mach_inf: f64,
    pub c_inf: f64,
    pub rho_inf: f64,
    pub p_inf: f64,
    pub bernoulli: f64,
    pub q_star: f64,
    pub c_star: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct GasState {
    pub u: f64,
    pub v: f64,
}

impl GasState {
    pub const fn new(u: f64, v: f64) -> Self {
        GasState { u, v }
    }

    pub fn speed_sq(&self) -> f64 {
        self.u * self.u + self.v * self.v
    }

    pub fn speed(&self) -> f64 {
        self.speed_sq().sqrt()
    }

    /// Flow angle arctan(v/u).
    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.u, self.v]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        GasState { u: a[0], v: a[1] }
    }

    pub fn add(self, d: [f64; 2], t: f64) -> Self {
        GasState { u: self.u + t * d[0], v: self.v + t * d[1] }
    }

    pub fn dist(&self, o: &GasState) -> f64 {
        (self.u - o.u).hypot(self.v - o.v)
    }

    pub fn dot(&self, d: [f64; 2]) -> f64 {
        self.u * d[0] + self.v * d[1]
    }
}

pub fn det(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl FlowParams {
    pub fn new(gamma: f64, mach_inf: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma < 3.0) {
            return Err(Error::Domain(format!("gamma = {gamma} outside (1, 3)")));
        }
        if !(mach_inf > 1.0) || !mach_inf.is_finite() {
            return Err(Error::Domain(format!("mach_inf = {mach_inf} must exceed 1")));
        }
        let c_inf = 1.0 / mach_inf;
        let rho_inf = (gamma * mach_inf * mach_inf).powf(-1.0 / (gamma - 1.0));
        let p_inf = rho_inf.powf(gamma);
        let c2 = c_inf * c_inf;
        Ok(FlowParams {
            gamma,
            mach_inf,
            c_inf,
            rho_inf,
            p_inf,
            bernoulli: 0.5 + c2 / (gamma - 1.0),
            q_star: (1.0 + 2.0 * c2 / (gamma + 1.0)).sqrt(),
            c_star: ((gamma - 1.0) / (gamma + 1.0) + 2.0 * c2 / (gamma + 1.0)).sqrt(),
        })
    }

    pub fn u_inf(&self) -> GasState {
        GasState::new(1.0, 0.0)
    }

    /// c^2 from Bernoulli; may be negative outside the physical range.
    pub fn sound_speed_sq(&self, s: GasState) -> f64 {
        let deficit = (1.0 - s.u) * (1.0 + s.u) - s.v * s.v;
        self.c_inf * self.c_inf + 0.5 * (self.gamma - 1.0) * deficit
    }

    /// Density from Bernoulli without range checks.
    pub fn density_unchecked(&self, q2: f64) -> f64 {
        let g = self.gamma;
        let base = (g - 1.0) * (self.bernoulli - 0.5 * q2) / g;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(1.0 / (g - 1.0))
        }
    }

    pub fn density(&self, s: GasState) -> Result<f64> {
        let q2 = s.speed_sq();
        if !(q2.sqrt() < self.q_star) {
            return Err(Error::Cavitation { q: q2.sqrt(), q_star: self.q_star });
        }
        let c2 = self.sound_speed_sq(s);
        if c2 <= 0.0 {
            return Ok(0.0);
        }
        Ok((c2 / self.gamma).powf(1.0 / (self.gamma - 1.0)))
    }

    pub fn pressure(&self, s: GasState) -> Result<f64> {
        Ok(self.density(s)?.powf(self.gamma))
    }

    pub fn sound_speed(&self, s: GasState) -> Result<f64> {
        let c2 = self.sound_speed_sq(s);
        if c2 <= 0.0 || s.speed() >= self.q_star {
            return Err(Error::Cavitation { q: s.speed(), q_star: self.q_star });
        }
        Ok(c2.sqrt())
    }

    /// Residual of `q^2/2 + c^2/(gamma-1) = B` with c^2 recomputed from rho.
    pub fn bernoulli_residual(&self, s: GasState, rho: f64) -> f64 {
        let c2 = self.gamma * rho.powf(self.gamma - 1.0);
        0.5 * s.speed_sq() + c2 / (self.gamma - 1.0) - self.bernoulli
    }

    pub fn c2_of_pressure(&self, p: f64) -> f64 {
        self.gamma * p.powf((self.gamma - 1.0) / self.gamma)
    }

    /// Speed squared of a state at pressure `p`.
    pub fn speed_sq_of_pressure(&self, p: f64) -> f64 {
        2.0 * self.bernoulli - 2.0 * self.c2_of_pressure(p) / (self.gamma - 1.0)
    }

    pub fn check_supersonic(&self, s: GasState) -> Result<f64> {
        let c = self.sound_speed(s)?;
        if !(s.u - c > 1e-8 * c) {
            return Err(Error::Sonic { u: s.u, c });
        }
        Ok(c)
    }

    /// Mach angle arcsin(c/q).
    pub fn mach_angle(&self, s: GasState) -> Result<f64> {
        let c = self.check_supersonic(s)?;
        let q2 = s.speed_sq();
        Ok((c / (q2 - c * c).sqrt()).atan())
    }

    pub fn mach_number(&self, s: GasState) -> Result<f64> {
        Ok(s.speed() / self.sound_speed(s)?)
    }

    pub fn eigenvalues(&self, s: GasState) -> Result<(f64, f64)> {
        let c = self.check_supersonic(s)?;
        let c2 = c * c;
        let root = c * (s.speed_sq() - c2).sqrt();
        let den = s.u * s.u - c2;
        let uv = s.u * s.v;
        Ok(((uv - root) / den, (uv + root) / den))
    }

    /// `tan(theta -/+ theta_m)` form of the eigenvalues.
    pub fn eigenvalues_tan(&self, s: GasState) -> Result<(f64, f64)> {
        let tm = self.mach_angle(s)?;
        let th = s.angle();
        Ok(((th - tm).tan(), (th + tm).tan()))
    }

    pub fn eigenvalue(&self, s: GasState, i: usize) -> Result<f64> {
        let (l1, l2) = self.eigenvalues(s)?;
        Ok(if i == 1 { l1 } else { l2 })
    }

    /// Right eigenvector normalized so that `r_i . grad lambda_i = 1`.
    pub fn right_eigenvector(&self, s: GasState, i: usize) -> Result<[f64; 2]> {
        let c = self.check_supersonic(s)?;
        let q2 = s.speed_sq();
        let tm = (c / (q2 - c * c).sqrt()).atan();
        let sign = if i == 1 { -1.0 } else { 1.0 };
        let ang = s.angle() + sign * tm;
        let lam = ang.tan();
        let norm = (self.gamma + 1.0) / (2.0 * (q2 - c * c).sqrt()) / ang.cos().powi(3);
        Ok([-lam / norm, 1.0 / norm])
    }

    /// Central-difference gradient of `lambda_i`.
    pub fn grad_eigenvalue_fd(&self, s: GasState, i: usize) -> Result<[f64; 2]> {
        let h = 1e-6 * s.speed().max(1.0);
        let du = (self.eigenvalue(GasState::new(s.u + h, s.v), i)?
            - self.eigenvalue(GasState::new(s.u - h, s.v), i)?)
            / (2.0 * h);
        let dv = (self.eigenvalue(GasState::new(s.u, s.v + h), i)?
            - self.eigenvalue(GasState::new(s.u, s.v - h), i)?)
            / (2.0 * h);
        Ok([du, dv])
    }

    /// Gradient of the pressure with respect to the velocity.
    pub fn grad_pressure(&self, s: GasState) -> Result<[f64; 2]> {
        let rho = self.density(s)?;
        // dp/dq^2 = -rho/2
        Ok([-rho * s.u, -rho * s.v])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p10() -> FlowParams {
        FlowParams::new(1.4, 10.0).unwrap()
    }

    #[test]
    fn incoming_state_has_rho_inf() {
        for (g, m) in [(1.4, 10.0), (2.0, 3.0), (1.2, 1000.0)] {
            let p = FlowParams::new(g, m).unwrap();
            let rho = p.density(p.u_inf()).unwrap();
            assert!((rho / p.rho_inf - 1.0).abs() < 1e-12);
            let c = g.sqrt() * p.rho_inf.powf((g - 1.0) / 2.0);
            assert!((c / p.c_inf - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_vanishes_at_limit_speed() {
        let p = p10();
        let qmax2 = 2.0 * p.bernoulli;
        assert!(p.density_unchecked(qmax2 * (1.0 - 1e-12)) < 1e-20);
        assert!(p.density(GasState::new(p.q_star, 0.0)).is_err());
    }

    #[test]
    fn symmetric_eigenvalues_for_horizontal_flow() {
        let p = p10();
        let s = GasState::new(0.9, 0.0);
        let c = p.sound_speed(s).unwrap();
        let (l1, l2) = p.eigenvalues(s).unwrap();
        let expect = c / (0.81 - c * c).sqrt();
        assert!((l1 + expect).abs() < 1e-14 && (l2 - expect).abs() < 1e-14);
        let (t1, t2) = p.eigenvalues_tan(p.u_inf()).unwrap();
        let (r1, r2) = p.eigenvalues(p.u_inf()).unwrap();
        assert!((t1 - r1).abs() < 1e-10 && (t2 - r2).abs() < 1e-10);
    }

    #[test]
    fn eigenvectors_mirror_under_reflection() {
        let p = p10();
        let s = GasState::new(0.9, 0.0);
        let r1 = p.right_eigenvector(s, 1).unwrap();
        let r2 = p.right_eigenvector(s, 2).unwrap();
        assert!((r1[0] + r2[0]).abs() < 1e-12 && (r1[1] - r2[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_sonic_states() {
        let p = p10();
        let c = p.sound_speed(GasState::new(0.5, 0.0)).unwrap();
        assert!(p.eigenvalues(GasState::new(0.999 * c, 0.2)).is_err());
        assert!(FlowParams::new(3.5, 10.0).is_err());
        assert!(FlowParams::new(1.4, 0.9).is_err());
    }

    fn valid_state() -> impl Strategy<Value = GasState> {
        (0.35f64..0.99, -0.6f64..0.6).prop_map(|(q, th)| GasState::new(q * th.cos(), q * th.sin()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn bernoulli_residual_is_tiny(s in valid_state()) {
            let p = p10();
            let rho = p.density(s).unwrap();
            prop_assert!(p.bernoulli_residual(s, rho).abs() < 1e-12);
        }

        #[test]
        fn eigen_structure(s in valid_state()) {
            let p = p10();
            let c = p.sound_speed(s).unwrap();
            prop_assume!(s.u > 1.05 * c);
            {
                let (l1, l2) = p.eigenvalues(s).unwrap();
                let (t1, t2) = p.eigenvalues_tan(s).unwrap();
                prop_assert!(l1 < l2);
                prop_assert!((l1 - t1).abs() < 1e-10 * (1.0 + l1.abs()));
                prop_assert!((l2 - t2).abs() < 1e-10 * (1.0 + l2.abs()));
                for i in 1..=2 {
                    let r = p.right_eigenvector(s, i).unwrap();
                    let g = p.grad_eigenvalue_fd(s, i).unwrap();
                    prop_assert!((r[0] * g[0] + r[1] * g[1] - 1.0).abs() < 1e-5);
                }
            }
        }

        #[test]
        fn angles_are_scale_invariant(s in valid_state(), k in 0.5f64..2.0) {
            // rescaling velocities together with u_inf: c scales like q
            let p = p10();
            if let Ok(c) = p.check_supersonic(s) {
                let th = s.angle();
                let m = s.speed() / c;
                let ss = GasState::new(k * s.u, k * s.v);
                let tm_scaled = (k * c / (ss.speed_sq() - k * k * c * c).sqrt()).atan();
                prop_assert!((ss.angle() - th).abs() < 1e-13);
                prop_assert!((ss.speed() / (k * c) - m).abs() < 1e-12 * m);
                prop_assert!((tm_scaled - p.mach_angle(s).unwrap()).abs() < 1e-12);
            }
        }
    }
}
