//! Weighted total variation, interaction potential and the Glimm-type
//! functional on the mesh rows, with a per-step monotonicity audit.

use crate::coeffs::Weights;
use crate::riemann::WaveType;
use crate::scheme::{Case, InvWave, PressureSchedule, SchemeState, StepRecord, Trajectory};

/// `(sigma_lower, sigma_upper)` with `sigma_upper = b0 + c1 * sum|omega|` and
/// `sigma_lower = s0 - varpi`.
pub fn sigma_bounds(s0: f64, b0: f64, schedule: &PressureSchedule, c1: f64, varpi: f64) -> (f64, f64) {
    (s0 - varpi, b0 + c1 * schedule.tv())
}

/// Bounds with `C1 = 2 C` and `varpi = 2 C sum|omega|`.
pub fn sigma_bounds_from_constant(s0: f64, b0: f64, schedule: &PressureSchedule, cbar: f64) -> (f64, f64) {
    sigma_bounds(s0, b0, schedule, 2.0 * cbar, 2.0 * cbar * schedule.tv())
}

/// `max_h max(|sigma_chi(h) - s0|, |sigma_b(h) - b0|) / sum|omega|`, the
/// constant bounding how far the tracked rays move on a computed run.
pub fn displacement_constant(traj: &Trajectory, s0: f64, b0: f64) -> f64 {
    let tv = traj.schedule.tv();
    if tv == 0.0 {
        return 0.0;
    }
    let d = traj.rows.iter().map(|r| (r.sigma_chi() - s0).abs().max((r.sigma_b() - b0).abs())).fold(0.0, f64::max);
    d / tv
}

/// The inventory of one mesh row.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveInventory {
    pub h: usize,
    pub waves: Vec<InvWave>,
    /// `sum_{k > h} |omega_k|`.
    pub remaining: f64,
    pub theta_chi: f64,
    pub theta_b: f64,
}

impl WaveInventory {
    pub fn of_row(row: &SchemeState, schedule: &PressureSchedule) -> Self {
        WaveInventory {
            h: row.h,
            waves: row.waves.clone(),
            remaining: schedule.remaining(row.h),
            theta_chi: row.theta_chi(),
            theta_b: row.theta_b(),
        }
    }
}

/// `(L0^(1), L0^(2))`.
pub fn wave_totals(waves: &[InvWave]) -> (f64, f64) {
    let mut l = (0.0, 0.0);
    for w in waves {
        if w.family == 1 {
            l.0 += w.strength.abs();
        } else {
            l.1 += w.strength.abs();
        }
    }
    l
}

pub fn compute_l(inv: &WaveInventory, w: &Weights) -> f64 {
    let (l1, l2) = wave_totals(&inv.waves);
    l1 + w.k2 * l2 + w.k1 * inv.remaining + w.k3 * inv.theta_chi + w.k4 * inv.theta_b
}

/// Whether `a`, issued above `b`, approaches it.
fn approach_ordered(a: &InvWave, b: &InvWave) -> bool {
    if a.family != b.family {
        return a.family == 1 && b.family == 2;
    }
    a.kind == WaveType::Shock || b.kind == WaveType::Shock
}

pub fn approach(a: &InvWave, b: &InvWave) -> bool {
    if a.sigma > b.sigma {
        approach_ordered(a, b)
    } else if b.sigma > a.sigma {
        approach_ordered(b, a)
    } else {
        false
    }
}

/// Sum of `|alpha||beta|` over approaching pairs.
pub fn q_zero(waves: &[InvWave]) -> f64 {
    let mut q = 0.0;
    for (i, a) in waves.iter().enumerate() {
        for b in &waves[i + 1..] {
            if approach(a, b) {
                q += a.strength.abs() * b.strength.abs();
            }
        }
    }
    q
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Potential {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q: f64,
}

pub fn compute_q(inv: &WaveInventory, bounds: (f64, f64)) -> Potential {
    let (lo, hi) = bounds;
    let q0 = q_zero(&inv.waves);
    let mut q1 = 0.0;
    let mut q2 = 0.0;
    for w in &inv.waves {
        if w.family == 1 {
            q1 += w.strength.abs() * (w.sigma - lo).abs();
        } else {
            q2 += w.strength.abs() * (hi - w.sigma).abs();
        }
    }
    Potential { q0, q1, q2, q: q0 + 2.0 * q1 + 2.0 * q2 }
}

/// One interaction region of a step.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionRecord {
    pub case: Case,
    pub sigma: f64,
    pub incoming: Vec<InvWave>,
    pub omega: f64,
    pub dsigma: f64,
}

impl From<&crate::scheme::Interaction> for InteractionRecord {
    fn from(i: &crate::scheme::Interaction) -> Self {
        InteractionRecord {
            case: i.case,
            sigma: i.sigma,
            incoming: i.incoming.clone(),
            omega: i.omega,
            dsigma: i.dsigma,
        }
    }
}

/// Local interaction potential: approaching pairs plus `|alpha| |Delta sigma|`
/// for every incoming wave reissued at a different ray.
pub fn local_q(rec: &InteractionRecord) -> f64 {
    let shift: f64 = rec.incoming.iter().map(|w| w.strength.abs() * (w.sigma - rec.sigma).abs()).sum();
    q_zero(&rec.incoming) + shift
}

pub fn local_e(rec: &InteractionRecord, xi: f64) -> f64 {
    let q = local_q(rec);
    let family_sum = |i: usize| rec.incoming.iter().filter(|w| w.family == i).map(|w| w.strength.abs()).sum::<f64>();
    match rec.case {
        Case::Interior => q,
        Case::Boundary => xi * (family_sum(2) + rec.omega.abs() + rec.dsigma.abs() + q),
        Case::Front => xi * (family_sum(1) + rec.dsigma.abs() + q),
    }
}

/// `E` of a case given by name.
pub fn local_e_named(
    case: &str,
    incoming: &[InvWave],
    sigma: f64,
    omega: f64,
    dsigma: f64,
    xi: f64,
) -> crate::Result<f64> {
    let case = Case::parse(case)?;
    Ok(local_e(&InteractionRecord { case, sigma, incoming: incoming.to_vec(), omega, dsigma }, xi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalRow {
    pub h: usize,
    pub l: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q: f64,
    pub f: f64,
    /// Sum of `E` over the interactions of step `h`.
    pub e: f64,
    pub e_interior: f64,
    pub e_boundary: f64,
    pub e_front: f64,
    /// `F(I_h) - F(I_{h+1})`.
    pub decrement: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalReport {
    pub weights: Weights,
    pub bounds: (f64, f64),
    pub rows: Vec<FunctionalRow>,
    /// Issuing rays outside `bounds`.
    pub out_of_bounds: usize,
}

impl FunctionalReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }

    pub fn total_decrement(&self) -> f64 {
        self.rows.iter().map(|r| r.decrement).sum()
    }

    pub fn total_e(&self) -> f64 {
        self.rows.iter().map(|r| r.e).sum()
    }

    /// Smallest `F(I_h) - F(I_{h+1}) - E/4` over the steps.
    pub fn min_slack(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.e > 0.0 || r.decrement != 0.0)
            .map(|r| r.decrement - 0.25 * r.e)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Relative tolerance of the audit for round-off in `F`.
pub const AUDIT_RTOL: f64 = 1e-12;

fn step_e(step: &StepRecord, xi: f64) -> (f64, f64, f64) {
    let mut e = (0.0, 0.0, 0.0);
    for i in &step.interactions {
        let v = local_e(&InteractionRecord::from(i), xi);
        match i.case {
            Case::Interior => e.0 += v,
            Case::Boundary => e.1 += v,
            Case::Front => e.2 += v,
        }
    }
    e
}

/// Evaluates `F` on every row and flags steps with
/// `F(I_{h+1}) > F(I_h) - E/4`.
pub fn audit(traj: &Trajectory, weights: &Weights, bounds: (f64, f64)) -> FunctionalReport {
    let invs: Vec<WaveInventory> = traj.rows.iter().map(|r| WaveInventory::of_row(r, &traj.schedule)).collect();
    let fs: Vec<(f64, Potential)> = invs
        .iter()
        .map(|inv| {
            let q = compute_q(inv, bounds);
            (compute_l(inv, weights) + weights.k * q.q, q)
        })
        .collect();
    let ls: Vec<f64> = invs.iter().map(|inv| compute_l(inv, weights)).collect();
    let mut out_of_bounds = 0;
    for inv in &invs {
        out_of_bounds += inv.waves.iter().filter(|w| w.sigma < bounds.0 || w.sigma > bounds.1).count();
    }
    let mut rows = Vec::with_capacity(invs.len());
    for (h, inv) in invs.iter().enumerate() {
        let (f, q) = fs[h];
        let (ei, eb, ef) = traj.steps.get(h).map(|s| step_e(s, weights.xi)).unwrap_or((0.0, 0.0, 0.0));
        let e = ei + eb + ef;
        let (decrement, violation) = match fs.get(h + 1) {
            Some(&(f1, _)) => {
                let tol = AUDIT_RTOL * f.abs().max(1.0);
                (f - f1, f1 > f - 0.25 * e + tol)
            }
            None => (0.0, false),
        };
        rows.push(FunctionalRow {
            h: inv.h,
            l: ls[h],
            q0: q.q0,
            q1: q.q1,
            q2: q.q2,
            q: q.q,
            f,
            e,
            e_interior: ei,
            e_boundary: eb,
            e_front: ef,
            decrement,
            violation,
        });
    }
    FunctionalReport { weights: *weights, bounds, rows, out_of_bounds }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(family: usize, strength: f64, sigma: f64) -> InvWave {
        let kind = if strength < 0.0 { WaveType::Shock } else { WaveType::Rarefaction };
        InvWave { family, strength, sigma, speed: 0.0, kind }
    }

    fn weights() -> Weights {
        Weights { k1: 10.0, k2: 3.0, k3: 2.0, k4: 0.5, k: 100.0, xi: 0.1 }
    }

    fn inv(waves: Vec<InvWave>) -> WaveInventory {
        WaveInventory { h: 0, waves, remaining: 0.0, theta_chi: 0.0, theta_b: 0.0 }
    }

    #[test]
    fn sigma_bounds_without_perturbation() {
        let s = PressureSchedule { p0: 0.1, values: vec![0.1; 5] };
        assert_eq!(sigma_bounds_from_constant(-0.9, -0.8, &s, 30.0), (-0.9, -0.8));
        let s = PressureSchedule { p0: 0.1, values: vec![0.1, 0.1, 0.11, 0.11] };
        let (lo, hi) = sigma_bounds_from_constant(-0.9, -0.8, &s, 30.0);
        assert!(lo < -0.9 && hi > -0.8);
    }

    #[test]
    fn weighted_variation() {
        let w = weights();
        assert_eq!(compute_l(&inv(vec![wave(2, 0.01, -0.5)]), &w), 0.03);
        let i =
            WaveInventory { h: 0, waves: vec![wave(1, -0.02, -0.5)], remaining: 0.001, theta_chi: 0.1, theta_b: 0.2 };
        assert!((compute_l(&i, &w) - (0.02 + 0.01 + 0.2 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn approaching_pairs() {
        // 1-wave above a 2-wave
        assert!(approach(&wave(1, 0.1, -0.5), &wave(2, 0.1, -0.6)));
        assert!(!approach(&wave(1, 0.1, -0.6), &wave(2, 0.1, -0.5)));
        assert!(approach(&wave(1, -0.1, -0.6), &wave(1, 0.1, -0.5)));
        assert!(!approach(&wave(2, 0.1, -0.6), &wave(2, 0.1, -0.5)));
        // same fan
        assert!(!approach(&wave(1, -0.1, -0.5), &wave(2, -0.1, -0.5)));
        assert_eq!(q_zero(&[wave(1, 0.1, -0.5)]), 0.0);
        let q = compute_q(&inv(vec![wave(1, 0.1, -0.5), wave(2, -0.2, -0.6)]), (-0.5, -0.4));
        assert!((q.q0 - 0.02).abs() < 1e-15);
        assert_eq!(q.q1, 0.0);
        assert!((q.q2 - 0.2 * 0.2).abs() < 1e-15);
        assert!((q.q - (q.q0 + 2.0 * q.q2)).abs() < 1e-15);
    }

    #[test]
    fn local_e_cases() {
        let e = local_e_named("interior", &[wave(2, 0.1, -0.5), wave(2, 0.1, -0.6)], -0.55, 0.0, 0.0, 0.1).unwrap();
        assert!((e - (0.1 * 0.05 * 2.0)).abs() < 1e-15);
        assert_eq!(local_e_named("boundary", &[], -0.5, 1e-3, 0.0, 0.1).unwrap(), 0.1 * 1e-3);
        assert_eq!(local_e_named("front", &[], -0.5, 0.0, 0.0, 0.1).unwrap(), 0.0);
        assert!(local_e_named("corner", &[], 0.0, 0.0, 0.0, 0.1).is_err());
    }
}
