//! Adaptive Dormand-Prince 5(4) integrator for planar systems.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_steps: 200_000 }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        OdeOptions { rtol, atol: rtol * 1e-2, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub t: f64,
    pub y: [f64; 2],
    pub dy: [f64; 2],
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn comb(y: [f64; 2], h: f64, terms: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut out = y;
    for (a, k) in terms {
        out[0] += h * a * k[0];
        out[1] += h * a * k[1];
    }
    out
}

struct Trial {
    y: [f64; 2],
    dy: [f64; 2],
    err: f64,
}

fn try_step<F>(f: &mut F, t: f64, y: [f64; 2], k1: [f64; 2], h: f64, opts: &OdeOptions) -> Result<Trial>
where
    F: FnMut(f64, [f64; 2]) -> Result<[f64; 2]>,
{
    let k2 = f(t + C2 * h, comb(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, comb(y, h, &[(A31, k1), (A32, k2)]))?;
    let k4 = f(t + C4 * h, comb(y, h, &[(A41, k1), (A42, k2), (A43, k3)]))?;
    let k5 = f(t + C5 * h, comb(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]))?;
    let k6 = f(t + h, comb(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]))?;
    let y1 = comb(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
    let k7 = f(t + h, y1)?;
    let mut err = 0.0f64;
    for j in 0..2 {
        let e = h * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
        let sc = opts.atol + opts.rtol * y[j].abs().max(y1[j].abs());
        err = err.max((e / sc).abs());
    }
    Ok(Trial { y: y1, dy: k7, err })
}

/// Integrates from `t0` to `t1`, optionally stopping after the first step on
/// which `stop` changes sign. Returns the accepted nodes (first node is the
/// initial point).
pub fn integrate_with<F, G>(
    mut f: F,
    t0: f64,
    y0: [f64; 2],
    t1: f64,
    opts: &OdeOptions,
    mut stop: Option<G>,
) -> Result<Vec<Node>>
where
    F: FnMut(f64, [f64; 2]) -> Result<[f64; 2]>,
    G: FnMut(f64, [f64; 2]) -> f64,
{
    let k1 = f(t0, y0)?;
    let mut nodes = vec![Node { t: t0, y: y0, dy: k1 }];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(nodes);
    }
    let dir = span.signum();
    let mut g_prev = stop.as_mut().map(|g| g(t0, y0));
    let scale = (y0[0].abs() + y0[1].abs()).max(1e-300);
    let slope = (k1[0].abs() + k1[1].abs()).max(1e-300);
    let mut h = (0.01 * scale / slope).min(span.abs()).min(0.05).max(1e-14 * span.abs()) * dir;
    let mut t = t0;
    let mut y = y0;
    let mut dy = k1;
    let tiny = 1e-15 * (t0.abs() + t1.abs()).max(1e-300);
    for _ in 0..opts.max_steps {
        let remaining = t1 - t;
        if remaining * dir <= tiny {
            break;
        }
        if (h.abs() - remaining.abs()) > -tiny {
            h = remaining;
        }
        let res = try_step(&mut f, t, y, dy, h, opts);
        match res {
            Ok(tr) if tr.err <= 1.0 => {
                t = if h == remaining { t1 } else { t + h };
                y = tr.y;
                dy = tr.dy;
                nodes.push(Node { t, y, dy });
                if let (Some(g), Some(gp)) = (stop.as_mut(), g_prev.as_mut()) {
                    let gv = g(t, y);
                    if gv == 0.0 || gv.signum() != gp.signum() {
                        return Ok(nodes);
                    }
                    *gp = gv;
                }
                let fac = if tr.err == 0.0 { 5.0 } else { (0.9 * tr.err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            }
            Ok(tr) => {
                h *= (0.9 * tr.err.powf(-0.2)).clamp(0.1, 0.9);
            }
            Err(e) => {
                h *= 0.25;
                if h.abs() < tiny.max(1e-15 * t.abs()) {
                    return Err(e);
                }
            }
        }
        if h.abs() < 1e-15 * t.abs().max(1e-300) && h.abs() < tiny {
            return Err(Error::Convergence { what: "ode step size", iters: nodes.len(), residual: h });
        }
    }
    if (t1 - t) * dir > tiny {
        return Err(Error::Convergence { what: "ode integration", iters: opts.max_steps, residual: t1 - t });
    }
    Ok(nodes)
}

pub fn integrate<F>(f: F, t0: f64, y0: [f64; 2], t1: f64, opts: &OdeOptions) -> Result<Vec<Node>>
where
    F: FnMut(f64, [f64; 2]) -> Result<[f64; 2]>,
{
    integrate_with(f, t0, y0, t1, opts, None::<fn(f64, [f64; 2]) -> f64>)
}

/// End value of an integration.
pub fn solve_to<F>(f: F, t0: f64, y0: [f64; 2], t1: f64, opts: &OdeOptions) -> Result<[f64; 2]>
where
    F: FnMut(f64, [f64; 2]) -> Result<[f64; 2]>,
{
    let nodes = integrate(f, t0, y0, t1, opts)?;
    Ok(nodes.last().map(|n| n.y).unwrap_or(y0))
}

/// Cubic Hermite interpolation on an ordered node list (either direction).
pub fn hermite(nodes: &[Node], t: f64) -> [f64; 2] {
    let n = nodes.len();
    if n == 1 {
        return nodes[0].y;
    }
    let asc = nodes[n - 1].t > nodes[0].t;
    let key = |nd: &Node| if asc { nd.t } else { -nd.t };
    let tk = if asc { t } else { -t };
    let idx = match nodes.binary_search_by(|nd| key(nd).partial_cmp(&tk).unwrap_or(std::cmp::Ordering::Less)) {
        Ok(i) => return nodes[i].y,
        Err(i) => i.clamp(1, n - 1),
    };
    let a = &nodes[idx - 1];
    let b = &nodes[idx];
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    std::array::from_fn(|j| h00 * a.y[j] + h10 * h * a.dy[j] + h01 * b.y[j] + h11 * h * b.dy[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(_t: f64, y: [f64; 2]) -> Result<[f64; 2]> {
        Ok([-y[1], y[0]])
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let opts = OdeOptions::default();
        let y = solve_to(rot, 0.0, [1.0, 0.0], 3.0, &opts).unwrap();
        assert!((y[0] - 3f64.cos()).abs() < 1e-9);
        assert!((y[1] - 3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration_returns() {
        let opts = OdeOptions::default();
        let y = solve_to(rot, 0.0, [1.0, 0.0], 2.0, &opts).unwrap();
        let z = solve_to(rot, 2.0, y, 0.0, &opts).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-9 && z[1].abs() < 1e-9);
    }

    #[test]
    fn zero_length_is_identity() {
        let nodes = integrate(rot, 1.0, [0.3, 0.4], 1.0, &OdeOptions::default()).unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].y, [0.3, 0.4]);
    }

    #[test]
    fn hermite_between_nodes() {
        let nodes = integrate(rot, 0.0, [1.0, 0.0], 1.0, &OdeOptions::default()).unwrap();
        for k in 0..20 {
            let t = k as f64 / 19.0;
            let y = hermite(&nodes, t);
            assert!((y[0] - t.cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn stop_on_sign_change() {
        let nodes =
            integrate_with(rot, 0.0, [1.0, 0.0], 3.0, &OdeOptions::default(), Some(|_t: f64, y: [f64; 2]| y[0]))
                .unwrap();
        let last = nodes.last().unwrap();
        assert!(last.y[0] <= 0.0 && last.t < 3.0 && last.t > std::f64::consts::FRAC_PI_2);
    }
}
