use serde::{Deserialize, Serialize};

use super::params::{TestParams, XnuConfig};
use crate::concentration::ConePoint;
use crate::error::{Result, TodaError};
use crate::geometry::{norm3, scale3, Point, Surface};

const MAX_STEPS: usize = 10_000_000;

/// State of a flow after one Euler step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    /// Flow time.
    pub s: f64,
    pub t: [f64; 2],
    /// Distance of the base points (0 when one of them is the apex).
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Retraction {
    pub input: TestParams,
    pub output: TestParams,
    /// Samples of the first flow, starting with the input.
    pub h1: Vec<FlowSample>,
    pub h2: Vec<FlowSample>,
}

/// `R_ν`: deformation of `X` onto `X_ν`.
pub fn retract_to_xnu(theta: &TestParams, cfg: &XnuConfig, surface: Surface) -> Result<TestParams> {
    Ok(retract_traced(theta, cfg, surface)?.output)
}

/// `R_ν` with samples of both flows.
///
/// The first flow separates the pair,
/// `ẋ_i = (δ − max t)∇_{x_i}d²`, `ṫ_i = (t_i − t_j) t_i (δ − t_i)`,
/// until `|t1 − t2|² + d² ≥ δ⁴` or `max t = δ`. It is integrated with Euler
/// steps of length `10⁻³δ` in the state space; the reparametrization does
/// not change the orbits. The second flow `ṫ_i = χ1(min t) χ2(t_i)` moves
/// the smaller height into `[ν², ν]` and lands on the band exactly.
pub fn retract_traced(theta: &TestParams, cfg: &XnuConfig, surface: Surface) -> Result<Retraction> {
    let input = TestParams::new(theta.theta1, theta.theta2, surface, cfg.delta)
        .map_err(|e| TodaError::Precondition(format!("parameter not in X: {e}")))?;
    let delta = cfg.delta;
    let mut t = input.heights(delta);
    let mut x: [Option<Point>; 2] = [input.theta1.point().copied(), input.theta2.point().copied()];
    let dist = |x: &[Option<Point>; 2]| match (x[0], x[1]) {
        (Some(a), Some(b)) => surface.geodesic_distance(&a, &b),
        _ => 0.0,
    };

    let step = 1e-3 * delta;
    let mut s = 0.0;
    let mut h1 = vec![FlowSample { s, t, d: dist(&x) }];
    let stop1 = |t: [f64; 2], d: f64| {
        let m = t[0].max(t[1]);
        m >= delta || (t[0] - t[1]).powi(2) + d * d >= delta.powi(4)
    };
    while !stop1(t, dist(&x)) {
        if h1.len() > MAX_STEPS {
            return Err(TodaError::Numerical("separating flow did not terminate".into()));
        }
        let (a, b) = (x[0].expect("apex stops the flow"), x[1].expect("apex stops the flow"));
        let m = t[0].max(t[1]);
        let g = [scale3(surface.grad_dist_sq(&a, &b), delta - m), scale3(surface.grad_dist_sq(&b, &a), delta - m)];
        let vt = [(t[0] - t[1]) * t[0] * (delta - t[0]), (t[1] - t[0]) * t[1] * (delta - t[1])];
        let speed = (norm3(g[0]).powi(2) + norm3(g[1]).powi(2) + vt[0] * vt[0] + vt[1] * vt[1]).sqrt();
        if !(speed > 0.0) {
            return Err(TodaError::Numerical(format!("separating flow is stationary at t = {t:?}")));
        }
        let mut h = step / speed;
        for i in 0..2 {
            if vt[i] < 0.0 {
                h = h.min(0.5 * t[i] / -vt[i]);
            }
        }
        x = [Some(surface.exp_map(&a, &scale3(g[0], h))), Some(surface.exp_map(&b, &scale3(g[1], h)))];
        for i in 0..2 {
            t[i] = (t[i] + h * vt[i]).min(delta);
        }
        s += h;
        h1.push(FlowSample { s, t, d: dist(&x) });
    }

    // Second flow: heights only.
    let nu = cfg.nu;
    let band = |m: f64| m >= nu * nu && m <= nu;
    let chi2 = |t: f64| {
        if t <= 0.5 * delta {
            1.0
        } else if t >= delta {
            0.0
        } else {
            2.0 * (1.0 - t / delta)
        }
    };
    let d_fixed = dist(&x);
    let mut s = 0.0;
    let mut h2 = vec![FlowSample { s, t, d: d_fixed }];
    loop {
        let k = if t[0] <= t[1] { 0 } else { 1 };
        let m = t[k];
        if band(m) {
            break;
        }
        if h2.len() > MAX_STEPS {
            return Err(TodaError::Numerical("height flow did not terminate".into()));
        }
        let (c1, target) = if m < nu * nu { (1.0, nu * nu) } else { (-1.0, nu) };
        let rate = [c1 * chi2(t[0]), c1 * chi2(t[1])];
        let mut h = step;
        let reach = (target - m) / rate[k];
        let land = reach <= h;
        if land {
            h = reach;
        }
        for i in 0..2 {
            if t[i] < delta {
                t[i] += h * rate[i];
            }
        }
        if land {
            t[k] = target;
        }
        s += h;
        h2.push(FlowSample { s, t, d: d_fixed });
    }

    let cone = |i: usize| match x[i] {
        Some(p) if t[i] < delta => ConePoint::Point { x: p, t: t[i] },
        _ => ConePoint::Apex,
    };
    let output = TestParams::new(cone(0), cone(1), surface, delta)?;
    if !cfg.contains(&output, surface) {
        return Err(TodaError::Invariant(format!("retraction left X_ν: {output:?}")));
    }
    Ok(Retraction { input, output, h1, h2 })
}
