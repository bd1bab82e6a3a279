//! Input bounds and control allocation.
//!
//! Rate bounds shaped by tanh keep both the input and its integral inside
//! the actuator box: near a limit the admissible rate toward it collapses to
//! zero, so a bound-respecting trajectory can approach but never cross it.
//! The allocation QP has a diagonal Hessian and box constraints only, so the
//! exact minimizer is the per-channel weighted target clamped to its box.

use nalgebra::DVector;

use crate::model::RobotModel;
use crate::{Error, Result};

/// Fraction of the channel range traversable per second at mid-range.
pub const RATE_FRACTION: f64 = 0.2;
/// Tanh sharpness: kappa = KAPPA_GAIN / range.
pub const KAPPA_GAIN: f64 = 10.0;

/// Per-channel rate bounds for u = (Tdot, sdot).
#[derive(Debug, Clone)]
pub struct Bounds {
    pub min: DVector<f64>,
    pub max: DVector<f64>,
}

impl Bounds {
    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.len() == 0
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        (0..u.len()).all(|i| u[i] >= self.min[i] - tol && u[i] <= self.max[i] + tol)
    }
}

/// State-dependent tanh rate bounds.
///
/// Thrust channel j: `Tdot in [-r tanh(k (T - tmin)), r tanh(k (tmax - T))]`
/// with r = RATE_FRACTION * range and k = KAPPA_GAIN / range; joint channels
/// use the position limits the same way, additionally capped by the joint
/// velocity limit. Values marginally outside their box are projected first.
pub fn tanh_bounds(
    model: &RobotModel,
    thrusts: &DVector<f64>,
    s: &DVector<f64>,
    rate_frac: f64,
    kappa_gain: f64,
) -> Result<Bounds> {
    let m = model.jets.len();
    let n = model.n_joints();
    if thrusts.len() != m || s.len() != n {
        return Err(Error::Dimension(format!(
            "{} thrusts / {} joints for a model with {} / {}",
            thrusts.len(),
            s.len(),
            m,
            n
        )));
    }
    let mut min = DVector::zeros(m + n);
    let mut max = DVector::zeros(m + n);
    for (j, jet) in model.jets.iter().enumerate() {
        let range = jet.tmax - jet.tmin;
        let r = rate_frac * range;
        let k = kappa_gain / range;
        let t = thrusts[j].clamp(jet.tmin, jet.tmax);
        max[j] = r * (k * (jet.tmax - t)).tanh();
        min[j] = -r * (k * (t - jet.tmin)).tanh();
    }
    for (i, joint) in model.joints.iter().enumerate() {
        let range = joint.limits.1 - joint.limits.0;
        let r = (rate_frac * range).min(joint.vmax);
        let k = kappa_gain / range;
        let q = s[i].clamp(joint.limits.0, joint.limits.1);
        max[m + i] = r * (k * (joint.limits.1 - q)).tanh();
        min[m + i] = -r * (k * (q - joint.limits.0)).tanh();
    }
    Ok(Bounds { min, max })
}

/// Closed-form solution of
///
/// ```text
/// argmin_u  w1 |u - u*|^2 + w2 |sdot - sdot_postural|^2
/// s.t.      min <= u <= max
/// ```
///
/// Thrust channels (the first `n_jets`) see only the w1 term; joint channels
/// minimize the two-term quadratic, whose unconstrained optimum is the
/// weighted average. The objective is separable, so clamping per channel is
/// exact.
pub fn qp_solve(
    u_star: &DVector<f64>,
    sdot_postural: &DVector<f64>,
    w1: f64,
    w2: f64,
    bounds: &Bounds,
    n_jets: usize,
) -> Result<DVector<f64>> {
    let dim = u_star.len();
    if bounds.len() != dim || sdot_postural.len() + n_jets != dim {
        return Err(Error::Dimension(format!(
            "QP dimensions disagree: u* {}, postural {}, bounds {}, jets {}",
            dim,
            sdot_postural.len(),
            bounds.len(),
            n_jets
        )));
    }
    if !(w1 > 0.0) || w2 < 0.0 {
        return Err(Error::Validation(format!("weights must satisfy w1 > 0, w2 >= 0 (got {w1}, {w2})")));
    }
    let mut u = DVector::zeros(dim);
    for c in 0..dim {
        if bounds.min[c] > bounds.max[c] {
            return Err(Error::Validation(format!(
                "inconsistent bounds on channel {c}: [{}, {}]",
                bounds.min[c], bounds.max[c]
            )));
        }
        let target = if c < n_jets {
            u_star[c]
        } else {
            (w1 * u_star[c] + w2 * sdot_postural[c - n_jets]) / (w1 + w2)
        };
        u[c] = target.clamp(bounds.min[c], bounds.max[c]);
    }
    Ok(u)
}

/// QP objective value, shared with tests and the optimality property check.
pub fn qp_objective(
    u: &DVector<f64>,
    u_star: &DVector<f64>,
    sdot_postural: &DVector<f64>,
    w1: f64,
    w2: f64,
    n_jets: usize,
) -> f64 {
    let mut obj = 0.0;
    for c in 0..u.len() {
        let d = u[c] - u_star[c];
        obj += w1 * d * d;
        if c >= n_jets {
            let dp = u[c] - sdot_postural[c - n_jets];
            obj += w2 * dp * dp;
        }
    }
    obj
}
