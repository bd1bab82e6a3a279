//! CoM reference trajectories: piecewise-quintic segments with zero velocity
//! and acceleration at the joins (C^2 by construction), queried for the
//! derived momentum references.

use nalgebra::{Vector3, Vector6};

/// One polynomial hold-or-move segment.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    t1: f64,
    from: Vector3<f64>,
    to: Vector3<f64>,
}

/// Desired CoM trajectory and the zero angular-momentum reference.
#[derive(Debug, Clone)]
pub struct MomentumReference {
    segments: Vec<Segment>,
}

/// Reference sample: CoM derivatives up to jerk.
#[derive(Debug, Clone, Copy)]
pub struct RefSample {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub acc: Vector3<f64>,
    pub jerk: Vector3<f64>,
}

impl MomentumReference {
    /// Constant hover reference.
    pub fn hover(p0: Vector3<f64>) -> Self {
        MomentumReference {
            segments: vec![Segment {
                t0: 0.0,
                t1: f64::INFINITY,
                from: p0,
                to: p0,
            }],
        }
    }

    /// Build from waypoints: `(arrival time, position)` pairs; the reference
    /// rests at each waypoint boundary. Times must be strictly increasing.
    pub fn from_waypoints(p0: Vector3<f64>, waypoints: &[(f64, Vector3<f64>)]) -> Self {
        let mut segments = Vec::new();
        let mut t = 0.0;
        let mut p = p0;
        for &(arrival, target) in waypoints {
            assert!(arrival > t, "waypoint times must increase");
            segments.push(Segment {
                t0: t,
                t1: arrival,
                from: p,
                to: target,
            });
            t = arrival;
            p = target;
        }
        segments.push(Segment {
            t0: t,
            t1: f64::INFINITY,
            from: p,
            to: p,
        });
        MomentumReference { segments }
    }

    /// Sample position through jerk at time `t` (clamped into the profile).
    pub fn sample(&self, t: f64) -> RefSample {
        let seg = self
            .segments
            .iter()
            .find(|s| t < s.t1)
            .unwrap_or_else(|| self.segments.last().expect("nonempty"));
        let delta = seg.to - seg.from;
        if delta.norm() == 0.0 || !seg.t1.is_finite() {
            return RefSample {
                pos: seg.from,
                vel: Vector3::zeros(),
                acc: Vector3::zeros(),
                jerk: Vector3::zeros(),
            };
        }
        let duration = seg.t1 - seg.t0;
        let tau = ((t - seg.t0) / duration).clamp(0.0, 1.0);
        let (t2, t3, t4, t5) = (tau * tau, tau * tau * tau, tau.powi(4), tau.powi(5));
        // Quintic with zero velocity/acceleration at both ends.
        let shape = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let dshape = (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / duration;
        let ddshape = (60.0 * tau - 180.0 * t2 + 120.0 * t3) / (duration * duration);
        let dddshape = (60.0 - 360.0 * tau + 360.0 * t2) / (duration * duration * duration);
        RefSample {
            pos: seg.from + delta * shape,
            vel: delta * dshape,
            acc: delta * ddshape,
            jerk: delta * dddshape,
        }
    }

    /// Desired momentum: zero angular part, m * v linear part.
    pub fn h_des(&self, t: f64, mass: f64) -> Vector6<f64> {
        let s = self.sample(t);
        let mut h = Vector6::zeros();
        for k in 0..3 {
            h[3 + k] = mass * s.vel[k];
        }
        h
    }

    pub fn hdot_des(&self, t: f64, mass: f64) -> Vector6<f64> {
        let s = self.sample(t);
        let mut h = Vector6::zeros();
        for k in 0..3 {
            h[3 + k] = mass * s.acc[k];
        }
        h
    }

    pub fn hddot_des(&self, t: f64, mass: f64) -> Vector6<f64> {
        let s = self.sample(t);
        let mut h = Vector6::zeros();
        for k in 0..3 {
            h[3 + k] = mass * s.jerk[k];
        }
        h
    }
}
