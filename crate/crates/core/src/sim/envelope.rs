//! Standard flight envelope: the scripted CoM mission and its wind.
//!
//! Mission, all times in seconds from the initial CoM position p0:
//! hover 10, translate 2 m forward over 10, translate 1 m lateral over 10,
//! return to p0 over 10, hover 20 (total 60). The wind ramps to 5 m/s
//! horizontal over the first 5 s, holds, and rotates 90 degrees at t = 30 s.

use nalgebra::Vector3;

use crate::control::MomentumReference;

use super::wind::WindProfile;

/// Total duration of the standard envelope (s).
pub const STANDARD_DURATION: f64 = 60.0;

/// C^2 CoM reference for the standard envelope, anchored at `p0`.
pub fn standard_envelope(p0: Vector3<f64>) -> MomentumReference {
    MomentumReference::from_waypoints(
        p0,
        &[
            (10.0, p0),
            (20.0, p0 + Vector3::new(2.0, 0.0, 0.0)),
            (30.0, p0 + Vector3::new(2.0, 1.0, 0.0)),
            (40.0, p0),
        ],
    )
}

/// Wind profile of the standard envelope: the direction change starting at
/// t = 30 s sweeps over 5 s.
pub fn standard_wind() -> WindProfile {
    WindProfile::new(vec![
        (0.0, Vector3::zeros()),
        (5.0, Vector3::new(5.0, 0.0, 0.0)),
        (30.0, Vector3::new(5.0, 0.0, 0.0)),
        (35.0, Vector3::new(0.0, 5.0, 0.0)),
        (STANDARD_DURATION, Vector3::new(0.0, 5.0, 0.0)),
    ])
    .expect("static knots are valid")
}
