//! Small spatial-algebra helpers shared across the crate.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

/// Skew-symmetric matrix S(v) such that S(v) w = v x w.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation by `angle` about the unit axis `axis` (Rodrigues).
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let k = skew(axis);
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}

/// Integrate a unit quaternion by a world-frame angular velocity over `dt`
/// using the exponential map, renormalizing the result.
pub fn integrate_quat(q: &UnitQuaternion<f64>, omega_world: &Vector3<f64>, dt: f64) -> UnitQuaternion<f64> {
    let theta = omega_world * dt;
    let angle = theta.norm();
    let dq = if angle < 1e-12 {
        // Small-angle expansion of exp(theta/2).
        UnitQuaternion::new_normalize(Quaternion::new(1.0, 0.5 * theta.x, 0.5 * theta.y, 0.5 * theta.z))
    } else {
        UnitQuaternion::from_scaled_axis(theta)
    };
    // World-frame angular velocity composes on the left.
    UnitQuaternion::new_normalize((dq * q).into_inner())
}

/// Angle in [0, pi] between the body z axis of `q` and the world z axis.
pub fn tilt_angle(q: &UnitQuaternion<f64>) -> f64 {
    let bz = q.to_rotation_matrix() * Vector3::z();
    bz.z.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn skew_matches_cross_product() {
        let a = Vector3::new(1.0, -2.0, 0.5);
        let b = Vector3::new(0.3, 4.0, -1.0);
        assert_relative_eq!(skew(&a) * b, a.cross(&b), epsilon = 1e-15);
    }

    #[test]
    fn axis_angle_quarter_turn() {
        let r = axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(r * Vector3::x(), Vector3::y(), epsilon = 1e-14);
    }

    #[test]
    fn quat_integration_matches_rotation() {
        let q0 = UnitQuaternion::identity();
        let omega = Vector3::new(0.0, 0.0, 1.0);
        let mut q = q0;
        let dt = 1e-4;
        for _ in 0..10_000 {
            q = integrate_quat(&q, &omega, dt);
        }
        // One radian about z after 1 s.
        let expected = UnitQuaternion::from_scaled_axis(Vector3::new(0.0, 0.0, 1.0));
        assert_relative_eq!(q.angle_to(&expected), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn tilt_of_identity_is_zero() {
        assert_eq!(tilt_angle(&UnitQuaternion::identity()), 0.0);
        let tipped = UnitQuaternion::from_scaled_axis(Vector3::x() * 0.4);
        assert_relative_eq!(tilt_angle(&tipped), 0.4, epsilon = 1e-12);
    }
}
