//! Forward kinematics, velocity propagation, and geometric Jacobians.
//!
//! All world-frame quantities. Jacobians are 6 x (6 + n) with rows ordered
//! (angular, linear) and columns (base angular, base linear, joints); they
//! map nu to the spatial velocity of a link frame or of an arbitrary point
//! rigidly attached to a link.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};

use super::{JointState, RobotModel};
use crate::math::{axis_angle, skew};
use crate::Result;

/// World-frame kinematic state of one link.
#[derive(Debug, Clone)]
pub struct LinkKin {
    /// world_R_link.
    pub rot: Matrix3<f64>,
    /// Link frame origin.
    pub pos: Vector3<f64>,
    /// Angular velocity.
    pub ang_vel: Vector3<f64>,
    /// Velocity of the link frame origin.
    pub vel: Vector3<f64>,
    /// Link CoM position.
    pub com: Vector3<f64>,
    /// Velocity of the link CoM.
    pub com_vel: Vector3<f64>,
}

/// Forward kinematics result for the whole tree.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub links: Vec<LinkKin>,
    /// World joint axes (one per joint).
    pub joint_axis_w: Vec<Vector3<f64>>,
    /// World joint origins (= child frame origin).
    pub joint_origin_w: Vec<Vector3<f64>>,
    /// Robot CoM.
    pub com: Vector3<f64>,
    /// Robot CoM velocity.
    pub com_vel: Vector3<f64>,
}

/// Compute world transforms, velocities, and the mass-weighted robot CoM.
pub fn forward_kinematics(model: &RobotModel, state: &JointState) -> Result<Kinematics> {
    state.validate(model)?;

    let n_links = model.links.len();
    let base_rot = state.base_rot.to_rotation_matrix().into_inner();
    let mut links = vec![
        LinkKin {
            rot: Matrix3::identity(),
            pos: Vector3::zeros(),
            ang_vel: Vector3::zeros(),
            vel: Vector3::zeros(),
            com: Vector3::zeros(),
            com_vel: Vector3::zeros(),
        };
        n_links
    ];
    links[model.base].rot = base_rot;
    links[model.base].pos = state.base_pos;
    links[model.base].ang_vel = state.base_ang_vel;
    links[model.base].vel = state.base_lin_vel;

    let nj = model.n_joints();
    let mut joint_axis_w = vec![Vector3::zeros(); nj];
    let mut joint_origin_w = vec![Vector3::zeros(); nj];

    for &ji in model.topo_order() {
        let joint = &model.joints[ji];
        let parent = links[joint.parent].clone();
        let axis_w = parent.rot * joint.axis;
        let origin_w = parent.pos + parent.rot * joint.origin;
        let rot = parent.rot * axis_angle(&joint.axis, state.s[ji]);
        let vel = parent.vel + parent.ang_vel.cross(&(origin_w - parent.pos));
        let ang_vel = parent.ang_vel + axis_w * state.sdot[ji];
        joint_axis_w[ji] = axis_w;
        joint_origin_w[ji] = origin_w;
        links[joint.child] = LinkKin {
            rot,
            pos: origin_w,
            ang_vel,
            vel,
            com: Vector3::zeros(),
            com_vel: Vector3::zeros(),
        };
    }

    let mut com = Vector3::zeros();
    let mut com_vel = Vector3::zeros();
    for (i, spec) in model.links.iter().enumerate() {
        let arm = links[i].rot * spec.com;
        links[i].com = links[i].pos + arm;
        links[i].com_vel = links[i].vel + links[i].ang_vel.cross(&arm);
        com += spec.mass * links[i].com;
        com_vel += spec.mass * links[i].com_vel;
    }
    com /= model.total_mass;
    com_vel /= model.total_mass;

    Ok(Kinematics {
        links,
        joint_axis_w,
        joint_origin_w,
        com,
        com_vel,
    })
}

/// Jacobian of an arbitrary world point `p` rigidly attached to `link`.
pub fn point_jacobian(model: &RobotModel, kin: &Kinematics, link: usize, p: &Vector3<f64>) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(6, model.n_dof());
    let base_pos = kin.links[model.base].pos;
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-skew(&(p - base_pos))));
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&Matrix3::identity());
    for &ji in model.ancestors(link) {
        let a = kin.joint_axis_w[ji];
        let lever = a.cross(&(p - kin.joint_origin_w[ji]));
        j.fixed_view_mut::<3, 1>(0, 6 + ji).copy_from(&a);
        j.fixed_view_mut::<3, 1>(3, 6 + ji).copy_from(&lever);
    }
    j
}

/// Jacobian of the named link's frame origin.
///
/// For the base link this is `[identity | zeros]`. Columns of joints not on
/// the path from the base are zero.
pub fn link_jacobian(model: &RobotModel, state: &JointState, link_name: &str) -> Result<DMatrix<f64>> {
    let idx = model.link_index(link_name)?;
    let kin = forward_kinematics(model, state)?;
    Ok(point_jacobian(model, &kin, idx, &kin.links[idx].pos.clone()))
}

/// Velocity-product spatial acceleration `Jdot nu` of a point rigidly
/// attached to `link`, i.e. the point's spatial acceleration when `nudot = 0`.
///
/// `p` is the point's world position and `pdot` its world velocity.
pub fn point_bias_accel(
    model: &RobotModel,
    kin: &Kinematics,
    state: &JointState,
    link: usize,
    p: &Vector3<f64>,
    pdot: &Vector3<f64>,
) -> Vector6<f64> {
    let base = &kin.links[model.base];
    let mut alpha = Vector3::zeros();
    // Base block derivative: d/dt [-S(p - p_B)] * omega_B.
    let mut acc = base.ang_vel.cross(&(pdot - base.vel));
    for &ji in model.ancestors(link) {
        let sd = state.sdot[ji];
        if sd == 0.0 {
            continue;
        }
        let parent = &kin.links[model.joints[ji].parent];
        let a = kin.joint_axis_w[ji];
        let adot = parent.ang_vel.cross(&a);
        // The joint origin is a material point of the parent link.
        let odot = kin.links[model.joints[ji].child].vel;
        alpha += adot * sd;
        acc += (adot.cross(&(p - kin.joint_origin_w[ji])) + a.cross(&(pdot - odot))) * sd;
    }
    let mut out = Vector6::zeros();
    out.fixed_rows_mut::<3>(0).copy_from(&alpha);
    out.fixed_rows_mut::<3>(3).copy_from(&acc);
    out
}

/// Spatial velocity (omega, v) of a point attached to `link`, from the
/// propagated kinematics. Used by tests to cross-check Jacobians.
pub fn point_velocity(kin: &Kinematics, link: usize, p: &Vector3<f64>) -> Vector6<f64> {
    let l = &kin.links[link];
    let v = l.vel + l.ang_vel.cross(&(p - l.pos));
    let mut out = Vector6::zeros();
    out.fixed_rows_mut::<3>(0).copy_from(&l.ang_vel);
    out.fixed_rows_mut::<3>(3).copy_from(&v);
    out
}

/// Advance the configuration by `nu * dt` (frozen velocity), for
/// finite-difference oracles.
pub fn advance_config(state: &JointState, nu: &DVector<f64>, dt: f64) -> JointState {
    let mut next = state.clone();
    let omega = Vector3::new(nu[0], nu[1], nu[2]);
    let v = Vector3::new(nu[3], nu[4], nu[5]);
    next.base_pos += v * dt;
    next.base_rot = crate::math::integrate_quat(&state.base_rot, &omega, dt);
    for i in 0..state.s.len() {
        next.s[i] += nu[6 + i] * dt;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_model_text, load_model};
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(model: &RobotModel, rng: &mut StdRng) -> JointState {
        let n = model.n_joints();
        let mut st = JointState::zero(n);
        st.base_pos = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        st.base_rot = UnitQuaternion::from_scaled_axis(Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ));
        st.base_ang_vel = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        st.base_lin_vel = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for i in 0..n {
            let (lo, hi) = model.joints[i].limits;
            st.s[i] = rng.gen_range(0.5 * lo..0.5 * hi);
            st.sdot[i] = rng.gen_range(-1.0..1.0);
        }
        st
    }

    #[test]
    fn rest_pose_matches_offsets() {
        let model = load_model(default_model_text()).unwrap();
        let st = JointState::zero(model.n_joints());
        let kin = forward_kinematics(&model, &st).unwrap();
        let torso = model.link_index("torso").unwrap();
        assert_relative_eq!(kin.links[torso].pos, Vector3::new(0.0, 0.0, 0.20), epsilon = 1e-14);
        let l_foot = model.link_index("l_foot").unwrap();
        assert_relative_eq!(kin.links[l_foot].pos, Vector3::new(0.0, 0.09, -0.60), epsilon = 1e-14);
        // All frames stay axis-aligned at zero configuration.
        assert_relative_eq!(kin.links[l_foot].rot, Matrix3::identity(), epsilon = 1e-14);
    }

    #[test]
    fn base_translation_shifts_all_coms() {
        let model = load_model(default_model_text()).unwrap();
        let st0 = JointState::zero(model.n_joints());
        let mut st1 = st0.clone();
        st1.base_pos = Vector3::new(1.0, 2.0, 3.0);
        let k0 = forward_kinematics(&model, &st0).unwrap();
        let k1 = forward_kinematics(&model, &st1).unwrap();
        for i in 0..model.links.len() {
            assert_relative_eq!(k1.links[i].com, k0.links[i].com + Vector3::new(1.0, 2.0, 3.0), epsilon = 1e-12);
        }
        assert_relative_eq!(k1.com, k0.com + Vector3::new(1.0, 2.0, 3.0), epsilon = 1e-12);
    }

    #[test]
    fn com_is_mass_weighted_mean() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let st = random_state(&model, &mut rng);
        let kin = forward_kinematics(&model, &st).unwrap();
        // Brute force: recompute each link CoM by composing transforms from
        // scratch, then mass-average.
        let mut num = Vector3::zeros();
        let mut mass = 0.0;
        for (i, spec) in model.links.iter().enumerate() {
            let com = kin.links[i].rot * spec.com + kin.links[i].pos;
            num += spec.mass * com;
            mass += spec.mass;
        }
        assert_relative_eq!(kin.com, num / mass, epsilon = 1e-12);
    }

    #[test]
    fn com_rotates_with_base() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        let st = random_state(&model, &mut rng);
        let rot = UnitQuaternion::from_scaled_axis(Vector3::new(0.3, -0.2, 0.9));
        let mut st_rot = st.clone();
        st_rot.base_rot = rot * st.base_rot;
        let k = forward_kinematics(&model, &st).unwrap();
        let k_rot = forward_kinematics(&model, &st_rot).unwrap();
        let expected = st.base_pos + rot * (k.com - st.base_pos);
        assert_relative_eq!(k_rot.com, expected, epsilon = 1e-12);
    }

    #[test]
    fn base_jacobian_is_identity_block() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let st = random_state(&model, &mut rng);
        let j = link_jacobian(&model, &st, "pelvis").unwrap();
        let mut expected = DMatrix::zeros(6, model.n_dof());
        expected.fixed_view_mut::<6, 6>(0, 0).copy_from(&nalgebra::Matrix6::identity());
        assert_relative_eq!(j, expected, epsilon = 1e-14);
    }

    #[test]
    fn off_path_columns_are_zero() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(4);
        let st = random_state(&model, &mut rng);
        let j = link_jacobian(&model, &st, "l_forearm").unwrap();
        let fa = model.link_index("l_forearm").unwrap();
        let on_path: Vec<usize> = model.ancestors(fa).to_vec();
        for ji in 0..model.n_joints() {
            if !on_path.contains(&ji) {
                assert_eq!(j.column(6 + ji).norm(), 0.0, "joint {} should be off-path", model.joints[ji].name);
            }
        }
        assert!(on_path.len() == 6); // torso yaw/roll + 4 arm joints
    }

    #[test]
    fn unknown_link_errors() {
        let model = load_model(default_model_text()).unwrap();
        let st = JointState::zero(model.n_joints());
        assert!(link_jacobian(&model, &st, "nope").is_err());
    }

    #[test]
    fn jacobian_times_nu_matches_propagated_velocity() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let st = random_state(&model, &mut rng);
            let kin = forward_kinematics(&model, &st).unwrap();
            let nu = st.nu();
            for i in 0..model.links.len() {
                let j = point_jacobian(&model, &kin, i, &kin.links[i].com.clone());
                let tw = Vector6::from_iterator((&j * &nu).iter().copied());
                let direct = point_velocity(&kin, i, &kin.links[i].com.clone());
                assert_relative_eq!(tw, direct, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let delta = 1e-6;
        for _ in 0..5 {
            let st = random_state(&model, &mut rng);
            let kin = forward_kinematics(&model, &st).unwrap();
            let nu = st.nu();
            let plus = forward_kinematics(&model, &advance_config(&st, &nu, delta)).unwrap();
            let minus = forward_kinematics(&model, &advance_config(&st, &nu, -delta)).unwrap();
            for i in 0..model.links.len() {
                let j = point_jacobian(&model, &kin, i, &kin.links[i].pos.clone());
                let tw = &j * &nu;
                let fd_v = (plus.links[i].pos - minus.links[i].pos) / (2.0 * delta);
                assert_relative_eq!(Vector3::new(tw[3], tw[4], tw[5]), fd_v, epsilon = 1e-5, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn bias_accel_matches_finite_difference() {
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let delta = 1e-6;
        for _ in 0..5 {
            let st = random_state(&model, &mut rng);
            let kin = forward_kinematics(&model, &st).unwrap();
            let nu = st.nu();
            // Freeze nu, move the configuration: d/dt (J nu) = Jdot nu.
            let stp = advance_config(&st, &nu, delta);
            let stm = advance_config(&st, &nu, -delta);
            let kp = forward_kinematics(&model, &stp).unwrap();
            let km = forward_kinematics(&model, &stm).unwrap();
            for i in 0..model.links.len() {
                let bias = point_bias_accel(&model, &kin, &st, i, &kin.links[i].com.clone(), &kin.links[i].com_vel.clone());
                let fd = (point_velocity(&kp, i, &kp.links[i].com.clone())
                    - point_velocity(&km, i, &km.links[i].com.clone()))
                    / (2.0 * delta);
                assert_relative_eq!(bias, fd, epsilon = 1e-5, max_relative = 1e-5);
            }
        }
    }
}
