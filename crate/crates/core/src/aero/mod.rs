//! Per-link aerodynamic force models and wrench aggregation.
//!
//! Links are treated as isolated axisymmetric bodies subject to drag and
//! normal force only; per-link aerodynamic moments are neglected. Forces act
//! at link centers of mass and enter the dynamics through transposed CoM
//! Jacobians.

pub mod axisym;
pub mod fit;

pub use axisym::{
    angle_of_attack, eval_force_areas, eval_link_force, force_area_vector, load_coeffs,
    predict_link_forces_axisym, write_coeffs, AxisymCoeffs, LinkCoeffs,
};
pub use fit::{fit_coefficients, project_samples, FitOptions, FitOutcome};

use nalgebra::{DVector, Vector3};

use crate::model::{point_jacobian, Kinematics, RobotModel};
use crate::{Error, Result};

/// Air density and the derived aerodynamic factor k_a = rho / 2.
#[derive(Debug, Clone, Copy)]
pub struct AeroFactors {
    /// Air density (kg/m^3), > 0.
    pub rho: f64,
}

impl AeroFactors {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Validation(format!("air density must be positive, got {rho}")));
        }
        Ok(AeroFactors { rho })
    }

    /// k_a = rho / 2.
    pub fn ka(&self) -> f64 {
        0.5 * self.rho
    }
}

impl Default for AeroFactors {
    /// Sea-level standard air.
    fn default() -> Self {
        AeroFactors { rho: 1.225 }
    }
}

/// Generalized aerodynamic wrench: sum of J_i^T (0, F_i) over aero links,
/// with each pure force applied at the link CoM.
pub fn total_wrench(model: &RobotModel, kin: &Kinematics, forces: &[Vector3<f64>]) -> Result<DVector<f64>> {
    if forces.len() != model.n_aero_links() {
        return Err(Error::Dimension(format!(
            "{} forces for {} aero links",
            forces.len(),
            model.n_aero_links()
        )));
    }
    let mut wrench = DVector::zeros(model.n_dof());
    for (f, &li) in forces.iter().zip(model.aero_links()) {
        let j = point_jacobian(model, kin, li, &kin.links[li].com.clone());
        // J^T (0, F): only the linear rows of J contribute.
        let lin = j.rows(3, 3);
        wrench.gemv_tr(1.0, &lin, f, 1.0);
    }
    Ok(wrench)
}

/// Net aerodynamic wrench about the robot CoM (world orientation):
/// (sum (p_i - p_G) x F_i, sum F_i).
pub fn centroidal_wrench(model: &RobotModel, kin: &Kinematics, forces: &[Vector3<f64>]) -> nalgebra::Vector6<f64> {
    let mut out = nalgebra::Vector6::zeros();
    for (f, &li) in forces.iter().zip(model.aero_links()) {
        let torque = (kin.links[li].com - kin.com).cross(f);
        for k in 0..3 {
            out[k] += torque[k];
            out[3 + k] += f[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_model_text, forward_kinematics, load_model, JointState};
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector6};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_forces_zero_wrench() {
        let model = load_model(default_model_text()).unwrap();
        let st = JointState::zero(model.n_joints());
        let kin = forward_kinematics(&model, &st).unwrap();
        let forces = vec![Vector3::zeros(); model.n_aero_links()];
        let w = total_wrench(&model, &kin, &forces).unwrap();
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn wrong_length_rejected() {
        let model = load_model(default_model_text()).unwrap();
        let st = JointState::zero(model.n_joints());
        let kin = forward_kinematics(&model, &st).unwrap();
        assert!(total_wrench(&model, &kin, &[Vector3::zeros()]).is_err());
    }

    #[test]
    fn base_force_reproduces_statics() {
        // Single aero link = the base: base rows of the wrench must carry the
        // force and its moment arm about the base origin.
        let model = load_model("link body mass=3 com=0.2,-0.1,0.4 inertia=0.1,0.1,0.1,0,0,0 axis=0,0,1 aero=1\n").unwrap();
        let mut st = JointState::zero(0);
        st.base_pos = nalgebra::Vector3::new(1.0, 2.0, 3.0);
        st.base_rot = UnitQuaternion::from_scaled_axis(Vector3::new(0.2, 0.1, -0.4));
        let kin = forward_kinematics(&model, &st).unwrap();
        let f = Vector3::new(2.0, -1.0, 0.5);
        let w = total_wrench(&model, &kin, &[f]).unwrap();
        let arm = kin.links[0].com - st.base_pos;
        let torque = arm.cross(&f);
        assert_relative_eq!(Vector3::new(w[0], w[1], w[2]), torque, epsilon = 1e-12);
        assert_relative_eq!(Vector3::new(w[3], w[4], w[5]), f, epsilon = 1e-12);
    }

    #[test]
    fn wrench_matches_spatial_transform_sum() {
        // Independent oracle: per link, build the 6D wrench at the link CoM
        // and transport it to the base/joint coordinates explicitly.
        let model = load_model(default_model_text()).unwrap();
        let mut rng = StdRng::seed_from_u64(21);
        let mut st = JointState::zero(model.n_joints());
        st.base_rot = UnitQuaternion::from_scaled_axis(Vector3::new(0.3, -0.1, 0.2));
        for i in 0..model.n_joints() {
            let (lo, hi) = model.joints[i].limits;
            st.s[i] = rng.gen_range(0.5 * lo..0.5 * hi);
        }
        let kin = forward_kinematics(&model, &st).unwrap();
        let forces: Vec<Vector3<f64>> = (0..model.n_aero_links())
            .map(|_| Vector3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let w = total_wrench(&model, &kin, &forces).unwrap();

        // Oracle: base rows get the wrench transported to the base origin;
        // each joint row gets axis . torque about the joint origin.
        let mut expected = DVector::zeros(model.n_dof());
        for (f, &li) in forces.iter().zip(model.aero_links()) {
            let p = kin.links[li].com;
            let base_torque = (p - st.base_pos).cross(f);
            for k in 0..3 {
                expected[k] += base_torque[k];
                expected[3 + k] += f[k];
            }
            for &ji in model.ancestors(li) {
                let torque_about_joint = (p - kin.joint_origin_w[ji]).cross(f);
                expected[6 + ji] += kin.joint_axis_w[ji].dot(&torque_about_joint);
            }
        }
        assert_relative_eq!(w, expected, epsilon = 1e-10);
    }

    #[test]
    fn centroidal_wrench_sums_forces_and_moments() {
        let model = load_model(default_model_text()).unwrap();
        let st = JointState::zero(model.n_joints());
        let kin = forward_kinematics(&model, &st).unwrap();
        let mut forces = vec![Vector3::zeros(); model.n_aero_links()];
        forces[0] = Vector3::new(1.0, 0.0, 0.0);
        let w = centroidal_wrench(&model, &kin, &forces);
        let li = model.aero_links()[0];
        let expected_torque = (kin.links[li].com - kin.com).cross(&forces[0]);
        assert_relative_eq!(Vector6::from_iterator(
            expected_torque.iter().copied().chain(forces[0].iter().copied())
        ), w, epsilon = 1e-14);
    }
}
