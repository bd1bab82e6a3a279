//! Joint-space dynamics terms and centroidal momentum quantities.
//!
//! The equations of motion are `M(q) nudot + bias(q, nu) = f`, where `f`
//! collects every applied generalized force (jets, joint torques,
//! aerodynamics) and `bias` contains Coriolis, centrifugal, and gravity
//! terms. At rest the bias reduces to the gravity-compensation generalized
//! force (positive z on the base linear rows).

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};

use super::{CentroidalState, JointState, Kinematics, RobotModel};
use super::kinematics::{forward_kinematics, point_bias_accel, point_jacobian};
use crate::math::skew;
use crate::Result;

/// Mass matrix and bias vector at the given state.
///
/// M is symmetric positive definite, (6+n) x (6+n).
pub fn dynamics_terms(model: &RobotModel, state: &JointState) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let kin = forward_kinematics(model, state)?;
    Ok(dynamics_terms_with(model, state, &kin))
}

/// As [`dynamics_terms`], reusing an existing kinematics evaluation.
pub fn dynamics_terms_with(model: &RobotModel, state: &JointState, kin: &Kinematics) -> (DMatrix<f64>, DVector<f64>) {
    let nd = model.n_dof();
    let mut m = DMatrix::zeros(nd, nd);
    let mut bias = DVector::zeros(nd);
    let g_comp = Vector3::new(0.0, 0.0, model.gravity);

    let mut spatial = DMatrix::zeros(6, nd);
    for (i, spec) in model.links.iter().enumerate() {
        let lk = &kin.links[i];
        let inertia_w = lk.rot * spec.inertia * lk.rot.transpose();
        let j = point_jacobian(model, kin, i, &lk.com.clone());

        // spatial = diag(I_w, m I) * J, accumulated as M += J^T spatial.
        let top = j.rows(0, 3);
        let bottom = j.rows(3, 3);
        spatial.rows_mut(0, 3).copy_from(&(inertia_w * top));
        spatial.rows_mut(3, 3).copy_from(&(spec.mass * bottom));
        m.gemm_tr(1.0, &j, &spatial, 1.0);

        // Velocity-product acceleration of the link CoM.
        let acc0 = point_bias_accel(model, kin, state, i, &lk.com.clone(), &lk.com_vel.clone());
        let alpha = acc0.fixed_rows::<3>(0).into_owned();
        let a_lin = acc0.fixed_rows::<3>(3).into_owned();
        let mut wrench = Vector6::zeros();
        wrench
            .fixed_rows_mut::<3>(0)
            .copy_from(&(inertia_w * alpha + lk.ang_vel.cross(&(inertia_w * lk.ang_vel))));
        wrench
            .fixed_rows_mut::<3>(3)
            .copy_from(&(spec.mass * (a_lin + g_comp)));
        bias.gemv_tr(1.0, &j, &wrench, 1.0);
    }
    (m, bias)
}

/// Centroidal momentum: aggregate (angular about CoM, linear) momentum with
/// world orientation.
pub fn centroidal_momentum(model: &RobotModel, state: &JointState) -> Result<CentroidalState> {
    let kin = forward_kinematics(model, state)?;
    Ok(centroidal_momentum_with(model, &kin))
}

/// As [`centroidal_momentum`], reusing an existing kinematics evaluation.
pub fn centroidal_momentum_with(model: &RobotModel, kin: &Kinematics) -> CentroidalState {
    let mut h = Vector6::zeros();
    for (i, spec) in model.links.iter().enumerate() {
        let lk = &kin.links[i];
        let inertia_w = lk.rot * spec.inertia * lk.rot.transpose();
        let lin = spec.mass * lk.com_vel;
        let ang = inertia_w * lk.ang_vel + (lk.com - kin.com).cross(&lin);
        for k in 0..3 {
            h[k] += ang[k];
            h[3 + k] += lin[k];
        }
    }
    CentroidalState {
        h,
        com: kin.com,
        com_vel: kin.com_vel,
    }
}

/// Centroidal momentum matrix A_G with h = A_G nu.
pub fn centroidal_momentum_matrix(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let nd = model.n_dof();
    let mut a_g = DMatrix::zeros(6, nd);
    let mut weighted = DMatrix::zeros(6, nd);
    for (i, spec) in model.links.iter().enumerate() {
        let lk = &kin.links[i];
        let inertia_w = lk.rot * spec.inertia * lk.rot.transpose();
        let j = point_jacobian(model, kin, i, &lk.com.clone());
        let top = j.rows(0, 3);
        let bottom = j.rows(3, 3);
        let lever: Matrix3<f64> = skew(&(lk.com - kin.com)) * spec.mass;
        weighted.rows_mut(0, 3).copy_from(&(inertia_w * top + lever * bottom));
        weighted.rows_mut(3, 3).copy_from(&(spec.mass * bottom));
        a_g += &weighted;
    }
    a_g
}
