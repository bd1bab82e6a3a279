//! Closed-loop flight simulator.
//!
//! The plant integrates the floating-base dynamics with semi-implicit Euler:
//! accelerations from the current state, velocities updated first, then the
//! pose integrated with the updated velocities (quaternion through the
//! exponential map, renormalized).

mod envelope;
mod scenario;
mod wind;

pub use envelope::{standard_envelope, standard_wind};
pub use scenario::{
    load_scenario, parse_scenario, run_scenario, LoadedScenario, Scenario, SimLog, StepRecord,
    Termination,
};
pub use wind::WindProfile;

use nalgebra::{DVector, Vector3, Vector6};

use crate::control::{momentum_rate_direct, thrust_map, AeroModel};
use crate::math::integrate_quat;
use crate::model::{
    centroidal_momentum_with, dynamics_terms_with, forward_kinematics, JointState, RobotModel,
};
use crate::{Error, Result};

/// Integration stability guard for the default gains.
pub const MAX_DT: f64 = 5e-3;

/// Full simulator state.
#[derive(Debug, Clone)]
pub struct SimState {
    pub joint: JointState,
    /// Thrust intensities (N), within jet limits.
    pub thrusts: DVector<f64>,
    pub t: f64,
}

impl SimState {
    pub fn new(model: &RobotModel, joint: JointState, thrusts: DVector<f64>) -> Result<Self> {
        joint.validate(model)?;
        if thrusts.len() != model.jets.len() {
            return Err(Error::Dimension(format!(
                "{} thrusts for {} jets",
                thrusts.len(),
                model.jets.len()
            )));
        }
        Ok(SimState { joint, thrusts, t: 0.0 })
    }
}

/// Pre-step measurements and the advanced state.
pub struct StepOutput {
    pub state: SimState,
    /// Plant aerodynamic forces at the pre-step state.
    pub forces: Vec<Vector3<f64>>,
    /// Centroidal momentum at the pre-step state.
    pub h: Vector6<f64>,
    /// Robot CoM at the pre-step state.
    pub com: Vector3<f64>,
    /// Momentum-rate balance evaluated at the pre-step state.
    pub hdot_rhs: Vector6<f64>,
}

/// One semi-implicit Euler step under joint torques, the current thrusts,
/// ambient wind, and the plant aerodynamic model.
pub fn step(
    model: &RobotModel,
    state: &SimState,
    tau: &DVector<f64>,
    v_wind: &Vector3<f64>,
    plant_aero: &AeroModel,
    dt: f64,
) -> Result<StepOutput> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::Validation(format!(
            "time step {dt} outside (0, {MAX_DT}] stability guard"
        )));
    }
    if tau.len() != model.n_joints() {
        return Err(Error::Dimension(format!(
            "{} torques for {} joints",
            tau.len(),
            model.n_joints()
        )));
    }
    let kin = forward_kinematics(model, &state.joint)?;
    let forces = plant_aero.forces(model, &kin, &state.joint, v_wind)?;
    let f_aero = crate::aero::total_wrench(model, &kin, &forces)?;
    let f_jets = crate::control::jets_generalized(model, &kin, &state.thrusts);
    let (m, bias) = dynamics_terms_with(model, &state.joint, &kin);

    let mut rhs = f_aero + f_jets - bias;
    for i in 0..model.n_joints() {
        rhs[6 + i] += tau[i];
    }
    let nudot = m
        .cholesky()
        .ok_or_else(|| Error::Validation("mass matrix not positive definite".into()))?
        .solve(&rhs);

    let nu = state.joint.nu() + nudot * dt;
    let mut joint = state.joint.clone();
    joint.base_ang_vel = Vector3::new(nu[0], nu[1], nu[2]);
    joint.base_lin_vel = Vector3::new(nu[3], nu[4], nu[5]);
    joint.base_pos += joint.base_lin_vel * dt;
    joint.base_rot = integrate_quat(&state.joint.base_rot, &joint.base_ang_vel, dt);
    for i in 0..model.n_joints() {
        joint.sdot[i] = nu[6 + i];
        joint.s[i] += joint.sdot[i] * dt;
    }

    let finite = joint.base_pos.iter().all(|v| v.is_finite())
        && nu.iter().all(|v| v.is_finite())
        && joint.s.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("integration produced a non-finite state".into()));
    }

    let cm = centroidal_momentum_with(model, &kin);
    let hdot_rhs = momentum_rate_direct(model, &kin, &state.thrusts, &forces);
    Ok(StepOutput {
        state: SimState {
            joint,
            thrusts: state.thrusts.clone(),
            t: state.t + dt,
        },
        forces,
        h: cm.h,
        com: cm.com,
        hdot_rhs,
    })
}

/// Static hover thrust allocation: damped least squares toward
/// `A_T T = m g e_z`, clamped into the jet boxes.
pub fn hover_thrusts(model: &RobotModel, state: &JointState) -> Result<DVector<f64>> {
    let kin = forward_kinematics(model, state)?;
    let a_t = thrust_map(model, &kin);
    let mut target = Vector6::zeros();
    target[5] = model.total_mass * model.gravity;
    let gram = &a_t * a_t.transpose();
    let eig = gram.symmetric_eigenvalues();
    let damping = 1e-9 * eig.max().max(1.0);
    let damped = gram + nalgebra::Matrix6::identity() * damping;
    let sol = damped
        .cholesky()
        .ok_or_else(|| Error::Validation("thrust allocation failed".into()))?
        .solve(&target);
    let mut thrusts = a_t.transpose() * sol;
    for (j, jet) in model.jets.iter().enumerate() {
        thrusts[j] = thrusts[j].clamp(jet.tmin, jet.tmax);
    }
    Ok(thrusts)
}
