//! Aerodynamic-aware momentum flight controller.
//!
//! Pipeline per control cycle: evaluate the selected aerodynamic feedback,
//! form the momentum error dynamics, feedback-linearize the augmented
//! dynamics to get u* = (Tdot*, sdot*), shape state-dependent tanh bounds,
//! solve the box QP with a postural pull, and convert the joint velocity
//! command to torques through a high-gain inverse-dynamics inner loop.

mod alloc;
mod config;
mod momentum;
mod refs;

pub use alloc::{qp_objective, qp_solve, tanh_bounds, Bounds, KAPPA_GAIN, RATE_FRACTION};
pub use config::{default_gains_text, AeroSelector, ControlGains};
pub use momentum::{
    augmented_dynamics, feedback_linearize, momentum_dynamics, momentum_rate_direct, thrust_map,
    AugmentedDynamics, FeedbackLin, MomentumDynamics,
};
pub use refs::{MomentumReference, RefSample};

use nalgebra::{DVector, Vector3, Vector6};

use crate::aero::axisym::{predict_link_forces_axisym, LinkCoeffs};
use crate::aero::{total_wrench, AeroFactors};
use crate::mlp::{predict_link_forces_mlp, Mlp};
use crate::model::{
    centroidal_momentum_with, dynamics_terms_with, forward_kinematics, point_jacobian, JointState,
    Kinematics, RobotModel,
};
use crate::{Error, Result};

/// Aerodynamic model available to the controller (or plant).
pub enum AeroModel<'a> {
    None,
    Axisym { coeffs: &'a [LinkCoeffs], factors: AeroFactors },
    Mlp { net: &'a Mlp, factors: AeroFactors },
}

impl AeroModel<'_> {
    /// Per-aero-link forces at this state under ambient wind `v_wind`.
    pub fn forces(
        &self,
        model: &RobotModel,
        kin: &Kinematics,
        state: &JointState,
        v_wind: &Vector3<f64>,
    ) -> Result<Vec<Vector3<f64>>> {
        match self {
            AeroModel::None => Ok(vec![Vector3::zeros(); model.n_aero_links()]),
            AeroModel::Axisym { coeffs, factors } => {
                predict_link_forces_axisym(model, kin, v_wind, coeffs, factors)
            }
            AeroModel::Mlp { net, factors } => {
                predict_link_forces_mlp(model, kin, state, v_wind, net, factors)
            }
        }
    }
}

/// Generalized force of the jets at the current thrusts: sum of
/// J_mount^T (0, T_j u_j).
pub fn jets_generalized(model: &RobotModel, kin: &Kinematics, thrusts: &DVector<f64>) -> DVector<f64> {
    let mut f = DVector::zeros(model.n_dof());
    for (j, jet) in model.jets.iter().enumerate() {
        if thrusts[j] == 0.0 {
            continue;
        }
        let lk = &kin.links[jet.link];
        let dir = lk.rot * jet.dir;
        let mount = lk.pos + lk.rot * jet.pos;
        let jac = point_jacobian(model, kin, jet.link, &mount);
        let lin = jac.rows(3, 3);
        let force = thrusts[j] * dir;
        f.gemv_tr(1.0, &lin, &force, 1.0);
    }
    f
}

/// High-gain inverse-dynamics joint torques:
/// `tau = M_s sddot** + b_s`, with `sddot** = -kds (sdot - sdot_cmd)
/// - kps (s - s_ref)` and b_s the joint rows of the bias minus the known
/// external (aerodynamic + jet) generalized forces.
pub fn inner_loop_torque(
    model: &RobotModel,
    state: &JointState,
    sdot_cmd: &DVector<f64>,
    s_ref: &DVector<f64>,
    gains: &ControlGains,
    aero_forces: &[Vector3<f64>],
    thrusts: &DVector<f64>,
) -> Result<DVector<f64>> {
    let kin = forward_kinematics(model, state)?;
    let (m, bias) = dynamics_terms_with(model, state, &kin);
    let f_ext = total_wrench(model, &kin, aero_forces)? + jets_generalized(model, &kin, thrusts);
    inner_loop_with(model, state, &m, &bias, &f_ext, sdot_cmd, s_ref, gains)
}

#[allow(clippy::too_many_arguments)]
fn inner_loop_with(
    model: &RobotModel,
    state: &JointState,
    mass_matrix: &nalgebra::DMatrix<f64>,
    bias: &DVector<f64>,
    f_external: &DVector<f64>,
    sdot_cmd: &DVector<f64>,
    s_ref: &DVector<f64>,
    gains: &ControlGains,
) -> Result<DVector<f64>> {
    let n = model.n_joints();
    if sdot_cmd.len() != n || s_ref.len() != n {
        return Err(Error::Dimension("joint command length mismatch".into()));
    }
    let sddot = -(&state.sdot - sdot_cmd) * gains.kds - (&state.s - s_ref) * gains.kps;
    let m_ss = mass_matrix.view((6, 6), (n, n));
    let mut tau = m_ss * sddot;
    for i in 0..n {
        tau[i] += bias[6 + i] - f_external[6 + i];
    }
    Ok(tau)
}

/// Controller diagnostics recorded every cycle.
#[derive(Debug, Clone)]
pub struct ControlDiag {
    pub h_tilde: Vector6<f64>,
    pub hddot_star: Vector6<f64>,
    pub u_star: DVector<f64>,
    pub u_opt: DVector<f64>,
    /// Controller-side per-link aerodynamic forces and their total.
    pub forces: Vec<Vector3<f64>>,
    pub f_a_total: Vector3<f64>,
    pub rank: usize,
}

/// Controller output: joint torques and thrust rates.
#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub tau: DVector<f64>,
    pub thrust_rate: DVector<f64>,
    pub diag: ControlDiag,
}

/// Momentum controller with integral and postural state.
///
/// Owns the integral of the momentum error and the integrated joint
/// reference; one instance drives one control loop.
pub struct Controller {
    pub gains: ControlGains,
    integral: Vector6<f64>,
    s_ref: DVector<f64>,
    s_des: DVector<f64>,
}

impl Controller {
    /// `s_init` becomes both the postural target and the initial joint
    /// reference (the starting hovering configuration).
    pub fn new(gains: ControlGains, s_init: DVector<f64>) -> Result<Controller> {
        gains.validate()?;
        Ok(Controller {
            gains,
            integral: Vector6::zeros(),
            s_ref: s_init.clone(),
            s_des: s_init,
        })
    }

    pub fn integral(&self) -> &Vector6<f64> {
        &self.integral
    }

    pub fn joint_reference(&self) -> &DVector<f64> {
        &self.s_ref
    }

    /// One control cycle of period `dt` at time `t`.
    #[allow(clippy::too_many_arguments)]
    pub fn control_step(
        &mut self,
        model: &RobotModel,
        state: &JointState,
        thrusts: &DVector<f64>,
        reference: &MomentumReference,
        t: f64,
        dt: f64,
        v_wind: &Vector3<f64>,
        aero: &AeroModel,
    ) -> Result<ControlOutput> {
        let kin = forward_kinematics(model, state)?;
        let forces = aero.forces(model, &kin, state, v_wind)?;
        let mass = model.total_mass;

        // Momentum error dynamics.
        let cm = centroidal_momentum_with(model, &kin);
        let hdot = momentum_rate_direct(model, &kin, thrusts, &forces);
        let h_tilde = cm.h - reference.h_des(t, mass);
        let hdot_tilde = hdot - reference.hdot_des(t, mass);
        let mut hddot_star = reference.hddot_des(t, mass);
        for k in 0..6 {
            hddot_star[k] -=
                self.gains.kd[k] * hdot_tilde[k] + self.gains.kp[k] * h_tilde[k] + self.gains.ki[k] * self.integral[k];
        }

        // Feedback linearization of the augmented dynamics.
        let aug = augmented_dynamics(model, &kin, thrusts, &forces)?;
        let mut nu_base = Vector6::zeros();
        nu_base.fixed_rows_mut::<3>(0).copy_from(&state.base_ang_vel);
        nu_base.fixed_rows_mut::<3>(3).copy_from(&state.base_lin_vel);
        let fl = feedback_linearize(&aug, &nu_base, &hddot_star, self.gains.mu, self.gains.joint_weight)?;

        // Allocation under tanh bounds with the postural pull.
        let bounds = tanh_bounds(model, thrusts, &state.s, self.gains.rate_frac, self.gains.kappa_gain)?;
        let sdot_post = -(&state.s - &self.s_des) * self.gains.kp_post;
        let u_opt = qp_solve(&fl.u_star, &sdot_post, self.gains.w1, self.gains.w2, &bounds, model.jets.len())?;

        // Inner loop on the joint part of the allocation.
        let m_jets = model.jets.len();
        let sdot_cmd = DVector::from_iterator(model.n_joints(), u_opt.iter().skip(m_jets).copied());
        let (m_full, bias) = dynamics_terms_with(model, state, &kin);
        let f_ext = total_wrench(model, &kin, &forces)? + jets_generalized(model, &kin, thrusts);
        let tau = inner_loop_with(model, state, &m_full, &bias, &f_ext, &sdot_cmd, &self.s_ref, &self.gains)?;

        // Integrator updates (use-then-update).
        self.integral += h_tilde * dt;
        self.s_ref += &sdot_cmd * dt;

        let thrust_rate = DVector::from_iterator(m_jets, u_opt.iter().take(m_jets).copied());
        let f_a_total = forces.iter().sum();
        Ok(ControlOutput {
            tau,
            thrust_rate,
            diag: ControlDiag {
                h_tilde,
                hddot_star,
                u_star: fl.u_star,
                u_opt,
                forces,
                f_a_total,
                rank: fl.rank,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::default_ground_truth;
    use crate::model::{default_model_text, load_model};
    use approx::assert_relative_eq;

    fn model() -> RobotModel {
        load_model(default_model_text()).unwrap()
    }

    fn hover_thrusts(model: &RobotModel) -> DVector<f64> {
        DVector::from_element(model.jets.len(), model.total_mass * model.gravity / model.jets.len() as f64)
    }

    #[test]
    fn hover_equilibrium_is_a_fixed_point() {
        let model = model();
        let state = JointState::zero(model.n_joints());
        let kin = forward_kinematics(&model, &state).unwrap();
        let reference = MomentumReference::hover(kin.com);
        let gains = ControlGains::default();
        let mut ctrl = Controller::new(gains, state.s.clone()).unwrap();
        let thrusts = hover_thrusts(&model);
        let out = ctrl
            .control_step(&model, &state, &thrusts, &reference, 0.0, 0.01, &Vector3::zeros(), &AeroModel::None)
            .unwrap();
        assert!(out.thrust_rate.norm() < 1e-9, "thrust rate {}", out.thrust_rate.norm());
        assert!(out.diag.u_opt.norm() < 1e-9);
        // On-target inner loop: torques are pure compensation (gravity and
        // jet reaction), so driving the plant with them keeps sddot ~ 0.
        assert!(out.diag.h_tilde.norm() < 1e-12);
    }

    #[test]
    fn wind_produces_opposing_momentum_command() {
        let model = model();
        let state = JointState::zero(model.n_joints());
        let kin = forward_kinematics(&model, &state).unwrap();
        let reference = MomentumReference::hover(kin.com);
        let gains = ControlGains::default();
        let coeffs = default_ground_truth().for_model(&model).unwrap();
        let factors = AeroFactors::default();
        let thrusts = hover_thrusts(&model);

        let mut ctrl = Controller::new(gains.clone(), state.s.clone()).unwrap();
        let calm = ctrl
            .control_step(&model, &state, &thrusts, &reference, 0.0, 0.01, &Vector3::zeros(), &AeroModel::Axisym { coeffs: &coeffs, factors })
            .unwrap();
        assert!(calm.diag.hddot_star.norm() < 1e-9);

        let mut ctrl = Controller::new(gains, state.s.clone()).unwrap();
        let windy = ctrl
            .control_step(
                &model,
                &state,
                &thrusts,
                &reference,
                0.0,
                0.01,
                &Vector3::new(5.0, 0.0, 0.0),
                &AeroModel::Axisym { coeffs: &coeffs, factors },
            )
            .unwrap();
        // Downwind push is +x; the aero feedback must command a negative x
        // momentum rate to oppose it.
        assert!(windy.diag.f_a_total.x > 1.0, "aero force {}", windy.diag.f_a_total);
        assert!(windy.diag.hddot_star[3] < -0.5, "hddot* {}", windy.diag.hddot_star);
    }

    #[test]
    fn identical_controller_state_gives_identical_outputs() {
        let model = model();
        let mut state = JointState::zero(model.n_joints());
        state.base_lin_vel = Vector3::new(0.1, -0.05, 0.02);
        state.s[4] = 0.3;
        let kin = forward_kinematics(&model, &state).unwrap();
        let reference = MomentumReference::hover(kin.com);
        let thrusts = hover_thrusts(&model);
        let coeffs = default_ground_truth().for_model(&model).unwrap();
        let factors = AeroFactors::default();

        let run = || {
            let mut ctrl = Controller::new(ControlGains::default(), state.s.clone()).unwrap();
            ctrl.control_step(
                &model,
                &state,
                &thrusts,
                &reference,
                0.0,
                0.01,
                &Vector3::new(2.0, 1.0, 0.0),
                &AeroModel::Axisym { coeffs: &coeffs, factors },
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.tau, b.tau);
        assert_eq!(a.thrust_rate, b.thrust_rate);
        assert_eq!(a.diag.u_opt, b.diag.u_opt);
    }

    #[test]
    fn pendulum_gravity_torque() {
        // Static single-joint pendulum: the inner loop on target reduces to
        // gravity compensation, tau = m g l sin(theta).
        let text = "link base mass=50 com=0,0,0 inertia=5,5,5,0,0,0 axis=0,0,1 aero=0\n\
                    link rod mass=1.5 com=0,0,-0.4 inertia=0.08,0.08,0.001,0,0,0 axis=0,0,1 aero=0\n\
                    joint hinge parent=base child=rod axis=0,1,0 origin=0,0,-0.1 limits=-3,3 vmax=10\n";
        let model = load_model(text).unwrap();
        let mut state = JointState::zero(1);
        state.s[0] = 0.4;
        let sdot_cmd = DVector::zeros(1);
        let s_ref = state.s.clone();
        let gains = ControlGains::default();
        let tau = inner_loop_torque(
            &model,
            &state,
            &sdot_cmd,
            &s_ref,
            &gains,
            &[],
            &DVector::zeros(0),
        )
        .unwrap();
        // Rotation by +0.4 about y swings the CoM offset (0,0,-l); the
        // gravity torque about the hinge is m g l sin(theta).
        let expect = 1.5 * 9.81 * 0.4 * (0.4f64).sin();
        assert_relative_eq!(tau[0], expect, max_relative = 1e-10);
    }

    #[test]
    fn position_error_contribution_scales_with_kps() {
        let model = model();
        let mut state = JointState::zero(model.n_joints());
        state.s[2] = 0.2;
        let mut s_ref = state.s.clone();
        s_ref[2] = 0.3; // 0.1 rad of position error
        let sdot_cmd = DVector::zeros(model.n_joints());
        let thrusts = hover_thrusts(&model);
        let forces = vec![Vector3::zeros(); model.n_aero_links()];

        let mut g1 = ControlGains::default();
        g1.kds = 0.0 + 1e-9; // isolate the position term
        let tau_ref = inner_loop_torque(&model, &state, &sdot_cmd, &state.s, &g1, &forces, &thrusts).unwrap();
        let tau1 = inner_loop_torque(&model, &state, &sdot_cmd, &s_ref, &g1, &forces, &thrusts).unwrap();
        let mut g2 = g1.clone();
        g2.kps *= 2.0;
        let tau2 = inner_loop_torque(&model, &state, &sdot_cmd, &s_ref, &g2, &forces, &thrusts).unwrap();
        let d1 = &tau1 - &tau_ref;
        let d2 = &tau2 - &tau_ref;
        assert_relative_eq!(d2, 2.0 * d1, epsilon = 1e-10);
    }

    #[test]
    fn on_target_torque_is_pure_compensation() {
        let model = model();
        let state = JointState::zero(model.n_joints());
        let thrusts = hover_thrusts(&model);
        let kin = forward_kinematics(&model, &state).unwrap();
        let coeffs = default_ground_truth().for_model(&model).unwrap();
        let factors = AeroFactors::default();
        let forces =
            predict_link_forces_axisym(&model, &kin, &Vector3::new(3.0, 0.0, 0.0), &coeffs, &factors).unwrap();
        let tau = inner_loop_torque(&model, &state, &state.sdot.clone(), &state.s.clone(), &ControlGains::default(), &forces, &thrusts)
            .unwrap();
        // b_s with aero and jets included: bias_s - (f_a + f_jet)_s.
        let (_, bias) = dynamics_terms_with(&model, &state, &kin);
        let f_ext = total_wrench(&model, &kin, &forces).unwrap() + jets_generalized(&model, &kin, &thrusts);
        for i in 0..model.n_joints() {
            assert_relative_eq!(tau[i], bias[6 + i] - f_ext[6 + i], epsilon = 1e-12);
        }
    }
}
