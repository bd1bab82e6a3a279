//! Centroidal momentum dynamics, relative-degree augmentation, and the
//! feedback-linearizing input.
//!
//! With h the centroidal momentum, T the thrust intensities, and f_a the
//! generalized aerodynamic wrench:
//!
//! ```text
//! hdot  = A_T(q) T + A_a(q) f_a - m g e
//! hddot = (Lambda_a + Lambda_T) nu + A_T Tdot
//! ```
//!
//! The second line freezes the aerodynamic forces (their variation is
//! treated as negligible), so only thrust directions, moment arms, and the
//! CoM move. Splitting nu into base and joint parts makes u = (Tdot, sdot)
//! appear linearly: hddot = B u + c.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};

use crate::math::skew;
use crate::model::{centroidal_momentum_matrix, point_jacobian, Kinematics, RobotModel};
use crate::{Error, Result};

/// Gravity direction in the (angular, linear) wrench convention: unit force
/// along +z, applied at the CoM.
pub fn gravity_axis() -> Vector6<f64> {
    let mut e = Vector6::zeros();
    e[5] = 1.0;
    e
}

/// Thrust wrench map: column j is the unit wrench of jet j about the robot
/// CoM, world orientation.
pub fn thrust_map(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let m = model.jets.len();
    let mut a_t = DMatrix::zeros(6, m);
    for (j, jet) in model.jets.iter().enumerate() {
        let lk = &kin.links[jet.link];
        let dir = lk.rot * jet.dir;
        let mount = lk.pos + lk.rot * jet.pos;
        let torque = (mount - kin.com).cross(&dir);
        for k in 0..3 {
            a_t[(k, j)] = torque[k];
            a_t[(3 + k, j)] = dir[k];
        }
    }
    a_t
}

/// Momentum rate and its input maps.
pub struct MomentumDynamics {
    pub hdot: Vector6<f64>,
    /// 6 x m thrust map.
    pub a_thrust: DMatrix<f64>,
    /// 6 x (6+n) map from the generalized aerodynamic wrench to the
    /// centroidal frame: A_G M^{-1}.
    pub a_aero: DMatrix<f64>,
}

/// Evaluate hdot = A_T T + A_a f_a - m g e and return the maps.
///
/// `mass_matrix` is the joint-space mass matrix at the same state (used to
/// build A_a = A_G M^{-1}).
pub fn momentum_dynamics(
    model: &RobotModel,
    kin: &Kinematics,
    mass_matrix: &DMatrix<f64>,
    thrusts: &DVector<f64>,
    f_a_generalized: &DVector<f64>,
) -> Result<MomentumDynamics> {
    if thrusts.len() != model.jets.len() {
        return Err(Error::Dimension(format!(
            "{} thrusts for {} jets",
            thrusts.len(),
            model.jets.len()
        )));
    }
    if f_a_generalized.len() != model.n_dof() {
        return Err(Error::Dimension(format!(
            "generalized wrench has {} rows, expected {}",
            f_a_generalized.len(),
            model.n_dof()
        )));
    }
    let a_thrust = thrust_map(model, kin);
    let a_g = centroidal_momentum_matrix(model, kin);
    let minv = mass_matrix
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Validation("mass matrix not positive definite".into()))?
        .inverse();
    let a_aero = &a_g * minv;
    let mut hdot = Vector6::from_iterator((&a_thrust * thrusts + &a_aero * f_a_generalized).iter().copied());
    hdot[5] -= model.total_mass * model.gravity;
    Ok(MomentumDynamics {
        hdot,
        a_thrust,
        a_aero,
    })
}

/// Direct form of hdot when per-link aerodynamic forces are available:
/// the aerodynamic term is the net wrench of the forces about the CoM.
pub fn momentum_rate_direct(
    model: &RobotModel,
    kin: &Kinematics,
    thrusts: &DVector<f64>,
    aero_forces: &[Vector3<f64>],
) -> Vector6<f64> {
    let a_thrust = thrust_map(model, kin);
    let mut hdot = Vector6::from_iterator((&a_thrust * thrusts).iter().copied());
    hdot += crate::aero::centroidal_wrench(model, kin, aero_forces);
    hdot[5] -= model.total_mass * model.gravity;
    hdot
}

/// Relative-degree-augmented dynamics: hddot = lambda nu + A_T Tdot.
pub struct AugmentedDynamics {
    /// 6 x (6+n): Lambda_a + Lambda_T.
    pub lambda: DMatrix<f64>,
    /// 6 x m.
    pub a_thrust: DMatrix<f64>,
}

/// CoM Jacobian (linear rows only): maps nu to the CoM velocity.
fn com_jacobian(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let nd = model.n_dof();
    let mut j_g = DMatrix::zeros(3, nd);
    for (i, spec) in model.links.iter().enumerate() {
        let j = point_jacobian(model, kin, i, &kin.links[i].com.clone());
        j_g += spec.mass / model.total_mass * j.rows(3, 3);
    }
    j_g
}

/// Build Lambda_T (thrust arm/direction motion) and Lambda_a (aerodynamic
/// moment-arm motion with frozen forces).
pub fn augmented_dynamics(
    model: &RobotModel,
    kin: &Kinematics,
    thrusts: &DVector<f64>,
    aero_forces: &[Vector3<f64>],
) -> Result<AugmentedDynamics> {
    if thrusts.len() != model.jets.len() {
        return Err(Error::Dimension(format!(
            "{} thrusts for {} jets",
            thrusts.len(),
            model.jets.len()
        )));
    }
    if !aero_forces.is_empty() && aero_forces.len() != model.n_aero_links() {
        return Err(Error::Dimension(format!(
            "{} aero forces for {} aero links",
            aero_forces.len(),
            model.n_aero_links()
        )));
    }
    let nd = model.n_dof();
    let j_g = com_jacobian(model, kin);
    let mut lambda = DMatrix::zeros(6, nd);

    // Lambda_T: d/dt of each thrust wrench column times its intensity.
    for (j, jet) in model.jets.iter().enumerate() {
        let t_j = thrusts[j];
        if t_j == 0.0 {
            continue;
        }
        let lk = &kin.links[jet.link];
        let dir = lk.rot * jet.dir;
        let mount = lk.pos + lk.rot * jet.pos;
        let arm = mount - kin.com;
        let jac = point_jacobian(model, kin, jet.link, &mount);
        let j_omega = jac.rows(0, 3);
        let j_mount = jac.rows(3, 3);
        let s_dir: Matrix3<f64> = skew(&dir);
        let s_arm: Matrix3<f64> = skew(&arm);

        // d(arm x dir)/dt = (v_mount - v_G) x dir + arm x (omega x dir)
        let top = -s_dir * (j_mount - &j_g) - s_arm * s_dir * j_omega;
        let bottom = -s_dir * j_omega;
        for c in 0..nd {
            for r in 0..3 {
                lambda[(r, c)] += t_j * top[(r, c)];
                lambda[(3 + r, c)] += t_j * bottom[(r, c)];
            }
        }
    }

    // Lambda_a: frozen per-link forces, only the moment arms move.
    for (f, &li) in aero_forces.iter().zip(model.aero_links()) {
        if f.norm() == 0.0 {
            continue;
        }
        let jac = point_jacobian(model, kin, li, &kin.links[li].com.clone());
        let j_com = jac.rows(3, 3);
        let s_f: Matrix3<f64> = skew(f);
        let top = -s_f * (j_com - &j_g);
        for c in 0..nd {
            for r in 0..3 {
                lambda[(r, c)] += top[(r, c)];
            }
        }
    }

    Ok(AugmentedDynamics {
        lambda,
        a_thrust: thrust_map(model, kin),
    })
}

/// Feedback-linearizing input and diagnostics.
pub struct FeedbackLin {
    /// u* = (Tdot*, sdot*), length m + n.
    pub u_star: DVector<f64>,
    /// Numerical row rank of B.
    pub rank: usize,
}

/// Solve B u = hddot* - c in the weighted damped least-squares sense, where
/// B = [A_T | joint columns of Lambda] and c is the base-velocity drift.
///
/// `joint_weight` prices joint rates against thrust rates: the minimizer of
/// `|u_T|^2 + joint_weight^2 |u_s|^2` subject to the linearization. Thrust
/// channels carry the wrench directions they can reach; joints only supply
/// what thrust intensities cannot. With zero damping and full rank the
/// result is an exact right-inverse for any weight.
///
/// Errors with a controller fault when the input map rank drops below 3.
pub fn feedback_linearize(
    aug: &AugmentedDynamics,
    nu_base: &Vector6<f64>,
    hddot_star: &Vector6<f64>,
    mu: f64,
    joint_weight: f64,
) -> Result<FeedbackLin> {
    let m = aug.a_thrust.ncols();
    let n = aug.lambda.ncols() - 6;
    let w_s = if joint_weight > 0.0 { joint_weight } else { 1.0 };
    let mut b = DMatrix::zeros(6, m + n);
    b.view_mut((0, 0), (6, m)).copy_from(&aug.a_thrust);
    b.view_mut((0, m), (6, n)).copy_from(&(aug.lambda.columns(6, n) / w_s));

    let c = aug.lambda.columns(0, 6) * nu_base;
    let rhs = hddot_star - Vector6::from_iterator(c.iter().copied());

    let bbt = &b * b.transpose();
    let eig = bbt.symmetric_eigenvalues();
    let max_eig = eig.max().max(1e-300);
    let rank = eig.iter().filter(|&&e| e > 1e-12 * max_eig).count();
    if rank < 3 {
        return Err(Error::ControllerFault(format!(
            "thrust/joint input map rank collapsed to {rank}"
        )));
    }
    let damped = &bbt + DMatrix::identity(6, 6) * (mu * mu);
    let sol = damped
        .cholesky()
        .ok_or_else(|| Error::ControllerFault("damped normal matrix not SPD".into()))?
        .solve(&DVector::from_iterator(6, rhs.iter().copied()));
    let mut u_star = b.transpose() * sol;
    for i in 0..n {
        u_star[m + i] /= w_s;
    }
    Ok(FeedbackLin { u_star, rank })
}
