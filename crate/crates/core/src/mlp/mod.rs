//! Fully connected network for whole-body aerodynamic force prediction.
//!
//! Hidden layers apply `a_i = relu(W a_{i-1} + b)` with inverted dropout in
//! training mode; the output layer is linear. Inputs are standardized per
//! feature with statistics frozen at training time, so evaluation is a pure
//! function of the stored parameters.

mod io;
mod net;
mod train;

pub use io::{load_mlp, read_mlp, save_mlp, write_mlp};
pub use net::{Mlp, MlpArch, Mode};
pub use train::{adam_step, train, AdamState, TrainConfig, TrainHistory};

use nalgebra::Vector3;

use crate::aero::axisym::WIND_EPS;
use crate::aero::AeroFactors;
use crate::model::{JointState, Kinematics, RobotModel};
use crate::{Error, Result};

/// Aerodynamic force prediction through the network.
///
/// Input: unit relative-wind direction in the base frame (3 values) followed
/// by the joint positions. The relative wind is taken at the robot CoM.
/// Output: base-frame force-area triples, scaled by k_a |v_a|^2 and rotated
/// to the world frame.
pub fn predict_link_forces_mlp(
    model: &RobotModel,
    kin: &Kinematics,
    state: &JointState,
    v_wind: &Vector3<f64>,
    mlp: &Mlp,
    factors: &AeroFactors,
) -> Result<Vec<Vector3<f64>>> {
    let n_aero = model.n_aero_links();
    if mlp.arch().output_dim != 3 * n_aero {
        return Err(Error::Dimension(format!(
            "network outputs {} values, model needs {}",
            mlp.arch().output_dim,
            3 * n_aero
        )));
    }
    if mlp.arch().input_dim != 3 + state.s.len() {
        return Err(Error::Dimension(format!(
            "network takes {} inputs, state provides {}",
            mlp.arch().input_dim,
            3 + state.s.len()
        )));
    }
    let v_a = kin.com_vel - v_wind;
    let speed = v_a.norm();
    if speed < WIND_EPS {
        return Ok(vec![Vector3::zeros(); n_aero]);
    }
    let rot = state.base_rot.to_rotation_matrix().into_inner();
    let d_base = rot.transpose() * (v_a / speed);

    let mut x = vec![0.0; mlp.arch().input_dim];
    x[0] = d_base.x;
    x[1] = d_base.y;
    x[2] = d_base.z;
    for i in 0..state.s.len() {
        x[3 + i] = state.s[i];
    }
    let y = mlp.forward_eval_slice(&x);
    let scale = factors.ka() * speed * speed;
    Ok((0..n_aero)
        .map(|i| scale * (rot * Vector3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2])))
        .collect())
}
