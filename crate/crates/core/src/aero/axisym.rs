//! Constrained sinusoidal axisymmetric force model.
//!
//! Per link, the drag and normal force areas are sinusoidal functions of the
//! link angle of attack alpha in [0, pi]:
//!
//! ```text
//! C_D A(a) = w0 + w1 cos a + w2 sin^2 a + w3 sin^3 a + w4 cos^3 a
//! C_N A(a) = w5 sin^2 a cos a
//! ```
//!
//! Every basis function has zero slope at a = 0 and a = pi, and the normal
//! basis also vanishes there, so the physical endpoint constraints hold for
//! any weights. The force law is
//!
//! ```text
//! F = -k_a |v| C_D A(a) v + k_a C_N A(a) (v x k x v) / sin a
//! ```
//!
//! with the normal term set to its analytic limit (zero) when sin a is
//! numerically zero.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::AeroFactors;
use crate::model::{Kinematics, RobotModel};
use crate::{Error, Result};

/// Relative wind below this magnitude is treated as still air.
pub const WIND_EPS: f64 = 1e-12;
/// sin(alpha) guard under which the normal term takes its zero limit.
pub const SIN_ALPHA_GUARD: f64 = 1e-9;

/// Basis weights of one link: w[0..=4] drag areas, w[5] normal area (m^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCoeffs {
    pub w: [f64; 6],
}

impl LinkCoeffs {
    pub fn zero() -> Self {
        LinkCoeffs { w: [0.0; 6] }
    }
}

/// Named per-link weight sets, aligned to a model's aero links on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymCoeffs {
    pub entries: Vec<(String, LinkCoeffs)>,
}

impl AxisymCoeffs {
    /// Weights in the model's aero-link order; errors on a missing link.
    pub fn for_model(&self, model: &RobotModel) -> Result<Vec<LinkCoeffs>> {
        let by_name: HashMap<&str, &LinkCoeffs> =
            self.entries.iter().map(|(n, c)| (n.as_str(), c)).collect();
        model
            .aero_links()
            .iter()
            .map(|&li| {
                let name = model.links[li].name.as_str();
                by_name
                    .get(name)
                    .copied()
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("no aerodynamic coefficients for link '{name}'")))
            })
            .collect()
    }
}

/// Angle of attack between the relative wind and the symmetry axis.
///
/// Returns 0 for a numerically still wind (the force is zero there anyway).
pub fn angle_of_attack(v_a: &Vector3<f64>, k_hat: &Vector3<f64>) -> Result<f64> {
    if (k_hat.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("symmetry axis not unit (norm {})", k_hat.norm())));
    }
    let speed = v_a.norm();
    if speed < WIND_EPS {
        return Ok(0.0);
    }
    Ok((v_a.dot(k_hat) / speed).clamp(-1.0, 1.0).acos())
}

/// Evaluate (C_D A, C_N A) at the given angle of attack.
pub fn eval_force_areas(c: &LinkCoeffs, alpha: f64) -> (f64, f64) {
    let (s, co) = alpha.sin_cos();
    let cda = c.w[0] + c.w[1] * co + c.w[2] * s * s + c.w[3] * s * s * s + c.w[4] * co * co * co;
    let cna = c.w[5] * s * s * co;
    (cda, cna)
}

/// Dimensionless force-area vector (force / (k_a |v|^2)) for a unit relative
/// wind direction `d_hat` and world symmetry axis `k_hat`.
///
/// This is the quantity stored in datasets; multiply by k_a |v_a|^2 to get a
/// force.
pub fn force_area_vector(c: &LinkCoeffs, d_hat: &Vector3<f64>, k_hat: &Vector3<f64>) -> Vector3<f64> {
    let alpha = (d_hat.dot(k_hat)).clamp(-1.0, 1.0).acos();
    let (cda, cna) = eval_force_areas(c, alpha);
    let mut y = -cda * d_hat;
    let s = alpha.sin();
    if s >= SIN_ALPHA_GUARD {
        // (d x k) x d has magnitude sin(alpha) for unit inputs.
        y += cna * d_hat.cross(k_hat).cross(d_hat) / s;
    }
    y
}

/// Aerodynamic force on one link (world frame, N).
pub fn eval_link_force(c: &LinkCoeffs, factors: &AeroFactors, v_a: &Vector3<f64>, k_hat: &Vector3<f64>) -> Vector3<f64> {
    let speed = v_a.norm();
    if speed < WIND_EPS {
        return Vector3::zeros();
    }
    let ka = factors.ka();
    let alpha = (v_a.dot(k_hat) / speed).clamp(-1.0, 1.0).acos();
    let (cda, cna) = eval_force_areas(c, alpha);
    let mut f = -ka * speed * cda * v_a;
    let s = alpha.sin();
    if s >= SIN_ALPHA_GUARD {
        f += ka * cna * v_a.cross(k_hat).cross(v_a) / s;
    }
    f
}

/// Forces on every aero link: per link, the relative wind is the link CoM
/// velocity minus the ambient wind velocity.
pub fn predict_link_forces_axisym(
    model: &RobotModel,
    kin: &Kinematics,
    v_wind: &Vector3<f64>,
    coeffs: &[LinkCoeffs],
    factors: &AeroFactors,
) -> Result<Vec<Vector3<f64>>> {
    if coeffs.len() != model.n_aero_links() {
        return Err(Error::Dimension(format!(
            "{} coefficient sets for {} aero links",
            coeffs.len(),
            model.n_aero_links()
        )));
    }
    Ok(model
        .aero_links()
        .iter()
        .zip(coeffs)
        .map(|(&li, c)| {
            let v_a = kin.links[li].com_vel - v_wind;
            let k_hat = kin.links[li].rot * model.links[li].symmetry_axis;
            eval_link_force(c, factors, &v_a, &k_hat)
        })
        .collect())
}

/// Serialize coefficients: one `coeffs <link> w0=.. .. w5=..` line per link.
pub fn write_coeffs(coeffs: &AxisymCoeffs) -> String {
    let mut out = String::new();
    for (name, c) in &coeffs.entries {
        out.push_str(&format!(
            "coeffs {name} w0={} w1={} w2={} w3={} w4={} w5={}\n",
            c.w[0], c.w[1], c.w[2], c.w[3], c.w[4], c.w[5]
        ));
    }
    out
}

/// Parse a coefficients file.
pub fn load_coeffs(text: &str) -> Result<AxisymCoeffs> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let mut tok = line.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        if kind != "coeffs" {
            return Err(Error::Parse {
                line: no,
                msg: format!("expected 'coeffs' directive, got '{kind}'"),
            });
        }
        let name = tok
            .next()
            .ok_or(Error::Parse {
                line: no,
                msg: "coeffs directive requires a link name".into(),
            })?
            .to_string();
        let mut w = [f64::NAN; 6];
        for t in tok {
            let Some((k, v)) = t.split_once('=') else {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("expected key=value, got '{t}'"),
                });
            };
            let slot = match k {
                "w0" => 0,
                "w1" => 1,
                "w2" => 2,
                "w3" => 3,
                "w4" => 4,
                "w5" => 5,
                other => {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("unknown weight '{other}'"),
                    })
                }
            };
            w[slot] = v.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("invalid number '{v}'"),
            })?;
        }
        if w.iter().any(|x| x.is_nan()) {
            return Err(Error::Parse {
                line: no,
                msg: format!("link '{name}': missing weights (need w0..w5)"),
            });
        }
        entries.push((name, LinkCoeffs { w }));
    }
    Ok(AxisymCoeffs { entries })
}
