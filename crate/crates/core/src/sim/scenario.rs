//! Scenario files, execution, and logging.
//!
//! A scenario is a `key=value` text file naming the robot model, the gains
//! file, optional aerodynamic model files, the plant/controller aero
//! selections, the reference envelope, the wind, and the run parameters.
//! File paths are resolved relative to the scenario file location.

use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector3, Vector6};

use crate::aero::axisym::{load_coeffs, LinkCoeffs};
use crate::aero::AeroFactors;
use crate::control::{AeroModel, AeroSelector, ControlGains, Controller, MomentumReference};
use crate::math::tilt_angle;
use crate::mlp::{load_mlp, Mlp};
use crate::model::{forward_kinematics, JointState, RobotModel};
use crate::{Error, Result};

use super::envelope::{standard_envelope, standard_wind, STANDARD_DURATION};
use super::wind::WindProfile;
use super::{hover_thrusts, step, SimState};

/// Reference envelope selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    Hover,
    Standard,
}

/// Parsed scenario description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model_path: PathBuf,
    pub gains_path: PathBuf,
    pub coeffs_path: Option<PathBuf>,
    pub weights_path: Option<PathBuf>,
    pub plant_aero: AeroSelector,
    /// Overrides the gains-file `aero_feedback` when present.
    pub ctrl_aero: Option<AeroSelector>,
    pub envelope: EnvelopeKind,
    /// Explicit wind; the envelope default applies when absent.
    pub wind: Option<WindProfile>,
    pub duration: f64,
    pub dt: f64,
    /// Plant steps per control cycle.
    pub ctrl_every: usize,
    pub seed: u64,
    /// Failure thresholds.
    pub max_com_err: f64,
    pub max_tilt: f64,
    /// CSV decimation factor (every k-th record).
    pub log_every: usize,
    /// Plant air density.
    pub rho: f64,
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.duration < self.dt {
            return Err(Error::Validation("need dt > 0 and duration >= dt".into()));
        }
        if self.ctrl_every == 0 || self.log_every == 0 {
            return Err(Error::Validation("ctrl_every and log_every must be >= 1".into()));
        }
        if !(self.max_com_err > 0.0) || !(self.max_tilt > 0.0) {
            return Err(Error::Validation("failure thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Parse scenario text; `base` anchors relative paths.
pub fn parse_scenario(text: &str, base: &Path) -> Result<Scenario> {
    let mut model_path = None;
    let mut gains_path = None;
    let mut coeffs_path = None;
    let mut weights_path = None;
    let mut plant_aero = AeroSelector::None;
    let mut ctrl_aero = None;
    let mut envelope = EnvelopeKind::Hover;
    let mut wind = None;
    let mut duration = None;
    let mut dt = 1e-3;
    let mut ctrl_every = 10;
    let mut seed = 0;
    let mut max_com_err = 1.0;
    let mut max_tilt = 60f64.to_radians();
    let mut log_every = 1;
    let mut rho = 1.225;

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: no,
                msg: format!("expected key=value, got '{line}'"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let num = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("'{key}': invalid number '{v}'"),
            })
        };
        let path = |v: &str| base.join(v);
        match key {
            "model" => model_path = Some(path(value)),
            "gains" => gains_path = Some(path(value)),
            "coeffs" => coeffs_path = Some(path(value)),
            "weights" => weights_path = Some(path(value)),
            "plant_aero" => plant_aero = value.parse()?,
            "ctrl_aero" => ctrl_aero = Some(value.parse()?),
            "envelope" => {
                envelope = match value {
                    "hover" => EnvelopeKind::Hover,
                    "standard" => EnvelopeKind::Standard,
                    other => {
                        return Err(Error::Parse {
                            line: no,
                            msg: format!("unknown envelope '{other}'"),
                        })
                    }
                }
            }
            "wind" => wind = Some(WindProfile::parse(value)?),
            "duration" => duration = Some(num(value)?),
            "dt" => dt = num(value)?,
            "ctrl_every" => {
                ctrl_every = value.parse().map_err(|_| Error::Parse {
                    line: no,
                    msg: format!("'{key}': invalid integer '{value}'"),
                })?
            }
            "seed" => {
                seed = value.parse().map_err(|_| Error::Parse {
                    line: no,
                    msg: format!("'{key}': invalid integer '{value}'"),
                })?
            }
            "max_com_err" => max_com_err = num(value)?,
            "max_tilt" => max_tilt = num(value)?,
            "log_every" => {
                log_every = value.parse().map_err(|_| Error::Parse {
                    line: no,
                    msg: format!("'{key}': invalid integer '{value}'"),
                })?
            }
            "rho" => rho = num(value)?,
            other => {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("unknown scenario key '{other}'"),
                })
            }
        }
    }

    let sc = Scenario {
        model_path: model_path.ok_or(Error::Parse {
            line: 1,
            msg: "scenario missing 'model=' entry".into(),
        })?,
        gains_path: gains_path.ok_or(Error::Parse {
            line: 1,
            msg: "scenario missing 'gains=' entry".into(),
        })?,
        coeffs_path,
        weights_path,
        plant_aero,
        ctrl_aero,
        envelope,
        wind,
        duration: duration.unwrap_or(match envelope {
            EnvelopeKind::Hover => 30.0,
            EnvelopeKind::Standard => STANDARD_DURATION,
        }),
        dt,
        ctrl_every,
        seed,
        max_com_err,
        max_tilt,
        log_every,
        rho,
    };
    sc.validate()?;
    Ok(sc)
}

/// Scenario with every referenced resource loaded and validated.
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub model: RobotModel,
    pub gains: ControlGains,
    /// Axisymmetric weights aligned to the model's aero links.
    pub coeffs: Option<Vec<LinkCoeffs>>,
    pub mlp: Option<Mlp>,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load a scenario file and all referenced resources.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let scenario = parse_scenario(&read_text(path)?, &base)?;
    load_parsed(scenario)
}

/// Resolve a parsed scenario into runnable form.
pub fn load_parsed(scenario: Scenario) -> Result<LoadedScenario> {
    let mut model = crate::model::load_model(&read_text(&scenario.model_path)?)?;
    let gains = ControlGains::parse(&read_text(&scenario.gains_path)?)?;
    // Thrust bound overrides from the gains file reshape the jet boxes for
    // both the controller and the plant clamp.
    for &(idx, v) in &gains.t_min_override {
        if idx >= model.jets.len() {
            return Err(Error::Validation(format!("t_min override for unknown jet {idx}")));
        }
        model.jets[idx].tmin = v;
    }
    for &(idx, v) in &gains.t_max_override {
        if idx >= model.jets.len() {
            return Err(Error::Validation(format!("t_max override for unknown jet {idx}")));
        }
        model.jets[idx].tmax = v;
    }
    for jet in &model.jets {
        if !(jet.tmin >= 0.0 && jet.tmin < jet.tmax) {
            return Err(Error::Validation(format!(
                "jet '{}': thrust overrides leave an empty range",
                jet.name
            )));
        }
    }

    let needs = |sel: AeroSelector| -> bool {
        scenario.plant_aero == sel || scenario.ctrl_aero.unwrap_or(gains.aero_feedback) == sel
    };
    let coeffs = if needs(AeroSelector::Axisym) {
        let p = scenario.coeffs_path.as_ref().ok_or_else(|| {
            Error::Validation("axisym aero selected but no coeffs= file given".into())
        })?;
        Some(load_coeffs(&read_text(p)?)?.for_model(&model)?)
    } else {
        None
    };
    let mlp = if needs(AeroSelector::Mlp) {
        let p = scenario.weights_path.as_ref().ok_or_else(|| {
            Error::Validation("mlp aero selected but no weights= file given".into())
        })?;
        let net = load_mlp(p)?;
        if net.arch().input_dim != 3 + model.n_joints() || net.arch().output_dim != 3 * model.n_aero_links() {
            return Err(Error::Dimension(format!(
                "weights are {}->{}, model needs {}->{}",
                net.arch().input_dim,
                net.arch().output_dim,
                3 + model.n_joints(),
                3 * model.n_aero_links()
            )));
        }
        Some(net)
    } else {
        None
    };

    Ok(LoadedScenario {
        scenario,
        model,
        gains,
        coeffs,
        mlp,
    })
}

/// One logged plant step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub com: Vector3<f64>,
    pub com_err: Vector3<f64>,
    pub h: Vector6<f64>,
    pub h_tilde: Vector6<f64>,
    pub s: DVector<f64>,
    /// Absolute joint error sums per sub-assembly (central, left, right).
    pub delta_s: [f64; 3],
    pub thrusts: DVector<f64>,
    pub f_a_plant: Vector3<f64>,
    pub f_a_ctrl: Vector3<f64>,
    pub tau: DVector<f64>,
    /// Momentum-rate balance at this state.
    pub hdot_rhs: Vector6<f64>,
}

/// Run outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Failed { t: f64, reason: String },
}

/// Full run log.
#[derive(Debug, Clone)]
pub struct SimLog {
    pub joint_names: Vec<String>,
    pub jet_names: Vec<String>,
    pub records: Vec<StepRecord>,
    pub termination: Termination,
    pub max_com_err: f64,
    pub max_tilt: f64,
    /// CSV decimation factor.
    pub log_every: usize,
}

impl SimLog {
    pub fn completed(&self) -> bool {
        matches!(self.termination, Termination::Completed)
    }

    /// Verdict summary in stable key=value form.
    pub fn verdict_line(&self) -> String {
        match &self.termination {
            Termination::Completed => format!(
                "status=completed max_com_err={:.6} max_tilt={:.6}",
                self.max_com_err, self.max_tilt
            ),
            Termination::Failed { t, .. } => format!(
                "status=failed t_fail={:.3} max_com_err={:.6} max_tilt={:.6}",
                t, self.max_com_err, self.max_tilt
            ),
        }
    }

    /// CSV with a fixed header row naming every channel; records decimated
    /// by `log_every`.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = vec!["t".into()];
        for c in ["com_x", "com_y", "com_z", "com_err_x", "com_err_y", "com_err_z"] {
            header.push(c.into());
        }
        for c in ["h_ang_x", "h_ang_y", "h_ang_z", "h_lin_x", "h_lin_y", "h_lin_z"] {
            header.push(c.into());
        }
        for c in ["htil_ang_x", "htil_ang_y", "htil_ang_z", "htil_lin_x", "htil_lin_y", "htil_lin_z"] {
            header.push(c.into());
        }
        for j in &self.joint_names {
            header.push(format!("s_{j}"));
        }
        for g in ["ds_central", "ds_left", "ds_right"] {
            header.push(g.into());
        }
        for j in &self.jet_names {
            header.push(format!("T_{j}"));
        }
        for c in ["fa_plant_x", "fa_plant_y", "fa_plant_z", "fa_ctrl_x", "fa_ctrl_y", "fa_ctrl_z"] {
            header.push(c.into());
        }
        for j in &self.joint_names {
            header.push(format!("tau_{j}"));
        }
        for c in ["hdot_ang_x", "hdot_ang_y", "hdot_ang_z", "hdot_lin_x", "hdot_lin_y", "hdot_lin_z"] {
            header.push(c.into());
        }

        let mut out = header.join(",");
        out.push('\n');
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        for (i, r) in self.records.iter().enumerate() {
            if i % self.log_every != 0 {
                continue;
            }
            fields.clear();
            fields.push(format!("{:.6}", r.t));
            let mut push6 = |v: &Vector6<f64>, fields: &mut Vec<String>| {
                for k in 0..6 {
                    fields.push(format!("{:.9e}", v[k]));
                }
            };
            for k in 0..3 {
                fields.push(format!("{:.9e}", r.com[k]));
            }
            for k in 0..3 {
                fields.push(format!("{:.9e}", r.com_err[k]));
            }
            push6(&r.h, &mut fields);
            push6(&r.h_tilde, &mut fields);
            for v in r.s.iter() {
                fields.push(format!("{v:.9e}"));
            }
            for v in r.delta_s {
                fields.push(format!("{v:.9e}"));
            }
            for v in r.thrusts.iter() {
                fields.push(format!("{v:.9e}"));
            }
            for k in 0..3 {
                fields.push(format!("{:.9e}", r.f_a_plant[k]));
            }
            for k in 0..3 {
                fields.push(format!("{:.9e}", r.f_a_ctrl[k]));
            }
            for v in r.tau.iter() {
                fields.push(format!("{v:.9e}"));
            }
            push6(&r.hdot_rhs, &mut fields);
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sub-assembly of a joint by name: 0 central, 1 left, 2 right.
fn subassembly(name: &str) -> usize {
    if name.starts_with("l_") {
        1
    } else if name.starts_with("r_") {
        2
    } else {
        0
    }
}

/// Execute a loaded scenario.
///
/// The loop runs the controller every `ctrl_every` plant steps (zero-order
/// hold on torques and thrust rates), integrates thrusts from the commanded
/// rates, advances the plant, and aborts with `failed@t` on a threshold or
/// fault. Deterministic: identical scenarios produce identical logs.
pub fn run_scenario(loaded: &LoadedScenario) -> Result<SimLog> {
    let sc = &loaded.scenario;
    let model = &loaded.model;
    let factors = AeroFactors::new(sc.rho)?;

    let aero_of = |sel: AeroSelector| -> Result<AeroModel<'_>> {
        Ok(match sel {
            AeroSelector::None => AeroModel::None,
            AeroSelector::Axisym => AeroModel::Axisym {
                coeffs: loaded.coeffs.as_deref().ok_or_else(|| {
                    Error::Validation("axisym aero selected but no coefficients loaded".into())
                })?,
                factors,
            },
            AeroSelector::Mlp => AeroModel::Mlp {
                net: loaded.mlp.as_ref().ok_or_else(|| {
                    Error::Validation("mlp aero selected but no weights loaded".into())
                })?,
                factors,
            },
        })
    };
    let plant_aero = aero_of(sc.plant_aero)?;
    let ctrl_sel = sc.ctrl_aero.unwrap_or(loaded.gains.aero_feedback);
    let ctrl_aero = aero_of(ctrl_sel)?;

    // Initial state: hovering posture at the origin, balanced thrusts.
    let joint = JointState::zero(model.n_joints());
    let thrusts = hover_thrusts(model, &joint)?;
    let mut state = SimState::new(model, joint, thrusts)?;

    let kin0 = forward_kinematics(model, &state.joint)?;
    let reference = match sc.envelope {
        EnvelopeKind::Hover => MomentumReference::hover(kin0.com),
        EnvelopeKind::Standard => standard_envelope(kin0.com),
    };
    let wind = match (&sc.wind, sc.envelope) {
        (Some(w), _) => w.clone(),
        (None, EnvelopeKind::Standard) => standard_wind(),
        (None, EnvelopeKind::Hover) => WindProfile::calm(),
    };

    let mut gains = loaded.gains.clone();
    gains.aero_feedback = ctrl_sel;
    let mut controller = Controller::new(gains, state.joint.s.clone())?;
    let dt_ctrl = sc.dt * sc.ctrl_every as f64;

    let n_steps = (sc.duration / sc.dt).round() as usize;
    let mut records = Vec::with_capacity(n_steps);
    let mut termination = Termination::Completed;
    let mut max_com_err = 0.0_f64;
    let mut max_tilt = 0.0_f64;

    let mut tau = DVector::zeros(model.n_joints());
    let mut thrust_rate = DVector::zeros(model.jets.len());
    let mut f_a_ctrl = Vector3::zeros();

    for k in 0..n_steps {
        let t = k as f64 * sc.dt;
        let v_w = wind.at(t);

        if k % sc.ctrl_every == 0 {
            match controller.control_step(model, &state.joint, &state.thrusts, &reference, t, dt_ctrl, &v_w, &ctrl_aero) {
                Ok(out) => {
                    tau = out.tau;
                    thrust_rate = out.thrust_rate;
                    f_a_ctrl = out.diag.f_a_total;
                }
                Err(Error::ControllerFault(msg)) => {
                    termination = Termination::Failed {
                        t,
                        reason: format!("controller fault: {msg}"),
                    };
                    break;
                }
                Err(e) => return Err(e),
            }
        }

        let out = match step(model, &state, &tau, &v_w, &plant_aero, sc.dt) {
            Ok(o) => o,
            Err(Error::NonFinite(msg)) => {
                termination = Termination::Failed {
                    t,
                    reason: format!("integration fault at step {k}: {msg}"),
                };
                break;
            }
            Err(e) => return Err(e),
        };

        // Log the pre-step state.
        let ref_sample = reference.sample(t);
        let com_err = out.com - ref_sample.pos;
        let h_des = reference.h_des(t, model.total_mass);
        let mut delta_s = [0.0; 3];
        for (i, joint) in model.joints.iter().enumerate() {
            delta_s[subassembly(&joint.name)] += (state.joint.s[i] - controller.joint_reference()[i]).abs();
        }
        let tilt = tilt_angle(&state.joint.base_rot);
        max_com_err = max_com_err.max(com_err.norm());
        max_tilt = max_tilt.max(tilt);
        records.push(StepRecord {
            t,
            com: out.com,
            com_err,
            h: out.h,
            h_tilde: out.h - h_des,
            s: state.joint.s.clone(),
            delta_s,
            thrusts: state.thrusts.clone(),
            f_a_plant: out.forces.iter().sum(),
            f_a_ctrl,
            tau: tau.clone(),
            hdot_rhs: out.hdot_rhs,
        });

        if com_err.norm() > sc.max_com_err {
            termination = Termination::Failed {
                t,
                reason: format!("CoM error {:.3} m exceeded {:.3} m", com_err.norm(), sc.max_com_err),
            };
            break;
        }
        if tilt > sc.max_tilt {
            termination = Termination::Failed {
                t,
                reason: format!("base tilt {:.3} rad exceeded {:.3} rad", tilt, sc.max_tilt),
            };
            break;
        }

        // Integrate thrusts from the held rates, clamped into the jet boxes.
        state = out.state;
        for (j, jet) in model.jets.iter().enumerate() {
            state.thrusts[j] = (state.thrusts[j] + thrust_rate[j] * sc.dt).clamp(jet.tmin, jet.tmax);
        }
    }

    Ok(SimLog {
        joint_names: model.joints.iter().map(|j| j.name.clone()).collect(),
        jet_names: model.jets.iter().map(|j| j.name.clone()).collect(),
        records,
        termination,
        max_com_err,
        max_tilt,
        log_every: sc.log_every,
    })
}
