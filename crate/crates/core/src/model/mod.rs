//! Floating-base multibody model of a jet-actuated articulated robot.
//!
//! The robot is a tree of rigid links connected by revolute joints, rooted at
//! a free-floating base link. Jets apply forces at fixed mount points; a
//! subset of links ("aero links") receives distributed aerodynamic forces at
//! their centers of mass.
//!
//! Conventions, used everywhere downstream:
//! - spatial 6-vectors are ordered (angular, linear);
//! - the system velocity is `nu = (omega_base, v_base, sdot)` with the base
//!   twist expressed in world coordinates at the base frame origin (mixed
//!   representation);
//! - a child link frame coincides with its parent frame translated by the
//!   joint origin and rotated by the joint angle about the joint axis.

pub mod dynamics;
pub mod kinematics;
mod parse;

pub use dynamics::{
    centroidal_momentum, centroidal_momentum_matrix, centroidal_momentum_with, dynamics_terms,
    dynamics_terms_with,
};
pub use kinematics::{
    forward_kinematics, link_jacobian, point_bias_accel, point_jacobian, Kinematics, LinkKin,
};
pub use parse::load_model;

/// Text of the bundled desk-scale humanoid model (19 joints, 13 aero links,
/// 43.3 kg, 4 jets).
pub fn default_model_text() -> &'static str {
    include_str!("../../assets/default_robot.model")
}

use nalgebra::{DVector, Matrix3, UnitQuaternion, Vector3, Vector6};

use crate::{Error, Result};

/// Rigid link: mass properties, frame-local geometry, and aero metadata.
#[derive(Debug, Clone)]
pub struct LinkSpec {
    pub name: String,
    /// Mass in kg. Strictly positive.
    pub mass: f64,
    /// Inertia tensor about the link CoM, in the link frame (kg m^2).
    pub inertia: Matrix3<f64>,
    /// CoM offset in the link frame (m).
    pub com: Vector3<f64>,
    /// Unit symmetry axis in the link frame, used by the axisymmetric
    /// aerodynamic model.
    pub symmetry_axis: Vector3<f64>,
    /// Whether this link receives aerodynamic forces.
    pub aero: bool,
}

/// Revolute joint connecting `parent` to `child`.
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    /// Rotation axis in the parent frame (unit).
    pub axis: Vector3<f64>,
    /// Joint (= child frame) origin in the parent frame.
    pub origin: Vector3<f64>,
    /// Position limits (lo, hi) in rad, lo < hi.
    pub limits: (f64, f64),
    /// Velocity limit in rad/s, > 0.
    pub vmax: f64,
}

/// Jet thruster rigidly mounted on a link.
#[derive(Debug, Clone)]
pub struct JetSpec {
    pub name: String,
    pub link: usize,
    /// Thrust force direction in the mount-link frame (unit).
    pub dir: Vector3<f64>,
    /// Mount point in the mount-link frame. Defaults to the link origin.
    pub pos: Vector3<f64>,
    /// Thrust intensity bounds in N, 0 <= tmin < tmax.
    pub tmin: f64,
    pub tmax: f64,
}

/// Validated robot description.
#[derive(Debug, Clone)]
pub struct RobotModel {
    pub links: Vec<LinkSpec>,
    pub joints: Vec<JointSpec>,
    pub jets: Vec<JetSpec>,
    /// Index of the base (root) link.
    pub base: usize,
    /// Sum of link masses (kg).
    pub total_mass: f64,
    /// Gravitational acceleration (m/s^2), positive down.
    pub gravity: f64,
    /// Joint indices sorted so parents precede children.
    topo: Vec<usize>,
    /// Per link, the joint indices on the path base -> link, in order.
    ancestors: Vec<Vec<usize>>,
    /// Indices of aero links, in declaration order.
    aero_links: Vec<usize>,
}

impl RobotModel {
    /// Build and validate a model from raw parts.
    pub fn new(links: Vec<LinkSpec>, joints: Vec<JointSpec>, jets: Vec<JetSpec>, gravity: f64) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::Validation("model has no links".into()));
        }
        for l in &links {
            if !(l.mass > 0.0) {
                return Err(Error::Validation(format!("link '{}': nonpositive mass {}", l.name, l.mass)));
            }
            if (l.inertia - l.inertia.transpose()).norm() > 1e-12 {
                return Err(Error::Validation(format!("link '{}': inertia not symmetric", l.name)));
            }
            let eig = l.inertia.symmetric_eigenvalues();
            if eig.min() <= 0.0 {
                return Err(Error::Validation(format!(
                    "link '{}': inertia not positive definite (min eigenvalue {})",
                    l.name,
                    eig.min()
                )));
            }
            if (l.symmetry_axis.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("link '{}': symmetry axis not unit", l.name)));
            }
        }
        let n_links = links.len();
        for j in &joints {
            if j.parent == j.child {
                return Err(Error::Validation(format!("joint '{}': parent equals child", j.name)));
            }
            if j.parent >= n_links || j.child >= n_links {
                return Err(Error::Validation(format!("joint '{}': link index out of range", j.name)));
            }
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!("joint '{}': axis not unit", j.name)));
            }
            if !(j.limits.0 < j.limits.1) {
                return Err(Error::Validation(format!("joint '{}': empty position limit range", j.name)));
            }
            if !(j.vmax > 0.0) {
                return Err(Error::Validation(format!("joint '{}': nonpositive velocity limit", j.name)));
            }
        }

        // Tree structure: every link except one root has exactly one incoming
        // joint, and every link is reachable from that root.
        let mut parent_of = vec![usize::MAX; n_links];
        for (ji, j) in joints.iter().enumerate() {
            if parent_of[j.child] != usize::MAX {
                return Err(Error::Validation(format!(
                    "link '{}' has multiple parent joints",
                    links[j.child].name
                )));
            }
            parent_of[j.child] = ji;
        }
        let roots: Vec<usize> = (0..n_links).filter(|&i| parent_of[i] == usize::MAX).collect();
        if roots.len() != 1 {
            return Err(Error::Validation(format!(
                "joint graph is not a tree rooted at a single base ({} root links)",
                roots.len()
            )));
        }
        let base = roots[0];

        // Topological order by walking from the base; detects cycles and
        // unreachable links at once.
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_links];
        for (ji, j) in joints.iter().enumerate() {
            children[j.parent].push(ji);
        }
        let mut topo = Vec::with_capacity(joints.len());
        let mut reached = vec![false; n_links];
        reached[base] = true;
        let mut stack = vec![base];
        while let Some(l) = stack.pop() {
            for &ji in &children[l] {
                let c = joints[ji].child;
                if reached[c] {
                    return Err(Error::Validation(format!("cycle detected through link '{}'", links[c].name)));
                }
                reached[c] = true;
                topo.push(ji);
                stack.push(c);
            }
        }
        if let Some(i) = reached.iter().position(|&r| !r) {
            return Err(Error::Validation(format!(
                "link '{}' not reachable from the base",
                links[i].name
            )));
        }

        for jet in &jets {
            if jet.link >= n_links {
                return Err(Error::Validation(format!("jet '{}': unknown mount link", jet.name)));
            }
            if !(jet.tmin >= 0.0 && jet.tmin < jet.tmax) {
                return Err(Error::Validation(format!(
                    "jet '{}': thrust bounds must satisfy 0 <= tmin < tmax (got {}, {})",
                    jet.name, jet.tmin, jet.tmax
                )));
            }
            if (jet.dir.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!("jet '{}': direction not unit", jet.name)));
            }
        }

        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); n_links];
        for &ji in &topo {
            let j = &joints[ji];
            let mut path = ancestors[j.parent].clone();
            path.push(ji);
            ancestors[j.child] = path;
        }

        let total_mass = links.iter().map(|l| l.mass).sum();
        let aero_links = (0..n_links).filter(|&i| links[i].aero).collect();

        Ok(RobotModel {
            links,
            joints,
            jets,
            base,
            total_mass,
            gravity,
            topo,
            ancestors,
            aero_links,
        })
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    /// Dimension of nu: 6 + n_joints.
    pub fn n_dof(&self) -> usize {
        6 + self.joints.len()
    }

    pub fn n_aero_links(&self) -> usize {
        self.aero_links.len()
    }

    /// Aero link indices in declaration order. The aero model output
    /// dimension is `3 * n_aero_links()`.
    pub fn aero_links(&self) -> &[usize] {
        &self.aero_links
    }

    /// Joint indices ordered parents-first.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Joints on the path from the base to `link`.
    pub fn ancestors(&self, link: usize) -> &[usize] {
        &self.ancestors[link]
    }

    pub fn link_index(&self, name: &str) -> Result<usize> {
        self.links
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown link '{name}'")))
    }

    pub fn joint_index(&self, name: &str) -> Result<usize> {
        self.joints
            .iter()
            .position(|j| j.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown joint '{name}'")))
    }

    /// Derive the left/right mirror structure from `l_`/`r_` name prefixes.
    ///
    /// Fails when the model declares no symmetry pairing (no `l_*` names) or
    /// when a pairing is geometrically inconsistent with reflection across
    /// the x-z plane.
    pub fn mirror_map(&self) -> Result<MirrorMap> {
        MirrorMap::derive(self)
    }
}

/// Reflection of the model across its longitudinal (x-z) plane.
///
/// `joint_perm[j]` is the joint receiving joint j's (sign-adjusted) value in
/// a mirrored configuration; `link_perm` the analogous link permutation.
#[derive(Debug, Clone)]
pub struct MirrorMap {
    pub joint_perm: Vec<usize>,
    pub joint_sign: Vec<f64>,
    pub link_perm: Vec<usize>,
}

impl MirrorMap {
    /// Mirror a joint configuration.
    pub fn mirror_joints(&self, s: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(s.len());
        for j in 0..s.len() {
            out[self.joint_perm[j]] = self.joint_sign[j] * s[j];
        }
        out
    }

    /// Mirror a lateral-axis vector: negate the y component.
    pub fn mirror_vec(v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(v.x, -v.y, v.z)
    }

    fn derive(model: &RobotModel) -> Result<Self> {
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        let partner_name = |name: &str| -> Option<String> {
            if let Some(rest) = name.strip_prefix("l_") {
                Some(format!("r_{rest}"))
            } else if let Some(rest) = name.strip_prefix("r_") {
                Some(format!("l_{rest}"))
            } else {
                None
            }
        };

        if !model.joints.iter().any(|j| j.name.starts_with("l_")) {
            return Err(Error::Validation(
                "model declares no left/right symmetry pairing (no l_*/r_* joint names)".into(),
            ));
        }

        let tol = 1e-9;
        let mut link_perm = vec![usize::MAX; model.links.len()];
        for (i, l) in model.links.iter().enumerate() {
            let p = match partner_name(&l.name) {
                Some(pn) => model.link_index(&pn)?,
                None => i,
            };
            link_perm[i] = p;
            let q = &model.links[p];
            if (l.mass - q.mass).abs() > tol
                || (reflect * l.com - q.com).norm() > tol
                || (reflect * l.inertia * reflect - q.inertia).norm() > tol
                || (reflect * l.symmetry_axis - q.symmetry_axis).norm() > tol
            {
                return Err(Error::Validation(format!(
                    "links '{}' and '{}' are not mirror-consistent",
                    l.name, q.name
                )));
            }
        }

        let mut joint_perm = vec![usize::MAX; model.joints.len()];
        let mut joint_sign = vec![0.0; model.joints.len()];
        for (j, spec) in model.joints.iter().enumerate() {
            let p = match partner_name(&spec.name) {
                Some(pn) => model.joint_index(&pn)?,
                None => j,
            };
            joint_perm[j] = p;
            let q = &model.joints[p];
            if link_perm[spec.parent] != q.parent || link_perm[spec.child] != q.child {
                return Err(Error::Validation(format!(
                    "joints '{}' and '{}' do not connect mirrored links",
                    spec.name, q.name
                )));
            }
            if (reflect * spec.origin - q.origin).norm() > tol {
                return Err(Error::Validation(format!(
                    "joints '{}' and '{}': origins are not mirror images",
                    spec.name, q.name
                )));
            }
            // A rotation by phi about axis a reflects to a rotation by -phi
            // about (reflect a): the mirrored angle keeps its sign exactly
            // when the partner axis is -(reflect a), and flips when it is
            // +(reflect a).
            let ra = reflect * spec.axis;
            joint_sign[j] = if (ra + q.axis).norm() < tol {
                1.0
            } else if (ra - q.axis).norm() < tol {
                -1.0
            } else {
                return Err(Error::Validation(format!(
                    "joints '{}' and '{}': axes are not mirror images",
                    spec.name, q.name
                )));
            };
        }
        // Involution: mirroring twice must restore every joint value.
        for j in 0..joint_perm.len() {
            if joint_perm[joint_perm[j]] != j || joint_sign[joint_perm[j]] != joint_sign[j] {
                return Err(Error::Validation(format!(
                    "mirror pairing of joint '{}' is not an involution",
                    model.joints[j].name
                )));
            }
        }

        Ok(MirrorMap {
            joint_perm,
            joint_sign,
            link_perm,
        })
    }
}

/// Full kinematic state of the floating-base system.
#[derive(Debug, Clone)]
pub struct JointState {
    /// Base frame origin in world coordinates (m).
    pub base_pos: Vector3<f64>,
    /// Base orientation (world_R_base).
    pub base_rot: UnitQuaternion<f64>,
    /// Base angular velocity, world frame (rad/s).
    pub base_ang_vel: Vector3<f64>,
    /// Base origin linear velocity, world frame (m/s).
    pub base_lin_vel: Vector3<f64>,
    /// Joint positions (rad).
    pub s: DVector<f64>,
    /// Joint velocities (rad/s).
    pub sdot: DVector<f64>,
}

impl JointState {
    /// Rest state: identity base pose, zero velocities, zero joint angles.
    pub fn zero(n_joints: usize) -> Self {
        JointState {
            base_pos: Vector3::zeros(),
            base_rot: UnitQuaternion::identity(),
            base_ang_vel: Vector3::zeros(),
            base_lin_vel: Vector3::zeros(),
            s: DVector::zeros(n_joints),
            sdot: DVector::zeros(n_joints),
        }
    }

    /// Stacked system velocity nu = (omega_base, v_base, sdot).
    pub fn nu(&self) -> DVector<f64> {
        let n = self.s.len();
        let mut nu = DVector::zeros(6 + n);
        nu.fixed_rows_mut::<3>(0).copy_from(&self.base_ang_vel);
        nu.fixed_rows_mut::<3>(3).copy_from(&self.base_lin_vel);
        nu.rows_mut(6, n).copy_from(&self.sdot);
        nu
    }

    /// Check dimensions, orientation normalization and finiteness.
    pub fn validate(&self, model: &RobotModel) -> Result<()> {
        let n = model.n_joints();
        if self.s.len() != n || self.sdot.len() != n {
            return Err(Error::Dimension(format!(
                "state has {} joint positions and {} velocities, model has {} joints",
                self.s.len(),
                self.sdot.len(),
                n
            )));
        }
        if (self.base_rot.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation("base orientation quaternion not unit".into()));
        }
        let finite = self.base_pos.iter().all(|v| v.is_finite())
            && self.base_ang_vel.iter().all(|v| v.is_finite())
            && self.base_lin_vel.iter().all(|v| v.is_finite())
            && self.s.iter().all(|v| v.is_finite())
            && self.sdot.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("joint state".into()));
        }
        Ok(())
    }
}

/// Centroidal momentum and CoM state.
#[derive(Debug, Clone)]
pub struct CentroidalState {
    /// 6-vector (angular about the CoM, linear), world orientation.
    pub h: Vector6<f64>,
    /// CoM position, world frame.
    pub com: Vector3<f64>,
    /// CoM velocity, world frame.
    pub com_vel: Vector3<f64>,
}
