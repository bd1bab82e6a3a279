//! Line-based model file parser.
//!
//! One directive per line, `#` starts a comment:
//!
//! ```text
//! link <name> mass=<kg> com=<x,y,z> inertia=<ixx,iyy,izz,ixy,ixz,iyz> axis=<x,y,z> aero=<0|1>
//! joint <name> parent=<link> child=<link> axis=<x,y,z> origin=<x,y,z> limits=<lo,hi> vmax=<rad/s>
//! jet <name> link=<link> dir=<x,y,z> tmin=<N> tmax=<N> [pos=<x,y,z>]
//! gravity <m/s^2>
//! ```
//!
//! Numbers are decimal, SI units. `pos=` is optional and defaults to the
//! mount link origin.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use super::{JetSpec, JointSpec, LinkSpec, RobotModel};
use crate::{Error, Result};

const DEFAULT_GRAVITY: f64 = 9.81;

struct Line<'a> {
    no: usize,
    fields: HashMap<&'a str, &'a str>,
}

impl<'a> Line<'a> {
    fn get(&self, key: &str) -> Result<&'a str> {
        self.fields.get(key).copied().ok_or_else(|| Error::Parse {
            line: self.no,
            msg: format!("missing attribute '{key}='"),
        })
    }

    fn num(&self, key: &str) -> Result<f64> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| Error::Parse {
            line: self.no,
            msg: format!("attribute '{key}': invalid number '{raw}'"),
        })
    }

    fn nums<const N: usize>(&self, key: &str) -> Result<[f64; N]> {
        let raw = self.get(key)?;
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != N {
            return Err(Error::Parse {
                line: self.no,
                msg: format!("attribute '{key}': expected {N} comma-separated numbers, got {}", parts.len()),
            });
        }
        let mut out = [0.0; N];
        for (i, p) in parts.iter().enumerate() {
            out[i] = p.trim().parse().map_err(|_| Error::Parse {
                line: self.no,
                msg: format!("attribute '{key}': invalid number '{p}'"),
            })?;
        }
        Ok(out)
    }

    fn vec3(&self, key: &str) -> Result<Vector3<f64>> {
        let [x, y, z] = self.nums::<3>(key)?;
        Ok(Vector3::new(x, y, z))
    }
}

/// Parse and validate a model file.
pub fn load_model(text: &str) -> Result<RobotModel> {
    let mut links: Vec<LinkSpec> = Vec::new();
    let mut link_ids: HashMap<String, usize> = HashMap::new();
    // Joints and jets reference links by name; resolve after all links exist.
    let mut raw_joints: Vec<(usize, String, String, String, Vector3<f64>, Vector3<f64>, (f64, f64), f64)> = Vec::new();
    let mut raw_jets: Vec<(usize, String, String, Vector3<f64>, Vector3<f64>, f64, f64)> = Vec::new();
    let mut gravity = DEFAULT_GRAVITY;

    for (idx, raw_line) in text.lines().enumerate() {
        let no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let mut tokens = line.split_whitespace();
        let Some(kind) = tokens.next() else { continue };

        if kind == "gravity" {
            let raw = tokens.next().ok_or(Error::Parse {
                line: no,
                msg: "gravity requires a value".into(),
            })?;
            gravity = raw.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("invalid gravity value '{raw}'"),
            })?;
            continue;
        }

        let name = tokens
            .next()
            .ok_or(Error::Parse {
                line: no,
                msg: format!("'{kind}' directive requires a name"),
            })?
            .to_string();
        let mut fields = HashMap::new();
        for tok in tokens {
            let Some((k, v)) = tok.split_once('=') else {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("expected key=value, got '{tok}'"),
                });
            };
            if fields.insert(k, v).is_some() {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("duplicate attribute '{k}='"),
                });
            }
        }
        let l = Line { no, fields };

        match kind {
            "link" => {
                if link_ids.contains_key(&name) {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("duplicate link name '{name}'"),
                    });
                }
                let [ixx, iyy, izz, ixy, ixz, iyz] = l.nums::<6>("inertia")?;
                let inertia = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
                let aero = match l.get("aero")? {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::Parse {
                            line: no,
                            msg: format!("attribute 'aero': expected 0 or 1, got '{other}'"),
                        })
                    }
                };
                link_ids.insert(name.clone(), links.len());
                links.push(LinkSpec {
                    name,
                    mass: l.num("mass")?,
                    inertia,
                    com: l.vec3("com")?,
                    symmetry_axis: l.vec3("axis")?,
                    aero,
                });
            }
            "joint" => {
                let [lo, hi] = l.nums::<2>("limits")?;
                raw_joints.push((
                    no,
                    name,
                    l.get("parent")?.to_string(),
                    l.get("child")?.to_string(),
                    l.vec3("axis")?,
                    l.vec3("origin")?,
                    (lo, hi),
                    l.num("vmax")?,
                ));
            }
            "jet" => {
                let pos = if l.fields.contains_key("pos") {
                    l.vec3("pos")?
                } else {
                    Vector3::zeros()
                };
                raw_jets.push((
                    no,
                    name,
                    l.get("link")?.to_string(),
                    l.vec3("dir")?,
                    pos,
                    l.num("tmin")?,
                    l.num("tmax")?,
                ));
            }
            other => {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("unknown directive '{other}'"),
                });
            }
        }
    }

    let resolve = |line: usize, name: &str| -> Result<usize> {
        link_ids.get(name).copied().ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown link '{name}'"),
        })
    };

    let mut joint_names = HashMap::new();
    let mut joints = Vec::with_capacity(raw_joints.len());
    for (no, name, parent, child, axis, origin, limits, vmax) in raw_joints {
        if joint_names.insert(name.clone(), ()).is_some() {
            return Err(Error::Parse {
                line: no,
                msg: format!("duplicate joint name '{name}'"),
            });
        }
        joints.push(JointSpec {
            name,
            parent: resolve(no, &parent)?,
            child: resolve(no, &child)?,
            axis,
            origin,
            limits,
            vmax,
        });
    }
    let mut jets = Vec::with_capacity(raw_jets.len());
    for (no, name, link, dir, pos, tmin, tmax) in raw_jets {
        jets.push(JetSpec {
            name,
            link: resolve(no, &link)?,
            dir,
            pos,
            tmin,
            tmax,
        });
    }

    RobotModel::new(links, joints, jets, gravity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_link_mass() {
        let m = load_model("link body mass=43.3 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=1\n").unwrap();
        assert_eq!(m.links.len(), 1);
        assert!((m.total_mass - 43.3).abs() < 1e-12);
        assert_eq!(m.n_joints(), 0);
        assert_eq!(m.n_aero_links(), 1);
    }

    #[test]
    fn self_parented_joint_rejected() {
        let text = "link a mass=1 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\n\
                    joint j parent=a child=a axis=0,0,1 origin=0,0,0 limits=-1,1 vmax=1\n";
        let err = load_model(text).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "got {err:?}");
    }

    #[test]
    fn cycle_rejected() {
        let text = "link a mass=1 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\n\
                    link b mass=1 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\n\
                    joint j1 parent=a child=b axis=0,0,1 origin=0,0,0 limits=-1,1 vmax=1\n\
                    joint j2 parent=b child=a axis=0,0,1 origin=0,0,0 limits=-1,1 vmax=1\n";
        let err = load_model(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tree") || msg.contains("cycle") || msg.contains("multiple"), "{msg}");
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "link a mass=1 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\nlink b mass=oops com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\n";
        match load_model(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# header\n\nlink a mass=2 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0 # trailing\n";
        let m = load_model(text).unwrap();
        assert_eq!(m.links.len(), 1);
        assert!((m.total_mass - 2.0).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_mass_rejected() {
        let err = load_model("link a mass=0 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\n").unwrap_err();
        assert!(err.to_string().contains("mass"));
    }

    #[test]
    fn jet_bounds_validated() {
        let text = "link a mass=1 com=0,0,0 inertia=1,1,1,0,0,0 axis=0,0,1 aero=0\n\
                    jet t link=a dir=0,0,1 tmin=5 tmax=5\n";
        assert!(load_model(text).is_err());
    }

    #[test]
    fn default_model_counts() {
        let m = load_model(crate::model::default_model_text()).unwrap();
        assert_eq!(m.n_joints(), 19);
        assert_eq!(m.n_aero_links(), 13);
        assert_eq!(m.n_aero_links() * 3, 39);
        assert!((m.total_mass - 43.3).abs() < 1e-9 * 43.3);
        assert_eq!(m.jets.len(), 4);
        // Symmetry pairing must be derivable for mirroring augmentation.
        m.mirror_map().unwrap();
    }
}
