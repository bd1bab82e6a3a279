//! Controller gains file: `key=value` lines, `#` comments.
//!
//! Keys: `kp_lin`, `kp_ang`, `kd_lin`, `kd_ang`, `ki_lin`, `ki_ang`
//! (momentum PID diagonals), `kps`, `kds` (joint inner loop), `kp_post`
//! (postural velocity pull), `w1`, `w2` (QP weights), `mu` (pseudoinverse
//! damping), `rate_frac`, `kappa_gain` (tanh bound shape), `rho` (air
//! density), `aero_feedback=none|axisym|mlp`, and per-jet thrust overrides
//! `t_min_<idx>=` / `t_max_<idx>=`.

use nalgebra::Vector6;

use crate::{Error, Result};

/// Controller's aerodynamic feedback source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeroSelector {
    None,
    Axisym,
    Mlp,
}

impl std::str::FromStr for AeroSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AeroSelector::None),
            "axisym" => Ok(AeroSelector::Axisym),
            "mlp" => Ok(AeroSelector::Mlp),
            other => Err(Error::Validation(format!(
                "unknown aero feedback '{other}' (expected none|axisym|mlp)"
            ))),
        }
    }
}

impl std::fmt::Display for AeroSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AeroSelector::None => "none",
            AeroSelector::Axisym => "axisym",
            AeroSelector::Mlp => "mlp",
        })
    }
}

/// Momentum, inner-loop, and allocation gains.
#[derive(Debug, Clone)]
pub struct ControlGains {
    /// Momentum PID diagonals, (angular, linear) blocks.
    pub kp: Vector6<f64>,
    pub kd: Vector6<f64>,
    pub ki: Vector6<f64>,
    /// Joint inner-loop gains (uniform diagonal).
    pub kps: f64,
    pub kds: f64,
    /// Postural velocity gain: sdot_post = -kp_post (s - s_des).
    pub kp_post: f64,
    /// QP weights.
    pub w1: f64,
    pub w2: f64,
    /// Damped pseudoinverse factor.
    pub mu: f64,
    /// Joint-rate price in the weighted pseudoinverse (thrust rates cost 1).
    pub joint_weight: f64,
    /// tanh bound shape.
    pub rate_frac: f64,
    pub kappa_gain: f64,
    /// Air density used by the controller's aero model.
    pub rho: f64,
    pub aero_feedback: AeroSelector,
    /// Per-jet (index, bound) overrides applied to the model limits.
    pub t_min_override: Vec<(usize, f64)>,
    pub t_max_override: Vec<(usize, f64)>,
}

impl Default for ControlGains {
    fn default() -> Self {
        // Momentum loop poles: third-order (s + l)^3 per channel with
        // l = 1.25 (linear) and l = 2 (angular): kd = 3l, kp = 3l^2, ki = l^3.
        let lin = 1.25;
        let ang = 2.0;
        let diag = |a: f64, l: f64, f: fn(f64) -> f64| {
            Vector6::new(f(a), f(a), f(a), f(l), f(l), f(l))
        };
        ControlGains {
            kp: diag(ang, lin, |l| 3.0 * l * l),
            kd: diag(ang, lin, |l| 3.0 * l),
            ki: diag(ang, lin, |l| l * l * l),
            kps: 900.0,
            kds: 60.0,
            kp_post: 1.0,
            w1: 1.0,
            w2: 0.05,
            mu: 1e-4,
            joint_weight: 25.0,
            rate_frac: super::alloc::RATE_FRACTION,
            kappa_gain: super::alloc::KAPPA_GAIN,
            rho: 1.225,
            aero_feedback: AeroSelector::None,
            t_min_override: Vec::new(),
            t_max_override: Vec::new(),
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kp", &self.kp), ("kd", &self.kd), ("ki", &self.ki)] {
            if v.iter().any(|&x| x <= 0.0) {
                return Err(Error::Validation(format!("{name} diagonal entries must be positive")));
            }
        }
        for (name, v) in [
            ("kps", self.kps),
            ("kds", self.kds),
            ("w1", self.w1),
            ("w2", self.w2),
            ("rho", self.rho),
        ] {
            if v <= 0.0 {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.kp_post < 0.0 || self.mu < 0.0 {
            return Err(Error::Validation("kp_post and mu must be nonnegative".into()));
        }
        if !(self.joint_weight > 0.0) {
            return Err(Error::Validation("joint_weight must be positive".into()));
        }
        if self.rate_frac <= 0.0 || self.kappa_gain <= 0.0 {
            return Err(Error::Validation("tanh bound parameters must be positive".into()));
        }
        Ok(())
    }

    /// Parse a gains file, starting from the defaults.
    pub fn parse(text: &str) -> Result<ControlGains> {
        let mut g = ControlGains::default();
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
            let num = || -> Result<f64> {
                value.parse().map_err(|_| Error::Parse {
                    line: no,
                    msg: format!("'{key}': invalid number '{value}'"),
                })
            };
            let set_block = |v: &mut Vector6<f64>, x: f64, ang: bool| {
                let off = if ang { 0 } else { 3 };
                for k in 0..3 {
                    v[off + k] = x;
                }
            };
            match key {
                "kp_lin" => set_block(&mut g.kp, num()?, false),
                "kp_ang" => set_block(&mut g.kp, num()?, true),
                "kd_lin" => set_block(&mut g.kd, num()?, false),
                "kd_ang" => set_block(&mut g.kd, num()?, true),
                "ki_lin" => set_block(&mut g.ki, num()?, false),
                "ki_ang" => set_block(&mut g.ki, num()?, true),
                "kps" => g.kps = num()?,
                "kds" => g.kds = num()?,
                "kp_post" => g.kp_post = num()?,
                "w1" => g.w1 = num()?,
                "w2" => g.w2 = num()?,
                "mu" => g.mu = num()?,
                "joint_weight" => g.joint_weight = num()?,
                "rate_frac" => g.rate_frac = num()?,
                "kappa_gain" => g.kappa_gain = num()?,
                "rho" => g.rho = num()?,
                "aero_feedback" => g.aero_feedback = value.parse()?,
                _ if key.starts_with("t_min_") || key.starts_with("t_max_") => {
                    let idx: usize = key[6..].parse().map_err(|_| Error::Parse {
                        line: no,
                        msg: format!("'{key}': jet index must be an integer"),
                    })?;
                    if key.starts_with("t_min_") {
                        g.t_min_override.push((idx, num()?));
                    } else {
                        g.t_max_override.push((idx, num()?));
                    }
                }
                other => {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("unknown gain key '{other}'"),
                    })
                }
            }
        }
        g.validate()?;
        Ok(g)
    }
}

/// Text of the bundled default gains file.
pub fn default_gains_text() -> &'static str {
    include_str!("../../assets/default_gains.cfg")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ControlGains::default().validate().unwrap();
    }

    #[test]
    fn bundled_gains_match_programmatic_defaults() {
        let parsed = ControlGains::parse(default_gains_text()).unwrap();
        let defaults = ControlGains::default();
        assert_eq!(parsed.kp, defaults.kp);
        assert_eq!(parsed.kd, defaults.kd);
        assert_eq!(parsed.ki, defaults.ki);
        assert_eq!(parsed.w2, defaults.w2);
    }

    #[test]
    fn parse_overrides_defaults() {
        let g = ControlGains::parse(
            "# gains\nkp_lin=5.0\nkd_ang=7.5\naero_feedback=axisym\nw2=0.25\nt_min_1=2.0\n",
        )
        .unwrap();
        assert_eq!(g.kp[3], 5.0);
        assert_eq!(g.kp[0], ControlGains::default().kp[0]);
        assert_eq!(g.kd[0], 7.5);
        assert_eq!(g.aero_feedback, AeroSelector::Axisym);
        assert_eq!(g.w2, 0.25);
        assert_eq!(g.t_min_override, vec![(1, 2.0)]);
    }

    #[test]
    fn bad_keys_and_values_rejected() {
        assert!(ControlGains::parse("bogus=1\n").is_err());
        assert!(ControlGains::parse("kp_lin=abc\n").is_err());
        assert!(ControlGains::parse("kp_lin=-1\n").is_err());
        assert!(ControlGains::parse("aero_feedback=magic\n").is_err());
    }
}
