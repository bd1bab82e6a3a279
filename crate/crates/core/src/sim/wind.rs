//! Piecewise-linear ambient wind profiles.

use nalgebra::Vector3;

use crate::{Error, Result};

/// Time-tagged wind velocity knots, interpolated linearly and extrapolated
/// as constants beyond the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct WindProfile {
    knots: Vec<(f64, Vector3<f64>)>,
}

impl WindProfile {
    pub fn new(knots: Vec<(f64, Vector3<f64>)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Validation("wind profile needs at least one knot".into()));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Validation(format!(
                    "wind knots must be strictly increasing in time ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(WindProfile { knots })
    }

    pub fn calm() -> Self {
        WindProfile {
            knots: vec![(0.0, Vector3::zeros())],
        }
    }

    pub fn knots(&self) -> &[(f64, Vector3<f64>)] {
        &self.knots
    }

    /// Wind velocity at time `t`.
    pub fn at(&self, t: f64) -> Vector3<f64> {
        let first = self.knots.first().expect("nonempty");
        if t <= first.0 {
            return first.1;
        }
        let last = self.knots.last().expect("nonempty");
        if t >= last.0 {
            return last.1;
        }
        let idx = self.knots.partition_point(|k| k.0 <= t);
        let (t0, v0) = self.knots[idx - 1];
        let (t1, v1) = self.knots[idx];
        let alpha = (t - t0) / (t1 - t0);
        v0 + alpha * (v1 - v0)
    }

    /// Parse the scenario grammar `t:vx,vy,vz;t:vx,vy,vz;...`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (t_str, v_str) = part.split_once(':').ok_or_else(|| {
                Error::Validation(format!("wind knot '{part}' must look like t:vx,vy,vz"))
            })?;
            let t: f64 = t_str
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("invalid wind knot time '{t_str}'")))?;
            let comps: Vec<&str> = v_str.split(',').collect();
            if comps.len() != 3 {
                return Err(Error::Validation(format!(
                    "wind knot '{part}' needs three velocity components"
                )));
            }
            let mut v = Vector3::zeros();
            for (i, c) in comps.iter().enumerate() {
                v[i] = c
                    .trim()
                    .parse()
                    .map_err(|_| Error::Validation(format!("invalid wind component '{c}'")))?;
            }
            knots.push((t, v));
        }
        WindProfile::new(knots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn profile() -> WindProfile {
        WindProfile::new(vec![
            (1.0, Vector3::new(0.0, 0.0, 0.0)),
            (3.0, Vector3::new(4.0, -2.0, 0.0)),
            (5.0, Vector3::new(4.0, 2.0, 1.0)),
        ])
        .unwrap()
    }

    #[test]
    fn constant_extrapolation_outside_range() {
        let p = profile();
        assert_eq!(p.at(0.0), Vector3::zeros());
        assert_eq!(p.at(99.0), Vector3::new(4.0, 2.0, 1.0));
    }

    #[test]
    fn midpoint_is_the_mean() {
        let p = profile();
        assert_relative_eq!(p.at(2.0), Vector3::new(2.0, -1.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(p.at(4.0), Vector3::new(4.0, 0.0, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn knots_are_hit_exactly() {
        let p = profile();
        assert_eq!(p.at(3.0), Vector3::new(4.0, -2.0, 0.0));
        assert_eq!(p.at(1.0), Vector3::zeros());
        assert_eq!(p.at(5.0), Vector3::new(4.0, 2.0, 1.0));
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let p = WindProfile::parse("0:0,0,0; 5:5,0,0; 30:5,0,0").unwrap();
        assert_eq!(p.knots().len(), 3);
        assert_eq!(p.at(5.0), Vector3::new(5.0, 0.0, 0.0));
        assert!(WindProfile::parse("5:1,2").is_err());
        assert!(WindProfile::parse("x:1,2,3").is_err());
        assert!(WindProfile::parse("5:1,2,3;4:0,0,0").is_err());
        assert!(WindProfile::parse("").is_err());
    }
}
