//! Macroscopic initial profiles `P_ini(ξ)` shared by the lattice sampler and the
//! Stefan solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Knots` joins consecutive points by half cosine waves, giving a C¹ profile
/// with zero slope at every knot (and hence at both walls).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Knots { points: Vec<[f64; 2]> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant { value } if value.is_finite() => Ok(()),
            Profile::Constant { .. } => Err(Error::Config("non-finite constant profile".into())),
            Profile::Knots { points } => {
                if points.is_empty() {
                    return Err(Error::Config("profile needs at least one knot".into()));
                }
                if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(Error::Config("non-finite knot".into()));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config("knots must be strictly increasing in xi".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Knots { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if xi <= first[0] {
                    return first[1];
                }
                if xi >= last[0] {
                    return last[1];
                }
                let i = points.partition_point(|p| p[0] <= xi) - 1;
                let (a, b) = (points[i], points[i + 1]);
                let s = (xi - a[0]) / (b[0] - a[0]);
                a[1] + (b[1] - a[1]) * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
            }
        }
    }
}
