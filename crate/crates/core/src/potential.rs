//! Trilinear constitutive law, its double-well primitive and phase labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope parameter and the thresholds derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub kappa: f64,
    pub u_star: f64,
    pub p_star: f64,
    pub u_star_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Minus,
    Plus,
    Spinodal,
    BoundaryMinus,
    BoundaryPlus,
}

impl PotentialParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::Domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        Ok(Self {
            kappa,
            u_star: 1.0 / (1.0 + kappa),
            p_star: kappa / (1.0 + kappa),
            u_star_star: (1.0 + 2.0 * kappa) / (1.0 + kappa),
        })
    }

    /// Largest absolute slope of Φ', which enters the explicit stability bound.
    pub fn max_slope(&self) -> f64 {
        self.kappa.max(1.0)
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        if u == -self.u_star {
            self.p_star
        } else if u == self.u_star {
            -self.p_star
        } else if u < -self.u_star {
            u + 1.0
        } else if u > self.u_star {
            u - 1.0
        } else {
            -self.kappa * u
        }
    }

    pub fn phi(&self, u: f64) -> f64 {
        let a = u.abs();
        if a >= self.u_star {
            0.5 * (a - 1.0) * (a - 1.0)
        } else {
            0.5 * (self.p_star - self.kappa * a * a)
        }
    }

    /// Second derivative of Φ on the open branches.
    pub fn phi_second(&self, u: f64) -> f64 {
        if u.abs() < self.u_star {
            -self.kappa
        } else {
            1.0
        }
    }

    pub fn classify(&self, u: f64) -> Phase {
        if u < -self.u_star {
            Phase::Minus
        } else if u == -self.u_star {
            Phase::BoundaryMinus
        } else if u < self.u_star {
            Phase::Spinodal
        } else if u == self.u_star {
            Phase::BoundaryPlus
        } else {
            Phase::Plus
        }
    }

    pub fn in_spinodal(&self, u: f64) -> bool {
        u > -self.u_star && u < self.u_star
    }

    /// Stability bound `η/(4·max(1, κ))` for the explicit scheme.
    pub fn dt_max(&self, eta: f64) -> f64 {
        eta / (4.0 * self.max_slope())
    }
}

pub fn derive_params(kappa: f64) -> Result<PotentialParams> {
    PotentialParams::new(kappa)
}

pub fn phi_prime(u: f64, params: &PotentialParams) -> f64 {
    params.phi_prime(u)
}

pub fn phi(u: f64, params: &PotentialParams) -> f64 {
    params.phi(u)
}

pub fn classify(u: f64, params: &PotentialParams) -> Phase {
    params.classify(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_one_and_two() {
        let p = derive_params(1.0).unwrap();
        assert_eq!((p.u_star, p.p_star, p.u_star_star), (0.5, 0.5, 1.5));
        let p = derive_params(2.0).unwrap();
        assert!((p.u_star - 1.0 / 3.0).abs() < 1e-16);
        assert!((p.p_star - 2.0 / 3.0).abs() < 1e-16);
        assert!((p.u_star_star - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_kappa() {
        let p = derive_params(1e6).unwrap();
        assert!(p.u_star < 1e-5 && p.p_star > 1.0 - 1e-5);
    }

    #[test]
    fn rejects_bad_kappa() {
        assert!(derive_params(0.0).is_err());
        assert!(derive_params(-1.0).is_err());
        assert!(derive_params(f64::NAN).is_err());
    }

    #[test]
    fn branch_values() {
        let p = derive_params(1.0).unwrap();
        assert_eq!(p.phi_prime(0.0), 0.0);
        assert_eq!(p.phi_prime(2.0), 1.0);
        assert_eq!(p.phi_prime(0.25), -0.25);
        assert_eq!(p.phi(0.0), 0.25);
        assert_eq!(p.phi(-2.0), 0.5);
        assert_eq!(p.phi(1.0), 0.0);
        assert_eq!(p.phi(-1.0), 0.0);
    }

    #[test]
    fn phases() {
        let p = derive_params(1.0).unwrap();
        assert_eq!(p.classify(-0.75), Phase::Minus);
        assert_eq!(p.classify(0.0), Phase::Spinodal);
        assert_eq!(p.classify(0.5), Phase::BoundaryPlus);
        assert_eq!(p.classify(-0.5), Phase::BoundaryMinus);
        assert_eq!(p.classify(0.75), Phase::Plus);
    }
}
