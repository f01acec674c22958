//! Preset macroscopic data for κ = 1 (`p* = 1/2`).

use serde::{Deserialize, Serialize};

use crate::profile::Profile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub profile: Profile,
    pub xi_ini: f64,
    pub tau_fin: f64,
}

/// Hot plateau left of `Ξ_ini = 0.3` with `P(Ξ_ini) = p*`: the interface advances
/// and gets pinned once the reservoir is spent.
pub fn pinning() -> Scenario {
    Scenario {
        name: "pinning".into(),
        profile: Profile::Knots { points: vec![[0.0, 1.4], [0.25, 1.4], [0.3, 0.5], [0.45, 0.0], [1.0, -0.1]] },
        xi_ini: 0.3,
        tau_fin: 0.1,
    }
}

/// Interface at rest with `P(Ξ_ini) = 0.2` until heat from the left wall lifts the
/// trace to `p*`.
pub fn depinning() -> Scenario {
    Scenario {
        name: "depinning".into(),
        profile: Profile::Knots { points: vec![[0.0, 2.0], [0.15, 2.0], [0.35, 0.2], [1.0, 0.2]] },
        xi_ini: 0.5,
        tau_fin: 0.1,
    }
}

/// `P ≡ 0`: nothing moves.
pub fn stationary() -> Scenario {
    Scenario { name: "stationary".into(), profile: Profile::Constant { value: 0.0 }, xi_ini: 0.3, tau_fin: 0.01 }
}

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "pinning" => Some(pinning()),
        "depinning" => Some(depinning()),
        "stationary" => Some(stationary()),
        _ => None,
    }
}
