//! Residuals, steppers and closed-form solutions of the three difference
//! schemes: the second-order scheme with its mesh equation, the Winternitz
//! cross-ratio scheme, and the differentiated four-point scheme.

mod derived;
mod exact;
mod ode2;
mod singular;
mod winternitz;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use derived::{derived_max_residuals, derived_scheme_residuals, integral_bracket};
pub use exact::{
    ode2_exact_node, ode2_exact_trajectory, ode2_exact_u_rewritten, winternitz_exact_trajectory, Ode2ExactParams,
    WinternitzExactParams,
};
pub use ode2::{
    ode2_max_residuals, ode2_mesh_residuals, ode2_scheme_residual, ode2_scheme_residual_normalized, ode2_solve,
    ode2_step, ode2_step_from, GuessMode, StepperConfig,
};
pub use singular::{
    scan_singular_consistency, singular_consistency_residual, singular_recursion_step, singular_trajectory,
    SingularBranch, SingularOutcome, SingularScan,
};
pub use winternitz::{winternitz_max_residual, winternitz_residuals, winternitz_solve, winternitz_step};

/// The θ that makes the second-order scheme exact.
pub fn theta_exact(c: f64, eps: f64) -> f64 {
    (1.0 + eps).sqrt() / 2.0 * (c.abs() * eps.sqrt() - (eps * c * c + 4.0).sqrt())
}

/// Winternitz constant linked to `C` through the mesh parameter.
pub fn k_from_c(c: f64, eps: f64) -> f64 {
    (eps * c * c + 4.0) / (eps + 1.0)
}

/// How θ is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    #[default]
    Exact,
    One,
    Value(f64),
}

impl ThetaMode {
    pub fn resolve(self, c: f64, eps: f64) -> f64 {
        match self {
            ThetaMode::Exact => theta_exact(c, eps),
            ThetaMode::One => 1.0,
            ThetaMode::Value(t) => t,
        }
    }

    /// Parses `exact`, `one` or a number.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(ThetaMode::Exact),
            "one" => Ok(ThetaMode::One),
            v => v
                .parse::<f64>()
                .map(ThetaMode::Value)
                .map_err(|_| Error::Parse(format!("theta must be `exact`, `one` or a number, got `{v}`"))),
        }
    }
}
