use serde::{Deserialize, Serialize};

use super::{k_from_c, ode2_scheme_residual, ThetaMode};
use crate::error::{Error, Result};
use crate::stencil::{Node, SchemeParams, Stencil3, Trajectory};

/// Sign in front of the square root in the line recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularBranch {
    Plus,
    Minus,
}

impl SingularBranch {
    fn sign(self) -> f64 {
        match self {
            SingularBranch::Plus => 1.0,
            SingularBranch::Minus => -1.0,
        }
    }
}

/// Next abscissa on the line `u = a·x + b` for which the forward mixed
/// cross-ratio equals `ε`. The map is affine in `x`.
pub fn singular_recursion_step(x: f64, a: f64, b: f64, eps: f64, branch: SingularBranch) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::DegenerateStencil("slope a = 0".into()));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let rad = a * a + 2.0 * a * (eps + 2.0) / eps + 1.0;
    if rad < 0.0 {
        return Err(Error::Branch(format!("recursion radicand {rad:e} is negative")));
    }
    let r = branch.sign() * eps * rad.sqrt();
    let num = (eps * (a * a + 1.0) + 2.0 * a) * x + eps * b * (a - 1.0) + r * ((a - 1.0) * x + b);
    Ok(num / (2.0 * a * (eps + 1.0)))
}

/// `steps + 1` nodes of the line solution starting at `x0`.
pub fn singular_trajectory(
    a: f64,
    b: f64,
    eps: f64,
    branch: SingularBranch,
    x0: f64,
    steps: usize,
) -> Result<Trajectory> {
    let mut xs = vec![x0];
    for _ in 0..steps {
        let x = *xs.last().expect("non-empty");
        xs.push(singular_recursion_step(x, a, b, eps, branch)?);
    }
    Trajectory::new(0, xs.into_iter().map(|x| Node { x, u: a * x + b }).collect())
}

/// Residual of the second-order scheme on the first three nodes of the line
/// solution `u = a·x + b` started at `x = 0`.
pub fn singular_consistency_residual(
    a: f64,
    c: f64,
    eps: f64,
    theta: ThetaMode,
    b: f64,
    branch: SingularBranch,
) -> Result<f64> {
    let tr = singular_trajectory(a, b, eps, branch, 0.0, 2)?;
    let p = SchemeParams::new(c, eps, theta.resolve(c, eps), k_from_c(c, eps))?;
    let s: Stencil3 = tr.stencil3_at(1)?;
    ode2_scheme_residual(&s, &p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularOutcome {
    /// A sign change was bracketed and bisected.
    Root {
        eps: f64,
        residual: f64,
    },
    /// Every sample lies within the noise floor: the line solves the scheme for all sampled ε.
    Identity {
        max_abs: f64,
    },
    NoRoot {
        min_abs: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularScan {
    pub samples: Vec<(f64, Option<f64>)>,
    pub outcome: SingularOutcome,
}

/// Samples the consistency residual on a uniform ε grid and bisects the first
/// sign change. Values within `floor` of zero never count as a sign.
#[allow(clippy::too_many_arguments)]
pub fn scan_singular_consistency(
    a: f64,
    c: f64,
    theta: ThetaMode,
    b: f64,
    branch: SingularBranch,
    eps_range: (f64, f64),
    n_samples: usize,
    floor: f64,
) -> Result<SingularScan> {
    let (lo, hi) = eps_range;
    if !(lo > 0.0 && hi > lo) || n_samples < 2 {
        return Err(Error::InvalidParameter("need 0 < eps_lo < eps_hi and at least two samples".into()));
    }
    let f = |e: f64| singular_consistency_residual(a, c, e, theta, b, branch);
    let samples: Vec<(f64, Option<f64>)> = (0..n_samples)
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
            (e, f(e).ok())
        })
        .collect();
    let signed = |v: Option<f64>| v.filter(|v| v.abs() > floor).map(f64::signum);

    for w in samples.windows(2) {
        let (Some(s0), Some(s1)) = (signed(w[0].1), signed(w[1].1)) else { continue };
        if s0 == s1 {
            continue;
        }
        let (mut l, mut h) = (w[0].0, w[1].0);
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if h - l <= 1e-15 * h {
                break;
            }
            if f(m)?.signum() == s0 {
                l = m;
            } else {
                h = m;
            }
        }
        let eps = 0.5 * (l + h);
        return Ok(SingularScan { outcome: SingularOutcome::Root { eps, residual: f(eps)? }, samples });
    }

    let finite: Vec<f64> = samples.iter().filter_map(|s| s.1).map(f64::abs).collect();
    if finite.is_empty() {
        return Err(Error::Branch("consistency residual undefined on the whole grid".into()));
    }
    let max_abs = finite.iter().cloned().fold(0.0, f64::max);
    let outcome = if max_abs <= floor {
        SingularOutcome::Identity { max_abs }
    } else {
        SingularOutcome::NoRoot { min_abs: finite.iter().cloned().fold(f64::INFINITY, f64::min) }
    };
    Ok(SingularScan { samples, outcome })
}
