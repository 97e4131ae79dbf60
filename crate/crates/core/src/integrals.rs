//! Discrete first integrals and constancy reports along trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{div, sqrt_pos, Error, Result};
use crate::schemes::integral_bracket;
use crate::stencil::{cross_ratio_mixed, SchemeParams, Stencil3, Trajectory};

fn forward_root(x0: f64, u0: f64, x_p: f64, u_p: f64) -> Result<(f64, f64)> {
    let ux = div(u_p - u0, x_p - x0, "x_+ - x")?;
    let r = sqrt_pos(ux * (x0 - u0) * (x_p - u_p), "u_x (x - u)(x_+ - u_+)")?;
    Ok((ux, r))
}

/// `C/(x₊ − u) − θ(u_x + 1)/√(u_x(x − u)(x₊ − u₊))`, equal to `A` on exact solutions.
pub fn j1(x0: f64, u0: f64, x_p: f64, u_p: f64, p: &SchemeParams) -> Result<f64> {
    let (ux, r) = forward_root(x0, u0, x_p, u_p)?;
    Ok(div(p.c, x_p - u0, "x_+ - u")? - p.theta * (ux + 1.0) / r)
}

/// `Cx₊/(x₊ − u) − θ(x₊u_x + u)/√(u_x(x − u)(x₊ − u₊))`, equal to `B` on exact solutions.
pub fn j2(x0: f64, u0: f64, x_p: f64, u_p: f64, p: &SchemeParams) -> Result<f64> {
    let (ux, r) = forward_root(x0, u0, x_p, u_p)?;
    Ok(div(p.c * x_p, x_p - u0, "x_+ - u")? - p.theta * (x_p * ux + u0) / r)
}

/// The mesh invariant; equal to `ε`.
pub fn j3(x0: f64, u0: f64, x_p: f64, u_p: f64) -> Result<f64> {
    cross_ratio_mixed(x0, u0, x_p, u_p)
}

/// The index-dependent integral, equal to `ρ`. `n` is the label of `(x0, u0)`.
pub fn j4(x0: f64, u0: f64, x_p: f64, u_p: f64, n: i64, c_sign: f64) -> Result<f64> {
    let ux = div(u_p - u0, x_p - x0, "x_+ - x")?;
    let r = sqrt_pos(ux * (u0 - x0) * (u_p - x_p), "u_x (u - x)(u_+ - x_+)")?;
    Ok(div(u0 - x0 + c_sign * r, x_p - x0 - u_p + u0, "x_+ - x - u_+ + u")? - (n as f64 + 1.0))
}

/// Integral form of the scheme solved for `C`, scaled by θ so that it returns `C` itself.
pub fn integral_form_c(s: &Stencil3, p: &SchemeParams) -> Result<f64> {
    Ok(-p.theta * integral_bracket(s)? / (1.0 + p.eps).sqrt())
}

/// The companion with `x` and `u` exchanged; returns `C̃`.
pub fn integral_form_ctilde(s: &Stencil3, p: &SchemeParams) -> Result<f64> {
    integral_form_c(&s.swapped(), p)
}

/// `C̃/C = (√ε − √(1+ε))/(√ε + √(1+ε))`.
pub fn ctilde_ratio(eps: f64) -> f64 {
    let (a, b) = (eps.sqrt(), (1.0 + eps).sqrt());
    (a - b) / (a + b)
}

/// `4/(a₊ − a₋) − 1/(a₊ − a) − 1/(a − a₋)`, constant on each sequence of a K = 4 solution.
pub fn winternitz_integral(a_m: f64, a0: f64, a_p: f64) -> Result<f64> {
    Ok(4.0 * div(1.0, a_p - a_m, "a_+ - a_-")? - div(1.0, a_p - a0, "a_+ - a")? - div(1.0, a0 - a_m, "a - a_-")?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralKind {
    J1,
    J2,
    J3,
    J4,
    /// The integral form solved for `C`.
    C,
    /// Its companion, solved for `C̃`.
    CTilde,
    /// The Winternitz integral of the ordinate sequence.
    WinternitzU,
    /// The Winternitz integral of the abscissa sequence.
    WinternitzX,
}

impl IntegralKind {
    pub const ODE2: [IntegralKind; 6] =
        [IntegralKind::J1, IntegralKind::J2, IntegralKind::J3, IntegralKind::J4, IntegralKind::C, IntegralKind::CTilde];

    pub fn name(self) -> &'static str {
        match self {
            IntegralKind::J1 => "J1",
            IntegralKind::J2 => "J2",
            IntegralKind::J3 => "J3",
            IntegralKind::J4 => "J4",
            IntegralKind::C => "C",
            IntegralKind::CTilde => "C_tilde",
            IntegralKind::WinternitzU => "W_u",
            IntegralKind::WinternitzX => "W_x",
        }
    }

    fn width(self) -> usize {
        match self {
            IntegralKind::J1 | IntegralKind::J2 | IntegralKind::J3 | IntegralKind::J4 => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub name: String,
    pub mean: f64,
    pub max_abs_drift: f64,
    pub values: Vec<f64>,
}

impl IntegralReport {
    pub fn from_values(name: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientNodes { needed: 1, got: 0 });
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max_abs_drift = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        Ok(IntegralReport { name: name.to_string(), mean, max_abs_drift, values })
    }
}

/// Evaluates `which` at every admissible position of `tr`.
///
/// Two-node integrals are evaluated on consecutive pairs, three-node ones on
/// interior triples. At least two values are required, so drift is meaningful.
pub fn constancy_report(tr: &Trajectory, which: IntegralKind, p: &SchemeParams) -> Result<IntegralReport> {
    let needed = which.width() + 1;
    if tr.len() < needed {
        return Err(Error::InsufficientNodes { needed, got: tr.len() });
    }
    let pts = tr.points();
    let mut values = Vec::with_capacity(tr.len());
    match which.width() {
        2 => {
            for (i, w) in pts.windows(2).enumerate() {
                let (a, b) = (w[0], w[1]);
                values.push(match which {
                    IntegralKind::J1 => j1(a.x, a.u, b.x, b.u, p)?,
                    IntegralKind::J2 => j2(a.x, a.u, b.x, b.u, p)?,
                    IntegralKind::J3 => j3(a.x, a.u, b.x, b.u)?,
                    _ => j4(a.x, a.u, b.x, b.u, tr.index(i), p.c_sign())?,
                });
            }
        }
        _ => {
            for i in 1..tr.len() - 1 {
                let s = tr.stencil3_at(i)?;
                values.push(match which {
                    IntegralKind::C => integral_form_c(&s, p)?,
                    IntegralKind::CTilde => integral_form_ctilde(&s, p)?,
                    IntegralKind::WinternitzU => winternitz_integral(s.u_m, s.u0, s.u_p)?,
                    _ => winternitz_integral(s.x_m, s.x0, s.x_p)?,
                });
            }
        }
    }
    IntegralReport::from_values(which.name(), values)
}
