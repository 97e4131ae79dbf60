//! Continuous-side objects: the Schwarz equation `S(y) = 0`, the second-order
//! ODE `y'' + 2(y' + C₀y'^{3/2} + y'²)/(x − y) = 0`, their closed-form
//! solutions and first integrals.
//!
//! Jets are evaluated from analytic derivatives, never by numerical
//! differentiation. Every operation involving `y'^{3/2}` or `√y'` requires
//! `y' > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value and first three derivatives of `y(x)` at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet3 {
    pub x: f64,
    pub y: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl Jet3 {
    pub fn new(x: f64, y: f64, y1: f64, y2: f64, y3: f64) -> Self {
        Jet3 { x, y, y1, y2, y3 }
    }

    /// A second-order jet (`y3` set to zero).
    pub fn second_order(x: f64, y: f64, y1: f64, y2: f64) -> Self {
        Jet3 { x, y, y1, y2, y3: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.y1, self.y2, self.y3].iter().all(|v| v.is_finite())
    }
}

/// `y = 1/(c1·x + c2) + c3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzSolutionParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl SchwarzSolutionParams {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        if c1 == 0.0 && c2 == 0.0 {
            return Err(Error::InvalidParameter("(c1, c2) must not both vanish".into()));
        }
        Ok(SchwarzSolutionParams { c1, c2, c3 })
    }
}

/// `y = 1/(a0(b0 − a0·x)) + (b0 − c0)/a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ode2SolutionParams {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
}

impl Ode2SolutionParams {
    pub fn new(a0: f64, b0: f64, c0: f64) -> Result<Self> {
        if a0 == 0.0 {
            return Err(Error::InvalidParameter("a0 must be nonzero".into()));
        }
        Ok(Ode2SolutionParams { a0, b0, c0 })
    }
}

/// Jet of an ODE2 general solution together with the constant of the ODE it
/// actually satisfies.
///
/// With the real branch `y'^{3/2} = |y'|^{3/2}` the closed form solves the ODE
/// with constant `−c0` where `b0 − a0·x > 0` (the principal side), and with
/// `c0` beyond the pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ode2Jet {
    pub jet: Jet3,
    pub effective_c0: f64,
    pub principal: bool,
}

pub(crate) fn pole_guard(den: f64, num: f64, what: &str) -> Result<()> {
    if den.abs() < 1e-13 * (1.0 + num.abs()) {
        Err(Error::Pole(format!("{what} = {den:e}")))
    } else {
        Ok(())
    }
}

fn positive_slope(y1: f64) -> Result<()> {
    if y1 > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("y' = {y1:e} must be positive")))
    }
}

/// `y'''/y' − 3/2 (y''/y')²`.
pub fn schwarzian(j: &Jet3) -> Result<f64> {
    if j.y1 == 0.0 {
        return Err(Error::Domain("Schwarzian undefined for y' = 0".into()));
    }
    let r = j.y2 / j.y1;
    Ok(j.y3 / j.y1 - 1.5 * r * r)
}

pub fn schwarz_solution(p: &SchwarzSolutionParams, x: f64) -> Result<Jet3> {
    let d = p.c1 * x + p.c2;
    pole_guard(d, 1.0, "c1*x + c2")?;
    let inv = 1.0 / d;
    Ok(Jet3 {
        x,
        y: inv + p.c3,
        y1: -p.c1 * inv * inv,
        y2: 2.0 * p.c1 * p.c1 * inv * inv * inv,
        y3: -6.0 * p.c1 * p.c1 * p.c1 * inv * inv * inv * inv,
    })
}

/// Left-hand side of the second-order ODE; only `x, y, y1, y2` of the jet are used.
pub fn ode2_residual(j: &Jet3, c0: f64) -> Result<f64> {
    if j.y1 < 0.0 {
        return Err(Error::Domain(format!("y' = {:e} < 0 has no real 3/2 power", j.y1)));
    }
    let dxy = j.x - j.y;
    if dxy == 0.0 {
        return Err(Error::Domain("x = y is singular for the ODE".into()));
    }
    let s = j.y1.sqrt();
    Ok(j.y2 + 2.0 * (j.y1 + c0 * j.y1 * s + j.y1 * j.y1) / dxy)
}

pub fn ode2_solution(p: &Ode2SolutionParams, x: f64) -> Result<Ode2Jet> {
    let d = p.b0 - p.a0 * x;
    pole_guard(d, p.a0 * x, "b0 - a0*x")?;
    let inv = 1.0 / d;
    let jet = Jet3 {
        x,
        y: inv / p.a0 + (p.b0 - p.c0) / p.a0,
        y1: inv * inv,
        y2: 2.0 * p.a0 * inv * inv * inv,
        y3: 6.0 * p.a0 * p.a0 * inv * inv * inv * inv,
    };
    let principal = d > 0.0;
    Ok(Ode2Jet { jet, effective_c0: if principal { -p.c0 } else { p.c0 }, principal })
}

/// `a0(a0 + c0√a0 + 1)`; its zeros are the admissible slopes of the singular solution `y = a0·x + b0`.
pub fn singular_slope_residual(a0: f64, c0: f64) -> Result<f64> {
    if a0 < 0.0 {
        return Err(Error::Domain(format!("a0 = {a0} < 0")));
    }
    Ok(a0 * (a0 + c0 * a0.sqrt() + 1.0))
}

/// The ODE2 solved for its constant, `((y − x)y'' − 2y'(1 + y'))/(2y'^{3/2})`.
/// Constant along every solution of the Schwarz equation with `y' > 0`.
pub fn ode2_first_integral(j: &Jet3) -> Result<f64> {
    positive_slope(j.y1)?;
    let s = j.y1.sqrt();
    Ok(((j.y - j.x) * j.y2 - 2.0 * j.y1 * (1.0 + j.y1)) / (2.0 * j.y1 * s))
}

/// `|d/dx F − (y − x)/(2√y')·S(y)|` with `F` the ODE2 first integral and the
/// derivative taken by central differences of step `h`.
pub fn multiplier_identity_check(p: &SchwarzSolutionParams, x: f64, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidParameter(format!("step h = {h} must be positive")));
    }
    let jl = schwarz_solution(p, x - h)?;
    let j0 = schwarz_solution(p, x)?;
    let jr = schwarz_solution(p, x + h)?;
    let dfi = (ode2_first_integral(&jr)? - ode2_first_integral(&jl)?) / (2.0 * h);
    positive_slope(j0.y1)?;
    let mult = (j0.y - j0.x) / (2.0 * j0.y1.sqrt());
    Ok((dfi - mult * schwarzian(&j0)?).abs())
}

/// `(y''/y'^{3/2}, y − 2y'²/y'')`, both first integrals of the Schwarz equation.
pub fn continuous_backlund_invariants(j: &Jet3) -> Result<(f64, f64)> {
    positive_slope(j.y1)?;
    if j.y2 == 0.0 {
        return Err(Error::Domain("y'' = 0: second invariant has a pole".into()));
    }
    let i1 = j.y2 / (j.y1 * j.y1.sqrt());
    let i2 = j.y - 2.0 * j.y1 * j.y1 / j.y2;
    Ok((i1, i2))
}

/// `u − 2u'²/u'' + α·y''/y'^{3/2}`.
pub fn continuous_backlund_residual(ju: &Jet3, jy: &Jet3, alpha: f64) -> Result<f64> {
    let (_, i2u) = continuous_backlund_invariants(ju)?;
    let (i1y, _) = continuous_backlund_invariants(jy)?;
    Ok(i2u + alpha * i1y)
}
