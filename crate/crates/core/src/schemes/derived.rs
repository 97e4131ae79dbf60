use crate::error::{div, sqrt_pos, Error, Result};
use crate::stencil::{Stencil3, Stencil4, Trajectory};

/// The bracket whose constancy along a trajectory the four-point scheme expresses:
///
/// `(x − u₋)(x₋ − u)/(u − u₋) · (√u_x̄/√((x − u₋)(x₋ − u)) − (x₊ − u)/(x₋ − u) · √u_x/√((x − u₊)(x₊ − u)))`.
///
/// The same function on the swapped stencil gives the companion bracket in
/// which `x` and `u` exchange roles.
pub fn integral_bracket(s: &Stencil3) -> Result<f64> {
    let q_m = (s.x0 - s.u_m) * (s.x_m - s.u0);
    let q_p = (s.x0 - s.u_p) * (s.x_p - s.u0);
    let first = sqrt_pos(s.u_xbar()?, "u_xbar")? / sqrt_pos(q_m, "(x - u_-)(x_- - u)")?;
    let ratio = div(s.x_p - s.u0, s.x_m - s.u0, "x_- - u")?;
    let second = ratio * sqrt_pos(s.u_x()?, "u_x")? / sqrt_pos(q_p, "(x - u_+)(x_+ - u)")?;
    Ok(div(q_m, s.u0 - s.u_m, "u - u_-")? * (first - second))
}

/// The two left-hand sides of the four-point scheme: the change of the bracket
/// and of its swapped companion between the head and tail stencils.
pub fn derived_scheme_residuals(s: &Stencil4) -> Result<(f64, f64)> {
    if !s.is_monotone() {
        return Err(Error::DegenerateStencil("abscissae are not monotone".into()));
    }
    let sw = s.swapped();
    if !sw.is_monotone() {
        return Err(Error::DegenerateStencil("ordinates are not monotone".into()));
    }
    let r1 = integral_bracket(&s.tail())? - integral_bracket(&s.head())?;
    let r2 = integral_bracket(&sw.tail())? - integral_bracket(&sw.head())?;
    Ok((r1, r2))
}

/// Largest `|residual|` of either equation over all four-point stencils.
pub fn derived_max_residuals(tr: &Trajectory) -> Result<(f64, f64)> {
    if tr.len() < 4 {
        return Err(Error::InsufficientNodes { needed: 4, got: tr.len() });
    }
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for i in tr.stencil_centres() {
        let (r1, r2) = derived_scheme_residuals(&tr.stencil_at(i)?)?;
        a = a.max(r1.abs());
        b = b.max(r2.abs());
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{ode2_exact_trajectory, Ode2ExactParams};

    #[test]
    fn vanishes_on_closed_form() {
        for &c in &[2.0, -2.0] {
            let p = Ode2ExactParams::new(1.0, 2.0, c, 0.01, 15.0).unwrap();
            let tr = ode2_exact_trajectory(&p, 0, 10).unwrap();
            let (a, b) = derived_max_residuals(&tr).unwrap();
            assert!(a <= 1e-9 && b <= 1e-9, "{c}: {a} {b}");
        }
    }

    #[test]
    fn rejects_non_monotone_stencil() {
        let s = Stencil4::new([0.0, 1.0, 0.5, 2.0], [0.0, 1.0, 2.0, 3.0]);
        assert!(matches!(derived_scheme_residuals(&s), Err(Error::DegenerateStencil(_))));
    }
}
