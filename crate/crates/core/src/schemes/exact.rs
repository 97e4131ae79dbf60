use serde::{Deserialize, Serialize};

use crate::continuous::pole_guard;
use crate::error::{Error, Result};
use crate::stencil::{Node, Trajectory, Variables};

/// Constants `(A, B, C, ε, ρ)` of the closed-form solution of the exact scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ode2ExactParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eps: f64,
    pub rho: f64,
}

impl Ode2ExactParams {
    pub fn new(a: f64, b: f64, c: f64, eps: f64, rho: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidParameter("A must be finite and nonzero".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if (c * c - 4.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("closed form needs C = ±2, got {c}")));
        }
        if !b.is_finite() || !rho.is_finite() {
            return Err(Error::InvalidParameter("B and rho must be finite".into()));
        }
        Ok(Ode2ExactParams { a, b, c, eps, rho })
    }

    fn sgn(&self) -> f64 {
        self.c.signum()
    }

    /// `√(1+ε)/(A√ε)`, the amplitude of the abscissa hyperbola.
    fn amp(&self) -> f64 {
        (1.0 + self.eps).sqrt() / (self.a * self.eps.sqrt())
    }

    /// Node at a real-valued shift `m = ρ + n`.
    fn node_at_shift(&self, m: f64) -> Result<Node> {
        let s = self.sgn();
        pole_guard(m, s, "rho + n")?;
        let x = s * self.amp() / m + (self.b - s) / self.a;
        let d = self.b - self.a * x;
        pole_guard(d, 1.0, "B - A x")?;
        Ok(Node { x, u: 1.0 / (self.a * d) + (self.b - self.c) / self.a })
    }

    /// The closed-form node following the one with abscissa `x`.
    pub fn node_after(&self, x: f64) -> Result<Node> {
        let s = self.sgn();
        let off = x - (self.b - s) / self.a;
        pole_guard(off, x, "x - (B - sgn C)/A")?;
        self.node_at_shift(s * self.amp() / off + 1.0)
    }

    /// θ for which this solution satisfies the scheme: the exact θ, with its
    /// sign flipped when `A < 0`.
    pub fn theta(&self) -> f64 {
        self.a.signum() * super::theta_exact(self.c, self.eps)
    }
}

pub fn ode2_exact_node(p: &Ode2ExactParams, n: i64) -> Result<Node> {
    p.node_at_shift(p.rho + n as f64)
}

/// `uₙ` written directly in terms of `n`.
pub fn ode2_exact_u_rewritten(p: &Ode2ExactParams, n: i64) -> Result<f64> {
    let w = p.eps.sqrt() * (p.rho + n as f64);
    let den = p.a * (w - (1.0 + p.eps).sqrt());
    pole_guard(den, w, "sqrt(eps)(rho + n) - sqrt(1 + eps)")?;
    Ok(p.sgn() * w / den + (p.b - p.c) / p.a)
}

/// Nodes `n_start ..= n_end` of the closed-form solution.
pub fn ode2_exact_trajectory(p: &Ode2ExactParams, n_start: i64, n_end: i64) -> Result<Trajectory> {
    if n_end < n_start {
        return Err(Error::InvalidParameter("empty index range".into()));
    }
    let shifts = [p.rho + n_start as f64, p.rho + n_end as f64];
    if shifts[0] * shifts[1] <= 0.0 {
        return Err(Error::Pole("rho + n changes sign over the index range".into()));
    }
    let pts = (n_start..=n_end).map(|n| ode2_exact_node(p, n)).collect::<Result<Vec<_>>>()?;
    Trajectory::new(n_start, pts)
}

/// Constants `c₁ .. c₆` of the Winternitz general solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinternitzExactParams {
    pub c: [f64; 6],
}

impl WinternitzExactParams {
    pub fn new(c: [f64; 6]) -> Result<Self> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("constants must be finite".into()));
        }
        if c[0] == 0.0 || c[3] == 0.0 {
            return Err(Error::DegenerateStencil(
                "c1 = 0 or c4 = 0 gives a constant sequence with no cross-ratio".into(),
            ));
        }
        Ok(WinternitzExactParams { c })
    }
}

/// Nodes `(tₙ, yₙ)` for `n_start ..= n_end`, stored with `t` as abscissa.
pub fn winternitz_exact_trajectory(p: &WinternitzExactParams, n_start: i64, n_end: i64) -> Result<Trajectory> {
    if n_end < n_start {
        return Err(Error::InvalidParameter("empty index range".into()));
    }
    let [c1, c2, c3, c4, c5, c6] = p.c;
    let mut pts = Vec::new();
    for n in n_start..=n_end {
        let n = n as f64;
        let (dy, dt) = (c1 * n + c2, c4 * n + c5);
        pole_guard(dy, 1.0, "c1 n + c2")?;
        pole_guard(dt, 1.0, "c4 n + c5")?;
        pts.push(Node { x: 1.0 / dt + c6, u: 1.0 / dy + c3 });
    }
    let (s, e) = (n_start as f64, n_end as f64);
    if (c1 * s + c2) * (c1 * e + c2) < 0.0 || (c4 * s + c5) * (c4 * e + c5) < 0.0 {
        return Err(Error::Pole("a denominator changes sign over the index range".into()));
    }
    Trajectory::with_vars(n_start, pts, Variables::TY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::winternitz_max_residual;

    #[test]
    fn rewritten_form_agrees() {
        let p = Ode2ExactParams::new(1.0, 2.0, 2.0, 0.01, 1.0).unwrap();
        let n_pole = (1.01f64 / 0.01).sqrt();
        for n in 1..=10 {
            let u = ode2_exact_node(&p, n).unwrap().u;
            let v = ode2_exact_u_rewritten(&p, n).unwrap();
            // rounding is amplified by the distance of ρ + n to the pole of u
            let m = p.rho + n as f64;
            let cond = 1.0 + m / (m - n_pole).abs();
            assert!((u - v).abs() <= 1e-14 * cond * u.abs().max(1.0), "{n}: {u} {v}");
        }
    }

    #[test]
    fn node_after_walks_the_index() {
        let p = Ode2ExactParams::new(1.5, -0.3, -2.0, 0.05, 0.7).unwrap();
        let a = ode2_exact_node(&p, 3).unwrap();
        let b = ode2_exact_node(&p, 4).unwrap();
        let c = p.node_after(a.x).unwrap();
        assert!((b.x - c.x).abs() < 1e-12 && (b.u - c.u).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_constants_and_poles() {
        assert!(Ode2ExactParams::new(1.0, 2.0, 1.0, 0.1, 1.0).is_err());
        assert!(Ode2ExactParams::new(0.0, 2.0, 2.0, 0.1, 1.0).is_err());
        let p = Ode2ExactParams::new(1.0, 2.0, 2.0, 0.1, -3.0).unwrap();
        assert!(matches!(ode2_exact_trajectory(&p, 0, 5), Err(Error::Pole(_))));
    }

    #[test]
    fn winternitz_closed_form() {
        let p = WinternitzExactParams::new([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let tr = winternitz_exact_trajectory(&p, 1, 8).unwrap();
        assert_eq!(tr.vars, Variables::TY);
        assert!(winternitz_max_residual(&tr, 4.0).unwrap() <= 1e-12);
        assert!(WinternitzExactParams::new([0.0, 1.0, 0.0, 1.0, 0.0, 0.0]).is_err());
        let p = WinternitzExactParams::new([1.0, -3.0, 0.0, 1.0, 0.5, 0.0]).unwrap();
        assert!(winternitz_exact_trajectory(&p, 0, 6).is_err());
    }
}
