use serde::{Deserialize, Serialize};

use super::exact::Ode2ExactParams;
use super::winternitz::winternitz_step;
use crate::error::{sqrt_pos, Error, Result};
use crate::newton::{solve2, NewtonOptions};
use crate::stencil::{cross_ratio_mixed, Node, SchemeParams, Stencil3, Trajectory};

/// The three terms of the scheme: `θ·first`, `θ·second` and the `C` term.
fn terms(s: &Stencil3, p: &SchemeParams) -> Result<[f64; 3]> {
    let q_m = (s.x0 - s.u_m) * (s.x_m - s.u0);
    let q_p = (s.x0 - s.u_p) * (s.x_p - s.u0);
    let first = sqrt_pos(s.u_xbar()?, "u_xbar")? / sqrt_pos(q_m, "(x - u_-)(x_- - u)")?;
    let ratio = crate::error::div(s.x_p - s.u0, s.x_m - s.u0, "x_- - u")?;
    let second = ratio * sqrt_pos(s.u_x()?, "u_x")? / sqrt_pos(q_p, "(x - u_+)(x_+ - u)")?;
    let c_term = p.c * (1.0 + p.eps).sqrt() * (s.u0 - s.u_m) / q_m;
    Ok([p.theta * first, p.theta * second, c_term])
}

/// Left-hand side of the second-order scheme on `(x₋, x, x₊; u₋, u, u₊)`.
pub fn ode2_scheme_residual(s: &Stencil3, p: &SchemeParams) -> Result<f64> {
    let [a, b, c] = terms(s, p)?;
    Ok(a - b + c)
}

/// The residual divided by the sum of its term magnitudes (scale free).
pub fn ode2_scheme_residual_normalized(s: &Stencil3, p: &SchemeParams) -> Result<f64> {
    let [a, b, c] = terms(s, p)?;
    let scale = a.abs() + b.abs() + c.abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((a - b + c) / scale)
}

/// Forward and backward mixed cross-ratios minus `ε`.
pub fn ode2_mesh_residuals(s: &Stencil3, eps: f64) -> Result<(f64, f64)> {
    let fwd = cross_ratio_mixed(s.x0, s.u0, s.x_p, s.u_p)?;
    let bwd = cross_ratio_mixed(s.x_m, s.u_m, s.x0, s.u0)?;
    Ok((fwd - eps, bwd - eps))
}

/// Max `|scheme residual|` over interior nodes and max `|mesh residual|` over steps.
pub fn ode2_max_residuals(tr: &Trajectory, p: &SchemeParams) -> Result<(f64, f64)> {
    if tr.len() < 3 {
        return Err(Error::InsufficientNodes { needed: 3, got: tr.len() });
    }
    let mut scheme = 0.0f64;
    let mut mesh = 0.0f64;
    for i in 1..tr.len() - 1 {
        let s = tr.stencil3_at(i)?;
        scheme = scheme.max(ode2_scheme_residual(&s, p)?.abs());
        let (f, b) = ode2_mesh_residuals(&s, p.eps)?;
        mesh = mesh.max(f.abs()).max(b.abs());
    }
    Ok((scheme, mesh))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuessMode {
    #[default]
    Extrapolate,
    /// Start Newton from the closed-form solution through the current node.
    ExactSeed(Ode2ExactParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub guess_mode: GuessMode,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig { newton_tol: 1e-12, newton_max_iter: 50, guess_mode: GuessMode::Extrapolate }
    }
}

impl StepperConfig {
    fn validate(&self) -> Result<()> {
        if self.newton_tol.is_nan() || self.newton_tol <= 0.0 || self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter("newton_tol must be > 0 and newton_max_iter >= 1".into()));
        }
        Ok(())
    }
}

/// Abscissa solving the forward mesh equation for a given `u₊` (it is linear in `x₊`).
fn x_from_mesh(cur: Node, u_p: f64, eps: f64) -> Option<f64> {
    let du = u_p - cur.u;
    let den = du - eps * (cur.x - u_p);
    let x = (cur.x * du - eps * (cur.x - u_p) * cur.u) / den;
    (den != 0.0 && x.is_finite()).then_some(x)
}

/// One step of the scheme from the last two nodes.
pub fn ode2_step(prev: Node, cur: Node, p: &SchemeParams, cfg: &StepperConfig) -> Result<Node> {
    ode2_step_from(&[prev, cur], p, cfg)
}

/// One step from a history of at least two nodes; three or more enable the
/// fractional-linear guess.
pub fn ode2_step_from(history: &[Node], p: &SchemeParams, cfg: &StepperConfig) -> Result<Node> {
    cfg.validate()?;
    if history.len() < 2 {
        return Err(Error::InsufficientNodes { needed: 2, got: history.len() });
    }
    let cur = history[history.len() - 1];
    let prev = history[history.len() - 2];
    if cur.x == cur.u || prev.x == prev.u {
        return Err(Error::DegenerateStencil("node lies on x = u".into()));
    }
    if cur.x == prev.x {
        return Err(Error::ZeroStep(history.len() - 2, history.len() - 1));
    }
    let dir = (cur.x - prev.x).signum();

    let residual = |v: [f64; 2]| -> Result<[f64; 2]> {
        if (v[0] - cur.x) * dir <= 0.0 {
            return Err(Error::Branch("step reverses orientation".into()));
        }
        let s = Stencil3::new([prev.x, cur.x, v[0]], [prev.u, cur.u, v[1]]);
        let mesh = cross_ratio_mixed(cur.x, cur.u, v[0], v[1])? - p.eps;
        Ok([mesh, ode2_scheme_residual_normalized(&s, p)?])
    };

    let mut candidates = Vec::with_capacity(3);
    if let GuessMode::ExactSeed(e) = cfg.guess_mode {
        if let Ok(n) = e.node_after(cur.x) {
            candidates.push((n.x, n.u));
        }
    }
    if history.len() >= 3 {
        let pp = history[history.len() - 3];
        if let Ok(u) = winternitz_step(pp.u, prev.u, cur.u, 4.0) {
            if let Some(x) = x_from_mesh(cur, u, p.eps) {
                candidates.push((x, u));
            }
        }
    }
    let u_lin = 2.0 * cur.u - prev.u;
    if let Some(x) = x_from_mesh(cur, u_lin, p.eps) {
        candidates.push((x, u_lin));
    }

    let opts = NewtonOptions { tol: cfg.newton_tol, max_iter: cfg.newton_max_iter, ..Default::default() };
    let scale = [(cur.x - prev.x).abs(), (cur.u - prev.u).abs().max(f64::MIN_POSITIVE)];
    let mut last_err = Error::Branch("no admissible initial guess".into());
    for (gx, gu) in candidates {
        // pull the guess toward the current node until the radicands are positive
        let mut du = gu - cur.u;
        let mut guess = None;
        let mut g = (gx, gu);
        for _ in 0..60 {
            if residual([g.0, g.1]).is_ok() {
                guess = Some(g);
                break;
            }
            du *= 0.5;
            let u = cur.u + du;
            match x_from_mesh(cur, u, p.eps) {
                Some(x) => g = (x, u),
                None => break,
            }
        }
        let Some(g) = guess else { continue };
        match solve2(residual, [g.0, g.1], scale, &opts) {
            Ok(out) => return Ok(Node { x: out.root[0], u: out.root[1] }),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Extends `seed` (at least two nodes) by `steps` nodes.
pub fn ode2_solve(seed: &Trajectory, steps: usize, p: &SchemeParams, cfg: &StepperConfig) -> Result<Trajectory> {
    if seed.len() < 2 {
        return Err(Error::InsufficientNodes { needed: 2, got: seed.len() });
    }
    let mut pts = seed.points().to_vec();
    for _ in 0..steps {
        let node = pts.len();
        let from = node.saturating_sub(3);
        let next =
            ode2_step_from(&pts[from..], p, cfg).map_err(|e| Error::Construction { node, reason: e.to_string() })?;
        pts.push(next);
    }
    Trajectory::with_vars(seed.n0, pts, seed.vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{ode2_exact_trajectory, theta_exact};

    fn exact() -> (Ode2ExactParams, SchemeParams) {
        let e = Ode2ExactParams::new(1.0, 2.0, 2.0, 0.01, 2.0).unwrap();
        (e, SchemeParams::exact(2.0, 0.01).unwrap())
    }

    #[test]
    fn exact_stencil_has_zero_residual() {
        let (e, p) = exact();
        let tr = ode2_exact_trajectory(&e, 1, 8).unwrap();
        let (s, m) = ode2_max_residuals(&tr, &p).unwrap();
        assert!(s <= 1e-10 && m <= 1e-12, "{s} {m}");
    }

    #[test]
    fn theta_one_is_not_exact() {
        let (e, p) = exact();
        let tr = ode2_exact_trajectory(&e, 1, 4).unwrap();
        let p1 = p.with_theta(1.0).unwrap();
        let r = ode2_scheme_residual(&tr.stencil3_at(1).unwrap(), &p1).unwrap();
        assert!(r.abs() > 1e-3);
    }

    #[test]
    fn arithmetic_x_constant_u_mesh() {
        let s = Stencil3::new([0.0, 1.0, 2.0], [5.0, 5.0, 5.0]);
        let (f, b) = ode2_mesh_residuals(&s, 0.3).unwrap();
        assert_eq!((f, b), (-0.3, -0.3));
        let p = SchemeParams::exact(2.0, 0.3).unwrap();
        assert!(matches!(ode2_scheme_residual(&s, &p), Err(Error::Branch(_))));
    }

    #[test]
    fn step_reproduces_exact_nodes() {
        let (e, p) = exact();
        let tr = ode2_exact_trajectory(&e, 2, 4).unwrap();
        let pts = tr.points();
        let next = ode2_step(pts[0], pts[1], &p, &StepperConfig::default()).unwrap();
        assert!((next.x - pts[2].x).abs() <= 1e-9 * pts[2].x.abs());
        assert!((next.u - pts[2].u).abs() <= 1e-9 * pts[2].u.abs());
    }

    #[test]
    fn exact_seed_guess_mode() {
        let (e, p) = exact();
        let tr = ode2_exact_trajectory(&e, 2, 4).unwrap();
        let cfg = StepperConfig { guess_mode: GuessMode::ExactSeed(e), ..Default::default() };
        let pts = tr.points();
        let next = ode2_step(pts[0], pts[1], &p, &cfg).unwrap();
        assert!((next.x - pts[2].x).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_seed_is_rejected() {
        let (_, p) = exact();
        let r = ode2_step(Node { x: 1.0, u: 0.0 }, Node { x: 2.0, u: 2.0 }, &p, &StepperConfig::default());
        assert!(r.is_err());
    }

    #[test]
    fn solve_matches_closed_form_over_many_steps() {
        let e = Ode2ExactParams::new(1.0, 0.5, -2.0, 0.1, 4.0).unwrap();
        let p = SchemeParams::exact(-2.0, 0.1).unwrap();
        let full = ode2_exact_trajectory(&e, 0, 30).unwrap();
        let seed = Trajectory::new(0, full.points()[..2].to_vec()).unwrap();
        let got = ode2_solve(&seed, 29, &p, &StepperConfig::default()).unwrap();
        for (a, b) in got.points().iter().zip(full.points()) {
            assert!((a.x - b.x).abs() <= 1e-9 * b.x.abs().max(1.0));
            assert!((a.u - b.u).abs() <= 1e-9 * b.u.abs().max(1.0));
        }
        assert!(theta_exact(-2.0, 0.1) < 0.0);
    }
}
