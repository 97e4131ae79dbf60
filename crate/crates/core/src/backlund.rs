//! Discrete Bäcklund transformation between the four-point scheme in `(x, u)`
//! and the Winternitz scheme in `(t, y)`.
//!
//! Both residuals add a bracket that is constant on `(x, u)` solutions to a
//! multiple of a Winternitz integral that is constant on `(t, y)` solutions,
//! so on a compatible pair they vanish at every index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::winternitz_integral;
use crate::newton::{solve2, NewtonOptions};
use crate::schemes::{derived_max_residuals, integral_bracket, winternitz_max_residual, winternitz_step};
use crate::stencil::{cross_ratio_mixed, Node, SchemeParams, Stencil3, Trajectory, Variables};

/// Bracket of `(x, u)` plus `α₁` times the Winternitz integral of `y`.
pub fn b1_residual(s: &Stencil3, y: [f64; 3], alpha1: f64) -> Result<f64> {
    Ok(integral_bracket(s)? + alpha1 * winternitz_integral(y[0], y[1], y[2])?)
}

/// Swapped bracket of `(x, u)` plus `α₂` times the Winternitz integral of `t`.
pub fn b2_residual(s: &Stencil3, t: [f64; 3], alpha2: f64) -> Result<f64> {
    Ok(integral_bracket(&s.swapped())? + alpha2 * winternitz_integral(t[0], t[1], t[2])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaPair {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl AlphaPair {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        if alpha1 == 0.0 || alpha2 == 0.0 || !alpha1.is_finite() || !alpha2.is_finite() {
            return Err(Error::InvalidParameter("alphas must be finite and nonzero".into()));
        }
        Ok(AlphaPair { alpha1, alpha2 })
    }

    /// The constants `C`, `C̃` of the `(x, u)` integrals forced by these alphas
    /// and the Winternitz integral values `w_y`, `w_t`.
    pub fn implied_constants(&self, w_y: f64, w_t: f64, p: &SchemeParams) -> (f64, f64) {
        let f = p.theta / (1.0 + p.eps).sqrt();
        (f * self.alpha1 * w_y, f * self.alpha2 * w_t)
    }
}

/// An `(x, u)` trajectory and a `(t, y)` trajectory on a shared index range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTrajectories {
    pub xu: Trajectory,
    pub ty: Trajectory,
}

impl PairedTrajectories {
    pub fn new(xu: Trajectory, ty: Trajectory) -> Result<Self> {
        let p = PairedTrajectories { xu, ty };
        let (lo, hi) = p.overlap();
        if hi - lo + 1 < 4 {
            return Err(Error::InsufficientNodes { needed: 4, got: (hi - lo + 1).max(0) as usize });
        }
        Ok(p)
    }

    /// Inclusive range of shared labels.
    pub fn overlap(&self) -> (i64, i64) {
        let lo = self.xu.n0.max(self.ty.n0);
        let hi = (self.xu.n0 + self.xu.len() as i64).min(self.ty.n0 + self.ty.len() as i64) - 1;
        (lo, hi)
    }

    /// Labels usable as stencil centres on both sides.
    pub fn centres(&self) -> std::ops::RangeInclusive<i64> {
        let (lo, hi) = self.overlap();
        lo + 1..=hi - 1
    }

    fn at(&self, n: i64) -> Result<(Stencil3, [f64; 3], [f64; 3])> {
        let s = self.xu.stencil3_at((n - self.xu.n0) as usize)?;
        let w = self.ty.stencil3_at((n - self.ty.n0) as usize)?;
        Ok((s, [w.u_m, w.u0, w.u_p], [w.x_m, w.x0, w.x_p]))
    }

    /// Max `|B₁|` and `|B₂|` over all shared centres.
    pub fn max_residuals(&self, alphas: &AlphaPair) -> Result<(f64, f64)> {
        let (mut r1, mut r2) = (0.0f64, 0.0f64);
        for n in self.centres() {
            let (s, y, t) = self.at(n)?;
            r1 = r1.max(b1_residual(&s, y, alphas.alpha1)?.abs());
            r2 = r2.max(b2_residual(&s, t, alphas.alpha2)?.abs());
        }
        Ok((r1, r2))
    }
}

fn nonzero_integral(w: f64, a_m: f64, a_p: f64, what: &'static str) -> Result<f64> {
    if w.abs() <= 1e-12 * 4.0 / (a_p - a_m).abs() {
        Err(Error::ZeroIntegral(what))
    } else {
        Ok(w)
    }
}

/// Alphas making both residuals vanish at centre `n` (the first shared centre if `None`).
pub fn fit_alphas(p: &PairedTrajectories, n: Option<i64>) -> Result<AlphaPair> {
    let n = n.unwrap_or(*p.centres().start());
    if !p.centres().contains(&n) {
        return Err(Error::InvalidParameter(format!("label {n} is not a shared stencil centre")));
    }
    let (s, y, t) = p.at(n)?;
    let wy = nonzero_integral(winternitz_integral(y[0], y[1], y[2])?, y[0], y[2], "y")?;
    let wt = nonzero_integral(winternitz_integral(t[0], t[1], t[2])?, t[0], t[2], "t")?;
    AlphaPair::new(-integral_bracket(&s)? / wy, -integral_bracket(&s.swapped())? / wt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `(x, u)` built from `(t, y)`; the four-point scheme is checked.
    Forward,
    /// `(t, y)` built from `(x, u)`; the Winternitz scheme is checked.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub direction: Direction,
    pub alphas: AlphaPair,
    pub max_residual: f64,
    pub verdict: Verdict,
    pub tol: f64,
}

impl CompatibilityReport {
    fn new(direction: Direction, alphas: AlphaPair, max_residual: f64, tol: f64) -> Self {
        let verdict = if max_residual <= tol { Verdict::Compatible } else { Verdict::Incompatible };
        CompatibilityReport { direction, alphas, max_residual, verdict, tol }
    }
}

/// Builds `(x, u)` from a `(t, y)` solution and checks the result.
///
/// At a fixed centre both residuals depend on the new node only through one
/// combination, so they cannot be solved jointly for it. Each node is instead
/// fixed by `B₁ = 0` together with the mesh equation (mixed cross-ratio `ε`),
/// starting from `seed` (at least three nodes whose labels lie in `ty`). The
/// report carries the largest of `|B₂|` and both four-point residuals over the
/// whole result, seed included.
pub fn compatibility_forward(
    ty: &Trajectory,
    alphas: &AlphaPair,
    eps: f64,
    seed: &Trajectory,
    tol: f64,
) -> Result<(CompatibilityReport, Trajectory)> {
    if seed.len() < 3 {
        return Err(Error::InsufficientNodes { needed: 3, got: seed.len() });
    }
    let off = seed.n0 - ty.n0;
    if off < 0 || off as usize + seed.len() > ty.len() {
        return Err(Error::InvalidParameter("seed labels must lie inside the (t, y) range".into()));
    }
    let mut pts = seed.points().to_vec();
    let opts = NewtonOptions::default();
    while (off as usize) + pts.len() < ty.len() {
        let k = pts.len();
        let w = ty.stencil3_at(off as usize + k - 1)?;
        let a1 = alphas.alpha1 * winternitz_integral(w.u_m, w.u0, w.u_p)?;
        let (pp, prev, cur) = (pts[k - 3], pts[k - 2], pts[k - 1]);
        let dir = (cur.x - prev.x).signum();
        let f = |v: [f64; 2]| -> Result<[f64; 2]> {
            if (v[0] - cur.x) * dir <= 0.0 {
                return Err(Error::Branch("step reverses orientation".into()));
            }
            let s = Stencil3::new([prev.x, cur.x, v[0]], [prev.u, cur.u, v[1]]);
            let b1 = integral_bracket(&s)?;
            Ok([cross_ratio_mixed(cur.x, cur.u, v[0], v[1])? - eps, (b1 + a1) / (b1.abs() + a1.abs())])
        };
        let gx = winternitz_step(pp.x, prev.x, cur.x, 4.0)?;
        let gu = winternitz_step(pp.u, prev.u, cur.u, 4.0)?;
        let scale = [(cur.x - prev.x).abs(), (cur.u - prev.u).abs().max(f64::MIN_POSITIVE)];
        let out =
            solve2(f, [gx, gu], scale, &opts).map_err(|e| Error::Construction { node: k, reason: e.to_string() })?;
        pts.push(Node { x: out.root[0], u: out.root[1] });
    }
    let xu = Trajectory::new(seed.n0, pts)?;
    let (r1, r2) = derived_max_residuals(&xu)?;
    let pair = PairedTrajectories::new(xu, ty.clone())?;
    let (_, b2) = pair.max_residuals(alphas)?;
    let report = CompatibilityReport::new(Direction::Forward, *alphas, r1.max(r2).max(b2), tol);
    Ok((report, pair.xu))
}

/// Root of `W(a₋, a, c) = w` for `c`, continuing the monotone direction with
/// the smallest step.
fn solve_winternitz_integral(a_m: f64, a0: f64, w: f64) -> Result<f64> {
    let d = a0 - a_m;
    let wd = w * d;
    // with p = c − a₋: (1 + wd)p² − d(4 + wd)p + 4d² = 0
    let (qa, qb, qc) = (1.0 + wd, -d * (4.0 + wd), 4.0 * d * d);
    let mut roots = Vec::with_capacity(2);
    if qa.abs() <= 1e-14 * (1.0 + wd.abs()) {
        roots.push(-qc / qb);
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::Branch(format!("no real continuation, discriminant {disc:e}")));
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        roots.push(q / qa);
        if q != 0.0 {
            roots.push(qc / q);
        }
    }
    roots
        .into_iter()
        .map(|p| a_m + p)
        .filter(|c| (c - a0) * d > 0.0)
        .min_by(|a, b| (a - a0).abs().total_cmp(&(b - a0).abs()))
        .ok_or_else(|| Error::Branch("no monotone continuation".into()))
}

/// Builds `(t, y)` from an `(x, u)` solution by solving `B₁ = B₂ = 0` for the
/// Winternitz integrals, starting from `seed` (at least three nodes with `t`
/// as abscissa), then checks the Winternitz scheme with `K = 4`.
pub fn compatibility_backward(
    xu: &Trajectory,
    alphas: &AlphaPair,
    seed: &Trajectory,
    tol: f64,
) -> Result<(CompatibilityReport, Trajectory)> {
    if seed.len() < 3 {
        return Err(Error::InsufficientNodes { needed: 3, got: seed.len() });
    }
    let off = seed.n0 - xu.n0;
    if off < 0 || off as usize + seed.len() > xu.len() {
        return Err(Error::InvalidParameter("seed labels must lie inside the (x, u) range".into()));
    }
    let mut pts = seed.points().to_vec();
    while (off as usize) + pts.len() < xu.len() {
        let k = pts.len();
        let s = xu.stencil3_at(off as usize + k - 1)?;
        let (prev, cur) = (pts[k - 2], pts[k - 1]);
        let wy = -integral_bracket(&s)? / alphas.alpha1;
        let wt = -integral_bracket(&s.swapped())? / alphas.alpha2;
        let node = solve_winternitz_integral(prev.x, cur.x, wt)
            .and_then(|t| solve_winternitz_integral(prev.u, cur.u, wy).map(|y| Node { x: t, u: y }))
            .map_err(|e| Error::Construction { node: k, reason: e.to_string() })?;
        pts.push(node);
    }
    let ty = Trajectory::with_vars(seed.n0, pts, Variables::TY)?;
    let r = winternitz_max_residual(&ty, 4.0)?;
    Ok((CompatibilityReport::new(Direction::Backward, *alphas, r, tol), ty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{ode2_exact_trajectory, winternitz_exact_trajectory, Ode2ExactParams, WinternitzExactParams};

    fn pair() -> PairedTrajectories {
        let e = Ode2ExactParams::new(1.0, 2.0, 2.0, 0.01, 15.0).unwrap();
        let w = WinternitzExactParams::new([1.0, 1.0, 0.0, 1.0, 2.0, 0.0]).unwrap();
        PairedTrajectories::new(
            ode2_exact_trajectory(&e, 0, 10).unwrap(),
            winternitz_exact_trajectory(&w, 0, 10).unwrap(),
        )
        .unwrap()
    }

    fn head(tr: &Trajectory, k: usize) -> Trajectory {
        Trajectory::with_vars(tr.n0, tr.points()[..k].to_vec(), tr.vars).unwrap()
    }

    #[test]
    fn fitted_alphas_close_the_pair() {
        let p = pair();
        let a = fit_alphas(&p, None).unwrap();
        let (r1, r2) = p.max_residuals(&a).unwrap();
        assert!(r1 <= 1e-9 && r2 <= 1e-9, "{r1} {r2}");
        let b = fit_alphas(&p, Some(7)).unwrap();
        assert!((a.alpha1 - b.alpha1).abs() <= 1e-9 * a.alpha1.abs());
        assert!((a.alpha2 - b.alpha2).abs() <= 1e-9 * a.alpha2.abs());
    }

    #[test]
    fn residual_is_affine_in_alpha() {
        let p = pair();
        let a = fit_alphas(&p, None).unwrap();
        let (s, y, _) = p.at(3).unwrap();
        let w = winternitz_integral(y[0], y[1], y[2]).unwrap();
        let r = b1_residual(&s, y, 1.1 * a.alpha1).unwrap();
        assert!((r - 0.1 * a.alpha1 * w).abs() < 1e-9);
        let flat = [0.0, 1.0, 2.0];
        assert_eq!(b1_residual(&s, flat, 3.0).unwrap(), integral_bracket(&s).unwrap());
    }

    #[test]
    fn zero_integral_cannot_be_fitted() {
        let p = pair();
        let flat = Trajectory::with_vars(
            0,
            (0..11).map(|n| Node { x: 1.0 / (n as f64 + 2.0), u: n as f64 }).collect(),
            Variables::TY,
        )
        .unwrap();
        let q = PairedTrajectories::new(p.xu, flat).unwrap();
        assert_eq!(fit_alphas(&q, None), Err(Error::ZeroIntegral("y")));
    }

    #[test]
    fn forward_and_backward_reconstruct_the_pair() {
        let p = pair();
        let a = fit_alphas(&p, None).unwrap();
        let (rep, xu) = compatibility_forward(&p.ty, &a, 0.01, &head(&p.xu, 3), 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Compatible, "{rep:?}");
        for (g, w) in xu.points().iter().zip(p.xu.points()) {
            assert!((g.x - w.x).abs() < 1e-9 && (g.u - w.u).abs() < 1e-9);
        }
        let (rep, ty) = compatibility_backward(&p.xu, &a, &head(&p.ty, 3), 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Compatible, "{rep:?}");
        for (g, w) in ty.points().iter().zip(p.ty.points()) {
            assert!((g.x - w.x).abs() < 1e-9 && (g.u - w.u).abs() < 1e-9);
        }
    }

    #[test]
    fn perturbed_alphas_are_incompatible() {
        let p = pair();
        let a = fit_alphas(&p, None).unwrap();
        let bad = AlphaPair::new(1.1 * a.alpha1, 0.9 * a.alpha2).unwrap();
        let (rep, _) = compatibility_forward(&p.ty, &bad, 0.01, &head(&p.xu, 3), 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Incompatible);
        assert!(rep.max_residual >= 1e-3, "{}", rep.max_residual);
        let (rep, _) = compatibility_backward(&p.xu, &bad, &head(&p.ty, 3), 1e-8).unwrap();
        assert_eq!(rep.verdict, Verdict::Incompatible);
        // a wrong α₂ alone shows up through B₂ on the constructed nodes
        let bad2 = AlphaPair::new(a.alpha1, 0.9 * a.alpha2).unwrap();
        let (rep, _) = compatibility_forward(&p.ty, &bad2, 0.01, &head(&p.xu, 3), 1e-8).unwrap();
        assert!(rep.max_residual >= 1e-3, "{}", rep.max_residual);
    }

    #[test]
    fn joint_residuals_see_one_combination_of_the_new_node() {
        // the product of the forward terms of the bracket and its swap is
        // fixed by the earlier nodes, so B₁ determines B₂ at a centre
        let q = pair().xu;
        let q = q.points();
        let prod = |xp: f64, up: f64| {
            let s = Stencil3::new([q[0].x, q[1].x, xp], [q[0].u, q[1].u, up]);
            let first = |s: &Stencil3| {
                let qm = (s.x0 - s.u_m) * (s.x_m - s.u0);
                (s.u0 - s.u_m) / qm * integral_bracket(s).unwrap() - (s.u_xbar().unwrap() / qm).sqrt()
            };
            first(&s) * first(&s.swapped())
        };
        let a = prod(q[2].x, q[2].u);
        let b = prod(q[2].x * 1.01, q[2].u * 0.98);
        assert!((a - b).abs() < 1e-9 * a.abs(), "{a} {b}");
    }

    #[test]
    fn winternitz_integral_inversion() {
        let c = solve_winternitz_integral(1.0, 0.5, 2.0).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-14);
        let c = solve_winternitz_integral(0.0, 1.0, 0.0).unwrap();
        assert!((c - 2.0).abs() < 1e-14);
        let c = solve_winternitz_integral(0.5, 1.0 / 3.0, 2.0).unwrap();
        assert!((c - 0.25).abs() < 1e-14);
    }
}
