use crate::error::{div, Error, Result};
use crate::stencil::{cross_ratio_same, Node, Trajectory};

/// Cross-ratio residuals of the `y` and `t` sequences on one four-point stencil.
pub fn winternitz_residuals(sy: [f64; 4], st: [f64; 4], k: f64) -> Result<(f64, f64)> {
    let ry = cross_ratio_same(sy[0], sy[1], sy[2], sy[3])? - k;
    let rt = cross_ratio_same(st[0], st[1], st[2], st[3])? - k;
    Ok((ry, rt))
}

/// The fourth value `y₊₊` fixing the cross-ratio of `(y₋, y, y₊, y₊₊)` at `k`.
pub fn winternitz_step(y_m: f64, y0: f64, y_p: f64, k: f64) -> Result<f64> {
    let (ca, ba) = (y_p - y_m, y0 - y_m);
    div(y0 * ca - k * y_p * ba, ca - k * ba, "coefficient of y_++")
}

/// Extends both sequences of `seed` (at least three nodes) by `steps` nodes.
pub fn winternitz_solve(seed: &Trajectory, steps: usize, k: f64) -> Result<Trajectory> {
    if seed.len() < 3 {
        return Err(Error::InsufficientNodes { needed: 3, got: seed.len() });
    }
    let mut pts = seed.points().to_vec();
    for _ in 0..steps {
        let node = pts.len();
        let [a, b, c] = [pts[node - 3], pts[node - 2], pts[node - 1]];
        let step = |f: fn(&Node) -> f64| winternitz_step(f(&a), f(&b), f(&c), k);
        let next = step(|p| p.x)
            .and_then(|x| step(|p| p.u).map(|u| Node { x, u }))
            .map_err(|e| Error::Construction { node, reason: e.to_string() })?;
        pts.push(next);
    }
    Trajectory::with_vars(seed.n0, pts, seed.vars)
}

/// Largest `|residual|` of either sequence over all four-point stencils.
pub fn winternitz_max_residual(tr: &Trajectory, k: f64) -> Result<f64> {
    if tr.len() < 4 {
        return Err(Error::InsufficientNodes { needed: 4, got: tr.len() });
    }
    let mut worst = 0.0f64;
    for i in tr.stencil_centres() {
        let s = tr.stencil_at(i)?;
        let (ry, rt) = winternitz_residuals(s.us(), s.xs(), k)?;
        worst = worst.max(ry.abs()).max(rt.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        assert!((winternitz_step(1.0, 0.5, 1.0 / 3.0, 4.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(winternitz_step(0.0, 1.0, 2.0, 4.0).unwrap(), 3.0);
        assert_eq!(winternitz_step(0.0, 1.0, 2.0, 3.0).unwrap(), 4.0);
        // coefficient (c − a) − K(b − a) vanishes
        assert!(winternitz_step(0.0, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn residual_examples() {
        let ap = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(winternitz_residuals(ap, ap, 4.0).unwrap(), (0.0, 0.0));
        assert_eq!(winternitz_residuals(ap, ap, 3.0).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn solve_tracks_reciprocal_lattice() {
        let pts: Vec<Node> = (1..=3).map(|n| Node { x: n as f64, u: 1.0 / n as f64 + 2.0 }).collect();
        let seed = Trajectory::new(1, pts).unwrap();
        let tr = winternitz_solve(&seed, 50, 4.0).unwrap();
        for (i, p) in tr.points().iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((p.u - (1.0 / n + 2.0)).abs() < 1e-10 * p.u.abs());
            assert!((p.x - n).abs() < 1e-10 * n);
        }
    }
}
