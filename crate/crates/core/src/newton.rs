//! Damped two-dimensional Newton iteration with a forward-difference Jacobian.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative perturbation for the finite-difference Jacobian.
    pub fd_rel_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 50, fd_rel_step: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    pub root: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
}

fn norm(f: [f64; 2]) -> f64 {
    f[0].abs().max(f[1].abs())
}

type Iterate = ([f64; 2], [f64; 2], f64);

/// One damped step from `v`; `None` when no step length reduces the residual.
fn damped_step<F>(
    f: &F,
    v: [f64; 2],
    fv: [f64; 2],
    r: f64,
    scale: [f64; 2],
    opts: &NewtonOptions,
) -> Result<Option<Iterate>>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let mut jac = [[0.0; 2]; 2];
    for k in 0..2 {
        let h = opts.fd_rel_step * v[k].abs().max(scale[k]);
        let mut w = v;
        w[k] += h;
        let fw = f(w).or_else(|_| {
            w[k] = v[k] - h;
            f(w).map(|g| [2.0 * fv[0] - g[0], 2.0 * fv[1] - g[1]])
        })?;
        jac[0][k] = (fw[0] - fv[0]) / h;
        jac[1][k] = (fw[1] - fv[1]) / h;
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det == 0.0 || !det.is_finite() {
        return Ok(None);
    }
    let dv = [-(jac[1][1] * fv[0] - jac[0][1] * fv[1]) / det, -(-jac[1][0] * fv[0] + jac[0][0] * fv[1]) / det];
    let mut lam = 1.0;
    while lam > 1e-10 {
        let w = [v[0] + lam * dv[0], v[1] + lam * dv[1]];
        if let Ok(fw) = f(w) {
            let rw = norm(fw);
            if rw < r {
                return Ok(Some((w, fw, rw)));
            }
        }
        lam *= 0.5;
    }
    Ok(None)
}

/// Solves `f(v) = 0` from `guess`.
///
/// `scale` sets the absolute floor of the Jacobian perturbation per component.
/// Steps are halved until the max-norm of the residual decreases; points where
/// `f` fails (branch or pole) count as no decrease. When no damped step
/// reduces the residual and it is already within `100·tol`, the iterate is
/// accepted as converged to rounding. Once within `tol`, one more step is
/// taken if it lowers the residual further.
pub fn solve2<F>(f: F, guess: [f64; 2], scale: [f64; 2], opts: &NewtonOptions) -> Result<NewtonOutcome>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let mut v = guess;
    let mut fv = f(v)?;
    let mut r = norm(fv);
    for it in 0..opts.max_iter {
        if r <= opts.tol {
            if r > 0.0 {
                if let Ok(Some((w, _, rw))) = damped_step(&f, v, fv, r, scale, opts) {
                    return Ok(NewtonOutcome { root: w, residual: rw, iterations: it + 1 });
                }
            }
            return Ok(NewtonOutcome { root: v, residual: r, iterations: it });
        }
        match damped_step(&f, v, fv, r, scale, opts)? {
            Some((w, fw, rw)) => {
                v = w;
                fv = fw;
                r = rw;
            }
            None if r <= 100.0 * opts.tol => {
                return Ok(NewtonOutcome { root: v, residual: r, iterations: it });
            }
            None => return Err(Error::NonConvergence { iterations: it, residual: r }),
        }
    }
    if r <= opts.tol {
        Ok(NewtonOutcome { root: v, residual: r, iterations: opts.max_iter })
    } else {
        Err(Error::NonConvergence { iterations: opts.max_iter, residual: r })
    }
}
