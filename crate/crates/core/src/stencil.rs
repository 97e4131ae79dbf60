//! Discrete data model: stencils, trajectories, scheme constants and the
//! cross-ratios every scheme residual is built from.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{div, Error, Result};

/// Three consecutive nodes `(x₋, x, x₊; u₋, u, u₊)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stencil3 {
    pub x_m: f64,
    pub x0: f64,
    pub x_p: f64,
    pub u_m: f64,
    pub u0: f64,
    pub u_p: f64,
}

impl Stencil3 {
    pub fn new(x: [f64; 3], u: [f64; 3]) -> Self {
        Stencil3 { x_m: x[0], x0: x[1], x_p: x[2], u_m: u[0], u0: u[1], u_p: u[2] }
    }

    /// Exchange the roles of the independent and dependent variable.
    pub fn swapped(&self) -> Self {
        Stencil3 { x_m: self.u_m, x0: self.u0, x_p: self.u_p, u_m: self.x_m, u0: self.x0, u_p: self.x_p }
    }

    /// Backward difference `u_x̄`.
    pub fn u_xbar(&self) -> Result<f64> {
        div(self.u0 - self.u_m, self.x0 - self.x_m, "x - x_-")
    }

    /// Forward difference `u_x`.
    pub fn u_x(&self) -> Result<f64> {
        div(self.u_p - self.u0, self.x_p - self.x0, "x_+ - x")
    }
}

/// Four consecutive nodes `(x₋, x, x₊, x₊₊; u₋, u, u₊, u₊₊)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stencil4 {
    pub x_m: f64,
    pub x0: f64,
    pub x_p: f64,
    pub x_pp: f64,
    pub u_m: f64,
    pub u0: f64,
    pub u_p: f64,
    pub u_pp: f64,
}

impl Stencil4 {
    pub fn new(x: [f64; 4], u: [f64; 4]) -> Self {
        Stencil4 { x_m: x[0], x0: x[1], x_p: x[2], x_pp: x[3], u_m: u[0], u0: u[1], u_p: u[2], u_pp: u[3] }
    }

    pub fn xs(&self) -> [f64; 4] {
        [self.x_m, self.x0, self.x_p, self.x_pp]
    }

    pub fn us(&self) -> [f64; 4] {
        [self.u_m, self.u0, self.u_p, self.u_pp]
    }

    /// Nodes `−, 0, +`.
    pub fn head(&self) -> Stencil3 {
        Stencil3::new([self.x_m, self.x0, self.x_p], [self.u_m, self.u0, self.u_p])
    }

    /// Nodes `0, +, ++` (the head stencil shifted by one).
    pub fn tail(&self) -> Stencil3 {
        Stencil3::new([self.x0, self.x_p, self.x_pp], [self.u0, self.u_p, self.u_pp])
    }

    pub fn swapped(&self) -> Self {
        Stencil4::new(self.us(), self.xs())
    }

    /// Checks the monotone-abscissae invariant (either orientation).
    pub fn is_monotone(&self) -> bool {
        let x = self.xs();
        let inc = x.windows(2).all(|w| w[1] > w[0]);
        let dec = x.windows(2).all(|w| w[1] < w[0]);
        inc || dec
    }
}

/// Which pair of variables a trajectory carries; only affects CSV headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Variables {
    #[default]
    XU,
    TY,
}

impl Variables {
    pub fn header(self) -> &'static str {
        match self {
            Variables::XU => "n,x,u",
            Variables::TY => "n,t,y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: f64,
    pub u: f64,
}

/// Nodes `(n, xₙ, uₙ)` for `n = n0, n0 + 1, ...`.
///
/// Abscissae are strictly monotone; the orientation is whatever the index
/// order produces (exact solutions run with decreasing `x` for some signs of
/// the constants), but it is the same along the whole trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n0: i64,
    points: Vec<Node>,
    #[serde(default)]
    pub vars: Variables,
}

impl Trajectory {
    pub fn new(n0: i64, points: Vec<Node>) -> Result<Self> {
        Self::with_vars(n0, points, Variables::XU)
    }

    pub fn with_vars(n0: i64, points: Vec<Node>, vars: Variables) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.u.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite node ({}, {})", p.x, p.u)));
        }
        if points.len() >= 2 {
            let inc = points[1].x > points[0].x;
            for (i, w) in points.windows(2).enumerate() {
                if w[1].x == w[0].x {
                    return Err(Error::ZeroStep(i, i + 1));
                }
                if (w[1].x > w[0].x) != inc {
                    return Err(Error::InvalidParameter(format!("abscissae not monotone at node {}", i + 1)));
                }
            }
        }
        Ok(Trajectory { n0, points, vars })
    }

    pub fn from_xy(n0: i64, x: &[f64], u: &[f64]) -> Result<Self> {
        if x.len() != u.len() {
            return Err(Error::InvalidParameter("x and u lengths differ".into()));
        }
        Self::new(n0, x.iter().zip(u).map(|(&x, &u)| Node { x, u }).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Node] {
        &self.points
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn us(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.u).collect()
    }

    /// Index label of the i-th stored node.
    pub fn index(&self, i: usize) -> i64 {
        self.n0 + i as i64
    }

    pub fn increasing(&self) -> bool {
        self.points.len() < 2 || self.points[1].x > self.points[0].x
    }

    fn node(&self, i: usize) -> Result<Node> {
        self.points.get(i).copied().ok_or(Error::Index { index: i, len: self.len() })
    }

    /// Three-point stencil centred at node `i` (nodes `i−1, i, i+1`).
    pub fn stencil3_at(&self, i: usize) -> Result<Stencil3> {
        if i == 0 {
            return Err(Error::Index { index: i, len: self.len() });
        }
        let (a, b, c) = (self.node(i - 1)?, self.node(i)?, self.node(i + 1)?);
        Ok(Stencil3::new([a.x, b.x, c.x], [a.u, b.u, c.u]))
    }

    /// Four-point stencil with `x` at node `i` (nodes `i−1 ..= i+2`).
    pub fn stencil_at(&self, i: usize) -> Result<Stencil4> {
        if i == 0 {
            return Err(Error::Index { index: i, len: self.len() });
        }
        let (a, b, c, d) = (self.node(i - 1)?, self.node(i)?, self.node(i + 1)?, self.node(i + 2)?);
        Ok(Stencil4::new([a.x, b.x, c.x, d.x], [a.u, b.u, c.u, d.u]))
    }

    /// Interior centres admitting a four-point stencil.
    pub fn stencil_centres(&self) -> std::ops::Range<usize> {
        1..self.len().saturating_sub(2).max(1)
    }

    /// Applies `f` to every node; fails if the image is not a valid trajectory.
    pub fn map_nodes<F>(&self, mut f: F) -> Result<Trajectory>
    where
        F: FnMut(Node) -> Result<Node>,
    {
        let pts = self.points.iter().map(|&p| f(p)).collect::<Result<Vec<_>>>()?;
        Trajectory::with_vars(self.n0, pts, self.vars)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.vars.header())?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(w, "{},{},{}", self.index(i), fmt_num(p.x), fmt_num(p.u))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Trajectory> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))??;
        let vars = match header.trim() {
            "n,x,u" => Variables::XU,
            "n,t,y" => Variables::TY,
            h => return Err(Error::Parse(format!("unexpected header `{h}`"))),
        };
        let mut n0 = None;
        let mut pts = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", lineno + 2)));
            }
            let perr = |s: &str| Error::Parse(format!("line {}: bad number `{s}`", lineno + 2));
            let n: i64 = fields[0].parse().map_err(|_| perr(fields[0]))?;
            let x: f64 = fields[1].parse().map_err(|_| perr(fields[1]))?;
            let u: f64 = fields[2].parse().map_err(|_| perr(fields[2]))?;
            let start = *n0.get_or_insert(n);
            if n != start + pts.len() as i64 {
                return Err(Error::Parse(format!("line {}: non-consecutive index {n}", lineno + 2)));
            }
            pts.push(Node { x, u });
        }
        Trajectory::with_vars(n0.unwrap_or(0), pts, vars)
    }
}

/// 17 significant digits, lowercase scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Constants `(C, ε, θ, K)` shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub c: f64,
    pub eps: f64,
    pub theta: f64,
    pub k: f64,
}

impl SchemeParams {
    pub fn new(c: f64, eps: f64, theta: f64, k: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if theta == 0.0 || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite and nonzero, got {theta}")));
        }
        if !c.is_finite() || !k.is_finite() {
            return Err(Error::InvalidParameter("C and K must be finite".into()));
        }
        Ok(SchemeParams { c, eps, theta, k })
    }

    /// The exact configuration: θ from the exactness relation, K linked to C.
    pub fn exact(c: f64, eps: f64) -> Result<Self> {
        Self::new(c, eps, crate::schemes::theta_exact(c, eps), crate::schemes::k_from_c(c, eps))
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.c, self.eps, theta, self.k)
    }

    /// Sign of C (`sgn 0 = 0`).
    pub fn c_sign(&self) -> f64 {
        if self.c > 0.0 {
            1.0
        } else if self.c < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// Whether `k` matches `(εC² + 4)/(ε + 1)` to relative `tol`.
    pub fn is_linked(&self, tol: f64) -> bool {
        let k = crate::schemes::k_from_c(self.c, self.eps);
        (self.k - k).abs() <= tol * (1.0 + k.abs())
    }
}

/// Forward difference `(u_{i+1} − u_i)/(x_{i+1} − x_i)`.
pub fn diff_forward(tr: &Trajectory, i: usize) -> Result<f64> {
    let a = tr.node(i)?;
    let b = tr.node(i + 1)?;
    if b.x == a.x {
        return Err(Error::ZeroStep(i, i + 1));
    }
    Ok((b.u - a.u) / (b.x - a.x))
}

/// Same-variable cross-ratio `(d − b)(c − a) / ((d − c)(b − a))`.
pub fn cross_ratio_same(a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    div((d - b) * (c - a), (d - c) * (b - a), "(d - c)(b - a)")
}

/// Mixed cross-ratio `(x₊ − x)(u₊ − u) / ((x − u₊)(x₊ − u))` of the forward pair.
pub fn cross_ratio_mixed(x0: f64, u0: f64, x_p: f64, u_p: f64) -> Result<f64> {
    div((x_p - x0) * (u_p - u0), (x0 - u_p) * (x_p - u0), "(x - u_+)(x_+ - u)")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(n: usize) -> Trajectory {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let u: Vec<f64> = (0..n).map(|i| (i * i) as f64).collect();
        Trajectory::from_xy(5, &x, &u).unwrap()
    }

    #[test]
    fn forward_difference() {
        let t = Trajectory::from_xy(0, &[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(diff_forward(&t, 0).unwrap(), 2.0);
        let t = Trajectory::from_xy(0, &[0.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(diff_forward(&t, 0).unwrap(), 0.0);
        assert!(matches!(diff_forward(&t, 1), Err(Error::Index { .. })));
    }

    #[test]
    fn same_cross_ratio_examples() {
        assert_eq!(cross_ratio_same(0.0, 1.0, 2.0, 3.0).unwrap(), 4.0);
        let v = cross_ratio_same(1.0, 0.5, 1.0 / 3.0, 0.25).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        assert!(cross_ratio_same(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(cross_ratio_same(0.0, 1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn mixed_cross_ratio_edge_cases() {
        assert_eq!(cross_ratio_mixed(1.0, 5.0, 2.0, 5.0).unwrap(), 0.0);
        assert!(matches!(cross_ratio_mixed(1.0, 3.0, 2.0, 1.0), Err(Error::DegenerateStencil(_))));
    }

    #[test]
    fn stencil_indexing() {
        let t = tr(4);
        let s = t.stencil_at(1).unwrap();
        assert_eq!(s.xs(), [0.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.us(), [0.0, 1.0, 4.0, 9.0]);
        let t = tr(6);
        let s = t.stencil_at(2).unwrap();
        assert_eq!(s.xs(), [1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(t.stencil_at(0), Err(Error::Index { .. })));
        assert!(t.stencil_at(4).is_err());
        assert_eq!(t.stencil_centres(), 1..4);
    }

    #[test]
    fn rejects_non_monotone_and_repeated_abscissae() {
        assert!(Trajectory::from_xy(0, &[0.0, 1.0, 0.5], &[0.0; 3]).is_err());
        assert!(matches!(Trajectory::from_xy(0, &[0.0, 0.0], &[0.0, 1.0]), Err(Error::ZeroStep(0, 1))));
        assert!(Trajectory::from_xy(0, &[3.0, 2.0, 1.0], &[0.0; 3]).is_ok());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let x = [std::f64::consts::PI, 1.0 / 3.0, 0.1, 1e-300];
        let u = [-2.5e17, 7.0, 1.0 / 7.0, -0.0];
        let t = Trajectory::from_xy(-3, &x, &u).unwrap();
        let s = t.to_csv_string();
        assert!(s.starts_with("n,x,u\n-3,"));
        let back = Trajectory::read_csv(s.as_bytes()).unwrap();
        for (a, b) in t.points().iter().zip(back.points()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.u.to_bits(), b.u.to_bits());
        }
        assert_eq!(back.n0, -3);
    }

    #[test]
    fn csv_rejects_gaps_and_bad_headers() {
        assert!(Trajectory::read_csv("n,a,b\n".as_bytes()).is_err());
        assert!(Trajectory::read_csv("n,x,u\n0,1,2\n2,3,4\n".as_bytes()).is_err());
        let t = Trajectory::read_csv("n,t,y\n1,1,2\n2,3,4\n".as_bytes()).unwrap();
        assert_eq!(t.vars, Variables::TY);
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_num(-0.00125), "-1.2500000000000000e-3");
    }
}
