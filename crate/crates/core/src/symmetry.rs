//! One-parameter Möbius flows and numerical invariance checks.
//!
//! Invariance is tested on solutions: a flow is applied to every node of a
//! trajectory that solves a scheme, and the scheme residuals are re-evaluated.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::continuous::Jet3;
use crate::error::{Error, Result};
use crate::schemes::{derived_max_residuals, ode2_max_residuals, winternitz_max_residual};
use crate::stencil::{Node, SchemeParams, Trajectory};

/// Minimum `|c·v + d|` accepted when a flow is applied to a node.
pub const POLE_CLEARANCE: f64 = 1e-6;

/// `v ↦ (a v + b)/(c v + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = MobiusMap { a, b, c, d };
        if m.det() == 0.0 || !m.det().is_finite() {
            return Err(Error::InvalidParameter("Möbius map must have ad - bc != 0".into()));
        }
        Ok(m)
    }

    pub const IDENTITY: MobiusMap = MobiusMap { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn den(&self, v: f64, clearance: f64) -> Result<f64> {
        let den = self.c * v + self.d;
        if den.abs() <= clearance {
            Err(Error::Pole(format!("c v + d = {den:e} at v = {v}")))
        } else {
            Ok(den)
        }
    }

    pub fn apply(&self, v: f64) -> Result<f64> {
        Ok((self.a * v + self.b) / self.den(v, 0.0)?)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// First three derivatives at `v`.
    pub fn derivatives(&self, v: f64) -> Result<[f64; 3]> {
        let q = self.den(v, 0.0)?;
        let d1 = self.det() / (q * q);
        Ok([d1, -2.0 * self.c * d1 / q, 6.0 * self.c * self.c * d1 / (q * q)])
    }
}

/// Jet of `m ∘ y` by the chain rule.
pub fn prolong_jet(m: &MobiusMap, j: &Jet3) -> Result<Jet3> {
    let [m1, m2, m3] = m.derivatives(j.y)?;
    Ok(Jet3 {
        x: j.x,
        y: m.apply(j.y)?,
        y1: m1 * j.y1,
        y2: m2 * j.y1 * j.y1 + m1 * j.y2,
        y3: m3 * j.y1.powi(3) + 3.0 * m2 * j.y1 * j.y2 + m1 * j.y3,
    })
}

/// Basis generators: `X1..X3` act on the abscissa, `X4..X6` on the ordinate,
/// `Y1..Y3` on both at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorId {
    X1,
    X2,
    X3,
    X4,
    X5,
    X6,
    Y1,
    Y2,
    Y3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Abscissa,
    Ordinate,
    Both,
}

impl GeneratorId {
    pub const ALL: [GeneratorId; 9] = [
        GeneratorId::X1,
        GeneratorId::X2,
        GeneratorId::X3,
        GeneratorId::X4,
        GeneratorId::X5,
        GeneratorId::X6,
        GeneratorId::Y1,
        GeneratorId::Y2,
        GeneratorId::Y3,
    ];
    pub const JOINT: [GeneratorId; 3] = [GeneratorId::Y1, GeneratorId::Y2, GeneratorId::Y3];

    fn parts(self) -> (u8, Target) {
        use GeneratorId::*;
        match self {
            X1 => (1, Target::Abscissa),
            X2 => (2, Target::Abscissa),
            X3 => (3, Target::Abscissa),
            X4 => (1, Target::Ordinate),
            X5 => (2, Target::Ordinate),
            X6 => (3, Target::Ordinate),
            Y1 => (1, Target::Both),
            Y2 => (2, Target::Both),
            Y3 => (3, Target::Both),
        }
    }

    pub fn is_joint(self) -> bool {
        self.parts().1 == Target::Both
    }

    /// Group element at parameter `s`: translation, scaling or inversion.
    pub fn mobius(self, s: f64) -> MobiusMap {
        match self.parts().0 {
            1 => MobiusMap { a: 1.0, b: s, c: 0.0, d: 1.0 },
            2 => MobiusMap { a: s.exp(), b: 0.0, c: 0.0, d: 1.0 },
            _ => MobiusMap { a: 1.0, b: 0.0, c: -s, d: 1.0 },
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        GeneratorId::ALL
            .into_iter()
            .find(|g| g.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown generator `{s}`")))
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The flow of one generator at a fixed parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    pub gen: GeneratorId,
    pub s: f64,
    map: MobiusMap,
}

pub fn flow(gen: GeneratorId, s: f64) -> Flow {
    Flow { gen, s, map: gen.mobius(s) }
}

impl Flow {
    pub fn map(&self) -> MobiusMap {
        self.map
    }

    fn on(&self, v: f64) -> Result<f64> {
        let m = &self.map;
        Ok((m.a * v + m.b) / m.den(v, POLE_CLEARANCE)?)
    }

    pub fn apply(&self, n: Node) -> Result<Node> {
        let t = self.gen.parts().1;
        let x = if t == Target::Ordinate { n.x } else { self.on(n.x)? };
        let u = if t == Target::Abscissa { n.u } else { self.on(n.u)? };
        Ok(Node { x, u })
    }

    pub fn apply_trajectory(&self, tr: &Trajectory) -> Result<Trajectory> {
        tr.map_nodes(|n| self.apply(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Second-order scheme with its mesh equation.
    Ode2,
    /// Differentiated four-point scheme.
    Derived,
    Winternitz,
}

impl SchemeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "ode2" => Ok(SchemeKind::Ode2),
            "derived" => Ok(SchemeKind::Derived),
            "winternitz" => Ok(SchemeKind::Winternitz),
            v => Err(Error::Parse(format!("unknown scheme `{v}` (ode2, derived, winternitz)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Ode2 => "ode2",
            SchemeKind::Derived => "derived",
            SchemeKind::Winternitz => "winternitz",
        }
    }
}

/// Largest residual of `kind` over all stencils of `tr`.
pub fn scheme_max_residual(kind: SchemeKind, tr: &Trajectory, p: &SchemeParams) -> Result<f64> {
    match kind {
        SchemeKind::Ode2 => ode2_max_residuals(tr, p).map(|(a, b)| a.max(b)),
        SchemeKind::Derived => derived_max_residuals(tr).map(|(a, b)| a.max(b)),
        SchemeKind::Winternitz => winternitz_max_residual(tr, p.k),
    }
}

/// Residual of `kind` on the image of `tr` under the flow of `gen` at `s`.
pub fn invariance_max_residual(
    kind: SchemeKind,
    tr: &Trajectory,
    gen: GeneratorId,
    s: f64,
    p: &SchemeParams,
) -> Result<f64> {
    scheme_max_residual(kind, &flow(gen, s).apply_trajectory(tr)?, p)
}

/// First-order estimate `|R(ds) − R(0)|/ds` of the generator's action on the residual.
pub fn infinitesimal_invariance(
    kind: SchemeKind,
    tr: &Trajectory,
    gen: GeneratorId,
    ds: f64,
    p: &SchemeParams,
) -> Result<f64> {
    if ds == 0.0 {
        return Err(Error::InvalidParameter("ds must be nonzero".into()));
    }
    let r0 = scheme_max_residual(kind, tr, p)?;
    let r1 = invariance_max_residual(kind, tr, gen, ds, p)?;
    Ok((r1 - r0).abs() / ds.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    pub scheme: SchemeKind,
    pub generator: GeneratorId,
    pub s: f64,
    /// `None` when the flowed trajectory leaves the scheme's domain.
    pub max_residual: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One row per generator in `gens`.
pub fn invariance_table(
    kind: SchemeKind,
    tr: &Trajectory,
    gens: &[GeneratorId],
    s: f64,
    tol: f64,
    p: &SchemeParams,
) -> Vec<InvarianceRow> {
    gens.iter()
        .map(|&g| match invariance_max_residual(kind, tr, g, s, p) {
            Ok(r) => {
                InvarianceRow { scheme: kind, generator: g, s, max_residual: Some(r), pass: r <= tol, error: None }
            }
            Err(e) => InvarianceRow {
                scheme: kind,
                generator: g,
                s,
                max_residual: None,
                pass: false,
                error: Some(e.to_string()),
            },
        })
        .collect()
}
