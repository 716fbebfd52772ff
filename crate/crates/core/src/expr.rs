//! Lazy expression trees over periodic piecewise linear functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fillin::FillIn;
use crate::gauge::{eta_coefficient, GaugeSimplex, TauChoice};
use crate::grid::GridFunction;
use crate::rational::{RatVec, Rational};

/// A piecewise linear function evaluated exactly and on demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PwlExpr {
    /// Interpolated grid values.
    Grid { grid: Arc<GridFunction> },
    /// The one-dimensional Gomory mixed-integer function with right-hand side `b`.
    Gmic { b: Rational },
    /// `⟨gradient, x⟩ + constant`; not periodic unless the gradient vanishes.
    Linear { gradient: RatVec, constant: Rational },
    /// `π_δ3`.
    PiDelta3 { gauge: Arc<GaugeSimplex> },
    /// `π_aux`.
    PiAux { gauge: Arc<GaugeSimplex> },
    /// `η_aux`.
    EtaAux {
        gauge: Arc<GaugeSimplex>,
        tau: TauChoice,
        eps: Rational,
    },
    /// `a·f + b·g + c`.
    Affine {
        a: Rational,
        f: Arc<PwlExpr>,
        b: Rational,
        g: Arc<PwlExpr>,
        c: Rational,
    },
    FillIn { fill: Arc<FillIn> },
    /// Symmetrization of `fillin` guided by the sign of `comb − eta`.
    Symmetrize {
        comb: Arc<PwlExpr>,
        fillin: Arc<PwlExpr>,
        eta: Arc<PwlExpr>,
        b: RatVec,
    },
}

impl PwlExpr {
    pub fn grid(g: GridFunction) -> Self {
        PwlExpr::Grid { grid: Arc::new(g) }
    }

    pub fn affine(a: Rational, f: Arc<PwlExpr>, b: Rational, g: Arc<PwlExpr>, c: Rational) -> Self {
        PwlExpr::Affine { a, f, b, g, c }
    }

    /// `-f`, convenient for negative controls.
    pub fn negated(f: Arc<PwlExpr>) -> Self {
        PwlExpr::Affine {
            a: -Rational::one(),
            g: f.clone(),
            f,
            b: Rational::zero(),
            c: Rational::zero(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PwlExpr::Grid { .. } => "grid",
            PwlExpr::Gmic { .. } => "gmic",
            PwlExpr::Linear { .. } => "linear",
            PwlExpr::PiDelta3 { .. } => "pi_delta3",
            PwlExpr::PiAux { .. } => "pi_aux",
            PwlExpr::EtaAux { .. } => "eta_aux",
            PwlExpr::Affine { .. } => "affine",
            PwlExpr::FillIn { .. } => "fill_in",
            PwlExpr::Symmetrize { .. } => "symmetrize",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PwlExpr::Grid { grid } => grid.n(),
            PwlExpr::Gmic { .. } => 1,
            PwlExpr::Linear { gradient, .. } => gradient.dim(),
            PwlExpr::PiDelta3 { gauge } | PwlExpr::PiAux { gauge } | PwlExpr::EtaAux { gauge, .. } => gauge.n(),
            PwlExpr::Affine { f, .. } => f.dim(),
            PwlExpr::FillIn { fill } => fill.gauge().n(),
            PwlExpr::Symmetrize { b, .. } => b.dim(),
        }
    }

    pub fn eval(&self, x: &RatVec) -> Rational {
        match self {
            PwlExpr::Grid { grid } => grid.eval(x),
            PwlExpr::Gmic { b } => gmic_value(b, &x[0]),
            PwlExpr::Linear { gradient, constant } => gradient.dot(x) + constant,
            PwlExpr::PiDelta3 { gauge } => gauge.pi_delta3(x),
            PwlExpr::PiAux { gauge } => gauge.pi_aux(x),
            PwlExpr::EtaAux { gauge, tau, eps } => gauge.eta_aux(tau, eps, x),
            PwlExpr::Affine { a, f, b, g, c } => {
                let mut acc = c.clone();
                if !a.is_zero() {
                    acc += a * f.eval(x);
                }
                if !b.is_zero() {
                    acc += b * g.eval(x);
                }
                acc
            }
            PwlExpr::FillIn { fill } => fill.eval(x),
            PwlExpr::Symmetrize { comb, fillin, eta, b } => {
                let c = comb.eval(x);
                let e = eta.eval(x);
                match c.cmp(&e) {
                    std::cmp::Ordering::Less => fillin.eval(x).min(e),
                    std::cmp::Ordering::Greater => {
                        let y = b - x;
                        Rational::one() - fillin.eval(&y).min(eta.eval(&y))
                    }
                    std::cmp::Ordering::Equal => e,
                }
            }
        }
    }

    /// A valid ∞-norm Lipschitz constant derived from the tree structure.
    ///
    /// For `Symmetrize` this relies on continuity of the result, which holds when
    /// `comb` and `eta` both satisfy the symmetry condition.
    pub fn lipschitz_bound(&self) -> Rational {
        match self {
            PwlExpr::Grid { grid } => grid.lipschitz_constant(),
            PwlExpr::Gmic { b } => b.recip().max((Rational::one() - b).recip()),
            PwlExpr::Linear { gradient, .. } => gradient.norm_1(),
            PwlExpr::PiDelta3 { gauge } => gauge.max_dual_norm1() * Rational::new(1, 2),
            PwlExpr::PiAux { gauge } => gauge.max_dual_norm1() * gauge.delta3(),
            PwlExpr::EtaAux { gauge, tau, eps } => {
                eta_coefficient(eps, gauge.delta3(), tau)
                    * Rational::from(tau.tau)
                    * gauge.delta3()
                    * gauge.max_dual_norm1()
            }
            PwlExpr::Affine { a, f, b, g, .. } => {
                let mut acc = Rational::zero();
                if !a.is_zero() {
                    acc += a.abs() * f.lipschitz_bound();
                }
                if !b.is_zero() {
                    acc += b.abs() * g.lipschitz_bound();
                }
                acc
            }
            PwlExpr::FillIn { fill } => fill.lipschitz_bound(),
            PwlExpr::Symmetrize { fillin, eta, .. } => fillin.lipschitz_bound().max(eta.lipschitz_bound()),
        }
    }
}

/// `frac(x)/b` if `frac(x) ≤ b`, else `(1 − frac(x))/(1 − b)`.
pub fn gmic_value(b: &Rational, x: &Rational) -> Rational {
    let f = x.fract();
    if &f <= b {
        f / b
    } else {
        (Rational::one() - f) / (Rational::one() - b)
    }
}
