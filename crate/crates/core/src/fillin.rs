//! `fill(x) = min_{u ∈ U_δ4} base(u) + s·γ(x − u)` for a periodic `base`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::expr::PwlExpr;
use crate::gauge::GaugeSimplex;
use crate::geometry::{default_enum_budget, Grid, IntBox};
use crate::rational::{RatVec, Rational};

/// The fill-in of a periodic function over `U_δ4` with respect to `s·γ`.
///
/// Values of `base` on `U_δ4 ∩ [0,1)ⁿ` are tabulated at construction. Queries
/// rank candidates in floating point and resolve every candidate within a
/// safety margin of the approximate minimum exactly, so results are exact.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "FillInDoc", into = "FillInDoc")]
pub struct FillIn {
    base: Arc<PwlExpr>,
    gauge: Arc<GaugeSimplex>,
    scale: Rational,
    grid: Grid,
    table: Vec<Rational>,
    approx: Vec<f64>,
    min_approx: f64,
}

#[derive(Serialize, Deserialize)]
struct FillInDoc {
    base: Arc<PwlExpr>,
    gauge: Arc<GaugeSimplex>,
    scale: Rational,
    delta4: Rational,
}

impl TryFrom<FillInDoc> for FillIn {
    type Error = Error;
    fn try_from(doc: FillInDoc) -> Result<Self> {
        FillIn::new(doc.base, doc.gauge, doc.scale, &doc.delta4)
    }
}

impl From<FillIn> for FillInDoc {
    fn from(f: FillIn) -> Self {
        FillInDoc {
            delta4: f.grid.delta(),
            base: f.base,
            gauge: f.gauge,
            scale: f.scale,
        }
    }
}

impl fmt::Debug for FillIn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FillIn")
            .field("scale", &self.scale)
            .field("delta4", &self.grid.delta())
            .field("gauge", &self.gauge)
            .finish_non_exhaustive()
    }
}

impl PartialEq for FillIn {
    fn eq(&self, other: &Self) -> bool {
        self.scale == other.scale
            && self.grid == other.grid
            && self.gauge == other.gauge
            && self.base == other.base
    }
}

const MARGIN: f64 = 1e-8;

impl FillIn {
    pub fn new(base: Arc<PwlExpr>, gauge: Arc<GaugeSimplex>, scale: Rational, delta4: &Rational) -> Result<Self> {
        let n = gauge.n();
        if base.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: base.dim(),
            });
        }
        if !scale.is_positive() {
            return Err(Error::Precondition("fill-in scale must be positive".into()));
        }
        let grid = Grid::new(n, delta4)?;
        let len = grid.check_budget(default_enum_budget())?;
        let table: Vec<Rational> = (0..len)
            .into_par_iter()
            .map(|i| base.eval(&grid.point(i)))
            .collect();
        let approx: Vec<f64> = table.iter().map(Rational::to_f64).collect();
        let min_approx = approx.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(FillIn {
            base,
            gauge,
            scale,
            grid,
            table,
            approx,
            min_approx,
        })
    }

    pub fn base(&self) -> &Arc<PwlExpr> {
        &self.base
    }

    pub fn gauge(&self) -> &Arc<GaugeSimplex> {
        &self.gauge
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn delta4(&self) -> Rational {
        self.grid.delta()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Tabulated `base` values on `U_δ4 ∩ [0,1)ⁿ`, row-major.
    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    /// `s · max_i ‖g^(i)‖₁`.
    pub fn lipschitz_bound(&self) -> Rational {
        &self.scale * self.gauge.max_dual_norm1()
    }

    fn exact_term(&self, x: &RatVec, k: &[i64]) -> Rational {
        let p = self.grid.p as i64;
        let u: RatVec = k.iter().map(|&c| Rational::new(c, p)).collect();
        &self.table[self.grid.index_of(k)] + &self.scale * self.gauge.eval(&(x - &u))
    }

    pub fn eval(&self, x: &RatVec) -> Rational {
        let x = x.fract();
        let n = x.dim();
        let p = self.grid.p as f64;
        let s = self.scale.to_f64();
        let xf: SmallVec<[f64; 4]> = x.iter().map(Rational::to_f64).collect();
        let mut w: SmallVec<[f64; 4]> = SmallVec::from_elem(0.0, n);
        let approx_term = |k: &[i64], w: &mut SmallVec<[f64; 4]>| -> f64 {
            for i in 0..n {
                w[i] = xf[i] - k[i] as f64 / p;
            }
            self.approx[self.grid.index_of(k)] + s * self.gauge.eval_f64(w)
        };

        // Incumbent from the corners of the δ4-box around x.
        let base: SmallVec<[i64; 4]> = xf.iter().map(|c| (c * p).floor() as i64).collect();
        let top: SmallVec<[i64; 4]> = base.iter().map(|k| k + 1).collect();
        let mut incumbent = f64::INFINITY;
        for k in IntBox::new(base, top) {
            incumbent = incumbent.min(approx_term(&k, &mut w));
        }

        // Any u beating the incumbent has s·γ(x−u) ≤ incumbent − min(base),
        // so x − u lies in t·Λ.
        let t = ((incumbent - self.min_approx) / s).max(0.0) + MARGIN;
        let a = self.gauge.approx();
        let lo: SmallVec<[i64; 4]> = (0..n)
            .map(|i| ((xf[i] - t * a.hi[i]) * p).floor() as i64 - 1)
            .collect();
        let hi: SmallVec<[i64; 4]> = (0..n)
            .map(|i| ((xf[i] - t * a.lo[i]) * p).ceil() as i64 + 1)
            .collect();

        let mut cands: Vec<(f64, SmallVec<[i64; 4]>)> = Vec::new();
        let mut best = f64::INFINITY;
        for k in IntBox::new(lo, hi) {
            let val = approx_term(&k, &mut w);
            if val <= best + MARGIN * (1.0 + best.abs()) {
                best = best.min(val);
                cands.push((val, k));
            }
        }
        let cutoff = best + MARGIN * (1.0 + best.abs());
        cands
            .iter()
            .filter(|(val, _)| *val <= cutoff)
            .map(|(_, k)| self.exact_term(&x, k))
            .min()
            .expect("candidate box always contains the incumbent cell")
    }

    /// Exact minimum over an explicit finite candidate set, used to cross-check [`FillIn::eval`].
    pub fn eval_over_box(&self, x: &RatVec, radius: i64) -> Rational {
        let x = x.fract();
        let pr = Rational::from(self.grid.p);
        let centre: SmallVec<[i64; 4]> = x.iter().map(|c| (c * &pr).floor_i64()).collect();
        let lo = centre.iter().map(|c| c - radius).collect();
        let hi = centre.iter().map(|c| c + radius).collect();
        IntBox::new(lo, hi)
            .map(|k| self.exact_term(&x, &k))
            .min()
            .unwrap()
    }
}
