//! Periodic piecewise linear functions on the Freudenthal triangulation.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{default_enum_budget, locate_scaled, on_grid, Grid};
use crate::rational::{RatVec, Rational};

/// A `ℤⁿ`-periodic function determined by its values on `U_δ ∩ [0,1)ⁿ` and
/// interpolated linearly on each cell of the step-`δ` triangulation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct GridFunction {
    grid: Grid,
    b: RatVec,
    values: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    n: usize,
    delta: Rational,
    b: RatVec,
    values: Vec<Rational>,
}

impl TryFrom<GridDoc> for GridFunction {
    type Error = Error;
    fn try_from(doc: GridDoc) -> Result<Self> {
        GridFunction::from_values(doc.n, &doc.delta, doc.b, doc.values)
    }
}

impl From<GridFunction> for GridDoc {
    fn from(f: GridFunction) -> Self {
        GridDoc {
            n: f.grid.n,
            delta: f.grid.delta(),
            b: f.b,
            values: f.values,
        }
    }
}

impl GridFunction {
    /// Build from row-major values; `values.len()` must be `pⁿ`.
    pub fn from_values(n: usize, delta: &Rational, b: RatVec, values: Vec<Rational>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("dimension must be at least 1".into()));
        }
        let grid = Grid::new(n, delta)?;
        if b.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.dim(),
            });
        }
        let expected = grid.size();
        if values.len() as u128 != expected {
            return Err(Error::Parse(format!(
                "grid with step {delta} in dimension {n} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(GridFunction { grid, b, values })
    }

    /// Sample `source` at every grid point. Requires `b ∈ U_δ`.
    pub fn interpolate_from_samples<F>(source: F, n: usize, delta: &Rational, b: &RatVec) -> Result<Self>
    where
        F: Fn(&RatVec) -> Rational + Sync,
    {
        let grid = Grid::new(n, delta)?;
        if b.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: b.dim(),
            });
        }
        if !on_grid(b, grid.p) {
            return Err(Error::Precondition(format!(
                "b = {b} is not a point of the grid with step {delta}"
            )));
        }
        let len = grid.check_budget(default_enum_budget())?;
        let values = (0..len)
            .into_par_iter()
            .map(|i| source(&grid.point(i)))
            .collect();
        Ok(GridFunction {
            grid,
            b: b.clone(),
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn delta(&self) -> Rational {
        self.grid.delta()
    }

    pub fn b(&self) -> &RatVec {
        &self.b
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Value at the grid point with integer coordinates `k` (periodic).
    pub fn value_at(&self, k: &[i64]) -> &Rational {
        &self.values[self.grid.index_of(k)]
    }

    pub fn eval(&self, x: &RatVec) -> Rational {
        debug_assert_eq!(x.dim(), self.n());
        let loc = locate_scaled(x, self.grid.p);
        let mut k = loc.base.clone();
        let mut acc = Rational::zero();
        for (j, w) in loc.weights.iter().enumerate() {
            if j > 0 {
                k[loc.perm[j - 1]] += 1;
            }
            if !w.is_zero() {
                acc += w * self.value_at(&k);
            }
        }
        acc
    }

    /// Largest `‖a^P‖₁` over all maximal cells `P` of one period. Valid as an
    /// ∞-norm Lipschitz constant.
    pub fn lipschitz_constant(&self) -> Rational {
        let n = self.n();
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        let p = Rational::from(self.grid.p);
        let best = (0..self.values.len())
            .into_par_iter()
            .map(|idx| {
                let base = self.grid.coords_of(idx);
                let mut best = Rational::zero();
                for perm in &perms {
                    let mut k = base.clone();
                    let mut prev = self.value_at(&k);
                    let mut norm = Rational::zero();
                    for &i in perm {
                        k[i] += 1;
                        let cur = self.value_at(&k);
                        norm += (cur - prev).abs();
                        prev = cur;
                    }
                    best = best.max(norm);
                }
                best
            })
            .reduce(Rational::zero, Rational::max);
        best * p
    }
}
