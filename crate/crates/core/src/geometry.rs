//! The period lattice and the Freudenthal triangulation of ℝⁿ with step `1/p`.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rational::{RatVec, Rational};

/// Default cap on the number of points any grid sweep may enumerate.
pub const DEFAULT_ENUM_BUDGET: u128 = 100_000_000;

/// Environment variable overriding [`DEFAULT_ENUM_BUDGET`].
pub const ENUM_BUDGET_ENV: &str = "GJX_ENUM_BUDGET";

pub fn default_enum_budget() -> u128 {
    std::env::var(ENUM_BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_BUDGET)
}

/// Representative of `x` modulo ℤⁿ in `[0,1)ⁿ`.
pub fn reduce_mod_lattice(x: &RatVec) -> RatVec {
    x.fract()
}

/// `p` such that `delta == 1/p`.
pub fn grid_denominator(delta: &Rational) -> Result<u64> {
    if delta.is_positive() && delta.numer() == 1.into() {
        if let Some(p) = delta.denom_u64() {
            if p <= i64::MAX as u64 {
                return Ok(p);
            }
        }
    }
    Err(Error::InvalidDelta(delta.to_string()))
}

/// Whether every coordinate of `x` is a multiple of `1/p`.
pub fn on_grid(x: &RatVec, p: u64) -> bool {
    x.iter().all(|c| match c.denom_u64() {
        Some(d) => p.is_multiple_of(d),
        None => false,
    })
}

/// A maximal cell of the triangulation:
/// `conv{u, u + δe_{π(0)}, u + δ(e_{π(0)} + e_{π(1)}), …}` with `u = base`.
///
/// `perm` holds 0-based coordinate indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimplexId {
    pub base: RatVec,
    pub perm: Vec<usize>,
}

impl SimplexId {
    /// The `n+1` vertices in walk order.
    pub fn vertices(&self, delta: &Rational) -> Vec<RatVec> {
        let mut out = Vec::with_capacity(self.perm.len() + 1);
        let mut v = self.base.clone();
        out.push(v.clone());
        for &i in &self.perm {
            v[i] += delta;
            out.push(v.clone());
        }
        out
    }
}

/// Integer form of a located cell: vertex `k` is `base + Σ_{j<k} e_{perm[j]}` in units of `1/p`.
#[derive(Clone, Debug)]
pub(crate) struct Located {
    pub base: SmallVec<[i64; 4]>,
    pub perm: SmallVec<[usize; 4]>,
    pub weights: SmallVec<[Rational; 5]>,
}

pub(crate) fn locate_scaled(x: &RatVec, p: u64) -> Located {
    let pr = Rational::from(p);
    let n = x.dim();
    let mut base = SmallVec::<[i64; 4]>::with_capacity(n);
    let mut frac = SmallVec::<[Rational; 4]>::with_capacity(n);
    for c in x.iter() {
        let s = c * &pr;
        base.push(s.floor_i64());
        frac.push(s.fract());
    }
    let mut perm: SmallVec<[usize; 4]> = (0..n).collect();
    // Stable sort keeps ascending index order among equal offsets.
    perm.sort_by(|&a, &b| frac[b].cmp(&frac[a]));
    let mut weights = SmallVec::<[Rational; 5]>::with_capacity(n + 1);
    if n == 0 {
        weights.push(Rational::one());
    } else {
        weights.push(Rational::one() - &frac[perm[0]]);
        for j in 0..n - 1 {
            weights.push(&frac[perm[j]] - &frac[perm[j + 1]]);
        }
        weights.push(frac[perm[n - 1]].clone());
    }
    Located {
        base,
        perm,
        weights,
    }
}

/// Locate a maximal cell of the step-`delta` triangulation containing `x`,
/// with barycentric weights `λ_0..λ_n` for its vertices in walk order.
pub fn locate_simplex(x: &RatVec, delta: &Rational) -> Result<(SimplexId, Vec<Rational>)> {
    let p = grid_denominator(delta)?;
    let loc = locate_scaled(x, p);
    let base = loc
        .base
        .iter()
        .map(|&k| Rational::from_int(k) * delta)
        .collect();
    Ok((
        SimplexId {
            base,
            perm: loc.perm.to_vec(),
        },
        loc.weights.to_vec(),
    ))
}

/// The lattice `U_δ ∩ [0,1)ⁿ` for `δ = 1/p`, indexed in row-major order
/// (last coordinate varies fastest).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub n: usize,
    pub p: u64,
}

impl Grid {
    pub fn new(n: usize, delta: &Rational) -> Result<Self> {
        Ok(Grid {
            n,
            p: grid_denominator(delta)?,
        })
    }

    pub fn delta(&self) -> Rational {
        Rational::new(1, self.p as i64)
    }

    /// Number of points, `pⁿ`, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..self.n {
            acc = acc.saturating_mul(self.p as u128);
        }
        acc
    }

    pub fn check_budget(&self, budget: u128) -> Result<usize> {
        let size = self.size();
        if size > budget || size > usize::MAX as u128 {
            return Err(Error::Budget {
                requested: size,
                budget,
            });
        }
        Ok(size as usize)
    }

    /// Row-major index of the lattice point with integer coordinates `k` (taken mod `p`).
    pub fn index_of(&self, k: &[i64]) -> usize {
        let p = self.p as i64;
        k.iter()
            .fold(0usize, |acc, &c| acc * self.p as usize + c.rem_euclid(p) as usize)
    }

    /// Integer coordinates of the point with row-major index `idx`.
    pub fn coords_of(&self, mut idx: usize) -> SmallVec<[i64; 4]> {
        let mut k = SmallVec::from_elem(0i64, self.n);
        for i in (0..self.n).rev() {
            k[i] = (idx % self.p as usize) as i64;
            idx /= self.p as usize;
        }
        k
    }

    pub fn point(&self, idx: usize) -> RatVec {
        let p = self.p as i64;
        self.coords_of(idx)
            .iter()
            .map(|&c| Rational::new(c, p))
            .collect()
    }

    /// Integer coordinates of `x` if it lies on the grid (not reduced mod `p`).
    pub fn int_coords(&self, x: &RatVec) -> Option<SmallVec<[i64; 4]>> {
        let pr = Rational::from(self.p);
        x.iter().map(|c| (c * &pr).to_i64()).collect()
    }

    pub fn points(&self, budget: u128) -> Result<GridPoints> {
        let len = self.check_budget(budget)?;
        Ok(GridPoints {
            grid: *self,
            next: 0,
            len,
        })
    }
}

/// Iterator over a [`Grid`] in row-major order.
pub struct GridPoints {
    grid: Grid,
    next: usize,
    len: usize,
}

impl Iterator for GridPoints {
    type Item = RatVec;

    fn next(&mut self) -> Option<RatVec> {
        if self.next >= self.len {
            return None;
        }
        let pt = self.grid.point(self.next);
        self.next += 1;
        Some(pt)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.len - self.next;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for GridPoints {}

/// Enumerate `U_δ ∩ [0,1)ⁿ` in row-major order under the default budget.
pub fn grid_points(n: usize, delta: &Rational) -> Result<GridPoints> {
    Grid::new(n, delta)?.points(default_enum_budget())
}

/// Odometer over the integer box `lo ≤ k ≤ hi` (inclusive), last coordinate fastest.
/// Empty when any `lo_i > hi_i`.
pub(crate) struct IntBox {
    lo: SmallVec<[i64; 4]>,
    hi: SmallVec<[i64; 4]>,
    cur: Option<SmallVec<[i64; 4]>>,
}

impl IntBox {
    pub(crate) fn new(lo: SmallVec<[i64; 4]>, hi: SmallVec<[i64; 4]>) -> Self {
        let empty = lo.iter().zip(hi.iter()).any(|(a, b)| a > b);
        let cur = if empty { None } else { Some(lo.clone()) };
        IntBox { lo, hi, cur }
    }

    #[cfg(test)]
    pub(crate) fn count(lo: &[i64], hi: &[i64]) -> u128 {
        lo.iter()
            .zip(hi)
            .map(|(a, b)| if b < a { 0 } else { (b - a + 1) as u128 })
            .product()
    }
}

impl Iterator for IntBox {
    type Item = SmallVec<[i64; 4]>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.cur.clone()?;
        let cur = self.cur.as_mut().unwrap();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            if cur[i] < self.hi[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = self.lo[i];
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn v(s: &str) -> RatVec {
        s.parse().unwrap()
    }

    #[test]
    fn reduces_mod_lattice() {
        assert_eq!(reduce_mod_lattice(&v("5/4,-1/3")), v("1/4,2/3"));
        assert_eq!(reduce_mod_lattice(&v("0,0")), v("0,0"));
        assert_eq!(reduce_mod_lattice(&v("7/8")), v("7/8"));
    }

    #[test]
    fn locates_two_dimensional_point() {
        let (cell, w) = locate_simplex(&v("3/10,3/5"), &r("1/4")).unwrap();
        assert_eq!(cell.base, v("1/4,1/2"));
        assert_eq!(cell.perm, vec![1, 0]);
        assert_eq!(w, vec![r("3/5"), r("1/5"), r("1/5")]);
    }

    #[test]
    fn locates_vertex_and_midpoint() {
        let (cell, w) = locate_simplex(&v("1/2,1/4"), &r("1/4")).unwrap();
        assert_eq!(cell.base, v("1/2,1/4"));
        assert_eq!(cell.perm, vec![0, 1]);
        assert_eq!(w[0], Rational::one());
        let (cell, w) = locate_simplex(&v("3/8"), &r("1/4")).unwrap();
        assert_eq!(cell.base, v("1/4"));
        assert_eq!(w, vec![r("1/2"), r("1/2")]);
    }

    #[test]
    fn rejects_non_reciprocal_steps() {
        assert!(locate_simplex(&v("0"), &r("2/3")).is_err());
        assert!(locate_simplex(&v("0"), &r("-1/3")).is_err());
        assert!(Grid::new(1, &r("0")).is_err());
    }

    #[test]
    fn enumerates_row_major() {
        let pts: Vec<_> = grid_points(2, &r("1/2")).unwrap().collect();
        assert_eq!(pts, vec![v("0,0"), v("0,1/2"), v("1/2,0"), v("1/2,1/2")]);
        let pts: Vec<_> = grid_points(1, &r("1/4")).unwrap().collect();
        assert_eq!(pts, vec![v("0"), v("1/4"), v("1/2"), v("3/4")]);
        assert_eq!(grid_points(3, &r("1/2")).unwrap().count(), 8);
    }

    #[test]
    fn budget_guard() {
        let g = Grid::new(3, &r("1/1000")).unwrap();
        assert!(matches!(g.points(1000), Err(Error::Budget { .. })));
    }

    #[test]
    fn integer_box_odometer() {
        let pts: Vec<_> = IntBox::new(SmallVec::from_slice(&[0i64, -1]), SmallVec::from_slice(&[1i64, 0])).map(|k| k.to_vec()).collect();
        assert_eq!(pts, vec![vec![0, -1], vec![0, 0], vec![1, -1], vec![1, 0]]);
        assert_eq!(IntBox::new(SmallVec::from_slice(&[1i64]), SmallVec::from_slice(&[0i64])).count(), 0);
        assert_eq!(IntBox::count(&[0, 0], &[2, 3]), 12);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid { n: 3, p: 5 };
        for idx in 0..125 {
            assert_eq!(g.index_of(&g.coords_of(idx)), idx);
        }
        assert_eq!(g.index_of(&[-1, 5, 6]), g.index_of(&[4, 0, 1]));
    }
}
