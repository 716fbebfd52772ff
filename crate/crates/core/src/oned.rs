//! Exact one-dimensional materialization of expression trees.
//!
//! Every node of a one-dimensional tree is turned into a periodic piecewise
//! linear function given by knots in `[0,1)` and the values there. Knots are
//! collected structurally, so they form a superset of the true breakpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::PwlExpr;
use crate::fillin::FillIn;
use crate::gauge::GaugeSimplex;
use crate::rational::{RatVec, Rational};

/// A `ℤ`-periodic continuous piecewise linear function on ℝ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pwl1d {
    knots: Vec<Rational>,
    values: Vec<Rational>,
}

fn point(x: &Rational) -> RatVec {
    RatVec::new(vec![x.clone()])
}

fn normalize_knots(mut knots: Vec<Rational>) -> Vec<Rational> {
    for k in knots.iter_mut() {
        *k = k.fract();
    }
    knots.push(Rational::zero());
    knots.sort();
    knots.dedup();
    knots
}

impl Pwl1d {
    /// Sample `f` at the given knots (reduced mod 1; `0` is always added).
    pub fn from_knots(knots: Vec<Rational>, f: impl Fn(&Rational) -> Rational) -> Self {
        let knots = normalize_knots(knots);
        let values = knots.iter().map(&f).collect();
        Pwl1d { knots, values }
    }

    pub fn knots(&self) -> &[Rational] {
        &self.knots
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Segment `[knots[i], right)` with its end values.
    fn segment(&self, i: usize) -> (&Rational, Rational, &Rational, &Rational) {
        let left = &self.knots[i];
        if i + 1 < self.knots.len() {
            (left, self.knots[i + 1].clone(), &self.values[i], &self.values[i + 1])
        } else {
            (left, Rational::one(), &self.values[i], &self.values[0])
        }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let x = x.fract();
        let i = self.knots.partition_point(|k| k <= &x) - 1;
        let (l, r, fl, fr) = self.segment(i);
        if &x == l {
            return fl.clone();
        }
        fl + &((fr - fl) * (&x - l) / (&r - l))
    }

    /// Drop knots where the function is affine across, leaving exactly the
    /// breakpoints (plus `0`).
    pub fn simplified(&self) -> Pwl1d {
        let m = self.knots.len();
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for i in 0..m {
            let keep = i == 0 || {
                let (l, r, fl, fr) = self.segment(i - 1);
                let (_, r2, _, fr2) = self.segment(i);
                let slope_in = (fr - fl) / (&r - l);
                let slope_out = (fr2 - fr) / (&r2 - &r);
                slope_in != slope_out
            };
            if keep {
                knots.push(self.knots[i].clone());
                values.push(self.values[i].clone());
            }
        }
        Pwl1d { knots, values }
    }

    /// Slopes of the segments in knot order.
    pub fn slopes(&self) -> Vec<Rational> {
        (0..self.knots.len())
            .map(|i| {
                let (l, r, fl, fr) = self.segment(i);
                (fr - fl) / (&r - l)
            })
            .collect()
    }

    /// Midpoints of all segments.
    pub fn midpoints(&self) -> Vec<Rational> {
        (0..self.knots.len())
            .map(|i| {
                let (l, r, _, _) = self.segment(i);
                (l + &r) * Rational::new(1, 2)
            })
            .collect()
    }

    fn merged_knots(&self, other: &Pwl1d) -> Vec<Rational> {
        let mut k = self.knots.clone();
        k.extend(other.knots.iter().cloned());
        normalize_knots(k)
    }

    /// `a·self + b·other + c`.
    pub fn affine(&self, a: &Rational, other: &Pwl1d, b: &Rational, c: &Rational) -> Pwl1d {
        Pwl1d::from_knots(self.merged_knots(other), |x| {
            a * self.eval(x) + b * other.eval(x) + c
        })
    }

    /// Knots of `self` and `other` together with the points in between where they cross.
    fn crossing_knots(&self, other: &Pwl1d) -> Vec<Rational> {
        let base = self.merged_knots(other);
        let diff = Pwl1d::from_knots(base.clone(), |x| self.eval(x) - other.eval(x));
        let mut knots = base;
        knots.extend(diff.zeros());
        normalize_knots(knots)
    }

    /// Zeros strictly inside segments.
    pub fn zeros(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for i in 0..self.knots.len() {
            let (l, r, fl, fr) = self.segment(i);
            if fl.signum() * fr.signum() < 0 {
                out.push(l + &((&r - l) * fl / (fl - fr)));
            }
        }
        out
    }

    pub fn min(&self, other: &Pwl1d) -> Pwl1d {
        Pwl1d::from_knots(self.crossing_knots(other), |x| self.eval(x).min(other.eval(x)))
    }

    /// `x ↦ 1 − self(b − x)`.
    pub fn reflect_complement(&self, b: &Rational) -> Pwl1d {
        let knots = self.knots.iter().map(|k| b - k).collect();
        Pwl1d::from_knots(knots, |x| Rational::one() - self.eval(&(b - x)))
    }
}

fn scalar_b(b: &RatVec) -> Result<Rational> {
    if b.dim() != 1 {
        return Err(Error::Unsupported("one-dimensional materialization needs n = 1".into()));
    }
    Ok(b[0].clone())
}

fn gauge_knots(gauge: &GaugeSimplex) -> Vec<Rational> {
    let b = &gauge.b()[0];
    let mut knots = vec![Rational::zero(), b.clone()];
    for v in gauge.vertices() {
        knots.push(v[0].clone());
        knots.push(b - &v[0]);
    }
    knots
}

/// Where the cones at `0` and `1` of the one-dimensional gauge meet.
fn aux_knots(gauge: &GaugeSimplex) -> Vec<Rational> {
    let g = gauge.duals();
    let (left, right) = (&g[0][0], &g[1][0]);
    vec![Rational::zero(), -left / &(right - left)]
}

fn fill_in_1d(fill: &FillIn) -> Pwl1d {
    let p = fill.grid().p as usize;
    let d4 = fill.delta4();
    let gauge = fill.gauge();
    let s = fill.scale();
    let right = s * &gauge.duals()[1][0];
    let left = -(s * &gauge.duals()[0][0]);
    let step_r = &right * &d4;
    let step_l = &left * &d4;
    let c = fill.table();

    // a[j]: best cone from the left evaluated at u_j; b[j]: from the right.
    let mut a = c.to_vec();
    for j in 1..=2 * p {
        let cand = &a[(j - 1) % p] + &step_r;
        if cand < a[j % p] {
            a[j % p] = cand;
        }
    }
    let mut bk = c.to_vec();
    for j in (0..2 * p).rev() {
        let cand = &bk[(j + 1) % p] + &step_l;
        if cand < bk[j % p] {
            bk[j % p] = cand;
        }
    }

    let mut knots = Vec::with_capacity(2 * p);
    let mut values = Vec::with_capacity(2 * p);
    for j in 0..p {
        let uj = Rational::new(j as i64, p as i64);
        let uj1 = Rational::new(j as i64 + 1, p as i64);
        knots.push(uj.clone());
        values.push(a[j].clone().min(bk[j].clone()));
        let bn = &bk[(j + 1) % p];
        // A(x) = a_j + right (x − u_j) increases, B(x) = b_{j+1} + left (u_{j+1} − x) decreases.
        let x = (bn - &a[j] + &left * &uj1 + &right * &uj) / (&left + &right);
        if x > uj && x < uj1 {
            values.push(&a[j] + &(&right * &(&x - &uj)));
            knots.push(x);
        }
    }
    Pwl1d { knots, values }
}

/// Materialize a one-dimensional tree exactly.
pub fn materialize(f: &PwlExpr) -> Result<Pwl1d> {
    if f.dim() != 1 {
        return Err(Error::Unsupported("one-dimensional materialization needs n = 1".into()));
    }
    match f {
        PwlExpr::Grid { grid } => {
            let p = grid.grid().p as i64;
            Ok(Pwl1d {
                knots: (0..p).map(|k| Rational::new(k, p)).collect(),
                values: grid.values().to_vec(),
            })
        }
        PwlExpr::Gmic { b } => Ok(Pwl1d::from_knots(vec![b.clone()], |x| f.eval(&point(x)))),
        PwlExpr::Linear { gradient, constant } => {
            if !gradient.is_zero() {
                return Err(Error::Unsupported("a non-constant linear function is not periodic".into()));
            }
            Ok(Pwl1d::from_knots(vec![], |_| constant.clone()))
        }
        PwlExpr::PiDelta3 { gauge } => Ok(Pwl1d::from_knots(gauge_knots(gauge), |x| gauge.pi_delta3(&point(x)))),
        PwlExpr::PiAux { gauge } => Ok(Pwl1d::from_knots(aux_knots(gauge), |x| gauge.pi_aux(&point(x)))),
        PwlExpr::EtaAux { gauge, tau, .. } => {
            let b = &gauge.b()[0];
            let t = Rational::from(tau.tau);
            let mut knots = Vec::new();
            for k in aux_knots(gauge) {
                for j in 0..tau.tau {
                    knots.push(b - &((&k + Rational::from(j)) / &t));
                }
            }
            Ok(Pwl1d::from_knots(knots, |x| f.eval(&point(x))))
        }
        PwlExpr::Affine { a, f, b, g, c } => {
            let mf = materialize(f)?;
            let mg = if b.is_zero() { mf.clone() } else { materialize(g)? };
            Ok(mf.affine(a, &mg, b, c))
        }
        PwlExpr::FillIn { fill } => Ok(fill_in_1d(fill)),
        PwlExpr::Symmetrize { comb, fillin, eta, b } => {
            let b = scalar_b(b)?;
            let c = materialize(comb)?;
            let fl = materialize(fillin)?;
            let e = materialize(eta)?;
            let p1 = fl.min(&e);
            let p2 = p1.reflect_complement(&b);
            let d = c.affine(&Rational::one(), &e, &-Rational::one(), &Rational::zero());
            let mut knots: Vec<Rational> = p1.knots.clone();
            knots.extend(p2.knots.iter().cloned());
            knots.extend(d.knots.iter().cloned());
            knots.extend(d.zeros());
            Ok(Pwl1d::from_knots(knots, |x| {
                let dv = d.eval(x);
                match dv.signum() {
                    -1 => p1.eval(x),
                    1 => p2.eval(x),
                    _ => e.eval(x),
                }
            }))
        }
    }
}

/// A superset of the breakpoints of `f` in `[0,1)`, sorted.
pub fn breakpoints_1d(f: &PwlExpr) -> Result<Vec<Rational>> {
    Ok(materialize(f)?.knots)
}

/// Compare a materialization against direct evaluation at all knots and segment midpoints.
/// Returns the first disagreement.
pub fn cross_check(f: &PwlExpr, m: &Pwl1d) -> Option<(Rational, Rational, Rational)> {
    m.knots
        .iter()
        .cloned()
        .chain(m.midpoints())
        .find_map(|x| {
            let direct = f.eval(&point(&x));
            let interp = m.eval(&x);
            (direct != interp).then_some((x, direct, interp))
        })
}
