//! Gradient probing and certified sup-norm distances for expression trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error as CrateError, Result};
use crate::expr::PwlExpr;
use crate::geometry::Grid;
use crate::rational::{RatVec, Rational};

pub const MAX_HALVINGS: u32 = 60;

/// `f` is affine on the ∞-ball of radius `cell_radius` around `point`, with this gradient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientSample {
    pub point: RatVec,
    pub gradient: RatVec,
    pub cell_radius: Rational,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no affine neighbourhood found around {point} after {halvings} halvings")]
pub struct AffinenessNotReached {
    pub point: RatVec,
    pub halvings: u32,
}

/// Exact affineness test on the axis and corner points of the ∞-ball of radius `r`.
fn affine_gradient(f: &PwlExpr, x: &RatVec, fx: &Rational, r: &Rational) -> Option<RatVec> {
    let n = x.dim();
    let two_r = r * Rational::from(2u64);
    let mut grad = RatVec::zeros(n);
    for i in 0..n {
        let mut xp = x.clone();
        xp[i] += r;
        let mut xm = x.clone();
        xm[i] -= r;
        let fp = f.eval(&xp);
        let fm = f.eval(&xm);
        let gi = (&fp - &fm) / &two_r;
        if &fp - fx != r * &gi {
            return None;
        }
        grad[i] = gi;
    }
    if n > 1 {
        for mask in 0u32..(1 << n) {
            let mut y = x.clone();
            let mut expected = fx.clone();
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    y[i] += r;
                    expected += &(r * &grad[i]);
                } else {
                    y[i] -= r;
                    expected -= &(r * &grad[i]);
                }
            }
            if f.eval(&y) != expected {
                return None;
            }
        }
    }
    Some(grad)
}

/// Halve the radius until the affineness test passes at both `r` and `r/2` with the
/// same gradient.
pub fn probe_gradient(
    f: &PwlExpr,
    x: &RatVec,
    initial_radius: &Rational,
) -> std::result::Result<GradientSample, AffinenessNotReached> {
    assert!(initial_radius.is_positive(), "initial radius must be positive");
    let fx = f.eval(x);
    let half = Rational::new(1, 2);
    let mut r = initial_radius.clone();
    for _ in 0..MAX_HALVINGS {
        let r2 = &r * &half;
        if let Some(g) = affine_gradient(f, x, &fx, &r) {
            if affine_gradient(f, x, &fx, &r2).as_ref() == Some(&g) {
                return Ok(GradientSample {
                    point: x.clone(),
                    gradient: g,
                    cell_radius: r,
                });
            }
        }
        r = r2;
    }
    Err(AffinenessNotReached {
        point: x.clone(),
        halvings: MAX_HALVINGS,
    })
}

/// Lower and upper bounds on `‖f − g‖∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceBound {
    pub lower: Rational,
    pub upper: Rational,
    /// A probe point attaining `lower`.
    pub argmax: RatVec,
    pub probe_delta: Rational,
    pub lipschitz_f: Rational,
    pub lipschitz_g: Rational,
}

/// `lower` is the exact maximum of `|f − g|` over the step-`probe_delta` grid and its
/// half-shift; every point is within ∞-distance `probe_delta/2` of a probe, so
/// `upper = lower + (L_f + L_g)·probe_delta/2`.
pub fn sup_distance(
    f: &PwlExpr,
    g: &PwlExpr,
    probe_delta: &Rational,
    lipschitz_f: &Rational,
    lipschitz_g: &Rational,
    budget: u128,
) -> Result<DistanceBound> {
    let n = f.dim();
    if g.dim() != n {
        return Err(CrateError::Dimension {
            expected: n,
            got: g.dim(),
        });
    }
    let grid = Grid::new(n, probe_delta)?;
    let len = grid.check_budget(budget / 2)?;
    let shift = RatVec::filled(n, probe_delta * Rational::new(1, 2));
    let (lower, argmax) = (0..2 * len)
        .into_par_iter()
        .map(|i| {
            let x = if i < len {
                grid.point(i)
            } else {
                &grid.point(i - len) + &shift
            };
            ((f.eval(&x) - g.eval(&x)).abs(), x)
        })
        .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
        .expect("grid is never empty");
    let upper = &lower + &((lipschitz_f + lipschitz_g) * probe_delta * Rational::new(1, 2));
    Ok(DistanceBound {
        lower,
        upper,
        argmax,
        probe_delta: probe_delta.clone(),
        lipschitz_f: lipschitz_f.clone(),
        lipschitz_g: lipschitz_g.clone(),
    })
}
