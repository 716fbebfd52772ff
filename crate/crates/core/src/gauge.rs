//! The simplex `Λ` built from `b` and `δ3`, its gauge `γ`, and the functions derived from it.

use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{grid_denominator, IntBox};
use crate::rational::{lcm_of_denominators, RatVec, Rational};

/// `Λ = conv{v^(1), …, v^(n+1)}` together with the dual vectors `g^(i)` of its facets,
/// so that `γ(x) = max_i ⟨g^(i), x⟩`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "GaugeDoc", into = "GaugeDoc")]
pub struct GaugeSimplex {
    b: RatVec,
    delta3: Rational,
    v: Vec<RatVec>,
    g: Vec<RatVec>,
    /// `g^(i) = -neg[i] e^(i)` for `i < n`.
    neg: Vec<Rational>,
    /// `g^(n+1) = sum · 𝟙`.
    sum: Rational,
    /// Bounding box of `Λ`.
    lo: RatVec,
    hi: RatVec,
    approx: Approx,
}

#[derive(Clone, Debug)]
pub(crate) struct Approx {
    pub neg: Vec<f64>,
    pub sum: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GaugeDoc {
    n: usize,
    b: RatVec,
    delta3: Rational,
    vertices: Vec<RatVec>,
    duals: Vec<RatVec>,
}

impl TryFrom<GaugeDoc> for GaugeSimplex {
    type Error = Error;
    fn try_from(doc: GaugeDoc) -> Result<Self> {
        let g = GaugeSimplex::new(&doc.b, &doc.delta3)?;
        if g.n() != doc.n || g.v != doc.vertices || g.g != doc.duals {
            return Err(Error::Parse(
                "gauge document vertices or duals do not match b and delta3".into(),
            ));
        }
        Ok(g)
    }
}

impl From<GaugeSimplex> for GaugeDoc {
    fn from(g: GaugeSimplex) -> Self {
        GaugeDoc {
            n: g.n(),
            b: g.b,
            delta3: g.delta3,
            vertices: g.v,
            duals: g.g,
        }
    }
}

impl PartialEq for GaugeSimplex {
    fn eq(&self, other: &Self) -> bool {
        self.b == other.b && self.delta3 == other.delta3
    }
}

impl Eq for GaugeSimplex {}

impl fmt::Debug for GaugeSimplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeSimplex")
            .field("b", &self.b)
            .field("delta3", &self.delta3)
            .field("v", &self.v)
            .field("g", &self.g)
            .finish()
    }
}

/// Validate `b ∈ ([0,1)ⁿ ∩ ℚⁿ) ∖ {0}`.
pub fn check_b(b: &RatVec) -> Result<()> {
    if b.dim() == 0 {
        return Err(Error::InvalidB("b must have at least one coordinate".into()));
    }
    if b.iter().any(|c| c.is_negative() || c >= &Rational::one()) {
        return Err(Error::InvalidB(format!(
            "b = {b} must lie in [0,1)^n (b ∈ ℚⁿ∖ℤⁿ, reduced modulo ℤⁿ)"
        )));
    }
    if b.is_zero() {
        return Err(Error::InvalidB(format!(
            "b = {b} is integral; b ∈ ℚⁿ∖ℤⁿ is required"
        )));
    }
    Ok(())
}

fn ceil_i64(r: &Rational) -> i64 {
    r.ceil_i64()
}

impl GaugeSimplex {
    pub fn new(b: &RatVec, delta3: &Rational) -> Result<Self> {
        check_b(b)?;
        if !delta3.is_positive() {
            return Err(Error::Precondition(format!("delta3 = {delta3} must be positive")));
        }
        let n = b.dim();
        let nr = Rational::from(n as u64);
        let one = RatVec::filled(n, Rational::one());
        let base = (b - &one).scale(delta3);
        let mut v: Vec<RatVec> = (0..n)
            .map(|i| {
                let mut w = base.clone();
                w[i] += delta3 * &nr;
                w
            })
            .collect();
        v.push(base.clone());
        let neg: Vec<Rational> = b
            .iter()
            .map(|bi| (delta3 * (Rational::one() - bi)).recip())
            .collect();
        let sum = (delta3 * b.sum()).recip();
        let mut g: Vec<RatVec> = (0..n)
            .map(|i| {
                let mut w = RatVec::zeros(n);
                w[i] = -&neg[i];
                w
            })
            .collect();
        g.push(RatVec::filled(n, sum.clone()));

        // (Σb_i/n) v^(n+1) + Σ ((1−b_i)/n) v^(i) = 0 puts the origin inside Λ.
        let mut centre = v[n].scale(&(b.sum() / &nr));
        for i in 0..n {
            centre = &centre + &v[i].scale(&((Rational::one() - &b[i]) / &nr));
        }
        if !centre.is_zero() {
            return Err(Error::Precondition(format!(
                "interior-point identity failed for b = {b}"
            )));
        }

        let lo = base.clone();
        let hi: RatVec = base.iter().map(|c| c + &(delta3 * &nr)).collect();
        let approx = Approx {
            neg: neg.iter().map(Rational::to_f64).collect(),
            sum: sum.to_f64(),
            lo: lo.iter().map(Rational::to_f64).collect(),
            hi: hi.iter().map(Rational::to_f64).collect(),
        };
        Ok(GaugeSimplex {
            b: b.clone(),
            delta3: delta3.clone(),
            v,
            g,
            neg,
            sum,
            lo,
            hi,
            approx,
        })
    }

    pub fn n(&self) -> usize {
        self.b.dim()
    }

    pub fn b(&self) -> &RatVec {
        &self.b
    }

    pub fn delta3(&self) -> &Rational {
        &self.delta3
    }

    /// `v^(1), …, v^(n+1)`.
    pub fn vertices(&self) -> &[RatVec] {
        &self.v
    }

    /// `g^(1), …, g^(n+1)`.
    pub fn duals(&self) -> &[RatVec] {
        &self.g
    }

    pub(crate) fn approx(&self) -> &Approx {
        &self.approx
    }

    /// Bounding box `[lo, hi]` of `Λ`.
    pub fn bounding_box(&self) -> (&RatVec, &RatVec) {
        (&self.lo, &self.hi)
    }

    /// `max_i ‖g^(i)‖₁`.
    pub fn max_dual_norm1(&self) -> Rational {
        self.g
            .iter()
            .map(RatVec::norm_1)
            .fold(Rational::zero(), Rational::max)
    }

    /// `γ(x) = max_i ⟨g^(i), x⟩`.
    pub fn eval(&self, x: &RatVec) -> Rational {
        debug_assert_eq!(x.dim(), self.n());
        let mut best = &self.sum * &x.sum();
        for (c, xi) in self.neg.iter().zip(x.iter()) {
            if xi.is_negative() {
                let val = -(c * xi);
                if val > best {
                    best = val;
                }
            }
        }
        best
    }

    pub(crate) fn eval_f64(&self, x: &[f64]) -> f64 {
        let a = &self.approx;
        let mut best = a.sum * x.iter().sum::<f64>();
        for (c, xi) in a.neg.iter().zip(x) {
            best = best.max(-c * xi);
        }
        best
    }

    /// Whether `x ∈ Λ`.
    pub fn contains(&self, x: &RatVec) -> bool {
        self.eval(x) <= Rational::one()
    }

    /// Barycentric coordinates of `x` with respect to `v^(1), …, v^(n+1)`.
    pub fn barycentric(&self, x: &RatVec) -> Vec<Rational> {
        let n = self.n();
        let scale = &self.delta3 * Rational::from(n as u64);
        let mut lam: Vec<Rational> = (0..n).map(|i| (&x[i] - &self.lo[i]) / &scale).collect();
        let rest = Rational::one() - lam.iter().sum::<Rational>();
        lam.push(rest);
        lam
    }

    /// Integer box of `z` for which `w − z` can lie in `level·Λ`.
    fn lattice_box(&self, w: &RatVec, level: &Rational) -> (SmallVec<[i64; 4]>, SmallVec<[i64; 4]>) {
        let lo = (0..self.n())
            .map(|i| ceil_i64(&(&w[i] - &(level * &self.hi[i]))))
            .collect();
        let hi = (0..self.n())
            .map(|i| (&w[i] - &(level * &self.lo[i])).floor_i64())
            .collect();
        (lo, hi)
    }

    fn lattice_candidates(&self, w: &RatVec, level: &Rational) -> impl Iterator<Item = RatVec> {
        let (lo, hi) = self.lattice_box(w, level);
        IntBox::new(lo, hi).map(|k| RatVec::from_ints(&k))
    }

    /// Some `z ∈ ℤⁿ` with `x ∈ Λ + z`.
    pub fn lattice_cell_containing(&self, x: &RatVec) -> Option<RatVec> {
        self.lattice_candidates(x, &Rational::one())
            .find(|z| self.contains(&(x - z)))
    }

    /// Some `z ∈ ℤⁿ` with `x ∈ b − (Λ + z)`.
    pub fn reflected_cell_containing(&self, x: &RatVec) -> Option<RatVec> {
        let w = &self.b - x;
        self.lattice_candidates(&w, &Rational::one())
            .find(|z| self.contains(&(&w - z)))
    }

    /// `min_z min(½, ½γ(x−z)) + max_z max(0, ½ − ½γ(b−x−z))`.
    pub fn pi_delta3(&self, x: &RatVec) -> Rational {
        let half = Rational::new(1, 2);
        let one = Rational::one();
        let mut low = half.clone();
        for z in self.lattice_candidates(x, &one) {
            let val = &half * self.eval(&(x - &z));
            if val < low {
                low = val;
            }
        }
        let w = &self.b - x;
        let mut high = Rational::zero();
        for z in self.lattice_candidates(&w, &one) {
            let val = &half - &(&half * self.eval(&(&w - &z)));
            if val > high {
                high = val;
            }
        }
        low + high
    }

    /// `min_{z ∈ ℤⁿ} γ(x − z)`.
    pub fn periodic_gauge(&self, x: &RatVec) -> Rational {
        let n = self.n();
        let base: SmallVec<[i64; 4]> = x.iter().map(Rational::floor_i64).collect();
        let top: SmallVec<[i64; 4]> = base.iter().map(|k| k + 1).collect();
        let mut best: Option<Rational> = None;
        for k in IntBox::new(base, top) {
            let val = self.eval(&(x - &RatVec::from_ints(&k)));
            if best.as_ref().is_none_or(|b| &val < b) {
                best = Some(val);
            }
        }
        let level = best.clone().unwrap();
        debug_assert!(n > 0);
        for z in self.lattice_candidates(x, &level) {
            let val = self.eval(&(x - &z));
            if best.as_ref().is_none_or(|b| &val < b) {
                best = Some(val);
            }
        }
        best.unwrap()
    }

    /// `δ3 · min_z γ(x − z)`.
    pub fn pi_aux(&self, x: &RatVec) -> Rational {
        &self.delta3 * self.periodic_gauge(&x.fract())
    }

    /// `½ + 5ε/(24δ3τ) − (5ε/(12δ3τ)) · π_aux(τ(b − x))`.
    pub fn eta_aux(&self, tau: &TauChoice, eps: &Rational, x: &RatVec) -> Rational {
        let t = Rational::from(tau.tau);
        let k = eta_coefficient(eps, &self.delta3, tau);
        let arg = (&self.b - x).scale(&t).fract();
        Rational::new(1, 2) + &k * Rational::new(1, 2) - &k * self.pi_aux(&arg)
    }

    /// Classify `(x, y)` against the cases that bound `Δπ_δ3` from below.
    pub fn classify_pair(&self, x: &RatVec, y: &RatVec) -> PairRegion {
        let in_x = self.lattice_cell_containing(x);
        let in_y = self.lattice_cell_containing(y);
        let in_sum = self.reflected_cell_containing(&(x + y));
        match (in_x, in_y, in_sum) {
            (None, None, None) => PairRegion::Outside,
            (Some(z), None, None) => PairRegion::FirstInLambda { z },
            (None, None, Some(z)) => PairRegion::SumInReflected { z },
            _ => PairRegion::Other,
        }
    }

    /// Whether `sΛ + z¹` and `b − (sΛ + z²)` are disjoint for all `z¹, z² ∈ ℤⁿ`.
    pub fn check_disjointness(&self, s: &Rational) -> Disjointness {
        let n = self.n();
        let sv: Vec<RatVec> = self.v.iter().map(|v| v.scale(s)).collect();
        let two_s = s * Rational::from(2u64);
        let lo: SmallVec<[i64; 4]> = (0..n)
            .map(|i| ceil_i64(&(&self.b[i] - &(&two_s * &self.hi[i]))))
            .collect();
        let hi: SmallVec<[i64; 4]> = (0..n)
            .map(|i| (&self.b[i] - &(&two_s * &self.lo[i])).floor_i64())
            .collect();
        let mut axes: Vec<RatVec> = self.g.clone();
        if n == 3 {
            let mut edges = Vec::new();
            for j in 0..=n {
                for k in j + 1..=n {
                    edges.push(&self.v[j] - &self.v[k]);
                }
            }
            for (a, e) in edges.iter().enumerate() {
                for f in &edges[a + 1..] {
                    let c = cross3(e, f);
                    if !c.is_zero() {
                        axes.push(c);
                    }
                }
            }
        }
        let mut undecided = false;
        for k in IntBox::new(lo, hi) {
            let z = RatVec::from_ints(&k);
            let shift = &self.b - &z;
            let other: Vec<RatVec> = sv.iter().map(|v| &shift - v).collect();
            if let Some(p) = sv.iter().find(|p| self.eval(&(&shift - *p)) <= *s) {
                return Disjointness::Intersecting {
                    z,
                    point: (*p).clone(),
                };
            }
            if let Some(p) = other.iter().find(|p| self.eval(p) <= *s) {
                return Disjointness::Intersecting {
                    z,
                    point: p.clone(),
                };
            }
            let separated = axes.iter().any(|a| {
                let (amin, amax) = project(&sv, a);
                let (bmin, bmax) = project(&other, a);
                amax < bmin || bmax < amin
            });
            if !separated {
                if n <= 3 {
                    // Separating-axis candidates are complete up to dimension 3.
                    return Disjointness::Intersecting {
                        z,
                        point: RatVec::zeros(n),
                    };
                }
                undecided = true;
            }
        }
        if undecided {
            Disjointness::Indeterminate
        } else {
            Disjointness::Disjoint
        }
    }
}

fn project(points: &[RatVec], axis: &RatVec) -> (Rational, Rational) {
    let mut it = points.iter().map(|p| p.dot(axis));
    let first = it.next().unwrap();
    it.fold((first.clone(), first), |(lo, hi), v| {
        (lo.min(v.clone()), hi.max(v))
    })
}

fn cross3(a: &RatVec, b: &RatVec) -> RatVec {
    RatVec::new(vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ])
}

/// Outcome of a simplex-disjointness test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Disjointness {
    Disjoint,
    /// `point` lies in both sets when it is not the origin placeholder used for
    /// separating-axis failures.
    Intersecting { z: RatVec, point: RatVec },
    Indeterminate,
}

/// Position of a pair `(x, y)` relative to the translates of `Λ` and `b − Λ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum PairRegion {
    /// `x, y ∉ Λ + ℤⁿ` and `x + y ∉ b − Λ − ℤⁿ`.
    Outside,
    /// `x ∈ Λ + z`, `y ∉ Λ + ℤⁿ`, `x + y ∉ b − Λ − ℤⁿ`.
    FirstInLambda { z: RatVec },
    /// `x + y ∈ b − (Λ + z)`, `x, y ∉ Λ + ℤⁿ`.
    SumInReflected { z: RatVec },
    Other,
}

impl fmt::Display for PairRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairRegion::Outside => write!(f, "x, y outside Λ+ℤⁿ and x+y outside b−Λ−ℤⁿ"),
            PairRegion::FirstInLambda { z } => write!(f, "x in Λ+{z}, y and x+y outside"),
            PairRegion::SumInReflected { z } => write!(f, "x+y in b−(Λ+{z}), x and y outside Λ+ℤⁿ"),
            PairRegion::Other => write!(f, "mixed region"),
        }
    }
}

/// `τ = 1 + m·s` with `s` the lcm of the denominators of `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauChoice {
    pub tau: u64,
    pub s: u64,
    pub m: u64,
}

impl TauChoice {
    /// Check `1/τ ≤ 6δ3/(5ε)`, `τ = 1 + ms` and `τb − b ∈ ℤⁿ`.
    pub fn is_valid(&self, b: &RatVec, delta3: &Rational, eps: &Rational) -> bool {
        self.tau == 1 + self.m * self.s
            && self.m >= 1
            && tau_bound_holds(self.tau, delta3, eps)
            && b.scale(&Rational::from(self.tau - 1)).is_integral()
    }
}

fn tau_bound_holds(tau: u64, delta3: &Rational, eps: &Rational) -> bool {
    Rational::from(tau).recip() <= Rational::from(6u64) * delta3 / (Rational::from(5u64) * eps)
}

/// Smallest `m ≥ 1` with `τ = 1 + ms` satisfying `1/τ ≤ 6δ3/(5ε)`.
pub fn choose_tau(b: &RatVec, delta3: &Rational, eps: &Rational) -> Result<TauChoice> {
    if !delta3.is_positive() || !eps.is_positive() {
        return Err(Error::Precondition("delta3 and eps must be positive".into()));
    }
    let s = lcm_of_denominators(b.iter())
        .to_u64()
        .ok_or_else(|| Error::Precondition("denominators of b are too large".into()))?;
    let need = Rational::from(5u64) * eps / (Rational::from(6u64) * delta3);
    let m_min = ((need - Rational::one()) / Rational::from(s)).ceil_i64().max(1) as u64;
    let choice = TauChoice {
        tau: 1 + m_min * s,
        s,
        m: m_min,
    };
    if !choice.is_valid(b, delta3, eps) {
        return Err(Error::Precondition(format!("no valid tau found: {choice:?}")));
    }
    Ok(choice)
}

/// `5ε / (12 δ3 τ)`.
pub fn eta_coefficient(eps: &Rational, delta3: &Rational, tau: &TauChoice) -> Rational {
    Rational::from(5u64) * eps / (Rational::from(12u64) * delta3 * Rational::from(tau.tau))
}

/// Require `δ3 = 1/p < 1/2` with `b ∈ U_δ3`.
pub fn check_delta3(b: &RatVec, delta3: &Rational) -> Result<u64> {
    let p = grid_denominator(delta3)?;
    if p <= 2 {
        return Err(Error::Precondition(format!("delta3 = {delta3} must be below 1/2")));
    }
    if !crate::geometry::on_grid(b, p) {
        return Err(Error::Precondition(format!(
            "b = {b} is not a point of the grid with step delta3 = {delta3}"
        )));
    }
    Ok(p)
}
