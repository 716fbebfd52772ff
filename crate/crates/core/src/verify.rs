//! Exact certificates for the minimality conditions, slope structure, dimension and distances.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::PwlExpr;
use crate::gauge::GaugeSimplex;
use crate::geometry::{on_grid, Grid};
use crate::oned::{cross_check, materialize, Pwl1d};
use crate::probe::{probe_gradient, sup_distance, DistanceBound, GradientSample};
use crate::rational::{RatVec, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Property {
    C1,
    C2,
    Subadditive,
    /// Conjunction of `C1`, `C2` and `Subadditive`.
    Minimality,
    SlopeCensus,
    GenuineDim,
    Distance,
    ExtremePreconditions,
}

/// How much of the domain a check covers, from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    RandomFalsify,
    ExactGrid,
    ExactComplete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Point {
        x: RatVec,
        value: Rational,
    },
    Symmetry {
        x: RatVec,
        reflected: RatVec,
        fx: Rational,
        f_reflected: Rational,
        sum: Rational,
    },
    Pair {
        x: RatVec,
        y: RatVec,
        fx: Rational,
        fy: Rational,
        fxy: Rational,
        delta: Rational,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        region: Option<String>,
    },
    Census {
        realized: Vec<RatVec>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        unexpected: Option<GradientSample>,
    },
    Rank {
        differences: Vec<RatVec>,
        rank: usize,
    },
    Distance {
        bound: DistanceBound,
        threshold: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub property: Property,
    pub mode: Mode,
    pub verdict: Verdict,
    #[serde(default)]
    pub witness: Option<Witness>,
    #[serde(default)]
    pub extremal_slack: Option<Rational>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub resolution: Option<Rational>,
    pub timing_ms: u64,
    #[serde(default)]
    pub partial: bool,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Certificate>,
}

impl Certificate {
    fn new(property: Property, mode: Mode, verdict: Verdict) -> Self {
        Certificate {
            property,
            mode,
            verdict,
            witness: None,
            extremal_slack: None,
            seed: None,
            resolution: None,
            timing_ms: 0,
            partial: false,
            notes: Vec::new(),
            components: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Zero out timing fields recursively, for reproducibility comparisons.
    pub fn without_timing(&self) -> Certificate {
        let mut c = self.clone();
        c.timing_ms = 0;
        c.components = c.components.iter().map(Certificate::without_timing).collect();
        c
    }

    /// Combine sub-certificates: FAIL dominates, then INDETERMINATE; the mode is the weakest.
    pub fn conjunction(property: Property, parts: Vec<Certificate>) -> Certificate {
        let verdict = if parts.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if parts.iter().any(|c| c.verdict == Verdict::Indeterminate) {
            Verdict::Indeterminate
        } else {
            Verdict::Pass
        };
        let mode = parts
            .iter()
            .map(|c| c.mode)
            .min()
            .unwrap_or(Mode::ExactComplete);
        let mut cert = Certificate::new(property, mode, verdict);
        cert.witness = parts
            .iter()
            .find(|c| c.verdict == Verdict::Fail)
            .and_then(|c| c.witness.clone());
        cert.partial = parts.iter().any(|c| c.partial);
        cert.timing_ms = parts.iter().map(|c| c.timing_ms).sum();
        cert.components = parts;
        cert
    }
}

/// Knobs shared by all checks.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Grid step for exhaustive grid checks; `None` skips them.
    pub resolution: Option<Rational>,
    /// Number of random points or pairs.
    pub probes: usize,
    pub seed: u64,
    /// Largest denominator of random coordinates.
    pub max_denominator: u64,
    /// Largest number of pairs an exhaustive sweep may visit.
    pub pair_budget: u128,
    /// Attempt the complete one-dimensional method when `n = 1`.
    pub exact_1d: bool,
    /// Number of gradient probes for the slope census.
    pub census_probes: usize,
    /// Starting radius for gradient probes.
    pub probe_radius: Rational,
    /// Gauge used to classify subadditivity witnesses.
    pub gauge: Option<Arc<GaugeSimplex>>,
}

pub const DEFAULT_MAX_DENOMINATOR: u64 = 10_000;
pub const DEFAULT_PAIR_BUDGET: u128 = 1_000_000_000;

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            resolution: None,
            probes: 1000,
            seed: 0,
            max_denominator: DEFAULT_MAX_DENOMINATOR,
            pair_budget: DEFAULT_PAIR_BUDGET,
            exact_1d: true,
            census_probes: 1000,
            probe_radius: Rational::new(1, 64),
            gauge: None,
        }
    }
}

/// Uniform random point of `[0,1)ⁿ` with coordinates `a/d`, `1 ≤ d ≤ max_den`.
pub fn random_point(rng: &mut impl Rng, n: usize, max_den: u64) -> RatVec {
    (0..n)
        .map(|_| {
            let d = rng.gen_range(1..=max_den) as i64;
            Rational::new(rng.gen_range(0..d), d)
        })
        .collect()
}

pub fn random_points(seed: u64, count: usize, n: usize, max_den: u64) -> Vec<RatVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(&mut rng, n, max_den)).collect()
}

struct Sweep<A> {
    min: Option<(Rational, usize, A)>,
    violation: Option<(usize, A)>,
    partial: bool,
}

/// Evaluate `item(i)` for `i < count`, tracking the minimum slack and stopping after the
/// batch containing the first negative slack. Results do not depend on scheduling.
fn sweep<A, F>(count: usize, item: F) -> Sweep<A>
where
    A: Clone + Send,
    F: Fn(usize) -> (Rational, A) + Sync,
{
    const CHUNK: usize = 256;
    let chunks = count.div_ceil(CHUNK);
    const BATCH: usize = 16;
    let mut out = Sweep {
        min: None,
        violation: None,
        partial: false,
    };
    let mut start = 0;
    while start < chunks {
        let end = (start + BATCH).min(chunks);
        let results: Vec<(Option<(Rational, usize, A)>, Option<(usize, A)>)> = (start..end)
            .into_par_iter()
            .map(|c| {
                let mut best: Option<(Rational, usize, A)> = None;
                for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                    let (slack, aux) = item(i);
                    let neg = slack.is_negative();
                    if best.as_ref().is_none_or(|(b, _, _)| &slack < b) {
                        best = Some((slack, i, aux.clone()));
                    }
                    if neg {
                        return (best, Some((i, aux)));
                    }
                }
                (best, None)
            })
            .collect();
        for (best, viol) in results {
            if let Some(b) = best {
                if out.min.as_ref().is_none_or(|m| b.0 < m.0) {
                    out.min = Some(b);
                }
            }
            if out.violation.is_none() {
                out.violation = viol;
            }
        }
        if out.violation.is_some() {
            out.partial = end < chunks;
            break;
        }
        start = end;
    }
    out
}

fn unit_lattice_points(n: usize) -> Vec<RatVec> {
    let mut pts = vec![RatVec::zeros(n)];
    pts.push(RatVec::filled(n, Rational::one()));
    pts.push((0..n).map(|i| Rational::from_int(if i % 2 == 0 { -2 } else { 3 })).collect());
    pts
}

/// A verified one-dimensional materialization, or the reason it is unavailable.
fn verified_1d(f: &PwlExpr, notes: &mut Vec<String>) -> Option<Pwl1d> {
    if f.dim() != 1 {
        return None;
    }
    match materialize(f) {
        Ok(m) => match cross_check(f, &m) {
            None => Some(m),
            Some((x, direct, interp)) => {
                notes.push(format!(
                    "one-dimensional materialization disagrees with direct evaluation at {x} ({direct} vs {interp}); falling back to grid and random checks"
                ));
                None
            }
        },
        Err(e) => {
            notes.push(format!("complete one-dimensional method unavailable: {e}"));
            None
        }
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// `f(z) = 0` on lattice points and `f ≥ 0`.
pub fn check_c1(f: &PwlExpr, opts: &CheckOptions) -> Result<Certificate> {
    let start = Instant::now();
    let n = f.dim();
    let mut notes = Vec::new();
    for z in unit_lattice_points(n) {
        let v = f.eval(&z);
        if !v.is_zero() {
            let mut c = Certificate::new(Property::C1, Mode::ExactComplete, Verdict::Fail);
            c.witness = Some(Witness::Point { x: z, value: v.clone() });
            c.extremal_slack = Some(v);
            c.notes.push("nonzero value at a lattice point".into());
            c.timing_ms = elapsed_ms(start);
            return Ok(c);
        }
    }

    let (mode, points): (Mode, Vec<RatVec>) = if let PwlExpr::Grid { grid } = f {
        notes.push("vertex check is complete for grid interpolants".into());
        let g = grid.grid();
        let len = g.check_budget(opts.pair_budget)?;
        (Mode::ExactComplete, (0..len).map(|i| g.point(i)).collect())
    } else if let Some(m) = opts.exact_1d.then(|| verified_1d(f, &mut notes)).flatten() {
        notes.push(format!("checked all {} breakpoints", m.knots().len()));
        (Mode::ExactComplete, m.knots().iter().map(|k| RatVec::new(vec![k.clone()])).collect())
    } else {
        let mut pts = Vec::new();
        let mut mode = Mode::RandomFalsify;
        if let Some(res) = &opts.resolution {
            let g = Grid::new(n, res)?;
            let len = g.check_budget(opts.pair_budget)?;
            pts.extend((0..len).map(|i| g.point(i)));
            mode = Mode::ExactGrid;
        }
        pts.extend(random_points(opts.seed, opts.probes, n, opts.max_denominator));
        (mode, pts)
    };

    let s = sweep(points.len(), |i| (f.eval(&points[i]), ()));
    let mut c = Certificate::new(
        Property::C1,
        mode,
        if s.violation.is_some() { Verdict::Fail } else { Verdict::Pass },
    );
    if let Some((i, _)) = s.violation {
        c.witness = Some(Witness::Point {
            x: points[i].clone(),
            value: f.eval(&points[i]),
        });
    }
    c.extremal_slack = s.min.map(|m| m.0);
    c.partial = s.partial;
    c.seed = (mode != Mode::ExactComplete).then_some(opts.seed);
    c.resolution = (mode == Mode::ExactGrid).then(|| opts.resolution.clone()).flatten();
    c.notes = notes;
    c.timing_ms = elapsed_ms(start);
    Ok(c)
}

/// `f(x) + f(b − x) = 1`.
pub fn check_c2(f: &PwlExpr, b: &RatVec, opts: &CheckOptions) -> Result<Certificate> {
    let start = Instant::now();
    let n = f.dim();
    if b.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.dim(),
        });
    }
    let mut notes = Vec::new();
    let (mode, points): (Mode, Vec<RatVec>) = match f {
        PwlExpr::Grid { grid } if on_grid(b, grid.grid().p) => {
            notes.push("vertex check is complete for grid interpolants with b on the grid".into());
            let g = grid.grid();
            let len = g.check_budget(opts.pair_budget)?;
            (Mode::ExactComplete, (0..len).map(|i| g.point(i)).collect())
        }
        _ => {
            if let Some(m) = opts.exact_1d.then(|| verified_1d(f, &mut notes)).flatten() {
                let mut pts: Vec<Rational> = m.knots().to_vec();
                pts.extend(m.knots().iter().map(|k| (&b[0] - k).fract()));
                pts.sort();
                pts.dedup();
                notes.push(format!("checked {} breakpoints and their reflections", pts.len()));
                (Mode::ExactComplete, pts.into_iter().map(|k| RatVec::new(vec![k])).collect())
            } else {
                let mut pts = Vec::new();
                let mut mode = Mode::RandomFalsify;
                if let Some(res) = &opts.resolution {
                    let g = Grid::new(n, res)?;
                    let len = g.check_budget(opts.pair_budget)?;
                    pts.extend((0..len).map(|i| g.point(i)));
                    mode = Mode::ExactGrid;
                }
                pts.extend(random_points(opts.seed ^ 0xC2, opts.probes, n, opts.max_denominator));
                (mode, pts)
            }
        }
    };
    let s = sweep(points.len(), |i| {
        let x = &points[i];
        let sum = f.eval(x) + f.eval(&(b - x));
        (-(sum - Rational::one()).abs(), ())
    });
    let mut c = Certificate::new(
        Property::C2,
        mode,
        if s.violation.is_some() { Verdict::Fail } else { Verdict::Pass },
    );
    if let Some((i, _)) = s.violation {
        let x = points[i].clone();
        let reflected = b - &x;
        let fx = f.eval(&x);
        let fr = f.eval(&reflected);
        c.witness = Some(Witness::Symmetry {
            sum: &fx + &fr,
            x,
            reflected,
            fx,
            f_reflected: fr,
        });
    }
    c.extremal_slack = s.min.map(|m| -m.0);
    c.partial = s.partial;
    c.seed = (mode != Mode::ExactComplete).then_some(opts.seed ^ 0xC2);
    c.resolution = (mode == Mode::ExactGrid).then(|| opts.resolution.clone()).flatten();
    c.notes = notes;
    c.timing_ms = elapsed_ms(start);
    Ok(c)
}

fn pair_witness(f: &PwlExpr, x: &RatVec, y: &RatVec, gauge: Option<&Arc<GaugeSimplex>>) -> Witness {
    let fx = f.eval(x);
    let fy = f.eval(y);
    let fxy = f.eval(&(x + y));
    Witness::Pair {
        delta: &fx + &fy - &fxy,
        region: gauge.map(|g| g.classify_pair(x, y).to_string()),
        x: x.clone(),
        y: y.clone(),
        fx,
        fy,
        fxy,
    }
}

struct TierResult {
    mode: Mode,
    min: Option<(Rational, RatVec, RatVec)>,
    violation: Option<(RatVec, RatVec)>,
    partial: bool,
    note: String,
}

fn tier_exact_1d(m: &Pwl1d) -> TierResult {
    let s = m.simplified();
    let knots = s.knots();
    let vals = s.values();
    let k = knots.len();
    let sw = sweep(k, |i| {
        let x = &knots[i];
        let fx = &vals[i];
        let mut best: Option<(Rational, Rational)> = None;
        let consider = |y: Rational, best: &mut Option<(Rational, Rational)>| {
            let d = fx + &s.eval(&y) - s.eval(&(x + &y));
            if best.as_ref().is_none_or(|(b, _)| &d < b) {
                *best = Some((d, y));
            }
        };
        for j in i..k {
            consider(knots[j].clone(), &mut best);
        }
        for kk in knots {
            consider((kk - x).fract(), &mut best);
        }
        let (d, y) = best.unwrap();
        (d, y)
    });
    let one = |r: &Rational| RatVec::new(vec![r.clone()]);
    TierResult {
        mode: Mode::ExactComplete,
        min: sw.min.map(|(d, i, y)| (d, one(&knots[i]), one(&y))),
        violation: sw.violation.map(|(i, y)| (one(&knots[i]), one(&y))),
        partial: sw.partial,
        note: format!("complete one-dimensional check over {k} breakpoints"),
    }
}

fn tier_grid(f: &PwlExpr, res: &Rational, budget: u128) -> Result<TierResult> {
    let n = f.dim();
    let g = Grid::new(n, res)?;
    let len = g.check_budget(budget)?;
    let pairs = (len as u128) * (len as u128);
    if pairs > budget {
        return Err(Error::Budget {
            requested: pairs,
            budget,
        });
    }
    let values: Vec<Rational> = (0..len).into_par_iter().map(|i| f.eval(&g.point(i))).collect();
    let coords: Vec<_> = (0..len).map(|i| g.coords_of(i)).collect();
    let sw = sweep(len, |i| {
        let mut best: Option<(Rational, usize)> = None;
        let mut sum = coords[i].clone();
        for j in i..len {
            for t in 0..n {
                sum[t] = coords[i][t] + coords[j][t];
            }
            let d = &values[i] + &values[j] - &values[g.index_of(&sum)];
            let better = best.as_ref().is_none_or(|(b, _)| &d < b);
            if better {
                let neg = d.is_negative();
                best = Some((d, j));
                if neg {
                    break;
                }
            }
        }
        best.unwrap()
    });
    Ok(TierResult {
        mode: Mode::ExactGrid,
        min: sw.min.map(|(d, i, j)| (d, g.point(i), g.point(j))),
        violation: sw.violation.map(|(i, j)| (g.point(i), g.point(j))),
        partial: sw.partial,
        note: format!("all {} unordered pairs of the grid with step {res}", len * (len + 1) / 2),
    })
}

fn tier_random(f: &PwlExpr, opts: &CheckOptions) -> TierResult {
    let n = f.dim();
    let xs = random_points(opts.seed, opts.probes, n, opts.max_denominator);
    let ys = random_points(opts.seed.wrapping_add(0x5EED), opts.probes, n, opts.max_denominator);
    let sw = sweep(xs.len(), |i| {
        let (x, y) = (&xs[i], &ys[i]);
        (f.eval(x) + f.eval(y) - f.eval(&(x + y)), ())
    });
    TierResult {
        mode: Mode::RandomFalsify,
        min: sw.min.map(|(d, i, _)| (d, xs[i].clone(), ys[i].clone())),
        violation: sw.violation.map(|(i, _)| (xs[i].clone(), ys[i].clone())),
        partial: sw.partial,
        note: format!(
            "{} random pairs, seed {}, denominators up to {}",
            opts.probes, opts.seed, opts.max_denominator
        ),
    }
}

/// `Δf(x,y) = f(x) + f(y) − f(x+y) ≥ 0`, by every tier that applies.
pub fn check_subadditive(f: &PwlExpr, opts: &CheckOptions) -> Result<Certificate> {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut tiers = Vec::new();
    if opts.exact_1d {
        if let Some(m) = verified_1d(f, &mut notes) {
            tiers.push(tier_exact_1d(&m));
        }
    }
    if tiers.iter().all(|t| t.violation.is_none()) {
        if let Some(res) = &opts.resolution {
            tiers.push(tier_grid(f, res, opts.pair_budget)?);
        }
    }
    if tiers.iter().all(|t| t.violation.is_none()) && opts.probes > 0 {
        tiers.push(tier_random(f, opts));
    }

    let mode = tiers.iter().map(|t| t.mode).max().unwrap_or(Mode::RandomFalsify);
    let failing = tiers.iter().find(|t| t.violation.is_some());
    let mut c = Certificate::new(
        Property::Subadditive,
        mode,
        if failing.is_some() { Verdict::Fail } else { Verdict::Pass },
    );
    if tiers.is_empty() {
        c.verdict = Verdict::Indeterminate;
        notes.push("no tier was applicable".into());
    }
    let gauge = opts.gauge.as_ref();
    if let Some(t) = failing {
        let (x, y) = t.violation.clone().unwrap();
        let w = pair_witness(f, &x, &y, gauge);
        if let Witness::Pair { delta, .. } = &w {
            if !delta.is_negative() {
                notes.push("witness did not reproduce under direct evaluation".into());
                c.verdict = Verdict::Indeterminate;
            }
        }
        c.mode = t.mode;
        c.witness = Some(w);
    }
    let best = tiers
        .iter()
        .filter_map(|t| t.min.as_ref())
        .min_by(|a, b| a.0.cmp(&b.0));
    if let Some((d, x, y)) = best {
        c.extremal_slack = Some(d.clone());
        let mut line = format!("minimum Δ = {d} at x = {x}, y = {y}");
        if let Some(g) = gauge {
            line.push_str(&format!(" ({})", g.classify_pair(x, y)));
        }
        notes.push(line);
        if c.witness.is_none() {
            c.witness = Some(pair_witness(f, x, y, gauge));
        }
    }
    for t in &tiers {
        notes.push(t.note.clone());
    }
    c.partial = tiers.iter().any(|t| t.partial);
    c.seed = tiers.iter().any(|t| t.mode == Mode::RandomFalsify).then_some(opts.seed);
    c.resolution = tiers
        .iter()
        .any(|t| t.mode == Mode::ExactGrid)
        .then(|| opts.resolution.clone())
        .flatten();
    c.notes = notes;
    c.timing_ms = elapsed_ms(start);
    Ok(c)
}

/// Conjunction of the three minimality checks.
pub fn minimality_certificate(f: &PwlExpr, b: &RatVec, opts: &CheckOptions) -> Result<Certificate> {
    let c1 = check_c1(f, opts)?;
    let c2 = check_c2(f, b, opts)?;
    let c3 = check_subadditive(f, opts)?;
    Ok(Certificate::conjunction(Property::Minimality, vec![c1, c2, c3]))
}

/// Realized gradients; exact from the breakpoints when `n = 1`, probed otherwise.
pub fn slope_census(f: &PwlExpr, expected: &[RatVec], opts: &CheckOptions) -> Certificate {
    let start = Instant::now();
    let n = f.dim();
    let mut notes = Vec::new();
    let mut realized: Vec<RatVec> = Vec::new();
    let mut unexpected = None;
    let mut mode = Mode::RandomFalsify;
    let add = |g: RatVec, realized: &mut Vec<RatVec>| {
        if !realized.contains(&g) {
            realized.push(g);
        }
    };
    if let Some(m) = opts.exact_1d.then(|| verified_1d(f, &mut notes)).flatten() {
        mode = Mode::ExactComplete;
        for s in m.slopes() {
            add(RatVec::new(vec![s]), &mut realized);
        }
        notes.push(format!("slopes of all {} segments", m.knots().len()));
    } else {
        let pts = random_points(opts.seed ^ 0x51, opts.census_probes * 2, n, opts.max_denominator);
        let samples: Vec<Option<GradientSample>> = pts
            .par_iter()
            .map(|x| probe_gradient(f, x, &opts.probe_radius).ok())
            .collect();
        let mut ok = 0;
        let mut failed = 0;
        for s in samples {
            if ok == opts.census_probes {
                break;
            }
            match s {
                Some(s) => {
                    ok += 1;
                    if !expected.contains(&s.gradient) && unexpected.is_none() {
                        unexpected = Some(s.clone());
                    }
                    add(s.gradient, &mut realized);
                }
                None => failed += 1,
            }
        }
        notes.push(format!("{ok} gradient probes, {failed} resampled"));
    }
    realized.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    if unexpected.is_none() && mode == Mode::ExactComplete {
        if let Some(g) = realized.iter().find(|g| !expected.contains(g)) {
            notes.push(format!("unexpected gradient {g}"));
        }
    }
    let all_expected = realized.iter().all(|g| expected.contains(g));
    let verdict = if all_expected && realized.len() == expected.len() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut c = Certificate::new(Property::SlopeCensus, mode, verdict);
    notes.push(format!("{} distinct gradients, {} expected", realized.len(), expected.len()));
    c.witness = Some(Witness::Census { realized, unexpected });
    c.seed = (mode == Mode::RandomFalsify).then_some(opts.seed ^ 0x51);
    c.notes = notes;
    c.timing_ms = elapsed_ms(start);
    c
}

/// Rank of a set of rational vectors by exact elimination.
pub fn rank(vectors: &[RatVec]) -> usize {
    let mut rows: Vec<Vec<Rational>> = vectors.iter().map(|v| v.as_slice().to_vec()).collect();
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        let pv = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let factor = &rows[i][c] / &pv;
                for j in c..cols {
                    let sub = &factor * &rows[r][j];
                    rows[i][j] -= &sub;
                }
            }
        }
        r += 1;
    }
    r
}

/// PASS iff the differences `g − g₀` span ℝⁿ.
pub fn genuine_dimension_check(gradients: &[RatVec], n: usize) -> Certificate {
    let start = Instant::now();
    let mut c = Certificate::new(Property::GenuineDim, Mode::ExactComplete, Verdict::Fail);
    if gradients.len() < 2 {
        c.notes.push("at least two gradients are required".into());
        c.witness = Some(Witness::Rank {
            differences: vec![],
            rank: 0,
        });
        return c;
    }
    let diffs: Vec<RatVec> = gradients[1..].iter().map(|g| g - &gradients[0]).collect();
    let rk = rank(&diffs);
    if rk == n {
        c.verdict = Verdict::Pass;
    }
    c.notes.push(format!("rank {rk} of gradient differences in dimension {n}"));
    c.witness = Some(Witness::Rank {
        differences: diffs,
        rank: rk,
    });
    c.timing_ms = elapsed_ms(start);
    c
}

/// Exact `‖f − g‖∞` for one-dimensional trees, maximized over the merged breakpoints.
pub fn exact_distance_1d(f: &PwlExpr, g: &PwlExpr, notes: &mut Vec<String>) -> Option<(Rational, RatVec)> {
    let mf = verified_1d(f, notes)?;
    let mg = verified_1d(g, notes)?;
    let d = mf.affine(&Rational::one(), &mg, &-Rational::one(), &Rational::zero());
    d.knots()
        .iter()
        .zip(d.values())
        .map(|(k, v)| (v.abs(), RatVec::new(vec![k.clone()])))
        .max_by(|a, b| a.0.cmp(&b.0))
}

/// PASS iff the certified upper bound on `‖f − g‖∞` is below `threshold`
/// (or at most `threshold` when `inclusive`).
pub fn distance_certificate(
    f: &PwlExpr,
    g: &PwlExpr,
    probe_delta: &Rational,
    threshold: &Rational,
    inclusive: bool,
    budget: u128,
) -> Result<Certificate> {
    let start = Instant::now();
    let lf = f.lipschitz_bound();
    let lg = g.lipschitz_bound();
    let mut notes = Vec::new();
    let (bound, mode) = match exact_distance_1d(f, g, &mut notes) {
        Some((d, x)) => (
            DistanceBound {
                lower: d.clone(),
                upper: d,
                argmax: x,
                probe_delta: Rational::zero(),
                lipschitz_f: lf,
                lipschitz_g: lg,
            },
            Mode::ExactComplete,
        ),
        None => (sup_distance(f, g, probe_delta, &lf, &lg, budget)?, Mode::ExactGrid),
    };
    let ok = if inclusive {
        bound.upper <= *threshold
    } else {
        bound.upper < *threshold
    };
    let verdict = if ok {
        Verdict::Pass
    } else if bound.lower > *threshold || (!inclusive && bound.lower == *threshold) {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    };
    let mut c = Certificate::new(Property::Distance, mode, verdict);
    c.notes = notes;
    if mode == Mode::ExactComplete {
        c.notes.push("exact maximum over the merged breakpoints".into());
    } else {
        c.resolution = Some(probe_delta.clone());
    }
    c.extremal_slack = Some(threshold - &bound.upper);
    c.notes.push(format!(
        "lower {} ≈ {}, upper {} ≈ {}, threshold {}",
        bound.lower,
        bound.lower.to_decimal_string(6),
        bound.upper,
        bound.upper.to_decimal_string(6),
        threshold
    ));
    c.witness = Some(Witness::Distance {
        bound,
        threshold: threshold.clone(),
    });
    c.timing_ms = elapsed_ms(start);
    Ok(c)
}

/// Hypotheses of the (n+1)-slope extremality theorem: minimal, exactly `n+1` gradients,
/// genuinely `n`-dimensional.
pub fn extreme_preconditions(
    f: &PwlExpr,
    b: &RatVec,
    expected_gradients: &[RatVec],
    opts: &CheckOptions,
) -> Result<Certificate> {
    let n = f.dim();
    let minimal = minimality_certificate(f, b, opts)?;
    let census = slope_census(f, expected_gradients, opts);
    let realized = match &census.witness {
        Some(Witness::Census { realized, .. }) => realized.clone(),
        _ => vec![],
    };
    let dim = genuine_dimension_check(&realized, n);
    let mut c = Certificate::conjunction(Property::ExtremePreconditions, vec![minimal, census, dim]);
    c.notes.push(
        "extremality follows from the (n+1)-slope theorem for genuinely n-dimensional minimal functions; this tool verifies only its hypotheses"
            .into(),
    );
    Ok(c)
}

/// Outcome of evaluating a cut on an integer solution of a tableau row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutReport {
    pub columns: Vec<RatVec>,
    pub solution: Vec<u64>,
    pub coefficients: Vec<Rational>,
    pub lhs: Rational,
    pub satisfied: bool,
    /// The cut evaluated at the zero solution (`x = −b`, `y = 0`), which it must cut off.
    pub zero_solution_lhs: Rational,
    pub zero_solution_cut_off: bool,
}

/// Check `Σ f(p^(i)) y_i ≥ 1` for a feasible solution of `Σ p^(i) y_i ∈ b + ℤⁿ`.
pub fn cut_validity_demo(f: &PwlExpr, b: &RatVec, columns: &[RatVec], solution: &[u64]) -> Result<CutReport> {
    let n = b.dim();
    if columns.len() != solution.len() {
        return Err(Error::Precondition(format!(
            "{} columns but {} solution entries",
            columns.len(),
            solution.len()
        )));
    }
    let mut combo = RatVec::zeros(n);
    for (p, &y) in columns.iter().zip(solution) {
        if p.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: p.dim(),
            });
        }
        combo = &combo + &p.scale(&Rational::from(y));
    }
    if !(&combo - b).is_integral() {
        return Err(Error::Precondition(format!(
            "infeasible instance: Σ p·y − b = {} is not integral",
            &combo - b
        )));
    }
    let coefficients: Vec<Rational> = columns.iter().map(|p| f.eval(p)).collect();
    let lhs: Rational = coefficients
        .iter()
        .zip(solution)
        .map(|(c, &y)| c * &Rational::from(y))
        .sum();
    Ok(CutReport {
        columns: columns.to_vec(),
        solution: solution.to_vec(),
        satisfied: lhs >= Rational::one(),
        lhs,
        coefficients,
        zero_solution_lhs: Rational::zero(),
        zero_solution_cut_off: true,
    })
}
