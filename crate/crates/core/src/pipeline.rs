//! Parameter selection and the five-stage construction
//! `π → π_pwl → π̃ → π_comb → π_fill-in → π_sym`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{b_denominator, MinimalFunctionSpec};
use crate::error::{Error, Result};
use crate::expr::PwlExpr;
use crate::fillin::FillIn;
use crate::gauge::{check_b, check_delta3, choose_tau, Disjointness, GaugeSimplex, TauChoice};
use crate::geometry::{default_enum_budget, grid_denominator, Grid};
use crate::grid::GridFunction;
use crate::rational::{RatVec, Rational};
use crate::verify::{distance_certificate, extreme_preconditions, Certificate, CheckOptions, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParamMode {
    Strict,
    Lab,
}

/// One exact inequality on the chosen parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    /// Construction step the inequality belongs to.
    pub step: String,
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub mode: ParamMode,
    pub eps: Rational,
    pub b: RatVec,
    pub delta1: Rational,
    pub delta2: Rational,
    pub delta3: Rational,
    pub delta4: Rational,
    pub tau: TauChoice,
    /// Lipschitz constant of the input function.
    pub lipschitz_pi: Rational,
    /// Lipschitz constant of `π_pwl`.
    pub l: Rational,
    /// `4Ln`.
    pub l_tilde: Rational,
    /// Lipschitz constant of the built `π̃`, when known.
    #[serde(default)]
    pub l_tilde_grid: Option<Rational>,
    /// `(5ε/12)·max_i ‖g^(i)‖₁`.
    pub l_gamma: Rational,
    pub checks: Vec<InequalityCheck>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl PipelineParams {
    pub fn n(&self) -> usize {
        self.b.dim()
    }

    pub fn all_checks_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    /// `5ε/6`.
    pub fn comb_weight(&self) -> Rational {
        Rational::new(5, 6) * &self.eps
    }

    /// `5ε/12`.
    pub fn fill_scale(&self) -> Rational {
        Rational::new(5, 12) * &self.eps
    }

    /// The `L̃` the inequalities are evaluated with: `4Ln` in strict mode, the grid value
    /// in lab mode once known.
    pub fn effective_l_tilde(&self) -> &Rational {
        match (self.mode, &self.l_tilde_grid) {
            (ParamMode::Lab, Some(l)) => l,
            _ => &self.l_tilde,
        }
    }

    /// Recompute every inequality flag from the current values.
    pub fn evaluate_checks(&mut self) {
        let n = Rational::from(self.n() as u64);
        let eps = &self.eps;
        let e36 = eps * Rational::new(1, 36);
        let l = &self.l;
        let mut checks = Vec::new();
        let mut push = |step: &str, name: &str, holds: bool, detail: String| {
            checks.push(InequalityCheck {
                step: step.into(),
                name: name.into(),
                holds,
                detail,
            })
        };

        let lp_d1 = &self.lipschitz_pi * &self.delta1;
        push(
            "pwl",
            "L_π·δ1 < ε/36",
            lp_d1 < e36,
            format!("{lp_d1} < {e36}"),
        );
        push(
            "pwl",
            "b ∈ U_δ1",
            on_step(&self.b, &self.delta1),
            format!("b = {}, δ1 = {}", self.b, self.delta1),
        );

        let q2 = &self.delta1 / &self.delta2;
        push(
            "flatten",
            "δ2 = δ1/q",
            q2.is_integer() && q2.is_positive(),
            format!("δ1/δ2 = {q2}"),
        );
        let r1 = (Rational::from(4u64) * l * &n).recip();
        push("flatten", "δ2 < 1/(4Ln)", self.delta2 < r1, format!("{} < {r1}", self.delta2));
        let r2 = &e36 / &(Rational::from(2u64) * l);
        push("flatten", "δ2 < (ε/36)/(2L)", self.delta2 < r2, format!("{} < {r2}", self.delta2));
        let dist = dist_to_lattice(&self.b);
        let four_d2 = Rational::from(4u64) * &self.delta2;
        push(
            "flatten",
            "balls of radius 2δ2 around ℤⁿ and b−ℤⁿ are disjoint",
            dist > four_d2,
            format!("dist∞(b, ℤⁿ) = {dist} > 4δ2 = {four_d2}"),
        );

        let lt = self.effective_l_tilde().clone();
        let n1 = &n + Rational::one();
        let dt = &self.delta2;
        let b1 = Rational::from(5u64) * eps / (Rational::from(12u64) * &lt * &n1);
        let b2 = dt / &(Rational::from(2u64) * &n1);
        let b3 = Rational::from(5u64) * dt * eps / (Rational::from(12u64) * &n1);
        push("perturb", "δ3 ≤ 5ε/(12L̃(n+1))", self.delta3 <= b1, format!("{} ≤ {b1}", self.delta3));
        push("perturb", "δ3 ≤ δ̃/(2(n+1))", self.delta3 <= b2, format!("{} ≤ {b2}", self.delta3));
        push("perturb", "δ3 ≤ 5δ̃ε/(12(n+1))", self.delta3 <= b3, format!("{} ≤ {b3}", self.delta3));
        push(
            "perturb",
            "δ3 = 1/p and b ∈ U_δ3",
            check_delta3(&self.b, &self.delta3).is_ok(),
            format!("δ3 = {}", self.delta3),
        );

        let q4 = &self.delta3 / &self.delta4;
        push(
            "fill-in",
            "δ4 = δ3/q",
            q4.is_integer() && q4.is_positive(),
            format!("δ3/δ4 = {q4}"),
        );
        let b4 = &e36 / &(Rational::from(2u64) * &self.l_gamma + &lt);
        push(
            "fill-in",
            "δ4 ≤ (ε/36)/(2L_γ + L̃)",
            self.delta4 <= b4,
            format!("{} ≤ {b4}", self.delta4),
        );

        let tau = Rational::from(self.tau.tau);
        let bt = Rational::from(6u64) * &self.delta3 / (Rational::from(5u64) * eps);
        push("tau", "1/τ ≤ 6δ3/(5ε)", tau.recip() <= bt, format!("1/{} ≤ {bt}", self.tau.tau));
        push(
            "tau",
            "τb ∈ b + ℤⁿ",
            self.tau.is_valid(&self.b, &self.delta3, eps),
            format!("τ = {} = 1 + {}·{}", self.tau.tau, self.tau.m, self.tau.s),
        );
        self.checks = checks;
    }
}

fn on_step(b: &RatVec, delta: &Rational) -> bool {
    match grid_denominator(delta) {
        Ok(p) => crate::geometry::on_grid(b, p),
        Err(_) => false,
    }
}

/// `max_i min(frac b_i, 1 − frac b_i)`, the ∞-distance from `b` to `ℤⁿ`.
pub fn dist_to_lattice(x: &RatVec) -> Rational {
    x.iter()
        .map(|c| {
            let f = c.fract();
            let g = Rational::one() - &f;
            f.min(g)
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

fn clamp_eps(eps: &Rational, notes: &mut Vec<String>) -> Result<Rational> {
    if !eps.is_positive() {
        return Err(Error::Precondition(format!("ε = {eps} must be positive")));
    }
    let half = Rational::new(1, 2);
    if eps > &half {
        notes.push(format!("ε = {eps} clamped to 1/2"));
        return Ok(half);
    }
    Ok(eps.clone())
}

fn max_dual_norm(b: &RatVec, delta3: &Rational) -> Result<Rational> {
    Ok(GaugeSimplex::new(b, delta3)?.max_dual_norm1())
}

/// Smallest multiple of `s` strictly greater than `bound`.
fn next_multiple_above(bound: &Rational, s: u64) -> u64 {
    let k = (bound / &Rational::from(s)).floor_i64() + 1;
    (k.max(1) as u64) * s
}

/// Smallest multiple of `s` that is at least `bound`.
fn next_multiple_at_least(bound: &Rational, s: u64) -> u64 {
    let k = (bound / &Rational::from(s)).ceil_i64();
    (k.max(1) as u64) * s
}

/// Parameters satisfying every inequality of the construction, with ε/36 substituted
/// into the approximation and flattening steps.
pub fn choose_params_strict(spec: &MinimalFunctionSpec, eps: &Rational) -> Result<PipelineParams> {
    let mut notes = Vec::new();
    let eps = clamp_eps(eps, &mut notes)?;
    let b = spec.b.clone();
    check_b(&b)?;
    let n = b.dim() as u64;
    let nr = Rational::from(n);
    let lp = spec
        .lipschitz
        .clone()
        .ok_or_else(|| Error::Precondition(format!("{} has no Lipschitz constant", spec.name)))?;
    let e36 = &eps * Rational::new(1, 36);
    let s = b_denominator(&b);

    // Largest δ1 = 1/p1 with L_π·δ1 < ε/36 and b ∈ U_δ1.
    let p1 = next_multiple_above(&(&lp / &e36), s);
    let delta1 = Rational::new(1, p1 as i64);
    // Every cell gradient of the interpolant has coordinates bounded by L_π.
    let l = &lp * &nr;
    if n > 1 {
        notes.push(format!("L = n·L_π = {l} bounds the Lipschitz constant of π_pwl"));
    }

    // δ2 = δ1/q below both bounds with the 2δ2-balls disjoint.
    let dist = dist_to_lattice(&b);
    let bound2 = (Rational::from(4u64) * &l * &nr)
        .recip()
        .min(&e36 / &(Rational::from(2u64) * &l))
        .min(&dist / &Rational::from(4u64));
    let q2 = next_multiple_above(&(&delta1 / &bound2), 1);
    let delta2 = &delta1 / &Rational::from(q2);

    let l_tilde = Rational::from(4u64) * &l * &nr;
    let n1 = &nr + Rational::one();
    let b3 = (Rational::from(5u64) * &eps / (Rational::from(12u64) * &l_tilde * &n1))
        .min(&delta2 / &(Rational::from(2u64) * &n1))
        .min(Rational::from(5u64) * &delta2 * &eps / (Rational::from(12u64) * &n1));
    let p3 = next_multiple_at_least(&b3.recip(), s).max(3);
    let delta3 = Rational::new(1, p3 as i64);

    let l_gamma = Rational::new(5, 12) * &eps * max_dual_norm(&b, &delta3)?;
    let b4 = &e36 / &(Rational::from(2u64) * &l_gamma + &l_tilde);
    let q4 = next_multiple_at_least(&(&delta3 / &b4), 1);
    let delta4 = &delta3 / &Rational::from(q4);
    let tau = choose_tau(&b, &delta3, &eps)?;

    let mut params = PipelineParams {
        mode: ParamMode::Strict,
        eps,
        b,
        delta1,
        delta2,
        delta3,
        delta4,
        tau,
        lipschitz_pi: lp,
        l,
        l_tilde,
        l_tilde_grid: None,
        l_gamma,
        checks: vec![],
        notes,
    };
    params.evaluate_checks();
    Ok(params)
}

/// User-chosen grid steps; only structural constraints are enforced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabOverrides {
    pub eps: Rational,
    pub delta1: Rational,
    pub delta2: Rational,
    pub delta3: Rational,
    pub delta4: Rational,
    #[serde(default)]
    pub tau: Option<u64>,
}

pub fn choose_params_lab(spec: &MinimalFunctionSpec, o: &LabOverrides) -> Result<PipelineParams> {
    let mut notes = Vec::new();
    let eps = clamp_eps(&o.eps, &mut notes)?;
    let b = spec.b.clone();
    check_b(&b)?;
    for (name, d) in [("δ1", &o.delta1), ("δ2", &o.delta2), ("δ3", &o.delta3), ("δ4", &o.delta4)] {
        grid_denominator(d).map_err(|_| Error::Precondition(format!("{name} = {d} is not of the form 1/p")))?;
    }
    if !on_step(&b, &o.delta1) {
        return Err(Error::Precondition(format!("b = {b} is not in U_δ1 for δ1 = {}", o.delta1)));
    }
    if !(&o.delta1 / &o.delta2).is_integer() {
        return Err(Error::Precondition(format!(
            "δ2 = {} is not of the form δ1/q for δ1 = {}",
            o.delta2, o.delta1
        )));
    }
    check_delta3(&b, &o.delta3)?;
    if !(&o.delta3 / &o.delta4).is_integer() {
        return Err(Error::Precondition(format!(
            "δ4 = {} is not of the form δ3/q for δ3 = {}",
            o.delta4, o.delta3
        )));
    }
    let tau = match o.tau {
        None => choose_tau(&b, &o.delta3, &eps)?,
        Some(t) => {
            let s = b_denominator(&b);
            if t < 2 || (t - 1) % s != 0 {
                return Err(Error::Precondition(format!("τ = {t} is not of the form 1 + m·{s}")));
            }
            TauChoice { tau: t, s, m: (t - 1) / s }
        }
    };
    let nr = Rational::from(b.dim() as u64);
    let lp = spec.lipschitz_or_bound();
    let l = &lp * &nr;
    let l_gamma = Rational::new(5, 12) * &eps * max_dual_norm(&b, &o.delta3)?;
    let mut params = PipelineParams {
        mode: ParamMode::Lab,
        eps,
        b,
        delta1: o.delta1.clone(),
        delta2: o.delta2.clone(),
        delta3: o.delta3.clone(),
        delta4: o.delta4.clone(),
        tau,
        lipschitz_pi: lp,
        l_tilde: Rational::from(4u64) * &l * &nr,
        l,
        l_tilde_grid: None,
        l_gamma,
        checks: vec![],
        notes,
    };
    params.evaluate_checks();
    Ok(params)
}

pub fn build_pi_pwl(spec: &MinimalFunctionSpec, params: &PipelineParams) -> Result<GridFunction> {
    let f = spec.expr.clone();
    GridFunction::interpolate_from_samples(move |x: &RatVec| f.eval(x), spec.n, &params.delta1, &params.b)
}

/// Flatten `π_pwl` to 0 near `ℤⁿ` and to 1 near `b + ℤⁿ` on `U_δ2`.
pub fn build_pi_adjust(pwl: &GridFunction, params: &PipelineParams) -> Result<GridFunction> {
    let b = &params.b;
    let d2 = &params.delta2;
    let dist = dist_to_lattice(b);
    if dist <= Rational::from(4u64) * d2 {
        return Err(Error::Precondition(format!(
            "balls of radius 2δ2 = {} around ℤⁿ and b − ℤⁿ overlap (dist∞(b, ℤⁿ) = {dist})",
            Rational::from(2u64) * d2
        )));
    }
    let n = pwl.n();
    let grid = Grid::new(n, d2)?;
    let len = grid.check_budget(default_enum_budget())?;
    let values = (0..len)
        .map(|i| {
            let u = grid.point(i);
            if &dist_to_lattice(&u) <= d2 {
                Rational::zero()
            } else if &dist_to_lattice(&(&u - b)) <= d2 {
                Rational::one()
            } else {
                pwl.eval(&u)
            }
        })
        .collect();
    GridFunction::from_values(n, d2, b.clone(), values)
}

/// `(1 − 5ε/6)·π̃ + (5ε/6)·π_δ3`.
pub fn build_pi_comb(tilde: &GridFunction, gauge: &Arc<GaugeSimplex>, params: &PipelineParams) -> PwlExpr {
    let w = params.comb_weight();
    PwlExpr::affine(
        Rational::one() - &w,
        Arc::new(PwlExpr::grid(tilde.clone())),
        w,
        Arc::new(PwlExpr::PiDelta3 { gauge: gauge.clone() }),
        Rational::zero(),
    )
}

pub fn build_fill_in(comb: &Arc<PwlExpr>, gauge: &Arc<GaugeSimplex>, params: &PipelineParams) -> Result<PwlExpr> {
    let fill = FillIn::new(comb.clone(), gauge.clone(), params.fill_scale(), &params.delta4)?;
    Ok(PwlExpr::FillIn { fill: Arc::new(fill) })
}

pub fn build_eta(gauge: &Arc<GaugeSimplex>, params: &PipelineParams) -> PwlExpr {
    PwlExpr::EtaAux {
        gauge: gauge.clone(),
        tau: params.tau.clone(),
        eps: params.eps.clone(),
    }
}

pub fn build_pi_sym(comb: &Arc<PwlExpr>, fillin: &Arc<PwlExpr>, eta: &Arc<PwlExpr>, b: &RatVec) -> PwlExpr {
    PwlExpr::Symmetrize {
        comb: comb.clone(),
        fillin: fillin.clone(),
        eta: eta.clone(),
        b: b.clone(),
    }
}

pub const STAGE_NAMES: [&str; 5] = ["pi_pwl", "pi_tilde", "pi_comb", "pi_fill_in", "pi_sym"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub expr: Arc<PwlExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCertificate {
    pub label: String,
    pub certificate: Certificate,
}

/// Stage-to-stage distance bounds and the total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceSummary {
    /// Sum of the stage upper bounds.
    pub triangle_upper: Rational,
    /// Direct bound on `‖π − π_sym‖∞`.
    pub direct_lower: Rational,
    pub direct_upper: Rational,
    pub total_upper: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub params: PipelineParams,
    pub stages: Vec<Stage>,
    pub eta: Arc<PwlExpr>,
    pub gauge: Arc<GaugeSimplex>,
    pub certificates: Vec<LabeledCertificate>,
    pub distances: DistanceSummary,
}

impl PipelineResult {
    pub fn stage(&self, name: &str) -> Option<&Arc<PwlExpr>> {
        self.stages.iter().find(|s| s.name == name).map(|s| &s.expr)
    }

    pub fn certificate(&self, label: &str) -> Option<&Certificate> {
        self.certificates
            .iter()
            .find(|c| c.label == label)
            .map(|c| &c.certificate)
    }

    pub fn pi_sym(&self) -> &Arc<PwlExpr> {
        self.stage("pi_sym").expect("pipeline always builds pi_sym")
    }

    /// Extreme-function hypotheses hold and, in strict mode, the total distance is below ε.
    pub fn succeeded(&self) -> bool {
        let pre = self
            .certificate(EXTREME_LABEL)
            .is_some_and(|c| c.verdict == Verdict::Pass);
        let dist = self.params.mode == ParamMode::Lab || self.distances.total_upper < self.params.eps;
        pre && dist
    }

    /// The worst verdict among the gating certificates.
    pub fn verdict(&self) -> Verdict {
        let gating: Vec<&Certificate> = self
            .certificates
            .iter()
            .filter(|c| c.label == EXTREME_LABEL || c.label == TOTAL_LABEL)
            .map(|c| &c.certificate)
            .collect();
        if gating.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if gating.iter().any(|c| c.verdict == Verdict::Indeterminate) {
            Verdict::Indeterminate
        } else if self.succeeded() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

pub const EXTREME_LABEL: &str = "pi_sym extreme preconditions";
pub const TOTAL_LABEL: &str = "distance pi to pi_sym";

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub check: CheckOptions,
    /// Probe step for distances when exact one-dimensional distances are unavailable.
    pub distance_delta: Rational,
    /// Skip the stage-by-stage distances.
    pub stage_distances: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            check: CheckOptions::default(),
            distance_delta: Rational::new(1, 256),
            stage_distances: true,
        }
    }
}

/// Expected gradients of `π_sym`: `(5ε/12)·g^(i)`.
pub fn expected_gradients(gauge: &GaugeSimplex, params: &PipelineParams) -> Vec<RatVec> {
    let s = params.fill_scale();
    gauge.duals().iter().map(|g| g.scale(&s)).collect()
}

/// Build all stages and run the default certificate suite.
pub fn run_pipeline(
    spec: &MinimalFunctionSpec,
    params: &PipelineParams,
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    let mut params = params.clone();
    if spec.b != params.b {
        return Err(Error::Precondition(format!(
            "spec b = {} differs from parameter b = {}",
            spec.b, params.b
        )));
    }
    let pwl = build_pi_pwl(spec, &params)?;
    let tilde = build_pi_adjust(&pwl, &params)?;
    params.l_tilde_grid = Some(tilde.lipschitz_constant());
    params.evaluate_checks();

    let gauge = Arc::new(GaugeSimplex::new(&params.b, &params.delta3)?);
    match gauge.check_disjointness(&Rational::from(2u64)) {
        Disjointness::Disjoint => {}
        other => params.notes.push(format!(
            "Λ_2δ3 + ℤⁿ and b − Λ_2δ3 − ℤⁿ are not shown disjoint: {other:?}"
        )),
    }
    let comb = Arc::new(build_pi_comb(&tilde, &gauge, &params));
    let fill = Arc::new(build_fill_in(&comb, &gauge, &params)?);
    let eta = Arc::new(build_eta(&gauge, &params));
    let sym = Arc::new(build_pi_sym(&comb, &fill, &eta, &params.b));
    let pwl = Arc::new(PwlExpr::grid(pwl));
    let tilde = Arc::new(PwlExpr::grid(tilde));
    let stages: Vec<Stage> = STAGE_NAMES
        .iter()
        .zip([&pwl, &tilde, &comb, &fill, &sym])
        .map(|(name, e)| Stage {
            name: name.to_string(),
            expr: (*e).clone(),
        })
        .collect();

    let mut check = opts.check.clone();
    check.gauge = Some(gauge.clone());
    let mut certificates = Vec::new();
    let expected = expected_gradients(&gauge, &params);
    certificates.push(LabeledCertificate {
        label: EXTREME_LABEL.into(),
        certificate: extreme_preconditions(&sym, &params.b, &expected, &check)?,
    });

    let eps = &params.eps;
    let budget = check.pair_budget;
    let pi = spec.expr.clone();
    let strict = params.mode == ParamMode::Strict;
    let mut triangle = Rational::zero();
    if opts.stage_distances {
        let stage_bounds: [(&str, &Arc<PwlExpr>, &Arc<PwlExpr>, Rational, bool); 4] = [
            ("distance pi to pi_tilde", &pi, &tilde, eps * Rational::new(1, 18), false),
            ("distance pi_tilde to pi_comb", &tilde, &comb, eps * Rational::new(5, 6), true),
            ("distance pi_comb to pi_fill_in", &comb, &fill, eps * Rational::new(1, 36), true),
            ("distance pi_fill_in to pi_sym", &fill, &sym, eps * Rational::new(1, 18), true),
        ];
        for (label, f, g, threshold, inclusive) in stage_bounds {
            let mut c = distance_certificate(f, g, &opts.distance_delta, &threshold, inclusive, budget)?;
            if !strict && c.verdict != Verdict::Pass {
                c.notes.push("stage bound is only guaranteed for strict parameters".into());
            }
            if let Some(crate::verify::Witness::Distance { bound, .. }) = &c.witness {
                triangle += &bound.upper;
            }
            certificates.push(LabeledCertificate {
                label: label.into(),
                certificate: c,
            });
        }
    }
    let total = distance_certificate(&pi, &sym, &opts.distance_delta, eps, false, budget)?;
    let (direct_lower, direct_upper) = match &total.witness {
        Some(crate::verify::Witness::Distance { bound, .. }) => (bound.lower.clone(), bound.upper.clone()),
        _ => unreachable!("distance certificates carry a distance witness"),
    };
    certificates.push(LabeledCertificate {
        label: TOTAL_LABEL.into(),
        certificate: total,
    });
    let total_upper = if opts.stage_distances {
        direct_upper.clone().min(triangle.clone())
    } else {
        direct_upper.clone()
    };

    Ok(PipelineResult {
        params,
        stages,
        eta,
        gauge,
        certificates,
        distances: DistanceSummary {
            triangle_upper: triangle,
            direct_lower,
            direct_upper,
            total_upper,
        },
    })
}
