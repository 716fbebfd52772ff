use std::sync::Arc;

use gjx::catalog::{gmic, nd_gauge_minimal, MinimalFunctionSpec};
use gjx::expr::PwlExpr;
use gjx::geometry::grid_points;
use gjx::pipeline::{
    build_pi_adjust, build_pi_comb, build_pi_pwl, choose_params_lab, choose_params_strict, expected_gradients,
    run_pipeline, LabOverrides, ParamMode, PipelineOptions, PipelineParams, EXTREME_LABEL, TOTAL_LABEL,
};
use gjx::verify::{random_points, CheckOptions, Verdict};
use gjx::{GaugeSimplex, RatVec, Rational};

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

fn v(s: &str) -> RatVec {
    s.parse().unwrap()
}

fn n_of(k: usize) -> Rational {
    Rational::from(k as u64)
}

/// Every inequality recomputed from the parameter values alone.
fn ledger_oracle(p: &PipelineParams, lp: &Rational) -> Vec<bool> {
    let n = n_of(p.b.dim());
    let n1 = &n + Rational::one();
    let e = &p.eps;
    let e36 = e / &r("36");
    let l = lp * &n;
    let lt = r("4") * &l * &n;
    let lg = r("5/12") * e * GaugeSimplex::new(&p.b, &p.delta3).unwrap().max_dual_norm1();
    let on = |d: &Rational| p.b.scale(&d.recip()).is_integral();
    let dist = p
        .b
        .iter()
        .map(|c| c.fract().min(Rational::one() - c.fract()))
        .max()
        .unwrap();
    let tau = Rational::from(p.tau.tau);
    vec![
        lp * &p.delta1 < e36,
        on(&p.delta1),
        (&p.delta1 / &p.delta2).is_integer(),
        p.delta2 < (r("4") * &l * &n).recip(),
        p.delta2 < &e36 / &(r("2") * &l),
        dist > r("4") * &p.delta2,
        p.delta3 <= r("5") * e / (r("12") * &lt * &n1),
        p.delta3 <= &p.delta2 / &(r("2") * &n1),
        p.delta3 <= r("5") * &p.delta2 * e / (r("12") * &n1),
        p.delta3.recip().is_integer() && on(&p.delta3),
        (&p.delta3 / &p.delta4).is_integer(),
        p.delta4 <= &e36 / &(r("2") * &lg + &lt),
        tau.recip() <= r("6") * &p.delta3 / (r("5") * e),
        p.b.scale(&(&tau - Rational::one())).is_integral(),
    ]
}

#[test]
fn strict_parameters_satisfy_every_inequality() {
    for (b, eps) in [("3/4", "1/2"), ("1/3", "1/4"), ("1/2", "1/2")] {
        let spec = gmic(&r(b)).unwrap();
        let p = choose_params_strict(&spec, &r(eps)).unwrap();
        assert_eq!(p.mode, ParamMode::Strict);
        assert!(p.all_checks_hold(), "{:#?}", p.checks);
        let oracle = ledger_oracle(&p, spec.lipschitz.as_ref().unwrap());
        assert_eq!(oracle.len(), p.checks.len());
        assert!(oracle.iter().all(|&h| h), "b = {b}: {oracle:?}");
        // δ1 is the coarsest admissible step.
        let s = spec.b[0].denom_u64().unwrap();
        let p1 = p.delta1.recip().to_i64().unwrap() as u64;
        if p1 > s {
            let coarser = Rational::new(1, (p1 - s) as i64);
            assert!(spec.lipschitz.as_ref().unwrap() * &coarser >= &p.eps / &r("36"));
        }
    }
    let spec = nd_gauge_minimal(&v("1/2,1/2"), &r("1/4")).unwrap();
    let p = choose_params_strict(&spec, &r("1/2")).unwrap();
    assert!(p.all_checks_hold(), "{:#?}", p.checks);
    assert!(ledger_oracle(&p, spec.lipschitz.as_ref().unwrap()).iter().all(|&h| h));
}

#[test]
fn lab_ledger_reports_violations() {
    let spec = gmic(&r("3/4")).unwrap();
    let p = choose_params_lab(&spec, &ac1_overrides()).unwrap();
    assert!(!p.all_checks_hold());
    let oracle = ledger_oracle(&p, &spec.lipschitz_or_bound());
    let flags: Vec<bool> = p.checks.iter().map(|c| c.holds).collect();
    assert_eq!(flags, oracle);
}

fn ac1_overrides() -> LabOverrides {
    LabOverrides {
        eps: r("1/2"),
        delta1: r("1/12"),
        delta2: r("1/24"),
        delta3: r("1/96"),
        delta4: r("1/384"),
        tau: None,
    }
}

fn flattened_and_comb(spec: &MinimalFunctionSpec, p: &PipelineParams) -> (Arc<PwlExpr>, Arc<PwlExpr>, Arc<GaugeSimplex>) {
    let pwl = build_pi_pwl(spec, p).unwrap();
    let tilde = build_pi_adjust(&pwl, p).unwrap();
    let gauge = Arc::new(GaugeSimplex::new(&p.b, &p.delta3).unwrap());
    let comb = Arc::new(build_pi_comb(&tilde, &gauge, p));
    (Arc::new(PwlExpr::grid(tilde)), comb, gauge)
}

#[test]
fn flattening_and_combination_in_two_dimensions() {
    let spec = nd_gauge_minimal(&v("3/4,1/2"), &r("1/4")).unwrap();
    let o = LabOverrides {
        eps: r("1/2"),
        delta1: r("1/24"),
        delta2: r("1/24"),
        delta3: r("1/24"),
        delta4: r("1/96"),
        tau: None,
    };
    let p = choose_params_lab(&spec, &o).unwrap();
    let (tilde, comb, gauge) = flattened_and_comb(&spec, &p);
    let b = &p.b;
    for u in grid_points(2, &p.delta2).unwrap() {
        let near = |w: &RatVec| w.iter().all(|c| c.fract().min(Rational::one() - c.fract()) <= p.delta2);
        if near(&u) {
            assert!(tilde.eval(&u).is_zero(), "u = {u}");
        } else if near(&(&u - b)) {
            assert_eq!(tilde.eval(&u), Rational::one(), "u = {u}");
        } else {
            assert_eq!(tilde.eval(&u), spec.eval(&u), "u = {u}");
        }
    }
    let w = r("5/6") * &p.eps;
    for x in random_points(4, 2000, 2, 500) {
        let expect = (Rational::one() - &w) * tilde.eval(&x) + &w * gauge.pi_delta3(&x);
        let got = comb.eval(&x);
        assert_eq!(got, expect);
        assert!((got - tilde.eval(&x)).abs() <= w);
    }
}

#[test]
fn one_dimensional_pipeline_stages() {
    let spec = gmic(&r("3/4")).unwrap();
    let p = choose_params_lab(&spec, &ac1_overrides()).unwrap();
    let opts = PipelineOptions {
        check: CheckOptions {
            resolution: Some(r("1/384")),
            probes: 2000,
            seed: 1,
            ..CheckOptions::default()
        },
        ..PipelineOptions::default()
    };
    let res = run_pipeline(&spec, &p, &opts).unwrap();
    assert!(res.succeeded(), "{:#?}", res.certificates);
    assert_eq!(res.verdict(), Verdict::Pass);
    assert!(res.params.l_tilde_grid.is_some());

    let comb = res.stage("pi_comb").unwrap();
    let fill = res.stage("pi_fill_in").unwrap();
    let sym = res.pi_sym();
    let eta = &res.eta;
    let b = &p.b;
    for x in grid_points(1, &p.delta4).unwrap() {
        assert_eq!(fill.eval(&x), comb.eval(&x), "x = {x}");
    }
    for x in random_points(9, 3000, 1, 5000) {
        let fx = fill.eval(&x);
        assert!(fx >= comb.eval(&x));
        let e = eta.eval(&x);
        assert!(e >= r("1/4") && e <= r("3/4"));
        // π_sym from its definition.
        let c = comb.eval(&x);
        let y = b - &x;
        let expect = if c < e {
            fx.clone().min(e.clone())
        } else if c > e {
            Rational::one() - fill.eval(&y).min(eta.eval(&y))
        } else {
            e.clone()
        };
        assert_eq!(sym.eval(&x), expect);
        assert_eq!(sym.eval(&x) + sym.eval(&y), Rational::one());
    }
    let expected = expected_gradients(&res.gauge, &res.params);
    assert_eq!(expected, vec![v("-80"), v("80/3")]);
    let total = res.certificate(TOTAL_LABEL).unwrap();
    assert!(total.passed());
    assert!(res.distances.total_upper < r("1/2"));
    assert!(res.certificate(EXTREME_LABEL).unwrap().passed());
}

#[test]
fn mismatched_b_is_rejected() {
    let spec = gmic(&r("3/4")).unwrap();
    let mut p = choose_params_lab(&spec, &ac1_overrides()).unwrap();
    p.b = v("1/4");
    assert!(run_pipeline(&spec, &p, &PipelineOptions::default()).is_err());
}

#[test]
fn overlapping_balls_are_rejected() {
    let spec = gmic(&r("3/4")).unwrap();
    let o = LabOverrides {
        delta2: r("1/12"),
        ..ac1_overrides()
    };
    let p = choose_params_lab(&spec, &o).unwrap();
    let pwl = build_pi_pwl(&spec, &p).unwrap();
    assert!(build_pi_adjust(&pwl, &p).is_err());
}
