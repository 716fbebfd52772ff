
use gjx::catalog::{self, describe_failure, from_grid, from_grid_document, gmic, nd_gauge_minimal, resolve};
use gjx::expr::{gmic_value, PwlExpr};
use gjx::geometry::grid_points;
use gjx::verify::{
    check_c1, check_c2, check_subadditive, cut_validity_demo, distance_certificate, minimality_certificate,
    random_points, slope_census, CheckOptions, Mode, Verdict, Witness,
};
use gjx::{Error, GridFunction, RatVec, Rational};

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

fn v(s: &str) -> RatVec {
    s.parse().unwrap()
}

/// GMIC in the first coordinate, sampled on `U_{1/8}²` with `b = (1/2, 3/8)`.
fn gmic_plane() -> GridFunction {
    GridFunction::interpolate_from_samples(|x| gmic_value(&r("1/2"), &x[0]), 2, &r("1/8"), &v("1/2,3/8")).unwrap()
}

fn opts(resolution: Option<&str>, probes: usize, seed: u64) -> CheckOptions {
    CheckOptions {
        resolution: resolution.map(r),
        probes,
        seed,
        ..CheckOptions::default()
    }
}

#[test]
fn plane_gmic_is_minimal_by_brute_force() {
    let g = gmic_plane();
    let f = PwlExpr::grid(g.clone());
    let pts: Vec<RatVec> = grid_points(2, &r("1/16")).unwrap().collect();
    let vals: Vec<Rational> = pts.iter().map(|x| f.eval(x)).collect();
    let mut min_delta: Option<Rational> = None;
    for (i, x) in pts.iter().enumerate() {
        assert!(!vals[i].is_negative());
        assert_eq!(&vals[i] + &f.eval(&(g.b() - x)), Rational::one());
        for (j, y) in pts.iter().enumerate() {
            let d = &vals[i] + &vals[j] - f.eval(&(x + y));
            if min_delta.as_ref().is_none_or(|m| &d < m) {
                min_delta = Some(d);
            }
        }
    }
    assert_eq!(f.eval(&RatVec::zeros(2)), Rational::zero());
    assert_eq!(min_delta, Some(Rational::zero()));

    let cert = minimality_certificate(&f, g.b(), &opts(Some("1/8"), 2000, 3)).unwrap();
    assert!(cert.passed(), "{cert:?}");
    assert_eq!(cert.mode, Mode::ExactGrid);
    let spec = from_grid("plane", g).unwrap();
    assert_eq!(spec.native_delta, Some(r("1/8")));
}

#[test]
fn grid_document_round_trips() {
    let g = gmic_plane();
    let doc = serde_json::to_string(&g).unwrap();
    let spec = from_grid_document("plane", &doc).unwrap();
    match spec.expr.as_ref() {
        PwlExpr::Grid { grid } => assert_eq!(serde_json::to_string(grid.as_ref()).unwrap(), doc),
        other => panic!("unexpected expression {}", other.kind()),
    }
    let path = std::env::temp_dir().join(format!("gjx-plane-{}.json", std::process::id()));
    std::fs::write(&path, &doc).unwrap();
    let loaded = resolve(path.to_str().unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(loaded.eval(&v("1/4,1/5")), r("1/2"));
}

#[test]
fn negative_vertex_is_rejected_with_point_witness() {
    let g = gmic_plane();
    let mut values = g.values().to_vec();
    let k = g.grid().index_of(&[3, 5]);
    values[k] = r("-1/100");
    let bad = GridFunction::from_values(2, &r("1/8"), g.b().clone(), values).unwrap();
    let err = from_grid("bad", bad.clone()).unwrap_err();
    match &err {
        Error::CertificateFailed { message, .. } => assert!(message.contains("(C1)"), "{message}"),
        other => panic!("unexpected error {other}"),
    }
    let f = PwlExpr::grid(bad);
    let c1 = check_c1(&f, &CheckOptions::default()).unwrap();
    assert_eq!(c1.verdict, Verdict::Fail);
    assert_eq!(c1.mode, Mode::ExactComplete);
    match c1.witness.as_ref().unwrap() {
        Witness::Point { x, value } => {
            assert_eq!(x, &v("3/8,5/8"));
            assert_eq!(value, &r("-1/100"));
            assert_eq!(&f.eval(x), value);
        }
        w => panic!("unexpected witness {w:?}"),
    }
    assert!(describe_failure(&c1).contains("-1/100"));
}

#[test]
fn broken_symmetry_is_rejected_with_reflected_pair() {
    let g = gmic_plane();
    let mut values = g.values().to_vec();
    let k = g.grid().index_of(&[1, 2]);
    values[k] = &values[k] + &r("1/50");
    let bad = GridFunction::from_values(2, &r("1/8"), g.b().clone(), values).unwrap();
    let f = PwlExpr::grid(bad.clone());
    let c2 = check_c2(&f, bad.b(), &CheckOptions::default()).unwrap();
    assert_eq!(c2.verdict, Verdict::Fail);
    match c2.witness.as_ref().unwrap() {
        Witness::Symmetry { x, reflected, sum, .. } => {
            assert_eq!(&(bad.b() - x).fract(), &reflected.fract());
            let u = v("1/8,1/4");
            assert!(x.fract() == u || reflected.fract() == u);
            assert_eq!(sum, &r("51/50"));
            assert_eq!(&(f.eval(x) + f.eval(reflected)), sum);
        }
        w => panic!("unexpected witness {w:?}"),
    }
    let msg = from_grid("bad", bad).unwrap_err().to_string();
    assert!(msg.contains("(C2)"), "{msg}");
}

#[test]
fn negated_and_scaled_functions_fail() {
    let base = gmic(&r("1/3")).unwrap().expr;
    let neg = PwlExpr::negated(base.clone());
    let b = v("1/3");
    assert!(!minimality_certificate(&neg, &b, &CheckOptions::default()).unwrap().passed());
    let doubled = PwlExpr::affine(r("2"), base.clone(), Rational::zero(), base.clone(), Rational::zero());
    let c2 = check_c2(&doubled, &b, &CheckOptions::default()).unwrap();
    assert_eq!(c2.verdict, Verdict::Fail);
}

#[test]
fn random_checks_are_reproducible() {
    let f = nd_gauge_minimal(&v("3/4,1/2"), &r("1/4")).unwrap().expr;
    let a = check_subadditive(&f, &opts(None, 3000, 11)).unwrap();
    let b = check_subadditive(&f, &opts(None, 3000, 11)).unwrap();
    assert!(a.passed());
    assert_eq!(a.mode, Mode::RandomFalsify);
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(a.seed, Some(11));
    let c = check_subadditive(&f, &opts(None, 3000, 12)).unwrap();
    assert_eq!(c.seed, Some(12));
    assert_eq!(random_points(5, 10, 2, 100), random_points(5, 10, 2, 100));
    assert_ne!(random_points(5, 10, 2, 100), random_points(6, 10, 2, 100));
}

#[test]
fn subadditivity_witness_reevaluates() {
    let base = gmic(&r("1/3")).unwrap().expr;
    let neg = PwlExpr::negated(base);
    for o in [opts(None, 500, 1), opts(Some("1/12"), 0, 1)] {
        let c = check_subadditive(&neg, &CheckOptions { exact_1d: false, ..o }).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        match c.witness.as_ref().unwrap() {
            Witness::Pair { x, y, delta, .. } => {
                assert!(delta.is_negative());
                assert_eq!(&(neg.eval(x) + neg.eval(y) - neg.eval(&(x + y))), delta);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }
}

#[test]
fn gauge_function_has_three_gradients() {
    let b = v("3/4,1/2");
    let d3 = r("1/4");
    let spec = nd_gauge_minimal(&b, &d3).unwrap();
    let gauge = gjx::GaugeSimplex::new(&b, &d3).unwrap();
    let expected: Vec<RatVec> = gauge.duals().iter().map(|g| g.scale(&d3)).collect();
    let census = slope_census(&spec.expr, &expected, &opts(None, 0, 7));
    assert!(census.passed(), "{census:?}");
    match census.witness.unwrap() {
        Witness::Census { realized, .. } => assert_eq!(realized.len(), 3),
        w => panic!("unexpected witness {w:?}"),
    }
    let gm = gmic(&r("1/2")).unwrap();
    let two = slope_census(&gm.expr, &[v("2"), v("-2")], &CheckOptions::default());
    assert!(two.passed());
    assert_eq!(two.mode, Mode::ExactComplete);
}

#[test]
fn convex_combination_averages() {
    let b = v("1/2,1/2");
    let f = nd_gauge_minimal(&b, &r("1/4")).unwrap();
    let g = nd_gauge_minimal(&b, &r("1/8")).unwrap();
    let h = catalog::convex_combination(&f, &g, &r("1/2")).unwrap();
    for x in grid_points(2, &r("1/7")).unwrap() {
        assert_eq!(h.eval(&x), (f.eval(&x) + g.eval(&x)) * r("1/2"));
    }
    assert!(catalog::convex_combination(&f, &gmic(&r("1/2")).unwrap(), &r("1/2")).is_err());
    assert!(catalog::convex_combination(&f, &g, &r("3/2")).is_err());
}

#[test]
fn exact_one_dimensional_distance() {
    let f = gmic(&r("1/2")).unwrap().expr;
    let g = gmic(&r("1/3")).unwrap().expr;
    let oracle = grid_points(1, &r("1/600"))
        .unwrap()
        .map(|x| (f.eval(&x) - g.eval(&x)).abs())
        .max()
        .unwrap();
    assert_eq!(oracle, r("1/3"));
    let c = distance_certificate(&f, &g, &r("1/64"), &r("1/3"), true, u128::MAX).unwrap();
    assert!(c.passed());
    assert_eq!(c.mode, Mode::ExactComplete);
    assert_eq!(c.extremal_slack, Some(Rational::zero()));
    let strict = distance_certificate(&f, &g, &r("1/64"), &r("1/3"), false, u128::MAX).unwrap();
    assert_eq!(strict.verdict, Verdict::Fail);
}

#[test]
fn cut_demo_checks_feasibility() {
    let f = gmic(&r("1/2")).unwrap().expr;
    let b = v("1/2");
    let rep = cut_validity_demo(&f, &b, &[v("1/4"), v("3/4")], &[2, 0]).unwrap();
    assert_eq!(rep.lhs, Rational::one());
    assert!(rep.satisfied && rep.zero_solution_cut_off);
    assert!(cut_validity_demo(&f, &b, &[v("1/4"), v("3/4")], &[1, 0]).is_err());
    assert!(cut_validity_demo(&f, &b, &[v("1/4")], &[1, 0]).is_err());
}

#[test]
fn catalog_names_resolve() {
    for e in catalog::catalog_entries().iter().filter(|e| !e.example.ends_with(".json")) {
        let spec = resolve(e.example).unwrap();
        assert!(spec.registration_certificate(0).unwrap().passed());
    }
    assert!(matches!(resolve("gmic:0"), Err(Error::InvalidB(_))));
    assert!(matches!(resolve("gmic:5/4"), Err(Error::InvalidB(_))));
    assert!(resolve("gauge:1/2,1/2").is_err());
}
