//! End-to-end acceptance criteria. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line regardless of capture settings.

use std::fs;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use gjx::catalog::{gmic, nd_gauge_minimal};
use gjx::expr::PwlExpr;
use gjx::gauge::{Disjointness, PairRegion};
use gjx::geometry::grid_points;
use gjx::pipeline::{
    build_pi_adjust, build_pi_comb, build_pi_pwl, choose_params_lab, choose_params_strict, expected_gradients,
    run_pipeline, LabOverrides, PipelineOptions, PipelineResult, EXTREME_LABEL,
};
use gjx::verify::{
    distance_certificate, minimality_certificate, random_points, Certificate, CheckOptions, Mode, Property, Witness,
};
use gjx::{GaugeSimplex, GridFunction, RatVec, Rational};
use serde_json::Value;

type Outcome = Result<String, String>;

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

fn v(s: &str) -> RatVec {
    s.parse().unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn component(c: &Certificate, p: Property) -> Option<&Certificate> {
    if c.property == p {
        return Some(c);
    }
    c.components.iter().find_map(|s| component(s, p))
}

fn realized(c: &Certificate) -> Vec<RatVec> {
    match component(c, Property::SlopeCensus).and_then(|s| s.witness.as_ref()) {
        Some(Witness::Census { realized, .. }) => realized.clone(),
        _ => vec![],
    }
}

fn census_matches(res: &PipelineResult, cert: &Certificate) -> Result<(), String> {
    let mut want = expected_gradients(&res.gauge, &res.params);
    let mut got = realized(cert);
    want.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    got.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    ensure(got == want, format!("census {got:?} vs expected {want:?}"))
}

fn ac1_run() -> Result<(PipelineResult, Duration), String> {
    let spec = gmic(&r("3/4")).map_err(|e| e.to_string())?;
    let o = LabOverrides {
        eps: r("1/2"),
        delta1: r("1/12"),
        delta2: r("1/24"),
        delta3: r("1/96"),
        delta4: r("1/384"),
        tau: None,
    };
    let start = Instant::now();
    let p = choose_params_lab(&spec, &o).map_err(|e| e.to_string())?;
    let opts = PipelineOptions {
        check: CheckOptions {
            resolution: Some(r("1/384")),
            probes: 10_000,
            seed: 1,
            ..CheckOptions::default()
        },
        ..PipelineOptions::default()
    };
    let res = run_pipeline(&spec, &p, &opts).map_err(|e| e.to_string())?;
    Ok((res, start.elapsed()))
}

fn ac1(run: &Result<(PipelineResult, Duration), String>) -> Outcome {
    let (res, elapsed) = run.as_ref().map_err(Clone::clone)?;
    let cert = res.certificate(EXTREME_LABEL).ok_or("no extreme certificate")?;
    ensure(cert.passed(), format!("extreme preconditions {:?}", cert.verdict))?;
    let c3 = component(cert, Property::Subadditive).ok_or("no subadditivity component")?;
    ensure(c3.mode == Mode::ExactComplete, format!("(C3) mode {:?}", c3.mode))?;
    census_matches(res, cert)?;
    ensure(realized(cert).len() == 2, "census size")?;
    let d = &res.distances.total_upper;
    ensure(d < &r("1/2"), format!("distance upper {d}"))?;
    within(*elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "δ = (1/12, 1/24, 1/96, 1/384); (C3) EXACT_COMPLETE; gradients {:?}; ‖π − π_sym‖ ≤ {} ≈ {}; {:.1?}",
        realized(cert).iter().map(ToString::to_string).collect::<Vec<_>>(),
        d,
        d.to_decimal_string(4),
        elapsed
    ))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let spec = gmic(&r("3/4")).map_err(|e| e.to_string())?;
    let p = choose_params_strict(&spec, &r("1/2")).map_err(|e| e.to_string())?;
    let failing: Vec<&str> = p.checks.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
    ensure(failing.is_empty(), format!("violated: {failing:?}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "{} inequalities hold with δ = ({}, {}, {}, {}), τ = {}",
        p.checks.len(),
        p.delta1,
        p.delta2,
        p.delta3,
        p.delta4,
        p.tau.tau
    ))
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let spec = nd_gauge_minimal(&v("3/4,1/2"), &r("1/4")).map_err(|e| e.to_string())?;
    let o = LabOverrides {
        eps: r("1/2"),
        delta1: r("1/24"),
        delta2: r("1/24"),
        delta3: r("1/24"),
        delta4: r("1/96"),
        tau: None,
    };
    let p = choose_params_lab(&spec, &o).map_err(|e| e.to_string())?;
    let opts = PipelineOptions {
        check: CheckOptions {
            resolution: Some(r("1/24")),
            probes: 100_000,
            seed: 1,
            ..CheckOptions::default()
        },
        distance_delta: r("1/192"),
        stage_distances: false,
    };
    let res = run_pipeline(&spec, &p, &opts).map_err(|e| e.to_string())?;
    let cert = res.certificate(EXTREME_LABEL).ok_or("no extreme certificate")?;
    ensure(cert.passed(), format!("extreme preconditions {:?}: {:?}", cert.verdict, cert.witness))?;
    let c3 = component(cert, Property::Subadditive).ok_or("no subadditivity component")?;
    ensure(c3.mode >= Mode::ExactGrid, format!("(C3) mode {:?}", c3.mode))?;
    ensure(c3.resolution == Some(r("1/24")), "(C3) resolution")?;
    ensure(c3.seed.is_some(), "(C3) random tier did not run")?;
    let slack = c3.extremal_slack.clone().ok_or("no slack")?;
    ensure(!slack.is_negative(), format!("min Δ = {slack}"))?;
    census_matches(&res, cert)?;
    ensure(realized(cert).len() == 3, "census size")?;
    let dim = component(cert, Property::GenuineDim).ok_or("no dimension component")?;
    ensure(dim.passed(), "genuine dimension")?;
    let d = &res.distances.total_upper;
    ensure(d < &r("1/2"), format!("distance upper {d}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!(
        "(C3) {:?} at 1/24 + 10^5 probes, min Δ = {slack}; 3 gradients, rank 2; ‖π − π_sym‖ ≤ {} ≈ {}; {:.1?}",
        c3.mode,
        d,
        d.to_decimal_string(4),
        elapsed
    ))
}

fn ac4(run: &Result<(PipelineResult, Duration), String>) -> Outcome {
    let (res, _) = run.as_ref().map_err(Clone::clone)?;
    let p = &res.params;
    let tilde = res.stage("pi_tilde").ok_or("no pi_tilde")?;
    let comb = res.stage("pi_comb").ok_or("no pi_comb")?;
    let fill = res.stage("pi_fill_in").ok_or("no pi_fill_in")?;
    let bound = p.comb_weight();
    let c = distance_certificate(tilde, comb, &r("1/256"), &bound, true, u128::MAX).map_err(|e| e.to_string())?;
    ensure(c.passed(), format!("‖π̃ − π_comb‖ certificate {:?}", c.verdict))?;
    let probes = random_points(44, 10_000, 1, 100_000);
    for x in &probes {
        ensure(fill.eval(x) >= comb.eval(x), format!("π_fill-in < π_comb at {x}"))?;
        let e = res.eta.eval(x);
        ensure(e >= r("1/4") && e <= r("3/4"), format!("η_aux({x}) = {e}"))?;
    }
    let mut on_grid = 0;
    for u in grid_points(1, &p.delta4).map_err(|e| e.to_string())? {
        ensure(fill.eval(&u) == comb.eval(&u), format!("π_fill-in ≠ π_comb at {u}"))?;
        on_grid += 1;
    }
    let upper = match &c.witness {
        Some(Witness::Distance { bound, .. }) => bound.upper.clone(),
        _ => Rational::zero(),
    };
    Ok(format!(
        "‖π̃ − π_comb‖ = {upper} ≤ 5ε/6 = {bound}; fill-in ≥ comb and η ∈ [1/4, 3/4] at 10^4 probes; equal on all {on_grid} points of U_δ4"
    ))
}

/// Random point of `Λ + z` from random barycentric weights.
fn point_in_lambda(g: &GaugeSimplex, seed: u64, z: &RatVec) -> RatVec {
    let n = g.n();
    let raw = random_points(seed, 1, n + 1, 997).pop().unwrap();
    let total: Rational = raw.iter().cloned().sum::<Rational>() + Rational::one();
    let mut x = z.clone();
    for (w, vert) in raw.iter().zip(g.vertices()) {
        x = &x + &vert.scale(&(w / &total));
    }
    x
}

fn ac5_instance(g: &GaugeSimplex, seed: u64) -> Result<[usize; 3], String> {
    let n = g.n();
    ensure(
        g.check_disjointness(&Rational::from(2u64)) == Disjointness::Disjoint,
        "2Λ-disjointness hypothesis fails",
    )?;
    let scale = (Rational::from(2 * (n as u64 + 1)) * g.delta3()).recip();
    let mut counts = [0usize; 3];
    let mut pairs: Vec<(RatVec, RatVec)> = {
        let xs = random_points(seed, 10_000, n, 1000);
        let ys = random_points(seed + 1, 10_000, n, 1000);
        xs.into_iter().zip(ys).collect()
    };
    let ys = random_points(seed + 2, 2000, n, 1000);
    for (i, y) in ys.into_iter().enumerate() {
        let z = RatVec::from_ints(&vec![(i % 3) as i64 - 1; n]);
        let x = point_in_lambda(g, seed * 7919 + i as u64, &z);
        let reflected = &(g.b() - &point_in_lambda(g, seed * 104_729 + i as u64, &z)) - &y;
        pairs.push((x, y.clone()));
        pairs.push((reflected, y));
    }
    for (x, y) in &pairs {
        let delta = g.pi_delta3(x) + g.pi_delta3(y) - g.pi_delta3(&(x + y));
        match g.classify_pair(x, y) {
            PairRegion::Outside => {
                ensure(delta >= r("1/2"), format!("case (i) Δ({x}, {y}) = {delta}"))?;
                counts[0] += 1;
            }
            PairRegion::FirstInLambda { z } => {
                let need = &scale * (x - &z).norm_inf();
                ensure(delta >= need, format!("case (ii) Δ({x}, {y}) = {delta} < {need}"))?;
                counts[1] += 1;
            }
            PairRegion::SumInReflected { z } => {
                let need = &scale * (&(g.b() - &(x + y)) - &z).norm_inf();
                ensure(delta >= need, format!("case (iii) Δ({x}, {y}) = {delta} < {need}"))?;
                counts[2] += 1;
            }
            PairRegion::Other => {}
        }
    }
    ensure(counts.iter().all(|&c| c > 0), format!("a case was never sampled: {counts:?}"))?;
    Ok(counts)
}

fn ac5() -> Outcome {
    let one = GaugeSimplex::new(&v("3/4"), &r("1/12")).map_err(|e| e.to_string())?;
    let two = GaugeSimplex::new(&v("3/4,1/2"), &r("1/24")).map_err(|e| e.to_string())?;
    let c1 = ac5_instance(&one, 5)?;
    let c2 = ac5_instance(&two, 6)?;
    Ok(format!("pairs in cases (i)/(ii)/(iii): n=1 {c1:?}, n=2 {c2:?}"))
}

fn gjx_cli(args: &[&str]) -> Result<(i32, Value), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_gjx"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let value = serde_json::from_slice(&o.stdout).map_err(|e| format!("{e}: {}", String::from_utf8_lossy(&o.stderr)))?;
    Ok((o.status.code().unwrap_or(-1), value))
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("timing_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn ac6() -> Outcome {
    let b = v("1/2,3/8");
    let good = GridFunction::interpolate_from_samples(|x| gjx::expr::gmic_value(&r("1/2"), &x[0]), 2, &r("1/8"), &b)
        .map_err(|e| e.to_string())?;
    let grid = good.grid();
    let dir = std::env::temp_dir().join(format!("gjx-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (name, idx, change) in [("negative", [3i64, 5], None), ("asymmetric", [1, 2], Some(r("1/50")))] {
        let mut values = good.values().to_vec();
        let k = grid.index_of(&idx);
        values[k] = match &change {
            None => r("-1/100"),
            Some(d) => &values[k] + d,
        };
        let bad = GridFunction::from_values(2, &r("1/8"), b.clone(), values).map_err(|e| e.to_string())?;
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, serde_json::to_string(&bad).unwrap()).map_err(|e| e.to_string())?;
        let args = ["verify", "--spec", path.to_str().unwrap(), "--resolution", "1/8", "--seed", "9"];
        let (code, mut first) = gjx_cli(&args)?;
        let (code2, mut second) = gjx_cli(&args)?;
        ensure(code == 1 && code2 == 1, format!("{name}: exit codes {code}, {code2}"))?;
        ensure(first["verdict"] == "FAIL", format!("{name}: verdict {}", first["verdict"]))?;
        let witness = first["witness"].clone();
        ensure(!witness.is_null(), format!("{name}: no witness"))?;
        strip_timing(&mut first);
        strip_timing(&mut second);
        ensure(first == second, format!("{name}: witness not reproducible"))?;
        lines.push(format!("{name}: {}", serde_json::to_string(&witness).unwrap()));
    }
    let _ = fs::remove_dir_all(&dir);
    Ok(lines.join("; "))
}

fn ac7() -> Outcome {
    let spec = gmic(&r("3/4")).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (eps, d1, d2, d3) in [("1/2", "1/12", "1/24", "1/96"), ("1/4", "1/24", "1/96", "1/96")] {
        let eps = r(eps);
        let o = LabOverrides {
            eps: eps.clone(),
            delta1: r(d1),
            delta2: r(d2),
            delta3: r(d3),
            delta4: r(d3),
            tau: None,
        };
        let p = choose_params_lab(&spec, &o).map_err(|e| e.to_string())?;
        let pwl = build_pi_pwl(&spec, &p).map_err(|e| e.to_string())?;
        let tilde = build_pi_adjust(&pwl, &p).map_err(|e| e.to_string())?;
        let gauge = Arc::new(GaugeSimplex::new(&p.b, &p.delta3).map_err(|e| e.to_string())?);
        let comb: PwlExpr = build_pi_comb(&tilde, &gauge, &p);
        let cert = minimality_certificate(&comb, &p.b, &CheckOptions::default()).map_err(|e| e.to_string())?;
        ensure(cert.passed(), format!("ε = {eps}: π_comb minimality {:?}: {:?}", cert.verdict, cert.witness))?;
        let bound = &eps / &r("18") + r("5/6") * &eps;
        let d = distance_certificate(&spec.expr, &comb, &r("1/256"), &bound, false, u128::MAX)
            .map_err(|e| e.to_string())?;
        ensure(d.passed(), format!("ε = {eps}: distance {:?} {:?}", d.verdict, d.notes))?;
        let upper = match &d.witness {
            Some(Witness::Distance { bound, .. }) => bound.upper.clone(),
            _ => Rational::zero(),
        };
        lines.push(format!("ε = {eps}: minimal ({:?}), ‖π − π_comb‖ = {upper} < {bound}", cert.mode));
    }
    Ok(lines.join("; "))
}

fn ac8() -> Outcome {
    let (code, reports) = gjx_cli(&["demo-cut", "--spec", "gmic:3/4", "--random", "20", "--seed", "8"])?;
    ensure(code == 0, format!("exit code {code}"))?;
    let reports = reports.as_array().ok_or("expected an array")?;
    ensure(reports.len() == 20, format!("{} reports", reports.len()))?;
    for (i, rep) in reports.iter().enumerate() {
        ensure(rep["satisfied"] == true, format!("instance {i} violates the cut: lhs {}", rep["lhs"]))?;
        ensure(rep["zero_solution_cut_off"] == true, format!("instance {i}: zero solution not cut off"))?;
    }
    let min_lhs = reports
        .iter()
        .map(|rep| rep["lhs"].as_str().unwrap().parse::<Rational>().unwrap())
        .min()
        .unwrap();
    Ok(format!("20 feasible instances satisfy Σπ(p)y ≥ 1 (min lhs {min_lhs}); zero solution cut off"))
}

fn main() -> ExitCode {
    let run1 = ac1_run();
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("AC-1", Box::new(|| ac1(&run1))),
        ("AC-2", Box::new(ac2)),
        ("AC-3", Box::new(ac3)),
        ("AC-4", Box::new(|| ac4(&run1))),
        ("AC-5", Box::new(ac5)),
        ("AC-6", Box::new(ac6)),
        ("AC-7", Box::new(ac7)),
        ("AC-8", Box::new(ac8)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("{name} PASS {detail}"),
            Err(why) => {
                failed += 1;
                println!("{name} FAIL {why}");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
