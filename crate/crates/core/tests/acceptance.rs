//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::Instant;

use qhmetric::counterexamples::{example1_exceeding_t, example1_run, example2_check};
use qhmetric::distortion::{
    lemma34_check, qh_constant_estimate, sample_pairs, targeted_pairs, theorem2_phi2,
    theorem3_constants, uniformity_constant_on_pairs, MonotoneTable,
};
use qhmetric::{
    chain_points, j_distance, qh_closed_form, qh_distance, Domain, MapSpec, PathPolyline, Point,
    SolverConfig,
};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn domains() -> Vec<(&'static str, Domain)> {
    vec![
        ("disk", Domain::unit_disk()),
        ("half_plane", Domain::upper_half_plane()),
        (
            "punctured_plane",
            Domain::punctured_plane(vec![Point::ORIGIN]),
        ),
        ("slit_disk", Domain::unit_slit_disk()),
        (
            "punctured_disk",
            Domain::punctured(Domain::unit_disk(), vec![Point::new(0.3, 0.1)]),
        ),
    ]
}

/// j ≤ k on 1000 pairs per domain.
fn eq11() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, d) in domains() {
        let pairs = sample_pairs(&d, 1000, 11).map_err(|e| e.to_string())?;
        let (mut violations, mut slack, mut exact_slack) = (0, f64::INFINITY, f64::INFINITY);
        for (x, y) in &pairs {
            let j = j_distance(&d, *x, *y).map_err(|e| e.to_string())?;
            let k = qh_distance(&d, *x, *y, &cfg).map_err(|e| format!("{name}: {e}"))?;
            if j > k.upper + 1e-9 {
                violations += 1;
            }
            slack = slack.min(k.upper - j);
            if let Some(exact) = qh_closed_form(&d, *x, *y) {
                exact_slack = exact_slack.min(exact - j);
                if exact - j < -1e-12 {
                    violations += 1;
                }
            }
        }
        ok &= pairs.len() == 1000 && violations == 0;
        notes.push(format!(
            "{name}: {} pairs, {violations} violations, min slack {slack:.3e}",
            pairs.len()
        ));
        if exact_slack.is_finite() {
            notes.push(format!("{name}: closed-form min slack {exact_slack:.3e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    check(ok, format!("{}; {secs:.1} s", notes.join("; ")))
}

/// Numeric solver against the closed forms, 1% relative.
fn solver_accuracy() -> Outcome {
    let cfg = SolverConfig::numeric();
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, d) in [
        ("half_plane", Domain::upper_half_plane()),
        (
            "punctured_plane",
            Domain::punctured_plane(vec![Point::ORIGIN]),
        ),
    ] {
        let pairs = sample_pairs(&d, 100, 22).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        let mut levels = 0;
        for (x, y) in &pairs {
            let exact = qh_closed_form(&d, *x, *y).ok_or("closed form missing")?;
            let k = qh_distance(&d, *x, *y, &cfg).map_err(|e| e.to_string())?;
            levels = levels.max(k.refinement_level);
            if exact > 0.0 {
                worst = worst.max((k.upper - exact).abs() / exact);
            }
        }
        ok &= pairs.len() == 100 && worst <= 0.01 && levels <= 4;
        notes.push(format!(
            "{name}: worst rel err {worst:.3e}, max refinement {levels}"
        ));
    }
    check(ok, notes.join("; "))
}

/// Uniformity constant of the once-punctured plane.
fn linden() -> Outcome {
    let d = Domain::punctured_plane(vec![Point::ORIGIN]);
    let mut pairs = sample_pairs(&d, 200, 33).map_err(|e| e.to_string())?;
    pairs.extend(targeted_pairs(&d, 50, 33));
    let est = uniformity_constant_on_pairs(&d, &pairs, &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    let target = PI / 3f64.ln();
    let (rx, ry) = (est.x.norm(), est.y.norm());
    let angle = (est.y.angle() - est.x.angle()).rem_euclid(2.0 * PI);
    let angle = angle.min(2.0 * PI - angle);
    let ok = est.c_prime >= target - 1e-3
        && est.c_prime <= target + 0.03
        && (rx - ry).abs() <= 1e-9 * rx.max(ry)
        && (angle - PI).abs() <= 0.05;
    check(
        ok,
        format!(
            "c' = {:.6} (pi/log 3 = {target:.6}), maximizer |x| = {rx:.6}, |y| = {ry:.6}, angle {angle:.6}",
            est.c_prime
        ),
    )
}

/// Ball estimate on the disk and slit disk.
fn ball_estimate() -> Outcome {
    let cfg = SolverConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, d) in [
        ("disk", Domain::unit_disk()),
        ("slit_disk", Domain::unit_slit_disk()),
    ] {
        for s in [0.25, 0.5, 0.9] {
            let r = lemma34_check(&d, 500, 44, s, &cfg).map_err(|e| e.to_string())?;
            ok &= r.checked == 500 && r.pass();
            notes.push(format!(
                "{name} s={s}: {} checked, {} hard, {} soft, worst {:.4}",
                r.checked, r.hard_violations, r.soft_violations, r.worst_ratio
            ));
        }
    }
    check(ok, notes.join("; "))
}

/// Constructive constants and the sphere chain.
fn constants() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (s1, c, dc, want) in [
        (1.0, 1.0, 0.0, 2.0),
        (1.0, 1.0, 1.5f64.ln(), 2.0),
        (3.0, 0.0, 0.0, 6.0),
    ] {
        let phi2 = theorem2_phi2(
            &MonotoneTable::linear(s1).map_err(|e| e.to_string())?,
            c,
            dc,
        )
        .map_err(|e| e.to_string())?;
        let err = (0..=200)
            .map(|i| i as f64 * 0.05)
            .map(|t| (phi2.eval(t) - want * t).abs())
            .fold(0.0, f64::max);
        ok &= err <= 1e-12;
        notes.push(format!("phi2 slope {want}: err {err:.1e}"));
    }
    let k1 = theorem3_constants(1.0).map_err(|e| e.to_string())?;
    let k2 = theorem3_constants(2.0).map_err(|e| e.to_string())?;
    let k8 = theorem3_constants(8.0).map_err(|e| e.to_string())?;
    ok &= (k1.a - (1.0 - (-1.0f64 / 3.0).exp())).abs() <= 1e-15
        && (k1.a - 0.283469).abs() < 5e-7
        && k1.m1 == 4.0;
    ok &= (k2.a - 0.153518).abs() < 5e-7 && k2.m1 == 8.0;
    ok &= k1.a > k2.a && k2.a > k8.a && k8.a > 0.0;
    notes.push(format!("a(1) = {:.6}, a(2) = {:.6}", k1.a, k2.a));

    let d = Domain::upper_half_plane();
    let path = PathPolyline::new(vec![Point::new(0.0, 1.0), Point::new(0.0, E)]);
    let chain = chain_points(&d, &path, k1.a).map_err(|e| e.to_string())?;
    // recurrence y ← y(1 + a) until e is inside the ball
    let mut y = 1.0;
    let mut oracle = 0;
    while E - y > k1.a * y {
        y *= 1.0 + k1.a;
        oracle += 1;
    }
    let residual = chain
        .points
        .windows(2)
        .map(|w| (w[0].dist(w[1]) - k1.a * d.boundary_distance(w[0]).unwrap()).abs())
        .fold(0.0, f64::max);
    ok &= chain.steps() == 4 && oracle == 4 && chain.terminal_covered && residual <= 1e-9;
    notes.push(format!(
        "chain: {} points, {} steps (recurrence {oracle}), sphere residual {residual:.1e}",
        chain.len(),
        chain.steps()
    ));
    check(ok, notes.join("; "))
}

/// Slit-disk counterexample.
fn example1() -> Outcome {
    let ladder = [1e-1, 1e-2, 1e-3, 1e-4];
    let table = example1_run(&ladder, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let log3 = 3f64.ln();
    let mut ok = table.rows.len() == 4;
    let mut notes = Vec::new();
    for r in &table.rows {
        ok &= (r.j_image - log3).abs() <= 1e-9;
        ok &= r.k_bracket_lo >= r.k_lower_analytic - 1e-9 && r.k_bracket_hi >= r.k_lower_analytic;
        notes.push(format!(
            "t={:e}: j' = {:.10}, k in [{:.4}, {:.4}] vs log(1+1/t) = {:.4}, j = {:.4}",
            r.t, r.j_image, r.k_bracket_lo, r.k_bracket_hi, r.k_lower_analytic, r.j_source
        ));
    }
    // rows are ordered by decreasing t
    ok &= table
        .rows
        .windows(2)
        .all(|w| w[1].j_source > w[0].j_source && w[1].ratio > w[0].ratio);
    let at_1e3 = table
        .rows
        .iter()
        .find(|r| r.t == 1e-3)
        .ok_or("t = 1e-3 missing")?;
    ok &= at_1e3.j_source >= 2.0 * log3;
    for slope in [2.0, 4.0, 8.0, 12.0] {
        let t = example1_exceeding_t(slope).map_err(|e| e.to_string())?;
        ok &= t.is_some();
        notes.push(format!("slope {slope} exceeded at t = {t:?}"));
    }
    check(ok && table.pass(), notes.join("; "))
}

/// Broken-line arithmetic.
fn example2() -> Outcome {
    let c = example2_check(2.0, 0.1, 1_000_000).map_err(|e| e.to_string())?;
    check(
        c.threshold == 7 && c.pass(),
        format!(
            "threshold m = {}, increasing {}, exceeds beyond threshold {}, source_j(1e6) = {:.4} over {} probes",
            c.threshold, c.strictly_increasing, c.exceeds_beyond_threshold, c.final_source_j, c.probes
        ),
    )
}

/// QH constants of the similarity and radial stretch specimens.
fn specimens() -> Outcome {
    let cfg = SolverConfig::default();
    let sim = qh_constant_estimate(
        &MapSpec::similarity(2.0, 0.7, Point::new(1.0, -0.5)),
        &Domain::unit_disk(),
        200,
        55,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let radial = qh_constant_estimate(
        &MapSpec::radial_stretch(2.0, Point::ORIGIN),
        &Domain::punctured_plane(vec![Point::ORIGIN]),
        200,
        55,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let ok = sim.estimate <= 1.02 && (1.96..=2.04).contains(&radial.estimate);
    check(
        ok,
        format!(
            "similarity {:.5} (consistent up to {:.5}); radial stretch {:.5}",
            sim.estimate, sim.max_consistent, radial.estimate
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("j <= k on five domains", eq11),
        ("solver accuracy against closed forms", solver_accuracy),
        ("punctured-plane uniformity constant", linden),
        ("ball estimate", ball_estimate),
        ("constructive constants and sphere chain", constants),
        ("slit-disk counterexample", example1),
        ("broken-line bounds", example2),
        ("distortion specimens", specimens),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
