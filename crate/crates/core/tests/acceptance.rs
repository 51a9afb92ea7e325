//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

mod common;

use std::f64::consts::PI;
use std::fmt::Write as _;

use common::{bounded_excursion, check_strict_band, kepler_seed, random_bounded_seed, random_family_seed, row, table_rows};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use ringbody::dynamics::energy;
use ringbody::gshape::{
    chain_rule_samples, g_ode_coefficients, g_ode_coefficients_four_body, g_ode_coefficients_three_body,
    normalized_residual, rdot_squared_from_g, three_body_separable_residual,
};
use ringbody::integrate::{integrate, monotone_segments, IntegratorSettings, Trajectory};
use ringbody::model::{make_constants, ConservedPair, RingSystem};
use ringbody::nbody::cross_validate;
use ringbody::search::{refine, sweep, write_catalog, Axis, GridSpec, PeriodicCandidate, SearchSettings};

fn report(n: usize, name: &str, failures: &[String], summary: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {n} ({name}): {status} {summary}");
    for f in failures {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

const G_ROWS: [&str; 10] = ["3b-01", "3b-02", "3b-03", "3b-05", "3b-07", "3b-08", "3b-12", "4b-01", "4b-02", "4b-04"];

fn row_trajectory(id: &str) -> Trajectory {
    let q = row(id);
    integrate(&q, q.t0.unwrap(), &IntegratorSettings::default()).unwrap()
}

#[test]
fn criterion_01_ring_constants() {
    let mut bad = Vec::new();
    let closed = [
        (2, Some(0.25), 0.5),
        (3, Some(1.0 / 3f64.sqrt()), 2.0 / 3f64.sqrt()),
        (4, Some(0.25 + 1.0 / 2f64.sqrt()), 0.5 + 2f64.sqrt()),
        (5, None, 2.0 * (1.0 + 2.0 / 5f64.sqrt()).sqrt()),
    ];
    for (n, a, b) in closed {
        let c = make_constants(n, 1.0, 1.0).unwrap();
        if let Some(a) = a {
            if (c.a_n - a).abs() >= 1e-12 {
                bad.push(format!("a_{n} = {} vs {a}", c.a_n));
            }
        }
        if (c.b_n - b).abs() >= 1e-12 {
            bad.push(format!("b_{n} = {} vs {b}", c.b_n));
        }
    }
    let mut worst = 0.0f64;
    for n in 2..=64 {
        let c = make_constants(n, 1.0, 1.0).unwrap();
        worst = worst.max((c.a_n - c.b_n / 2.0).abs());
    }
    if worst >= 1e-12 {
        bad.push(format!("max |a_n - b_n/2| = {worst:e}"));
    }
    report(1, "ring constants", &bad, &format!("max |a_n - b_n/2| over n <= 64 = {worst:.1e}"));
}

#[test]
fn criterion_02_nineteen_body_example() {
    let mut bad = Vec::new();
    let a18 = make_constants(18, 1.0, 1.0).unwrap().a_n;
    let m2 = 2.0 / a18;
    if format!("{m2:.6}") != "0.231508" {
        bad.push(format!("m2 = {m2}"));
    }
    if (m2 * a18 - 2.0).abs() >= 1e-10 {
        bad.push(format!("m2 a18 = {}", m2 * a18));
    }
    let q = kepler_seed();
    let period = 8.0 * PI / (3.0 * 3f64.sqrt());
    let traj = integrate(&q, period, &IntegratorSettings::default()).unwrap();
    let mut conic_err = 0.0f64;
    for s in traj.uniform_samples(2000).unwrap() {
        if s.f != 0.0 {
            bad.push(format!("f = {} at t = {}", s.f, s.t));
            break;
        }
        conic_err = conic_err.max((s.r - 1.0 / (1.0 - 0.5 * s.theta.cos())).abs());
    }
    if conic_err >= 1e-8 {
        bad.push(format!("conic deviation {conic_err:e}"));
    }
    let end = traj.last();
    let closure = (end.r - 2.0).abs().max(end.rdot.abs()).max((end.theta + 2.0 * PI).abs());
    if closure >= 1e-8 {
        bad.push(format!("closure after T: {closure:e}"));
    }
    report(2, "19-body example", &bad, &format!("m2 = {m2:.6}, conic error {conic_err:.1e}, closure {closure:.1e}"));
}

#[test]
fn criterion_03_table_reproduction() {
    let settings = SearchSettings::default();
    let rows = table_rows();
    let results: Vec<(String, f64, f64, f64)> = rows
        .par_iter()
        .map(|r| {
            let c = PeriodicCandidate::evaluate(r.seed, &settings.integrator).unwrap();
            let refined = refine(&c, &settings).unwrap();
            (r.id.clone(), c.xi, refined.xi, c.rel_distance(&refined.seed))
        })
        .collect();
    let mut bad = Vec::new();
    let mut table = String::new();
    for (id, printed, refined, dist) in &results {
        writeln!(table, "    {id}: xi(printed) = {printed:.2e}, xi(refined) = {refined:.2e}, distance {dist:.1e}").unwrap();
        if printed.is_nan() || *printed >= 1e-3 {
            bad.push(format!("{id}: xi at printed seed {printed:.3e} >= 1e-3"));
        }
        if refined.is_nan() || *refined >= 1e-10 || dist.is_nan() || *dist >= 1e-3 {
            bad.push(format!("{id}: refined xi {refined:.3e} at distance {dist:.1e}"));
        }
    }
    print!("{table}");
    report(3, "table reproduction", &bad, &format!("{} rows", results.len()));
}

#[test]
fn criterion_04_oracle_equivalence() {
    let s = IntegratorSettings::default();
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for id in ["3b-01", "3b-03", "3b-12", "4b-01", "4b-02"] {
        let q = row(id);
        match cross_validate(&q, q.t0.unwrap(), &s, 1e-6) {
            Ok(cv) => worst = worst.max(cv.max_position_deviation),
            Err(e) => bad.push(format!("{id}: {e}")),
        }
    }
    report(4, "oracle equivalence", &bad, &format!("max position deviation {worst:.1e} on 5 rows"));
}

#[test]
fn criterion_05_conservation() {
    let s = IntegratorSettings::default();
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    let mut seeds: Vec<_> = table_rows().into_iter().map(|r| (r.id, r.seed)).collect();
    seeds.push(("19b".into(), kepler_seed()));
    for (id, q) in seeds {
        let t0 = q.t0.unwrap();
        let reduced = integrate(&q, t0, &s).unwrap().max_drift();
        let cv = cross_validate(&q, t0, &s, 1e-5).unwrap();
        let d = reduced.max(cv.energy_drift).max(cv.momentum_drift).max(cv.angular_momentum_drift);
        worst = worst.max(d);
        if d >= 1e-9 {
            bad.push(format!("{id}: drift {d:e}"));
        }
    }
    report(5, "conservation", &bad, &format!("max relative drift {worst:.1e}"));
}

#[test]
fn criterion_06_no_collision_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = Vec::new();
    let mut tightest = f64::INFINITY;
    for i in 0..100 {
        let q = random_family_seed(&mut rng, 2 + i % 4, 0.05);
        match check_strict_band(&q) {
            Ok(m) => tightest = tightest.min(m),
            Err(e) => bad.push(e),
        }
    }
    report(6, "no-collision bounds", &bad, &format!("100 seeds, smallest relative margin {tightest:.1e}"));
}

#[test]
fn criterion_07_boundedness() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..25 {
        let q = random_bounded_seed(&mut rng, 2 + i % 4);
        match bounded_excursion(&q) {
            Ok(x) if x < 10.0 => worst = worst.max(x),
            Ok(x) => bad.push(format!("{q:?}: excursion {x}")),
            Err(e) => bad.push(e),
        }
    }
    report(7, "boundedness", &bad, &format!("25 seeds, largest max(r, |f|)/y10 = {worst:.2}"));
}

#[test]
fn criterion_08_g_ode_identity() {
    let mut bad = Vec::new();
    let (mut worst, mut segments) = (0.0f64, 0);
    for id in G_ROWS {
        let traj = row_trajectory(id);
        let sys = traj.system();
        for (a, b) in monotone_segments(&traj) {
            segments += 1;
            let c = ConservedPair { c1: sys.c1, c2: energy(&traj.state_at(a).unwrap(), sys).unwrap() };
            for s in chain_rule_samples(&traj, a, b, 400).unwrap() {
                let res = normalized_residual(&s, &c, sys).unwrap();
                worst = worst.max(res);
                if res >= 1e-6 {
                    bad.push(format!("{id} r = {}: residual {res:e}", s.r));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut coef = 0.0f64;
    for _ in 0..100 {
        let (m1, m2) = (rng.gen_range(1.0..500.0), rng.gen_range(1.0..500.0));
        let c = ConservedPair { c1: rng.gen_range(-40.0..40.0), c2: rng.gen_range(-1e4..-1.0) };
        let (r, g, gp) = (rng.gen_range(0.5..30.0), rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0));
        for (n, special) in [
            (2, g_ode_coefficients_three_body(r, g, gp, &c, m1, m2).unwrap()),
            (3, g_ode_coefficients_four_body(r, g, gp, &c, m1, m2).unwrap()),
        ] {
            let general = g_ode_coefficients(r, g, gp, &c, &RingSystem::new(n, m1, m2, c.c1).unwrap()).unwrap();
            for (x, y) in [(general.a, special.a), (general.b, special.b), (general.c, special.c)] {
                let e = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                coef = coef.max(e);
            }
        }
    }
    if coef >= 1e-12 {
        bad.push(format!("coefficient forms differ by {coef:e}"));
    }
    bad.truncate(10);
    report(8, "g-ODE identity", &bad, &format!("{segments} segments, max residual {worst:.1e}, coefficient mismatch {coef:.1e}"));
}

#[test]
fn criterion_09_separable_relation() {
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for id in G_ROWS {
        let traj = row_trajectory(id);
        let sys = traj.system();
        for (a, b) in monotone_segments(&traj) {
            for i in 1..200 {
                let s = traj.state_at(a + (b - a) * i as f64 / 200.0).unwrap();
                let c = ConservedPair { c1: sys.c1, c2: energy(&s, sys).unwrap() };
                let v = rdot_squared_from_g(s.r, s.f, s.fdot / s.rdot, &c, sys).unwrap();
                let rel = (v - s.rdot * s.rdot).abs() / (s.rdot * s.rdot);
                worst = worst.max(rel);
                if rel >= 1e-8 {
                    bad.push(format!("{id} t = {}: relative error {rel:e}", s.t));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut checked, mut sep) = (0, 0.0f64);
    while checked < 100 {
        let (m1, m2) = (rng.gen_range(0.1..300.0), rng.gen_range(0.1..300.0));
        let c = ConservedPair { c1: rng.gen_range(-30.0..30.0), c2: rng.gen_range(-500.0..-0.1) };
        let (r, g, gp) = (rng.gen_range(0.2..20.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let sys = RingSystem::new(2, m1, m2, c.c1).unwrap();
        let Ok(v) = rdot_squared_from_g(r, g, gp, &c, &sys) else {
            continue;
        };
        let res = three_body_separable_residual(r, g, gp, v, &c, m1, m2);
        let k = (m1 + 2.0 * m2) / (2.0 * m2);
        let scale = 8.0 * (k - 1.0) * m2 / r.hypot(k * g)
            + (2.0 * c.c1 * c.c1 + m2 * r + 2.0 * r * r * (1.0 + (k - 1.0) * k * gp * gp) * v) / (r * r)
            + 2.0 * c.c2.abs() / m2;
        sep = sep.max(res.abs() / scale);
        checked += 1;
    }
    if sep >= 1e-12 {
        bad.push(format!("three-body relation off by {sep:e}"));
    }
    bad.truncate(10);
    report(9, "separable relation", &bad, &format!("max relative rdot^2 error {worst:.1e}, three-body form {sep:.1e}"));
}

#[test]
fn criterion_10_determinism() {
    let q = row("3b-01");
    let axis = |v: f64| Axis { start: v * 0.999, stop: v * 1.001, count: 4 };
    let grid = GridSpec {
        n: q.n,
        m1: q.m1,
        m2: q.m2,
        theta0: q.theta0.unwrap(),
        y10: Axis::fixed(q.y10),
        dy20: axis(q.dy20),
        df0: Axis::fixed(q.df0),
        t0: axis(q.t0.unwrap()),
    };
    let settings = SearchSettings { evals_per_run: 300, max_runs: 3, ..SearchSettings::default() };
    let run = |jobs| {
        let rep = sweep(&grid, 1e-1, &settings, jobs).unwrap();
        let mut out = Vec::new();
        write_catalog(&mut out, &rep.candidates).unwrap();
        out
    };
    let (one, eight) = (run(1), run(8));
    let mut bad = Vec::new();
    if one != eight {
        bad.push("catalogs differ between 1 and 8 workers".into());
    }
    if one.is_empty() {
        bad.push("catalog is empty".into());
    }
    let lines = one.iter().filter(|&&b| b == b'\n').count();
    report(10, "determinism", &bad, &format!("{lines} catalog lines, identical for 1 and 8 workers"));
}
