mod common;

use common::row;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringbody::dynamics::energy;
use ringbody::gshape::{
    chain_rule_samples, g_ode_coefficients, g_ode_coefficients_four_body, g_ode_coefficients_three_body,
    normalized_residual, rdot_squared_from_g, reconstruct_by_quadrature, SplineProfile,
};
use ringbody::integrate::{integrate, monotone_segments, IntegratorSettings, Trajectory};
use ringbody::model::{ConservedPair, RingSystem};

const ROWS: [&str; 10] = ["3b-01", "3b-02", "3b-03", "3b-05", "3b-07", "3b-08", "3b-12", "4b-01", "4b-02", "4b-04"];

fn trajectory(id: &str) -> Trajectory {
    let q = row(id);
    integrate(&q, q.t0.unwrap(), &IntegratorSettings::default()).unwrap()
}

#[test]
fn g_ode_holds_on_every_monotone_segment() {
    for id in ROWS {
        let traj = trajectory(id);
        let segs = monotone_segments(&traj);
        assert!(!segs.is_empty(), "{id}: no complete segment");
        for (a, b) in segs {
            let c = ConservedPair { c1: traj.system().c1, c2: energy(&traj.state_at(a).unwrap(), traj.system()).unwrap() };
            let samples = chain_rule_samples(&traj, a, b, 400).unwrap();
            assert!(samples.len() > 350, "{id}: buffer dropped too much");
            for s in &samples {
                let res = normalized_residual(s, &c, traj.system()).unwrap();
                assert!(res < 1e-6, "{id} [{a}, {b}] r = {}: {res:e}", s.r);
            }
        }
    }
}

#[test]
fn g_determines_rdot_squared() {
    for id in ROWS {
        let traj = trajectory(id);
        let sys = traj.system();
        for (a, b) in monotone_segments(&traj) {
            for i in 1..200 {
                let s = traj.state_at(a + (b - a) * i as f64 / 200.0).unwrap();
                if s.rdot == 0.0 {
                    continue;
                }
                let c = ConservedPair { c1: sys.c1, c2: energy(&s, sys).unwrap() };
                let v = rdot_squared_from_g(s.r, s.f, s.fdot / s.rdot, &c, sys).unwrap();
                let want = s.rdot * s.rdot;
                assert!((v - want).abs() < 1e-8 * want, "{id} t = {}: {v:e} vs {want:e}", s.t);
            }
        }
    }
}

#[test]
fn quadrature_recovers_time_and_phase_inside_segments() {
    let settings = IntegratorSettings::default();
    for id in ["3b-01", "3b-03", "4b-01"] {
        let traj = trajectory(id);
        let sys = traj.system();
        for (a, b) in monotone_segments(&traj) {
            let start = traj.state_at(a).unwrap();
            let profile = SplineProfile::from_segment(&traj, a, b, 801, &settings).unwrap();
            let c = ConservedPair { c1: sys.c1, c2: energy(&start, sys).unwrap() };
            let inner: Vec<_> = (1..10).map(|i| traj.state_at(a + (b - a) * i as f64 / 10.0).unwrap()).collect();
            let radii: Vec<f64> = inner.iter().map(|s| s.r).collect();
            let branch = inner[0].rdot.signum();
            let pts = reconstruct_by_quadrature(&profile, &radii, branch, &c, sys).unwrap();
            for (p, s) in pts.iter().zip(&inner) {
                let dt = s.t - a;
                assert!((p.t - dt).abs() < 1e-6 * (b - a), "{id}: t {} vs {dt}", p.t);
                assert!((p.theta - (s.theta - start.theta)).abs() < 1e-6, "{id}: theta");
                assert!((p.f - s.f).abs() < 1e-6 * (1.0 + s.f.abs()), "{id}: f");
            }
        }
    }
}

#[test]
fn displayed_coefficient_forms_match_general_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..100 {
        let (m1, m2) = (rng.gen_range(1.0..500.0), rng.gen_range(1.0..500.0));
        let c = ConservedPair { c1: rng.gen_range(-40.0..40.0), c2: rng.gen_range(-1e4..-1.0) };
        let (r, g, gp) = (rng.gen_range(0.5..30.0), rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0));
        let three = g_ode_coefficients_three_body(r, g, gp, &c, m1, m2).unwrap();
        let four = g_ode_coefficients_four_body(r, g, gp, &c, m1, m2).unwrap();
        for (n, special) in [(2, three), (3, four)] {
            let general = g_ode_coefficients(r, g, gp, &c, &RingSystem::new(n, m1, m2, c.c1).unwrap()).unwrap();
            for (x, y) in [(general.a, special.a), (general.b, special.b), (general.c, special.c)] {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0), "n = {n}: {x} vs {y}");
            }
        }
    }
}
