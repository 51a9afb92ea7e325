#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use ringbody::model::{conserved_from_seed, make_constants, validate_family, SeedConfig};
use ringbody::record::{parse_fixture, FixtureRow};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_fixture(name: &str) -> Vec<FixtureRow> {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_fixture(&text).expect("fixture parses")
}

pub fn table_rows() -> Vec<FixtureRow> {
    load_fixture("paper_tables")
}

pub fn row(id: &str) -> SeedConfig {
    table_rows().into_iter().find(|r| r.id == id).expect("row exists").seed
}

pub fn kepler_seed() -> SeedConfig {
    load_fixture("kepler_19body")[0].seed
}

/// Speed of the planar circular orbit at radius `r`.
pub fn circular_speed(n: usize, m1: f64, m2: f64, r: f64) -> f64 {
    let a = make_constants(n, m1, m2).unwrap().a_n;
    ((m1 + a * m2) / r).sqrt()
}

/// A random seed with `c2 < 0` and `c1 != 0`. The axial kick is at least
/// `df_min` times the circular speed in magnitude.
pub fn random_family_seed<R: Rng>(rng: &mut R, n: usize, df_min: f64) -> SeedConfig {
    loop {
        let m1 = rng.gen_range(0.5..50.0);
        let m2 = rng.gen_range(0.5..50.0);
        let y10 = rng.gen_range(1.0..10.0);
        let vc = circular_speed(n, m1, m2, y10);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let dy20 = sign * vc * rng.gen_range(0.75..1.2);
        let df_sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let df0 = df_sign * vc * rng.gen_range(df_min..df_min.max(0.05) * 4.0 + 0.1);
        let q = SeedConfig::new(n, m1, m2, y10, dy20, df0);
        if validate_family(&q).unwrap().in_l {
            return q;
        }
    }
}

/// A random seed satisfying the boundedness inequality.
pub fn random_bounded_seed<R: Rng>(rng: &mut R, n: usize) -> SeedConfig {
    loop {
        let q = random_family_seed(rng, n, 0.0);
        if validate_family(&q).unwrap().in_b {
            return q;
        }
    }
}

pub fn energy_of(q: &SeedConfig) -> f64 {
    conserved_from_seed(q).unwrap().c2
}

/// Integrates over `[0, 10 t_char]` and checks the radial band strictly.
/// Returns the smaller of the two margins relative to `r_hi`.
pub fn check_strict_band(q: &SeedConfig) -> Result<f64, String> {
    use ringbody::dynamics::{characteristic_time, no_collision_certificate, radial_bounds};
    use ringbody::integrate::{integrate, IntegratorSettings};
    let c = conserved_from_seed(q).unwrap();
    let sys = q.system().unwrap();
    let rb = radial_bounds(&c, &sys).map_err(|e| format!("{q:?}: {e}"))?;
    if rb.d.is_nan() || rb.d <= 0.0 {
        return Err(format!("{q:?}: D = {}", rb.d));
    }
    let t_char = characteristic_time(&c, &sys).unwrap();
    let traj = integrate(q, 10.0 * t_char, &IntegratorSettings::default()).map_err(|e| format!("{q:?}: {e}"))?;
    let rep = no_collision_certificate(&traj, &rb).map_err(|e| format!("{q:?}: {e}"))?;
    if !rep.strict() {
        return Err(format!("{q:?}: {rep:?} with band {rb:?}"));
    }
    Ok(rep.lower_margin.min(rep.upper_margin) / rb.r_hi)
}

/// Integrates over `[0, 50 t_char]` and returns `max(r, |f|) / y10`.
pub fn bounded_excursion(q: &SeedConfig) -> Result<f64, String> {
    use ringbody::dynamics::characteristic_time;
    use ringbody::integrate::{integrate, IntegratorSettings};
    let c = conserved_from_seed(q).unwrap();
    let t_char = characteristic_time(&c, &q.system().unwrap()).unwrap();
    let traj = integrate(q, 50.0 * t_char, &IntegratorSettings::default()).map_err(|e| format!("{q:?}: {e}"))?;
    let peak = traj.samples().iter().fold(0.0f64, |m, s| m.max(s.r).max(s.f.abs()));
    Ok(peak / q.y10)
}
