//! Domain types shared by every other module: seeds, ring constants, the
//! reduced state and the conserved quantities of the symmetric family.
//!
//! The configuration studied here has one body of mass `m1` confined to the
//! z axis at height `f` and `n` bodies of mass `m2` forming a regular n-gon of
//! radius `r` and phase `theta` at the common height `-(m1 / (n m2)) f`, so the
//! centre of mass stays at the origin.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An angle stored exactly as the rational multiple `(p / q) * pi`.
///
/// Always normalized so that `q > 0` and `gcd(|p|, q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct PiRational {
    p: i64,
    q: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl PiRational {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidConfig("theta0 denominator is zero".into()));
        }
        let sign = q.signum();
        let g = gcd(p, q).max(1);
        Ok(Self {
            p: sign * p / g,
            q: sign * q / g,
        })
    }

    pub fn numer(&self) -> i64 {
        self.p
    }

    pub fn denom(&self) -> i64 {
        self.q
    }

    /// Binary64 value of the angle. The only place where pi is rounded.
    pub fn radians(&self) -> f64 {
        self.p as f64 / self.q as f64 * PI
    }

    /// Smallest `s >= 1` such that `s * theta` is an integer multiple of `2 pi`.
    pub fn full_turn_multiplier(&self) -> u64 {
        let two_q = 2 * self.q;
        (two_q / gcd(self.p, two_q).max(1)) as u64
    }

    /// `s * theta` as an exact rational multiple of pi.
    pub fn scaled(&self, s: i64) -> Self {
        Self::new(self.p * s, self.q).expect("denominator stays positive")
    }
}

impl TryFrom<(i64, i64)> for PiRational {
    type Error = Error;
    fn try_from((p, q): (i64, i64)) -> Result<Self> {
        Self::new(p, q)
    }
}

impl From<PiRational> for (i64, i64) {
    fn from(a: PiRational) -> Self {
        (a.p, a.q)
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for PiRational {
    type Err = Error;

    /// Parses `p/q` or a bare integer `p` (meaning `p * pi`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected p/q for an angle in units of pi, got {s:?}"));
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p = p.parse::<i64>().map_err(|_| bad())?;
        let q = q.parse::<i64>().map_err(|_| bad())?;
        Self::new(p, q)
    }
}

/// A point of the family: ring size, masses, initial data and optionally the
/// period target `(t0, theta0)`.
///
/// Initial conditions are `f = 0`, `fdot = df0`, `r = y10`, `rdot = 0`,
/// `theta = 0`, with tangential ring speed `dy20`, so `c1 = y10 * dy20`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub n: usize,
    pub m1: f64,
    pub m2: f64,
    pub y10: f64,
    pub dy20: f64,
    pub df0: f64,
    pub theta0: Option<PiRational>,
    pub t0: Option<f64>,
}

impl SeedConfig {
    pub fn new(n: usize, m1: f64, m2: f64, y10: f64, dy20: f64, df0: f64) -> Self {
        Self {
            n,
            m1,
            m2,
            y10,
            dy20,
            df0,
            theta0: None,
            t0: None,
        }
    }

    pub fn with_period(mut self, t0: f64, theta0: PiRational) -> Self {
        self.t0 = Some(t0);
        self.theta0 = Some(theta0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        let positive = [("m1", self.m1), ("m2", self.m2), ("y10", self.y10)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.dy20.is_finite() || !self.df0.is_finite() {
            return Err(Error::InvalidConfig("initial velocities must be finite".into()));
        }
        if let Some(t0) = self.t0 {
            if !(t0.is_finite() && t0 > 0.0) {
                return Err(Error::InvalidConfig(format!("t0 must be positive, got {t0}")));
            }
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        self.y10 * self.dy20
    }

    pub fn system(&self) -> Result<RingSystem> {
        self.validate()?;
        RingSystem::new(self.n, self.m1, self.m2, self.c1())
    }

    pub fn initial_state(&self) -> ReducedState {
        ReducedState {
            t: 0.0,
            f: 0.0,
            fdot: self.df0,
            r: self.y10,
            rdot: 0.0,
            theta: 0.0,
        }
    }

    pub fn period(&self) -> Result<(f64, PiRational)> {
        match (self.t0, self.theta0) {
            (Some(t0), Some(th)) => Ok((t0, th)),
            _ => Err(Error::InvalidConfig("seed needs both t0 and theta0".into())),
        }
    }
}

/// Derived constants for a ring of `n` bodies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingConstants {
    /// `(m1 + n m2) / (n m2)`
    pub k: f64,
    /// Ring force constant, `sum (1 - w^j) / |w^j - 1|^3` over the n-th roots of unity.
    pub a_n: f64,
    /// Ring potential constant, `sum 1 / |w^j - 1|`.
    pub b_n: f64,
    /// Axial restoring coefficient `m1 + n m2`.
    pub mu_f: f64,
}

/// `exp(2 pi i j / n)` evaluated on the reduced angle, so that conjugate
/// roots come out as exact conjugates.
pub(crate) fn unit_root(j: usize, n: usize) -> (f64, f64) {
    let j = j % n;
    if 2 * j == n {
        return (-1.0, 0.0);
    }
    if 4 * j == n {
        return (0.0, 1.0);
    }
    if 4 * j == 3 * n {
        return (0.0, -1.0);
    }
    let (jj, sign) = if 2 * j > n { (n - j, -1.0) } else { (j, 1.0) };
    let angle = 2.0 * PI * jj as f64 / n as f64;
    (angle.cos(), sign * angle.sin())
}

/// Real and imaginary parts of the ring force sum and the potential sum.
///
/// Terms are accumulated in conjugate pairs `(j, n - j)`.
pub fn ring_sums(n: usize) -> (f64, f64, f64) {
    let term = |j: usize| {
        let (c, s) = unit_root(j, n);
        let d = (c - 1.0).hypot(s);
        let d3 = d * d * d;
        ((1.0 - c) / d3, -s / d3, 1.0 / d)
    };
    let mut re = 0.0;
    let mut im = 0.0;
    let mut b = 0.0;
    for j in 1..=(n - 1) / 2 {
        let (r1, i1, b1) = term(j);
        let (r2, i2, b2) = term(n - j);
        re += r1 + r2;
        im += i1 + i2;
        b += b1 + b2;
    }
    if n.is_multiple_of(2) {
        let (r, i, bb) = term(n / 2);
        re += r;
        im += i;
        b += bb;
    }
    (re, im, b)
}

pub fn make_constants(n: usize, m1: f64, m2: f64) -> Result<RingConstants> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("ring needs n >= 2 bodies, got {n}")));
    }
    if !(m1 > 0.0 && m2 > 0.0) {
        return Err(Error::InvalidConfig(format!("masses must be positive, got m1 = {m1}, m2 = {m2}")));
    }
    let (a_n, imag, b_n) = ring_sums(n);
    if imag.abs() >= 1e-14 {
        return Err(Error::InvalidConfig(format!(
            "imaginary part of the ring force sum did not cancel for n = {n}: {imag:e}"
        )));
    }
    let nm2 = n as f64 * m2;
    Ok(RingConstants {
        k: (m1 + nm2) / nm2,
        a_n,
        b_n,
        mu_f: m1 + nm2,
    })
}

/// Everything the reduced vector field needs: ring size, masses, ring
/// constants and the angular momentum `c1 = r^2 theta_dot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingSystem {
    pub n: usize,
    pub m1: f64,
    pub m2: f64,
    pub rc: RingConstants,
    pub c1: f64,
}

impl RingSystem {
    pub fn new(n: usize, m1: f64, m2: f64, c1: f64) -> Result<Self> {
        Ok(Self {
            n,
            m1,
            m2,
            rc: make_constants(n, m1, m2)?,
            c1,
        })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Height ratio of the ring relative to the axial body: `z_ring = -ratio * f`.
    pub fn ring_height_ratio(&self) -> f64 {
        self.m1 / (self.nf() * self.m2)
    }

    /// Effective mass multiplying `fdot^2 / 2` in the energy.
    pub fn axial_inertia(&self) -> f64 {
        self.m1 * (self.m1 + self.nf() * self.m2) / (self.nf() * self.m2)
    }

    /// Axial-to-ring distance `sqrt(r^2 + k^2 f^2)`.
    pub fn h(&self, r: f64, f: f64) -> f64 {
        r.hypot(self.rc.k * f)
    }
}

/// State of the reduced system. `theta` is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub t: f64,
    pub f: f64,
    pub fdot: f64,
    pub r: f64,
    pub rdot: f64,
    pub theta: f64,
}

impl ReducedState {
    pub(crate) fn to_vec(self) -> [f64; 5] {
        [self.f, self.fdot, self.r, self.rdot, self.theta]
    }

    pub(crate) fn from_slice(t: f64, y: &[f64]) -> Self {
        Self {
            t,
            f: y[0],
            fdot: y[1],
            r: y[2],
            rdot: y[3],
            theta: y[4],
        }
    }
}

/// Angular momentum per ring body per unit mass and total energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedPair {
    pub c1: f64,
    pub c2: f64,
}

/// Closed-form band for the ring radius of a negative-energy solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBounds {
    pub d: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

/// Total energy at the family's initial conditions (`r = y10`, `rdot = 0`, `f = 0`).
pub fn conserved_from_seed(q: &SeedConfig) -> Result<ConservedPair> {
    let sys = q.system()?;
    let n = sys.nf();
    let (m1, m2) = (q.m1, q.m2);
    let c2 = 0.5 * n * m2 * q.dy20 * q.dy20 + 0.5 * sys.axial_inertia() * q.df0 * q.df0
        - n * m1 * m2 / q.y10
        - 0.5 * n * sys.rc.b_n * m2 * m2 / q.y10;
    Ok(ConservedPair { c1: q.c1(), c2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyMembership {
    /// Negative energy with nonzero angular momentum: collisionless for all time.
    pub in_l: bool,
    /// Additionally satisfies the boundedness inequality.
    pub in_b: bool,
}

/// Left-hand side of the general boundedness inequality; negative means bounded.
pub fn boundedness_margin(c: &ConservedPair, sys: &RingSystem) -> f64 {
    let (a, b) = (sys.rc.a_n, sys.rc.b_n);
    let m2 = sys.m2;
    2.0 * c.c1 * c.c1 * c.c2 + sys.nf() * a * m2 * m2 * (2.0 * sys.m1 + (b - a) * m2)
}

/// The three-body form `8 m1 m2^2 + m2^3 + 16 c2 c1^2` (negative means bounded).
pub fn boundedness_margin_three_body(c: &ConservedPair, m1: f64, m2: f64) -> f64 {
    8.0 * m1 * m2 * m2 + m2 * m2 * m2 + 16.0 * c.c2 * c.c1 * c.c1
}

pub fn classify(c: &ConservedPair, sys: &RingSystem) -> FamilyMembership {
    let in_l = c.c1 != 0.0 && c.c2 < 0.0;
    FamilyMembership {
        in_l,
        in_b: in_l && boundedness_margin(c, sys) < 0.0,
    }
}

pub fn validate_family(q: &SeedConfig) -> Result<FamilyMembership> {
    let c = conserved_from_seed(q)?;
    Ok(classify(&c, &q.system()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_ring_constants() {
        let c2 = make_constants(2, 1.0, 1.0).unwrap();
        assert!((c2.a_n - 0.25).abs() < 1e-12 && (c2.b_n - 0.5).abs() < 1e-12);
        let c3 = make_constants(3, 1.0, 1.0).unwrap();
        assert!((c3.a_n - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((c3.b_n - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        let c4 = make_constants(4, 1.0, 1.0).unwrap();
        assert!((c4.a_n - (0.25 + 1.0 / 2f64.sqrt())).abs() < 1e-12);
        assert!((c4.b_n - (0.5 + 2f64.sqrt())).abs() < 1e-12);
        let c5 = make_constants(5, 1.0, 1.0).unwrap();
        assert!((c5.b_n - 2.0 * (1.0 + 2.0 / 5f64.sqrt()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn derived_constants() {
        let c = make_constants(3, 2.0, 5.0).unwrap();
        assert_relative_eq!(c.k, 17.0 / 15.0, max_relative = 1e-15);
        assert_relative_eq!(c.mu_f, 17.0, max_relative = 1e-15);
    }

    #[test]
    fn constants_reject_small_rings() {
        assert!(matches!(make_constants(1, 1.0, 1.0), Err(Error::InvalidConfig(_))));
        assert!(make_constants(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn imaginary_part_cancels() {
        for n in 2..=64 {
            let (_, im, _) = ring_sums(n);
            assert!(im.abs() < 1e-14, "n = {n}: {im:e}");
        }
    }

    #[test]
    fn force_constant_is_half_potential_constant() {
        let mut prev = 0.0;
        for n in 2..=64 {
            let c = make_constants(n, 1.0, 1.0).unwrap();
            assert!((c.a_n - c.b_n / 2.0).abs() < 1e-12, "n = {n}");
            assert!(c.a_n > prev);
            prev = c.a_n;
        }
    }

    #[test]
    fn angle_normalization() {
        let a = PiRational::new(14, 12).unwrap();
        assert_eq!((a.numer(), a.denom()), (7, 6));
        let b = PiRational::new(3, -4).unwrap();
        assert_eq!((b.numer(), b.denom()), (-3, 4));
        assert_eq!("21/4".parse::<PiRational>().unwrap(), PiRational::new(21, 4).unwrap());
        assert_eq!("6".parse::<PiRational>().unwrap(), PiRational::new(6, 1).unwrap());
        assert!("1/0".parse::<PiRational>().is_err());
        assert!("x".parse::<PiRational>().is_err());
    }

    #[test]
    fn full_turn_multipliers() {
        let s = |p, q| PiRational::new(p, q).unwrap().full_turn_multiplier();
        assert_eq!(s(3, 2), 4);
        assert_eq!(s(7, 6), 12);
        assert_eq!(s(21, 4), 8);
        assert_eq!(s(6, 1), 1);
        assert_eq!(s(2, 1), 1);
        assert_eq!(s(13, 2), 4);
        assert_eq!(s(1, 1), 2);
    }

    #[test]
    fn three_body_energy_closed_form() {
        // c2 = m2 dy20^2 - m2/(2 y10) (4 m1 + m2) + m1/(4 m2) (m1 + 2 m2) df0^2
        let q = SeedConfig::new(2, 41.0495, 81.3134, 11.3361, 2.20041, 1.5009);
        let c = conserved_from_seed(&q).unwrap();
        let (m1, m2) = (q.m1, q.m2);
        let expected = m2 * q.dy20 * q.dy20 - m2 / (2.0 * q.y10) * (4.0 * m1 + m2)
            + m1 / (4.0 * m2) * (m1 + 2.0 * m2) * q.df0 * q.df0;
        assert_relative_eq!(c.c2, expected, max_relative = 1e-12);
        assert_relative_eq!(c.c1, 24.944_067_801, max_relative = 1e-10);
        assert!(c.c2 < 0.0);
    }

    #[test]
    fn energy_at_rest_is_potential_only() {
        let q = SeedConfig::new(2, 3.0, 2.0, 1.5, 0.0, 0.0);
        let c = conserved_from_seed(&q).unwrap();
        assert_relative_eq!(c.c2, -(2.0 / 3.0) * 14.0, max_relative = 1e-14);
    }

    #[test]
    fn membership() {
        let q = SeedConfig::new(2, 41.0495, 81.3134, 11.3361, 2.20041, 1.5009);
        assert!(validate_family(&q).unwrap().in_l);
        let hot = SeedConfig::new(2, 1.0, 1.0, 1.0, 100.0, 0.0);
        let m = validate_family(&hot).unwrap();
        assert!(!m.in_l && !m.in_b);
        let still = SeedConfig::new(3, 1.0, 1.0, 1.0, 0.0, 0.0);
        assert!(!validate_family(&still).unwrap().in_l);
    }

    #[test]
    fn seed_validation() {
        assert!(SeedConfig::new(1, 1.0, 1.0, 1.0, 1.0, 0.0).validate().is_err());
        assert!(SeedConfig::new(2, -1.0, 1.0, 1.0, 1.0, 0.0).validate().is_err());
        assert!(SeedConfig::new(2, 1.0, 1.0, 0.0, 1.0, 0.0).validate().is_err());
        let mut q = SeedConfig::new(2, 1.0, 1.0, 1.0, 1.0, 0.0);
        q.t0 = Some(-1.0);
        assert!(q.validate().is_err());
    }
}
