//! Reduced equations of motion and the closed-form quantities attached to
//! them: energy, the radial band of negative-energy solutions and the
//! no-collision certificate checked against integrated data.
//!
//! The general-`n` right-hand side is the working form. The three- and
//! four-body specializations are kept as independent transcriptions and
//! compared against it in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::{ConservedPair, RadialBounds, ReducedState, RingSystem};
use crate::ode::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedDerivative {
    pub df: f64,
    pub dfdot: f64,
    pub dr: f64,
    pub drdot: f64,
    pub dtheta: f64,
}

fn check_radius(s: &ReducedState) -> Result<()> {
    if s.r > 0.0 {
        Ok(())
    } else {
        Err(Error::Collision { t: s.t, r: s.r })
    }
}

pub fn reduced_rhs(s: &ReducedState, sys: &RingSystem) -> Result<ReducedDerivative> {
    check_radius(s)?;
    let h = sys.h(s.r, s.f);
    let h3 = h * h * h;
    let r2 = s.r * s.r;
    let c1 = sys.c1;
    Ok(ReducedDerivative {
        df: s.fdot,
        dfdot: -sys.rc.mu_f * s.f / h3,
        dr: s.rdot,
        drdot: c1 * c1 / (r2 * s.r) - sys.rc.a_n * sys.m2 / r2 - sys.m1 * s.r / h3,
        dtheta: c1 / r2,
    })
}

/// The three-body (`n = 2`) equations written with `k` only:
/// `f'' = -2 m2 k f / h^3`, `r'' = c1^2/r^3 - m2/(4 r^2) - 2 (k - 1) m2 r / h^3`.
pub fn three_body_rhs(s: &ReducedState, c1: f64, m1: f64, m2: f64) -> Result<ReducedDerivative> {
    check_radius(s)?;
    let k = (m1 + 2.0 * m2) / (2.0 * m2);
    let h = (s.r * s.r + k * k * s.f * s.f).sqrt();
    let h3 = h.powi(3);
    Ok(ReducedDerivative {
        df: s.fdot,
        dfdot: -2.0 * m2 * k * s.f / h3,
        dr: s.rdot,
        drdot: c1 * c1 / s.r.powi(3) - m2 / (4.0 * s.r * s.r) - 2.0 * (k - 1.0) * m2 * s.r / h3,
        dtheta: c1 / (s.r * s.r),
    })
}

/// The four-body (`n = 3`) equations with the ring constant written as `3 / l^3`, `l = sqrt(3)`.
pub fn four_body_rhs(s: &ReducedState, c1: f64, m1: f64, m2: f64) -> Result<ReducedDerivative> {
    check_radius(s)?;
    let l = 3f64.sqrt();
    let kk = (m1 + 3.0 * m2) / (3.0 * m2);
    let h = (s.r * s.r + kk * kk * s.f * s.f).sqrt();
    let h3 = h.powi(3);
    Ok(ReducedDerivative {
        df: s.fdot,
        dfdot: -(m1 + 3.0 * m2) * s.f / h3,
        dr: s.rdot,
        drdot: c1 * c1 / s.r.powi(3) - 3.0 * m2 / (l.powi(3) * s.r * s.r) - m1 * s.r / h3,
        dtheta: c1 / (s.r * s.r),
    })
}

/// Total energy of the full configuration described by a reduced state.
pub fn energy(s: &ReducedState, sys: &RingSystem) -> Result<f64> {
    check_radius(s)?;
    let n = sys.nf();
    let m2 = sys.m2;
    let h = sys.h(s.r, s.f);
    let c1 = sys.c1;
    let kinetic = 0.5 * n * m2 * (s.rdot * s.rdot + c1 * c1 / (s.r * s.r))
        + 0.5 * sys.axial_inertia() * s.fdot * s.fdot;
    let potential = -n * sys.m1 * m2 / h - 0.5 * n * sys.rc.b_n * m2 * m2 / s.r;
    Ok(kinetic + potential)
}

/// Three-body energy in its displayed form
/// `m2 c1^2/r^2 - 2 m1 m2/h - m2^2/(2r) + (m1^2 + 2 m1 m2)/(4 m2) fdot^2 + m2 rdot^2`.
pub fn energy_three_body(s: &ReducedState, c1: f64, m1: f64, m2: f64) -> Result<f64> {
    check_radius(s)?;
    let k = (m1 + 2.0 * m2) / (2.0 * m2);
    let h = (s.r * s.r + k * k * s.f * s.f).sqrt();
    Ok(m2 * c1 * c1 / (s.r * s.r) - 2.0 * m1 * m2 / h - m2 * m2 / (2.0 * s.r)
        + (m1 * m1 + 2.0 * m1 * m2) / (4.0 * m2) * s.fdot * s.fdot
        + m2 * s.rdot * s.rdot)
}

fn require_family(c: &ConservedPair) -> Result<()> {
    if c.c1 == 0.0 {
        return Err(Error::OutsideFamily("angular momentum c1 is zero".into()));
    }
    if !(c.c2 < 0.0) {
        return Err(Error::OutsideFamily(format!("energy c2 = {} is not negative", c.c2)));
    }
    Ok(())
}

/// `D = 2 n c1^2 c2 m2 + n^2 (m1 m2 + (b_n / 2) m2^2)^2` and the size of its
/// second term, against which rounding in `D` is judged. `D` vanishes exactly
/// on the planar circular orbit.
pub fn radial_discriminant(c: &ConservedPair, sys: &RingSystem) -> (f64, f64) {
    let n = sys.nf();
    let lin = sys.m1 * sys.m2 + 0.5 * sys.rc.b_n * sys.m2 * sys.m2;
    let scale = n * n * lin * lin;
    (2.0 * n * c.c1 * c.c1 * c.c2 * sys.m2 + scale, scale)
}

/// Roots of `c2 u^2 + B u - (n m2 / 2) c1^2`, `B = n (m1 m2 + (b_n / 2) m2^2)`.
/// For negative energy the ring radius stays between them.
pub fn radial_bounds(c: &ConservedPair, sys: &RingSystem) -> Result<RadialBounds> {
    require_family(c)?;
    let n = sys.nf();
    let (m1, m2) = (sys.m1, sys.m2);
    let lin = m1 * m2 + 0.5 * sys.rc.b_n * m2 * m2;
    let (d, _) = radial_discriminant(c, sys);
    if !(d > 0.0) {
        return Err(Error::TheoremViolation(format!("discriminant D = {d:e} is not positive")));
    }
    let sq = d.sqrt();
    let r_lo = (-n * lin + sq) / (2.0 * c.c2);
    let r_hi = (-n * lin - sq) / (2.0 * c.c2);
    if !(0.0 < r_lo && r_lo < r_hi) {
        return Err(Error::TheoremViolation(format!(
            "radial band is not ordered: r_lo = {r_lo}, r_hi = {r_hi}"
        )));
    }
    Ok(RadialBounds { d, r_lo, r_hi })
}

/// Three-body band: `D = 16 c1^2 c2 m2 + (4 m1 m2 + m2^2)^2`, denominators `4 c2`.
pub fn radial_bounds_three_body(c: &ConservedPair, m1: f64, m2: f64) -> Result<RadialBounds> {
    require_family(c)?;
    let lin = 4.0 * m1 * m2 + m2 * m2;
    let d = 16.0 * c.c1 * c.c1 * c.c2 * m2 + lin * lin;
    Ok(RadialBounds {
        d,
        r_lo: (-lin + d.sqrt()) / (4.0 * c.c2),
        r_hi: (-lin - d.sqrt()) / (4.0 * c.c2),
    })
}

/// Four-body band: `D = 6 c1^2 c2 m2 + (3 m1 m2 + (3/l) m2^2)^2`, denominators `2 c2`.
pub fn radial_bounds_four_body(c: &ConservedPair, m1: f64, m2: f64) -> Result<RadialBounds> {
    require_family(c)?;
    let l = 3f64.sqrt();
    let lin = 3.0 * m1 * m2 + 3.0 / l * m2 * m2;
    let d = 6.0 * c.c1 * c.c1 * c.c2 * m2 + lin * lin;
    Ok(RadialBounds {
        d,
        r_lo: (-lin + d.sqrt()) / (2.0 * c.c2),
        r_hi: (-lin - d.sqrt()) / (2.0 * c.c2),
    })
}

/// Period of the planar Kepler orbit spanning the radial band, with
/// gravitational parameter `m1 + a_n m2`. Used to size test horizons.
pub fn characteristic_time(c: &ConservedPair, sys: &RingSystem) -> Result<f64> {
    let rb = radial_bounds(c, sys)?;
    let a = 0.5 * (rb.r_lo + rb.r_hi);
    let mu = sys.m1 + sys.rc.a_n * sys.m2;
    Ok(2.0 * std::f64::consts::PI * (a * a * a / mu).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub r_min: f64,
    pub r_max: f64,
    /// `r_min - r_lo`
    pub lower_margin: f64,
    /// `r_hi - r_max`
    pub upper_margin: f64,
}

impl CertificateReport {
    pub fn strict(&self) -> bool {
        self.lower_margin > 0.0 && self.upper_margin > 0.0
    }
}

/// Relative slack allowed when the band is touched, which happens exactly
/// at turning points of planar (`f = 0`) orbits.
const CERTIFICATE_SLACK: f64 = 1e-9;

/// Checks that every stored sample, and the dense output at the turning
/// points, stays inside the radial band.
pub fn no_collision_certificate(traj: &Trajectory, rb: &RadialBounds) -> Result<CertificateReport> {
    let mut r_min = f64::INFINITY;
    let mut r_max = f64::NEG_INFINITY;
    let turning = traj
        .events()
        .iter()
        .map(|e| traj.state_at(e.t).map(|s| s.r))
        .collect::<Result<Vec<_>>>()?;
    for r in traj.samples().iter().map(|s| s.r).chain(turning) {
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    let report = CertificateReport {
        r_min,
        r_max,
        lower_margin: r_min - rb.r_lo,
        upper_margin: rb.r_hi - r_max,
    };
    let slack = CERTIFICATE_SLACK * rb.r_hi;
    if report.lower_margin < -slack || report.upper_margin < -slack {
        return Err(Error::TheoremViolation(format!(
            "ring radius left [{}, {}]: observed [{r_min}, {r_max}]",
            rb.r_lo, rb.r_hi
        )));
    }
    Ok(report)
}

impl VectorField for RingSystem {
    fn dim(&self) -> usize {
        5
    }

    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let d = reduced_rhs(&ReducedState::from_slice(t, y), self)?;
        dydt.copy_from_slice(&[d.df, d.dfdot, d.dr, d.drdot, d.dtheta]);
        Ok(())
    }
}
