//! The axial coordinate as a function of the ring radius.
//!
//! On an interval where `rdot` keeps one sign, `f(t) = g(r(t))` and `g`
//! satisfies `a g'' + b g' + c = 0`, with `a = -rdot^2` written through the
//! energy. Conversely, `g` determines `rdot^2` and hence `t(r)` and
//! `theta(r)` by quadrature.
//!
//! Profiles are parametrized by `phi` in `[0, pi]` with
//! `r = r_a + (r_b - r_a)(1 - cos phi) / 2`. A turning point at either end
//! makes `g` behave like a square root of `r - r_turn`, which is smooth in
//! `phi`, and the quadrature integrand has no endpoint singularity.

use std::cell::Cell;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::reduced_rhs;
use crate::error::{Error, Result};
use crate::integrate::{integrate_from, IntegratorSettings, Trajectory};
use crate::model::{ConservedPair, RingSystem};
use crate::output::{sig17, write_preamble};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSample {
    pub r: f64,
    pub g: f64,
    pub gp: f64,
    pub gpp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::Collision { t: f64::NAN, r });
    }
    Ok(())
}

pub fn g_ode_coefficients(r: f64, g: f64, gp: f64, c: &ConservedPair, sys: &RingSystem) -> Result<GCoefficients> {
    check_r(r)?;
    let (n, m1, m2, k) = (sys.nf(), sys.m1, sys.m2, sys.rc.k);
    let (c1, c2) = (c.c1, c.c2);
    let h = sys.h(r, g);
    let h3 = h * h * h;
    let num = 2.0 * n * n * m1 * m2 * m2 * r * r
        + (n * n * sys.rc.b_n * m2.powi(3) * r + 2.0 * n * c2 * m2 * r * r - n * n * c1 * c1 * m2 * m2) * h;
    let den = r * r * h * (n * n * m2 * m2 + m1 * (m1 + n * m2) * gp * gp);
    Ok(GCoefficients {
        a: -num / den,
        b: -c1 * c1 / r.powi(3) + sys.rc.a_n * m2 / (r * r) + n * (k - 1.0) * m2 * r / h3,
        c: -n * k * m2 * g / h3,
    })
}

/// The three-body coefficients in their own closed form.
pub fn g_ode_coefficients_three_body(r: f64, g: f64, gp: f64, c: &ConservedPair, m1: f64, m2: f64) -> Result<GCoefficients> {
    check_r(r)?;
    let (c1, c2) = (c.c1, c.c2);
    let k = (m1 + 2.0 * m2) / (2.0 * m2);
    let h = r.hypot(k * g);
    let h3 = h * h * h;
    Ok(GCoefficients {
        a: (8.0 * (1.0 - k) * m2 * m2 * r * r + (2.0 * c1 * c1 * m2 - r * (m2 * m2 + 2.0 * c2 * r)) * h)
            / (2.0 * m2 * r * r * h * (1.0 + (k - 1.0) * k * gp * gp)),
        b: -(c1 * c1 / r.powi(3) - m2 / (4.0 * r * r) - 2.0 * (k - 1.0) * m2 * r / h3),
        c: -2.0 * k * m2 * g / h3,
    })
}

/// The four-body coefficients in their own closed form, with `l = sqrt(3)`.
pub fn g_ode_coefficients_four_body(r: f64, g: f64, gp: f64, c: &ConservedPair, m1: f64, m2: f64) -> Result<GCoefficients> {
    check_r(r)?;
    let (c1, c2) = (c.c1, c.c2);
    let l = 3f64.sqrt();
    let k = (m1 + 3.0 * m2) / (3.0 * m2);
    let h = r.hypot(k * g);
    let h3 = h * h * h;
    Ok(GCoefficients {
        a: -(18.0 * l * m1 * m2 * m2 * r * r
            + (18.0 * m2.powi(3) * r + 6.0 * l * c2 * m2 * r * r - 9.0 * l * c1 * c1 * m2 * m2) * h)
            / (l * r * r * h * (9.0 * m2 * m2 + m1 * (m1 + 3.0 * m2) * gp * gp)),
        b: -c1 * c1 / r.powi(3) + m2 * l / (3.0 * r * r) + 3.0 * (k - 1.0) * m2 * r / h3,
        c: -3.0 * k * m2 * g / h3,
    })
}

/// `a gpp + b gp + c`.
pub fn g_ode_residual(s: &GSample, c: &ConservedPair, sys: &RingSystem) -> Result<f64> {
    let gpp = s.gpp.ok_or_else(|| Error::InvalidSegment("sample has no second derivative".into()))?;
    let k = g_ode_coefficients(s.r, s.g, s.gp, c, sys)?;
    Ok(k.a * gpp + k.b * s.gp + k.c)
}

/// Residual divided by `|a gpp| + |b gp| + |c|`; zero when all terms vanish.
pub fn normalized_residual(s: &GSample, c: &ConservedPair, sys: &RingSystem) -> Result<f64> {
    let gpp = s.gpp.ok_or_else(|| Error::InvalidSegment("sample has no second derivative".into()))?;
    let k = g_ode_coefficients(s.r, s.g, s.gp, c, sys)?;
    let scale = (k.a * gpp).abs() + (k.b * s.gp).abs() + k.c.abs();
    let res = k.a * gpp + k.b * s.gp + k.c;
    Ok(if scale == 0.0 { res.abs() } else { res.abs() / scale })
}

/// Energy left for radial and axial motion at radius `r` and height `g`:
/// `c2 + n m1 m2 / h + n b_n m2^2 / (2 r) - n m2 c1^2 / (2 r^2)`.
fn available_energy(r: f64, g: f64, c: &ConservedPair, sys: &RingSystem) -> f64 {
    let (n, m2) = (sys.nf(), sys.m2);
    c.c2 + n * sys.m1 * m2 / sys.h(r, g) + n * sys.rc.b_n * m2 * m2 / (2.0 * r) - n * m2 * c.c1 * c.c1 / (2.0 * r * r)
}

fn radial_inertia(sys: &RingSystem) -> f64 {
    0.5 * sys.nf() * sys.m2
}

/// `rdot^2` from the energy with `fdot = g' rdot`. A negative value means
/// `(r, g)` is outside the reachable band; an error is returned unless the
/// value is negative only by rounding, in which case it is clamped to 0.
pub fn rdot_squared_from_g(r: f64, g: f64, gp: f64, c: &ConservedPair, sys: &RingSystem) -> Result<f64> {
    check_r(r)?;
    let e = available_energy(r, g, c, sys);
    let v = e / (radial_inertia(sys) + sys.axial_inertia() / 2.0 * gp * gp);
    if v < 0.0 {
        let scale = c.c2.abs() + sys.nf() * sys.m1 * sys.m2 / sys.h(r, g);
        if e < -1e-12 * scale {
            return Err(Error::InvalidSegment(format!("rdot^2 = {v:e} < 0 at r = {r}")));
        }
        return Ok(0.0);
    }
    Ok(v)
}

/// The three-body separable relation, left side minus right side:
/// `-8 (k - 1) m2 / h + (2 c1^2 - m2 r + 2 r^2 (1 + (k - 1) k g'^2) rdot^2) / r^2 - 2 c2 / m2`.
pub fn three_body_separable_residual(r: f64, g: f64, gp: f64, rdot2: f64, c: &ConservedPair, m1: f64, m2: f64) -> f64 {
    let k = (m1 + 2.0 * m2) / (2.0 * m2);
    let h = r.hypot(k * g);
    -8.0 * (k - 1.0) * m2 / h + (2.0 * c.c1 * c.c1 - m2 * r + 2.0 * r * r * (1.0 + (k - 1.0) * k * gp * gp) * rdot2) / (r * r)
        - 2.0 * c.c2 / m2
}

/// Samples on `(t_a, t_b)` with derivatives from the equations of motion:
/// `gp = fdot / rdot`, `gpp = (fddot rdot - fdot rddot) / rdot^3`. Points
/// where `|rdot| < 1e-5 max|rdot|` are dropped.
pub fn chain_rule_samples(traj: &Trajectory, t_a: f64, t_b: f64, count: usize) -> Result<Vec<GSample>> {
    if !(t_b > t_a) || count < 1 {
        return Err(Error::InvalidSegment(format!("empty segment [{t_a}, {t_b}]")));
    }
    let sys = traj.system();
    let states = (1..=count)
        .map(|i| traj.state_at(t_a + (t_b - t_a) * i as f64 / (count + 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    let peak = states.iter().fold(0.0f64, |m, s| m.max(s.rdot.abs()));
    let mut out = Vec::with_capacity(count);
    for s in states.iter().filter(|s| s.rdot.abs() >= 1e-5 * peak) {
        let d = reduced_rhs(s, sys)?;
        out.push(GSample {
            r: s.r,
            g: s.f,
            gp: s.fdot / s.rdot,
            gpp: Some((d.dfdot * s.rdot - s.fdot * d.drdot) / s.rdot.powi(3)),
        });
    }
    Ok(out)
}

/// Writes `r,g,gp,gpp,residual`.
pub fn write_csv<W: Write>(
    out: &mut W,
    preamble: &[String],
    samples: &[GSample],
    c: &ConservedPair,
    sys: &RingSystem,
) -> std::io::Result<()> {
    write_preamble(out, preamble)?;
    writeln!(out, "r,g,gp,gpp,residual")?;
    for s in samples {
        let res = g_ode_residual(s, c, sys).unwrap_or(f64::NAN);
        let gpp = s.gpp.map(sig17).unwrap_or_default();
        writeln!(out, "{},{},{},{gpp},{}", sig17(s.r), sig17(s.g), sig17(s.gp), sig17(res))?;
    }
    Ok(())
}

/// Interpolating cubic spline with not-a-knot end conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() || n < 4 {
            return Err(Error::InvalidSegment(format!("spline needs >= 4 matching points, got {n}")));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSegment("spline abscissae must increase strictly".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // Unknowns m[1..n-1]; m[0] and m[n-1] are eliminated by continuity
        // of the third derivative at x[1] and x[n-2].
        let k = n - 2;
        let mut lower = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for j in 0..k {
            let i = j + 1;
            lower[j] = h[i - 1];
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            upper[j] = h[i];
            rhs[j] = 6.0 * (d[i] - d[i - 1]);
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 + h0 * h0 / h1;
        if k > 1 {
            upper[0] -= h0 * h0 / h1;
        }
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[k - 1] += hb + hb * hb / ha;
        if k > 1 {
            lower[k - 1] -= hb * hb / ha;
        }

        for j in 1..k {
            let w = lower[j] / diag[j - 1];
            diag[j] -= w * upper[j - 1];
            rhs[j] -= w * rhs[j - 1];
        }
        let mut inner = vec![0.0; k];
        inner[k - 1] = rhs[k - 1] / diag[k - 1];
        for j in (0..k - 1).rev() {
            inner[j] = (rhs[j] - upper[j] * inner[j + 1]) / diag[j];
        }

        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = m[1] - h0 * (m[2] - m[1]) / h1;
        m[n - 1] = m[n - 2] + hb * (m[n - 2] - m[n - 3]) / ha;
        Ok(Self { x, y, m })
    }

    fn interval(&self, t: f64) -> usize {
        let i = self.x.partition_point(|&v| v <= t);
        i.saturating_sub(1).min(self.x.len() - 2)
    }

    /// Value and first derivative.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, dv)
    }
}

/// A function `g` on the radial interval between `r_a` and `r_b`.
pub trait Profile {
    fn r_a(&self) -> f64;
    fn r_b(&self) -> f64;
    /// `g` and `dg/dphi` at parameter `phi`.
    fn at_phi(&self, phi: f64) -> (f64, f64);

    fn radius(&self, phi: f64) -> f64 {
        self.r_a() + (self.r_b() - self.r_a()) * 0.5 * (1.0 - phi.cos())
    }

    fn dr_dphi(&self, phi: f64) -> f64 {
        (self.r_b() - self.r_a()) * 0.5 * phi.sin()
    }

    fn phi_of(&self, r: f64) -> f64 {
        let x = 1.0 - 2.0 * (r - self.r_a()) / (self.r_b() - self.r_a());
        x.clamp(-1.0, 1.0).acos()
    }
}

/// `g` given in closed form as `r -> (g(r), g'(r))`.
pub struct ClosedFormProfile<F> {
    pub r_a: f64,
    pub r_b: f64,
    pub g: F,
}

impl<F: Fn(f64) -> (f64, f64)> Profile for ClosedFormProfile<F> {
    fn r_a(&self) -> f64 {
        self.r_a
    }

    fn r_b(&self) -> f64 {
        self.r_b
    }

    fn at_phi(&self, phi: f64) -> (f64, f64) {
        let (g, gp) = (self.g)(self.radius(phi));
        (g, gp * self.dr_dphi(phi))
    }
}

/// `g` fitted to a monotone trajectory segment by a spline in `phi`.
#[derive(Debug, Clone)]
pub struct SplineProfile {
    r_a: f64,
    r_b: f64,
    spline: CubicSpline,
}

impl SplineProfile {
    /// Fits `count` states sampled uniformly in time on `[t_a, t_b]`,
    /// which must be consecutive turning points or lie between them. The
    /// segment is re-integrated with steps no longer than the sample spacing
    /// so that interpolation error in `r` does not leak into `phi` near the
    /// ends.
    pub fn from_segment(traj: &Trajectory, t_a: f64, t_b: f64, count: usize, settings: &IntegratorSettings) -> Result<Self> {
        if !(t_b > t_a) || count < 4 {
            return Err(Error::InvalidSegment(format!("bad segment [{t_a}, {t_b}] with {count} samples")));
        }
        let fine_settings = IntegratorSettings {
            max_step: Some((t_b - t_a) / (count - 1) as f64),
            ..*settings
        };
        let fine = integrate_from(traj.system(), traj.state_at(t_a)?, t_b, &fine_settings)?;
        let states = (0..count)
            .map(|i| {
                let t = if i + 1 == count { t_b } else { t_a + (t_b - t_a) * i as f64 / (count - 1) as f64 };
                fine.state_at(t)
            })
            .collect::<Result<Vec<_>>>()?;
        let r_a = states[0].r;
        let r_b = states[count - 1].r;
        if r_a == r_b {
            return Err(Error::InvalidSegment("segment has no radial extent".into()));
        }
        let shell = Self {
            r_a,
            r_b,
            spline: CubicSpline { x: vec![], y: vec![], m: vec![] },
        };
        let mut phi: Vec<f64> = states.iter().map(|s| shell.phi_of(s.r)).collect();
        phi[0] = 0.0;
        phi[count - 1] = std::f64::consts::PI;
        let g = states.iter().map(|s| s.f).collect();
        Ok(Self {
            spline: CubicSpline::not_a_knot(phi, g)?,
            ..shell
        })
    }

    /// `g(r)` and `g'(r)`; `g'` is infinite at a turning point with `fdot != 0`.
    pub fn g_at_r(&self, r: f64) -> (f64, f64) {
        let phi = self.phi_of(r);
        let (g, dg) = self.spline.eval(phi);
        (g, dg / self.dr_dphi(phi))
    }
}

impl Profile for SplineProfile {
    fn r_a(&self) -> f64 {
        self.r_a
    }

    fn r_b(&self) -> f64 {
        self.r_b
    }

    fn at_phi(&self, phi: f64) -> (f64, f64) {
        self.spline.eval(phi)
    }
}

const ENDPOINT_GUARD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePoint {
    pub r: f64,
    pub phi: f64,
    /// Time since `r_a`.
    pub t: f64,
    /// Phase advance since `r_a`.
    pub theta: f64,
    pub f: f64,
}

/// Integrates `dt = dr / rdot` and `dtheta = c1 / r^2 dt` from `r_a` to each
/// of `radii` (ordered from `r_a` towards `r_b`). `branch` is the sign of
/// `rdot`; the natural branch is the sign of `r_b - r_a`, which makes `t`
/// increase. `c.c2` should be the energy of the segment itself: near a
/// turning point where `fdot` also nearly vanishes, `rdot^2` is a small
/// difference and integration drift in `c2` matters.
pub fn reconstruct_by_quadrature<P: Profile>(
    profile: &P,
    radii: &[f64],
    branch: f64,
    c: &ConservedPair,
    sys: &RingSystem,
) -> Result<Vec<QuadraturePoint>> {
    if branch != 1.0 && branch != -1.0 {
        return Err(Error::InvalidSegment(format!("branch must be +1 or -1, got {branch}")));
    }
    let dir = (profile.r_b() - profile.r_a()).signum();
    if dir == 0.0 || !dir.is_finite() {
        return Err(Error::InvalidSegment("segment has no radial extent".into()));
    }
    let phis: Vec<f64> = radii.iter().map(|&r| profile.phi_of(r)).collect();
    if phis.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSegment("radii must run from r_a towards r_b".into()));
    }

    let failure: Cell<Option<Error>> = Cell::new(None);
    let a_in = radial_inertia(sys);
    let b_in = sys.axial_inertia() / 2.0;
    // dt/dphi on the natural branch: sqrt(A R'^2 + B G'^2) / sqrt(E). The
    // limit at a turning point is finite but 0/0 in floating point, so nodes
    // within ENDPOINT_GUARD of an end are evaluated at the guard.
    let dt_dphi = |phi: f64| -> f64 {
        let phi = phi.clamp(ENDPOINT_GUARD, std::f64::consts::PI - ENDPOINT_GUARD);
        let r = profile.radius(phi);
        let (g, dg) = profile.at_phi(phi);
        let rp = profile.dr_dphi(phi);
        let e = available_energy(r, g, c, sys);
        if !(e > 0.0) {
            failure.set(Some(Error::InvalidSegment(format!("rdot^2 <= 0 inside the segment at r = {r}"))));
            return f64::NAN;
        }
        (a_in * rp * rp + b_in * dg * dg).sqrt() / e.sqrt()
    };
    let scale = dir / branch;

    let mut out = Vec::with_capacity(radii.len());
    let (mut t, mut theta, mut last) = (0.0, 0.0, 0.0);
    for (&r, &phi) in radii.iter().zip(&phis) {
        if phi > last {
            let dt = quadrature::double_exponential::integrate(dt_dphi, last, phi, 1e-13).integral;
            let dth = quadrature::double_exponential::integrate(
                |p: f64| {
                    let rr = profile.radius(p);
                    sys.c1 / (rr * rr) * dt_dphi(p)
                },
                last,
                phi,
                1e-13,
            )
            .integral;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            t += scale * dt;
            theta += scale * dth;
            last = phi;
        }
        out.push(QuadraturePoint {
            r,
            phi,
            t,
            theta,
            f: profile.at_phi(phi).0,
        });
    }
    Ok(out)
}
