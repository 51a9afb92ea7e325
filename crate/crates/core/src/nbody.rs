//! Direct Cartesian (n+1)-body integration, used as an oracle for the
//! reduced model.
//!
//! Body 0 is the axial body; bodies `1..=n` are the ring, body `j` at phase
//! `theta + 2 pi (j - 1) / n`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSettings};
use crate::model::{unit_root, ReducedState, RingSystem, SeedConfig};
use crate::ode::{solve, DenseSolution, VectorField};
use crate::output::{sig17, write_preamble};

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    a[0].hypot(a[1]).hypot(a[2])
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub mass: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub t: f64,
    pub bodies: Vec<Body>,
}

impl FullState {
    fn weighted_sum(&self, pick: impl Fn(&Body) -> Vec3) -> Vec3 {
        self.bodies.iter().fold([0.0; 3], |acc, b| {
            let v = pick(b);
            [acc[0] + b.mass * v[0], acc[1] + b.mass * v[1], acc[2] + b.mass * v[2]]
        })
    }

    /// `sum m_i x_i`; zero for reconstructed states.
    pub fn mass_moment(&self) -> Vec3 {
        self.weighted_sum(|b| b.position)
    }

    pub fn momentum(&self) -> Vec3 {
        self.weighted_sum(|b| b.velocity)
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.bodies.iter().fold([0.0; 3], |acc, b| {
            let l = cross(b.position, b.velocity);
            [acc[0] + b.mass * l[0], acc[1] + b.mass * l[1], acc[2] + b.mass * l[2]]
        })
    }

    /// `sum m_i |v_i|`, the scale against which momentum drift is measured.
    pub fn momentum_scale(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass * norm(b.velocity)).sum()
    }

    fn to_vec(&self) -> Vec<f64> {
        self.bodies
            .iter()
            .flat_map(|b| b.position.into_iter().chain(b.velocity))
            .collect()
    }

    fn from_slice(t: f64, masses: &[f64], y: &[f64]) -> Self {
        let bodies = masses
            .iter()
            .zip(y.chunks_exact(6))
            .map(|(&mass, c)| Body {
                mass,
                position: [c[0], c[1], c[2]],
                velocity: [c[3], c[4], c[5]],
            })
            .collect();
        Self { t, bodies }
    }
}

/// Cartesian state of the symmetric configuration described by `s`.
pub fn reconstruct_full(s: &ReducedState, sys: &RingSystem) -> Result<FullState> {
    if !(s.r > 0.0) {
        return Err(Error::Collision { t: s.t, r: s.r });
    }
    let lambda = sys.ring_height_ratio();
    let theta_dot = sys.c1 / (s.r * s.r);
    let (ct, st) = (s.theta.cos(), s.theta.sin());
    let mut bodies = Vec::with_capacity(sys.n + 1);
    bodies.push(Body {
        mass: sys.m1,
        position: [0.0, 0.0, s.f],
        velocity: [0.0, 0.0, s.fdot],
    });
    for j in 0..sys.n {
        let (ca, sa) = unit_root(j, sys.n);
        let c = ct * ca - st * sa;
        let sn = st * ca + ct * sa;
        bodies.push(Body {
            mass: sys.m2,
            position: [s.r * c, s.r * sn, -lambda * s.f],
            velocity: [
                s.rdot * c - s.r * theta_dot * sn,
                s.rdot * sn + s.r * theta_dot * c,
                -lambda * s.fdot,
            ],
        });
    }
    Ok(FullState { t: s.t, bodies })
}

fn pair_distance(t: f64, a: Vec3, b: Vec3) -> Result<(Vec3, f64)> {
    let d = sub(b, a);
    let dist = norm(d);
    if !(dist > 0.0 && dist.is_finite()) {
        return Err(Error::Collision { t, r: dist });
    }
    Ok((d, dist))
}

/// Newtonian accelerations with `G = 1`.
pub fn accelerations(t: f64, masses: &[f64], positions: &[Vec3]) -> Result<Vec<Vec3>> {
    let mut acc = vec![[0.0; 3]; masses.len()];
    for i in 0..masses.len() {
        for j in i + 1..masses.len() {
            let (d, dist) = pair_distance(t, positions[i], positions[j])?;
            let inv3 = 1.0 / (dist * dist * dist);
            for k in 0..3 {
                acc[i][k] += masses[j] * d[k] * inv3;
                acc[j][k] -= masses[i] * d[k] * inv3;
            }
        }
    }
    Ok(acc)
}

pub fn nbody_rhs(fs: &FullState) -> Result<Vec<Vec3>> {
    let masses: Vec<f64> = fs.bodies.iter().map(|b| b.mass).collect();
    let positions: Vec<Vec3> = fs.bodies.iter().map(|b| b.position).collect();
    accelerations(fs.t, &masses, &positions)
}

/// Kinetic minus pairwise potential energy.
pub fn cartesian_energy(fs: &FullState) -> Result<f64> {
    let b = &fs.bodies;
    let mut e: f64 = b.iter().map(|x| 0.5 * x.mass * norm(x.velocity).powi(2)).sum();
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let (_, dist) = pair_distance(fs.t, b[i].position, b[j].position)?;
            e -= b[i].mass * b[j].mass / dist;
        }
    }
    Ok(e)
}

/// The direct system as a first-order vector field; per body the state is
/// `x, y, z, vx, vy, vz`.
#[derive(Debug, Clone, PartialEq)]
pub struct NBodySystem {
    pub masses: Vec<f64>,
}

impl VectorField for NBodySystem {
    fn dim(&self) -> usize {
        6 * self.masses.len()
    }

    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let positions: Vec<Vec3> = y.chunks_exact(6).map(|c| [c[0], c[1], c[2]]).collect();
        let acc = accelerations(t, &self.masses, &positions)?;
        for (i, (c, a)) in y.chunks_exact(6).zip(acc).enumerate() {
            dydt[6 * i..6 * i + 3].copy_from_slice(&c[3..6]);
            dydt[6 * i + 3..6 * i + 6].copy_from_slice(&a);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FullTrajectory {
    masses: Vec<f64>,
    dense: DenseSolution,
}

impl FullTrajectory {
    pub fn t_start(&self) -> f64 {
        self.dense.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn state_at(&self, t: f64) -> Result<FullState> {
        Ok(FullState::from_slice(t, &self.masses, &self.dense.eval(t)?))
    }

    /// States at the integrator's own steps.
    pub fn steps(&self) -> Vec<FullState> {
        (0..self.dense.len())
            .map(|i| FullState::from_slice(self.dense.times()[i], &self.masses, self.dense.node(i)))
            .collect()
    }
}

pub fn integrate_full(start: &FullState, t_end: f64, settings: &IntegratorSettings) -> Result<FullTrajectory> {
    let masses: Vec<f64> = start.bodies.iter().map(|b| b.mass).collect();
    let field = NBodySystem { masses: masses.clone() };
    let dense = solve(&field, start.t, &start.to_vec(), t_end, settings)?;
    Ok(FullTrajectory { masses, dense })
}

/// Reduced-versus-Cartesian comparison over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Max over samples and bodies of the Euclidean position difference.
    pub max_position_deviation: f64,
    /// Max spread of ring-body distances from the axis.
    pub max_radius_spread: f64,
    /// Max `|z_ring + (m1 / (n m2)) f|` in the Cartesian run.
    pub max_height_error: f64,
    /// Max deviation of consecutive planar phase differences from `2 pi / n`.
    pub max_phase_error: f64,
    /// Max `|x| + |y|` of the axial body in the Cartesian run.
    pub max_axial_offset: f64,
    pub energy_drift: f64,
    pub momentum_drift: f64,
    pub angular_momentum_drift: f64,
}

/// Number of uniform comparison times.
pub const CROSS_SAMPLES: usize = 1000;

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    a - two_pi * (a / two_pi).round()
}

/// Shape and conservation measures of one Cartesian state, relative to the
/// initial state.
fn measure(fs: &FullState, n: usize, lambda: f64, e0: f64, start: &FullState, out: &mut CrossValidation) -> Result<()> {
    let axial = fs.bodies[0];
    out.max_axial_offset = out.max_axial_offset.max(axial.position[0].abs() + axial.position[1].abs());
    let ring = &fs.bodies[1..];
    let radii: Vec<f64> = ring.iter().map(|b| b.position[0].hypot(b.position[1])).collect();
    let (lo, hi) = radii.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
    out.max_radius_spread = out.max_radius_spread.max(hi - lo);
    let step = 2.0 * std::f64::consts::PI / n as f64;
    for (j, b) in ring.iter().enumerate() {
        out.max_height_error = out.max_height_error.max((b.position[2] + lambda * axial.position[2]).abs());
        let next = ring[(j + 1) % n];
        let a0 = b.position[1].atan2(b.position[0]);
        let a1 = next.position[1].atan2(next.position[0]);
        out.max_phase_error = out.max_phase_error.max(wrap_angle(a1 - a0 - step).abs());
    }

    let e = cartesian_energy(fs)?;
    out.energy_drift = out.energy_drift.max(((e - e0) / e0.abs()).abs());
    let p = norm(sub(fs.momentum(), start.momentum()));
    out.momentum_drift = out.momentum_drift.max(p / start.momentum_scale().max(f64::MIN_POSITIVE));
    let l0 = start.angular_momentum();
    let l = norm(sub(fs.angular_momentum(), l0));
    out.angular_momentum_drift = out.angular_momentum_drift.max(l / norm(l0).max(f64::MIN_POSITIVE));
    Ok(())
}

/// Integrates `q` both ways over `[0, t_end]` and compares body positions at
/// [`CROSS_SAMPLES`] uniform times. A deviation above `tolerance` is a
/// divergence error.
pub fn cross_validate(q: &SeedConfig, t_end: f64, settings: &IntegratorSettings, tolerance: f64) -> Result<CrossValidation> {
    let sys = q.system()?;
    let reduced = integrate(q, t_end, settings)?;
    let start = reconstruct_full(reduced.first(), &sys)?;
    let full = integrate_full(&start, t_end, settings)?;
    let e0 = cartesian_energy(&start)?;
    let lambda = sys.ring_height_ratio();

    let mut report = CrossValidation::default();
    for rs in reduced.uniform_samples(CROSS_SAMPLES)? {
        let expected = reconstruct_full(&rs, &sys)?;
        let got = full.state_at(rs.t)?;
        for (a, b) in expected.bodies.iter().zip(&got.bodies) {
            report.max_position_deviation = report.max_position_deviation.max(norm(sub(a.position, b.position)));
        }
        measure(&got, sys.n, lambda, e0, &start, &mut report)?;
    }
    if !(report.max_position_deviation <= tolerance) {
        return Err(Error::Divergence {
            deviation: report.max_position_deviation,
            tolerance,
        });
    }
    Ok(report)
}

/// Writes `t,body,x,y,z,vx,vy,vz`, one row per body per state.
pub fn write_csv<W: Write>(out: &mut W, preamble: &[String], states: &[FullState]) -> std::io::Result<()> {
    write_preamble(out, preamble)?;
    writeln!(out, "t,body,x,y,z,vx,vy,vz")?;
    for s in states {
        for (i, b) in s.bodies.iter().enumerate() {
            writeln!(
                out,
                "{},{i},{},{},{},{},{},{}",
                sig17(s.t),
                sig17(b.position[0]),
                sig17(b.position[1]),
                sig17(b.position[2]),
                sig17(b.velocity[0]),
                sig17(b.velocity[1]),
                sig17(b.velocity[2])
            )?;
        }
    }
    Ok(())
}
