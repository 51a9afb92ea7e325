//! Adaptive integration of the reduced system with dense output, turning
//! point detection (zeros of `rdot`) and energy drift monitoring.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{energy, reduced_rhs};
use crate::error::Result;
use crate::model::{ReducedState, RingSystem, SeedConfig};
use crate::ode::{solve, DenseSolution};
use crate::output::{sig17, write_preamble};

pub use crate::ode::IntegratorSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurningKind {
    /// `rdot` goes from negative to positive: a minimum of `r`.
    RdotZeroMin,
    /// `rdot` goes from positive to negative: a maximum of `r`.
    RdotZeroMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub t: f64,
    pub kind: TurningKind,
}

/// Events closer than this in time are merged.
const EVENT_MERGE_DT: f64 = 1e-10;
/// Target for `|rdot|` at a polished event.
const EVENT_RDOT_TOL: f64 = 1e-12;

/// An integrated reduced trajectory. Immutable once built.
#[derive(Debug, Clone)]
pub struct Trajectory {
    system: RingSystem,
    c2: f64,
    samples: Vec<ReducedState>,
    dense: DenseSolution,
    events: Vec<TurningPoint>,
    drift: Vec<f64>,
}

impl Trajectory {
    pub fn system(&self) -> &RingSystem {
        &self.system
    }

    /// Energy of the initial state.
    pub fn energy(&self) -> f64 {
        self.c2
    }

    pub fn samples(&self) -> &[ReducedState] {
        &self.samples
    }

    pub fn events(&self) -> &[TurningPoint] {
        &self.events
    }

    /// Relative energy drift `(c2(t) - c2(0)) / |c2(0)|` at every sample.
    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }

    pub fn t_start(&self) -> f64 {
        self.dense.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn first(&self) -> &ReducedState {
        &self.samples[0]
    }

    pub fn last(&self) -> &ReducedState {
        self.samples.last().expect("trajectory has at least two samples")
    }

    /// Dense-output evaluation.
    pub fn state_at(&self, t: f64) -> Result<ReducedState> {
        let mut y = [0.0; 5];
        self.dense.eval_into(t, &mut y)?;
        Ok(ReducedState::from_slice(t, &y))
    }

    /// `count >= 2` states at uniformly spaced times, endpoints included.
    pub fn uniform_samples(&self, count: usize) -> Result<Vec<ReducedState>> {
        let (a, b) = (self.t_start(), self.t_end());
        let last = count.max(2) - 1;
        (0..=last)
            .map(|i| {
                let t = if i == last { b } else { a + (b - a) * i as f64 / last as f64 };
                self.state_at(t)
            })
            .collect()
    }

    /// Writes `t,f,fdot,r,rdot,theta,c2_rel_drift`, one row per sample.
    pub fn write_csv<W: Write>(&self, out: &mut W, preamble: &[String]) -> std::io::Result<()> {
        write_preamble(out, preamble)?;
        writeln!(out, "t,f,fdot,r,rdot,theta,c2_rel_drift")?;
        for (s, d) in self.samples.iter().zip(&self.drift) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                sig17(s.t),
                sig17(s.f),
                sig17(s.fdot),
                sig17(s.r),
                sig17(s.rdot),
                sig17(s.theta),
                sig17(*d)
            )?;
        }
        Ok(())
    }
}

/// Integrates the family member `q` from its initial conditions to `t_end`.
pub fn integrate(q: &SeedConfig, t_end: f64, settings: &IntegratorSettings) -> Result<Trajectory> {
    let sys = q.system()?;
    integrate_from(&sys, q.initial_state(), t_end, settings)
}

/// Integrates the reduced system from an arbitrary state to `t_end`.
pub fn integrate_from(
    sys: &RingSystem,
    start: ReducedState,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let c2 = energy(&start, sys)?;
    let dense = solve(sys, start.t, &start.to_vec(), t_end, settings)?;
    let samples: Vec<ReducedState> = (0..dense.len())
        .map(|i| ReducedState::from_slice(dense.times()[i], dense.node(i)))
        .collect();
    let scale = c2.abs().max(f64::MIN_POSITIVE);
    let drift = samples
        .iter()
        .map(|s| energy(s, sys).map(|e| (e - c2) / scale))
        .collect::<Result<Vec<_>>>()?;
    let mut traj = Trajectory {
        system: *sys,
        c2,
        samples,
        dense,
        events: Vec::new(),
        drift,
    };
    traj.events = locate_turning_points(&traj, settings.rdot_floor)?;
    Ok(traj)
}

fn definite_sign(v: f64, floor: f64) -> Option<f64> {
    if v > floor {
        Some(1.0)
    } else if v < -floor {
        Some(-1.0)
    } else {
        None
    }
}

fn locate_turning_points(traj: &Trajectory, floor: f64) -> Result<Vec<TurningPoint>> {
    let mut events: Vec<TurningPoint> = Vec::new();
    let first = traj.first();
    let mut last_sign = None;
    let mut last_t = first.t;

    if first.rdot == 0.0 {
        let rddot = reduced_rhs(first, &traj.system)?.drdot;
        if let Some(sign) = definite_sign(rddot, floor) {
            events.push(TurningPoint {
                t: first.t,
                kind: if sign > 0.0 { TurningKind::RdotZeroMin } else { TurningKind::RdotZeroMax },
            });
            last_sign = Some(sign);
        }
    }

    for s in traj.samples.iter() {
        let Some(sign) = definite_sign(s.rdot, floor) else {
            continue;
        };
        match last_sign {
            Some(prev) if prev != sign => {
                let t = polish_root(traj, last_t, s.t)?;
                let kind = if sign > 0.0 { TurningKind::RdotZeroMin } else { TurningKind::RdotZeroMax };
                if events.last().is_none_or(|e| t - e.t > EVENT_MERGE_DT) {
                    events.push(TurningPoint { t, kind });
                }
            }
            _ => {}
        }
        last_sign = Some(sign);
        last_t = s.t;
    }
    Ok(events)
}

/// Illinois-modified regula falsi on the dense `rdot`.
fn polish_root(traj: &Trajectory, mut a: f64, mut b: f64) -> Result<f64> {
    let rdot = |t: f64| traj.state_at(t).map(|s| s.rdot);
    let mut fa = rdot(a)?;
    let mut fb = rdot(b)?;
    let mut side = 0i8;
    for _ in 0..200 {
        let mut t = (a * fb - b * fa) / (fb - fa);
        if !(t > a && t < b) {
            t = 0.5 * (a + b);
        }
        let ft = rdot(t)?;
        if ft.abs() <= EVENT_RDOT_TOL || (b - a) <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            return Ok(t);
        }
        if (ft > 0.0) == (fa > 0.0) {
            a = t;
            fa = ft;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = t;
            fb = ft;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Maximal intervals between consecutive turning points, on each of which
/// `rdot` keeps one sign.
pub fn monotone_segments(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.events.windows(2).map(|w| (w[0].t, w[1].t)).collect()
}
