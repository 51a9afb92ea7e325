//! Periodicity residual, recurrence checks and derivative-free refinement of
//! periodic candidates.
//!
//! A family member is periodic with period `t0` up to a rotation by `theta0`
//! when `f`, `fdot` and `rdot` return to their initial values at `t0` while
//! the ring phase has advanced by exactly `theta0`. The residual
//!
//! ```text
//! xi = (fdot(t0) - df0)^2 + (theta(t0) - theta0)^2 + rdot(t0)^2 + f(t0)^2
//! ```
//!
//! measures the failure of that condition with the unwrapped phase.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSettings};
use crate::model::{conserved_from_seed, PiRational, SeedConfig};
use crate::simplex::{minimize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub integrator: IntegratorSettings,
    /// Refinement stops once the residual reaches this value.
    pub xi_target: f64,
    /// Objective evaluations per simplex run.
    pub evals_per_run: usize,
    /// Simplex runs per refinement; each restart starts from the best point.
    pub max_runs: usize,
    /// Initial simplex edge relative to each coordinate.
    pub initial_rel_step: f64,
    /// Residuals above this skip the full-closure integration.
    pub closure_gate: f64,
    /// Refined seeds closer than this (relative, every coordinate) are duplicates.
    pub dedupe_rel: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            xi_target: 1e-14,
            evals_per_run: 1200,
            max_runs: 8,
            initial_rel_step: 1e-4,
            closure_gate: 1e-3,
            dedupe_rel: 1e-6,
        }
    }
}

/// The four terms of the residual, unsquared, plus `r(t0) - y10`, which the
/// residual does not contain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiBreakdown {
    pub fdot_mismatch: f64,
    pub theta_mismatch: f64,
    pub rdot_end: f64,
    pub f_end: f64,
    pub radius_mismatch: f64,
}

impl XiBreakdown {
    pub fn xi(&self) -> f64 {
        self.fdot_mismatch.powi(2) + self.theta_mismatch.powi(2) + self.rdot_end.powi(2) + self.f_end.powi(2)
    }
}

fn require_in_family(q: &SeedConfig) -> Result<()> {
    let c = conserved_from_seed(q)?;
    if c.c1 == 0.0 || !(c.c2 < 0.0) {
        return Err(Error::OutsideFamily(format!("c1 = {}, c2 = {}", c.c1, c.c2)));
    }
    Ok(())
}

pub fn xi_breakdown(q: &SeedConfig, settings: &IntegratorSettings) -> Result<XiBreakdown> {
    let (t0, theta0) = q.period()?;
    require_in_family(q)?;
    let traj = integrate(q, t0, settings)?;
    let end = traj.last();
    Ok(XiBreakdown {
        fdot_mismatch: end.fdot - q.df0,
        theta_mismatch: end.theta - theta0.radians(),
        rdot_end: end.rdot,
        f_end: end.f,
        radius_mismatch: end.r - q.y10,
    })
}

pub fn xi(q: &SeedConfig, settings: &IntegratorSettings) -> Result<f64> {
    xi_breakdown(q, settings).map(|b| b.xi())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub xi: f64,
    pub radius_mismatch: f64,
    pub full_period_multiplier: u64,
    /// Max deviation of `(f, fdot, r, rdot, theta - s theta0)` from the initial
    /// state after `s t0`. `None` when the residual was above the gate.
    pub closure: Option<f64>,
}

impl RecurrenceReport {
    pub fn periodic(&self, closure_tol: f64) -> bool {
        self.closure.is_some_and(|c| c <= closure_tol)
    }
}

pub fn verify_recurrence(q: &SeedConfig, settings: &SearchSettings) -> Result<RecurrenceReport> {
    let (t0, theta0) = q.period()?;
    let b = xi_breakdown(q, &settings.integrator)?;
    let s = theta0.full_turn_multiplier();
    let residual = b.xi();
    let closure = if residual <= settings.closure_gate {
        let traj = integrate(q, s as f64 * t0, &settings.integrator)?;
        let end = traj.last();
        let start = q.initial_state();
        let turned = theta0.scaled(s as i64).radians();
        let dev = [
            end.f - start.f,
            end.fdot - start.fdot,
            end.r - start.r,
            end.rdot - start.rdot,
            end.theta - turned,
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
        Some(dev)
    } else {
        None
    };
    Ok(RecurrenceReport {
        xi: residual,
        radius_mismatch: b.radius_mismatch,
        full_period_multiplier: s,
        closure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCandidate {
    pub seed: SeedConfig,
    pub xi: f64,
    pub refined: bool,
    pub full_period_multiplier: u64,
}

impl PeriodicCandidate {
    pub fn evaluate(seed: SeedConfig, settings: &IntegratorSettings) -> Result<Self> {
        let (_, theta0) = seed.period()?;
        Ok(Self {
            seed,
            xi: xi(&seed, settings)?,
            refined: false,
            full_period_multiplier: theta0.full_turn_multiplier(),
        })
    }

    /// Largest relative difference over `(y10, dy20, df0, t0)`.
    pub fn rel_distance(&self, other: &SeedConfig) -> f64 {
        let a = refinable(&self.seed);
        let b = refinable(other);
        a.iter().zip(&b).map(|(x, y)| (x - y).abs() / y.abs().max(1e-300)).fold(0.0, f64::max)
    }
}

fn refinable(q: &SeedConfig) -> [f64; 4] {
    [q.y10, q.dy20, q.df0, q.t0.unwrap_or(f64::NAN)]
}

fn with_refinable(q: &SeedConfig, x: &[f64]) -> SeedConfig {
    SeedConfig {
        y10: x[0],
        dy20: x[1],
        df0: x[2],
        t0: Some(x[3]),
        ..*q
    }
}

/// Residual as an objective: seeds outside the collisionless family or that
/// fail to integrate are walls.
fn objective(base: &SeedConfig, x: &[f64], settings: &IntegratorSettings) -> f64 {
    let q = with_refinable(base, x);
    if q.validate().is_err() {
        return f64::INFINITY;
    }
    xi(&q, settings).unwrap_or(f64::INFINITY)
}

/// Minimizes the residual over `(y10, dy20, df0, t0)` with masses, ring size
/// and `theta0` fixed. The returned residual never exceeds the input's.
pub fn refine(start: &PeriodicCandidate, settings: &SearchSettings) -> Result<PeriodicCandidate> {
    start.seed.period()?;
    require_in_family(&start.seed)?;
    if !start.xi.is_finite() {
        return Err(Error::InvalidConfig("candidate residual is not finite".into()));
    }
    if start.xi <= settings.xi_target {
        return Ok(PeriodicCandidate { refined: true, ..*start });
    }

    let mut best_x = refinable(&start.seed).to_vec();
    let mut best_f = start.xi;
    let mut rel_step = settings.initial_rel_step;
    for _ in 0..settings.max_runs {
        let opts = SimplexOptions {
            initial_step: best_x.iter().map(|x| rel_step * x.abs().max(1e-3)).collect(),
            max_evals: settings.evals_per_run,
            f_target: settings.xi_target,
            x_rel_tol: 1e-15,
        };
        let run = minimize(|x| objective(&start.seed, x, &settings.integrator), &best_x, &opts);
        if run.f < best_f {
            let gain = best_f / run.f.max(f64::MIN_POSITIVE);
            best_f = run.f;
            best_x = run.x;
            if gain < 10.0 {
                rel_step *= 0.1;
            }
        } else {
            rel_step *= 0.1;
        }
        if best_f <= settings.xi_target {
            break;
        }
    }

    if best_f < start.xi {
        Ok(PeriodicCandidate {
            seed: with_refinable(&start.seed, &best_x),
            xi: best_f,
            refined: true,
            full_period_multiplier: start.full_period_multiplier,
        })
    } else {
        Ok(PeriodicCandidate { refined: false, ..*start })
    }
}

/// Inclusive linear range; `count == 1` means the single value `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn fixed(v: f64) -> Self {
        Self { start: v, stop: v, count: 1 }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
        }
    }
}

/// A rectangular grid over the refinable seed components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub m1: f64,
    pub m2: f64,
    pub theta0: PiRational,
    pub y10: Axis,
    pub dy20: Axis,
    pub df0: Axis,
    pub t0: Axis,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        [self.y10, self.dy20, self.df0, self.t0].iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("y10", self.y10), ("dy20", self.dy20), ("df0", self.df0), ("t0", self.t0)] {
            if !(a.start.is_finite() && a.stop.is_finite()) {
                return Err(Error::InvalidConfig(format!("grid axis {name} is not finite")));
            }
        }
        SeedConfig::new(self.n, self.m1, self.m2, 1.0, 0.0, 0.0).validate()
    }

    /// Point `i` in row-major order, `t0` fastest.
    pub fn point(&self, mut i: usize) -> SeedConfig {
        let it = i % self.t0.count;
        i /= self.t0.count;
        let idf = i % self.df0.count;
        i /= self.df0.count;
        let idy = i % self.dy20.count;
        i /= self.dy20.count;
        SeedConfig::new(
            self.n,
            self.m1,
            self.m2,
            self.y10.value(i),
            self.dy20.value(idy),
            self.df0.value(idf),
        )
        .with_period(self.t0.value(it), self.theta0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub evaluated: usize,
    pub out_of_family: usize,
    pub failed: usize,
    pub below_threshold: usize,
    pub candidates: Vec<PeriodicCandidate>,
}

enum GridOutcome {
    Outside,
    Failed,
    Residual(PeriodicCandidate),
}

/// Evaluates the residual on every grid point, refines those below
/// `threshold` and drops near-duplicates. Work is spread over `jobs` worker
/// threads; results are merged in grid order so the output does not depend
/// on scheduling.
pub fn sweep(grid: &GridSpec, threshold: f64, settings: &SearchSettings, jobs: usize) -> Result<SweepReport> {
    grid.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        let outcomes: Vec<GridOutcome> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let q = grid.point(i);
                if q.validate().is_err() || require_in_family(&q).is_err() {
                    return GridOutcome::Outside;
                }
                match PeriodicCandidate::evaluate(q, &settings.integrator) {
                    Ok(c) => GridOutcome::Residual(c),
                    Err(_) => GridOutcome::Failed,
                }
            })
            .collect();

        let mut report = SweepReport {
            evaluated: outcomes.len(),
            out_of_family: 0,
            failed: 0,
            below_threshold: 0,
            candidates: Vec::new(),
        };
        let mut promising = Vec::new();
        for o in outcomes {
            match o {
                GridOutcome::Outside => report.out_of_family += 1,
                GridOutcome::Failed => report.failed += 1,
                GridOutcome::Residual(c) if c.xi < threshold => promising.push(c),
                GridOutcome::Residual(_) => {}
            }
        }
        report.below_threshold = promising.len();

        let refined: Vec<PeriodicCandidate> = promising
            .par_iter()
            .map(|c| refine(c, settings).unwrap_or(*c))
            .collect();
        for c in refined {
            if !report.candidates.iter().any(|k| k.rel_distance(&c.seed) < settings.dedupe_rel) {
                report.candidates.push(c);
            }
        }
        Ok(report)
    })
}

/// One line of the candidate catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub n: usize,
    pub m1: f64,
    pub m2: f64,
    pub y10: f64,
    pub dy20: f64,
    pub df0: f64,
    pub theta0_p: i64,
    pub theta0_q: i64,
    pub t0: f64,
    pub xi: f64,
    pub refined: bool,
    pub full_period_multiplier: u64,
}

impl From<&PeriodicCandidate> for CatalogRecord {
    fn from(c: &PeriodicCandidate) -> Self {
        let q = &c.seed;
        let th = q.theta0.expect("candidates carry theta0");
        Self {
            n: q.n,
            m1: q.m1,
            m2: q.m2,
            y10: q.y10,
            dy20: q.dy20,
            df0: q.df0,
            theta0_p: th.numer(),
            theta0_q: th.denom(),
            t0: q.t0.expect("candidates carry t0"),
            xi: c.xi,
            refined: c.refined,
            full_period_multiplier: c.full_period_multiplier,
        }
    }
}

impl CatalogRecord {
    pub fn into_candidate(self) -> Result<PeriodicCandidate> {
        let seed = SeedConfig::new(self.n, self.m1, self.m2, self.y10, self.dy20, self.df0)
            .with_period(self.t0, PiRational::new(self.theta0_p, self.theta0_q)?);
        seed.validate()?;
        Ok(PeriodicCandidate {
            seed,
            xi: self.xi,
            refined: self.refined,
            full_period_multiplier: self.full_period_multiplier,
        })
    }
}

/// Newline-delimited JSON, one candidate per line.
pub fn write_catalog<W: Write>(out: &mut W, candidates: &[PeriodicCandidate]) -> std::io::Result<()> {
    for c in candidates {
        serde_json::to_writer(&mut *out, &CatalogRecord::from(c))?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_catalog(text: &str) -> Result<Vec<PeriodicCandidate>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            serde_json::from_str::<CatalogRecord>(l)
                .map_err(|e| Error::Parse(format!("catalog line {l:?}: {e}")))
                .and_then(CatalogRecord::into_candidate)
        })
        .collect()
}
