//! Dormand-Prince 5(4) stepper with the standard fourth-order continuous
//! extension. Both the reduced system and the direct Cartesian system run on
//! this one core.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side of a first-order system `y' = F(t, y)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// Step budget; exceeding it is a resource error.
    pub max_steps: usize,
    /// `|rdot|` below this is treated as having no definite sign when
    /// locating turning points.
    pub rdot_floor: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_step: None,
            max_steps: 2_000_000,
            rdot_floor: 1e-9,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1e-3], got {v}")));
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidConfig(format!("max_step must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Piecewise dense output over the accepted steps of one run.
///
/// Step `i` covers `[times[i], times[i + 1]]` and stores five coefficient
/// vectors, laid out contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    coeffs: Vec<f64>,
}

impl DenseSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty solution")
    }

    /// Evaluates the interpolant at `t` into `out`. Node times return the
    /// stored node exactly.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let i = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => {
                out.copy_from_slice(self.node(i));
                return Ok(());
            }
            Err(i) => i - 1,
        };
        let h = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / h;
        let s1 = 1.0 - s;
        let d = self.dim;
        let c = &self.coeffs[5 * d * i..5 * d * (i + 1)];
        for (j, o) in out.iter_mut().enumerate() {
            *o = c[j] + s * (c[d + j] + s1 * (c[2 * d + j] + s * (c[3 * d + j] + s1 * c[4 * d + j])));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }
}

fn error_norm(y0: &[f64], y1: &[f64], err: &[f64], s: &IntegratorSettings) -> f64 {
    let mut acc = 0.0;
    for ((a, b), e) in y0.iter().zip(y1).zip(err) {
        let sc = s.abs_tol + s.rel_tol * a.abs().max(b.abs());
        acc += (e / sc).powi(2);
    }
    (acc / y0.len() as f64).sqrt()
}

fn initial_step<F: VectorField>(
    field: &F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    s: &IntegratorSettings,
) -> Result<f64> {
    let n = y0.len();
    let scale: Vec<f64> = y0.iter().map(|y| s.abs_tol + s.rel_tol * y.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&scale).map(|(x, sc)| (x / sc).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    field.eval(t0 + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    let mut h = (100.0 * h0).min(h1).min(span);
    if let Some(m) = s.max_step {
        h = h.min(m);
    }
    Ok(h)
}

/// Integrates `field` from `(t0, y0)` to `t_end > t0`, keeping every accepted
/// step and its dense-output coefficients.
pub fn solve<F: VectorField>(
    field: &F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<DenseSolution> {
    settings.validate()?;
    let dim = field.dim();
    if y0.len() != dim {
        return Err(Error::InvalidConfig(format!(
            "initial state has {} components, field expects {dim}",
            y0.len()
        )));
    }
    if !(t_end > t0) {
        return Err(Error::InvalidConfig(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }

    let mut sol = DenseSolution {
        dim,
        times: vec![t0],
        states: y0.to_vec(),
        coeffs: Vec::new(),
    };

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; dim];
    let mut y_stage = vec![0.0; dim];
    let mut err = vec![0.0; dim];
    let mut t = t0;

    field.eval(t, &y, &mut k[0])?;
    let mut h = initial_step(field, t0, &y, &k[0], t_end - t0, settings)?;
    let mut err_old: f64 = 1e-4;
    let mut steps = 0usize;
    let mut rejected_last = false;

    while t < t_end {
        if steps >= settings.max_steps {
            return Err(Error::Budget {
                t,
                max_steps: settings.max_steps,
            });
        }
        if let Some(m) = settings.max_step {
            h = h.min(m);
        }
        let last = t + h >= t_end || (t_end - t - h) < 1e-12 * h;
        if last {
            h = t_end - t;
        }
        if h <= 8.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        steps += 1;

        macro_rules! stage {
            ($dst:expr, $c:expr, $($ai:expr => $ki:expr),+) => {{
                for j in 0..dim {
                    y_stage[j] = y[j] + h * (0.0 $(+ $ai * k[$ki][j])+);
                }
                field.eval(t + $c * h, &y_stage, &mut k[$dst])
            }};
        }

        let staged = (|| -> Result<()> {
            stage!(1, C2, A21 => 0)?;
            stage!(2, C3, A31 => 0, A32 => 1)?;
            stage!(3, C4, A41 => 0, A42 => 1, A43 => 2)?;
            stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3)?;
            stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4)?;
            Ok(())
        })();
        if let Err(e) = staged {
            // A trial stage that left the domain: shrink and retry.
            if matches!(e, Error::Collision { .. }) {
                h *= 0.25;
                rejected_last = true;
                continue;
            }
            return Err(e);
        }
        for j in 0..dim {
            y_new[j] = y[j]
                + h * (A71 * k[0][j] + A73 * k[2][j] + A74 * k[3][j] + A75 * k[4][j] + A76 * k[5][j]);
        }
        if let Err(e) = field.eval(t + h, &y_new, &mut k[6]) {
            if matches!(e, Error::Collision { .. }) {
                h *= 0.25;
                rejected_last = true;
                continue;
            }
            return Err(e);
        }
        for j in 0..dim {
            err[j] = h
                * (E1 * k[0][j] + E3 * k[2][j] + E4 * k[3][j] + E5 * k[4][j] + E6 * k[5][j] + E7 * k[6][j]);
        }
        let e = error_norm(&y, &y_new, &err, settings);

        if e <= 1.0 {
            let fac = if e == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * e.powf(-0.2 + 0.75 * BETA) * err_old.powf(BETA)).clamp(FAC_MIN, FAC_MAX)
            };
            err_old = e.max(1e-4);
            let base = sol.coeffs.len();
            sol.coeffs.resize(base + 5 * dim, 0.0);
            let c = &mut sol.coeffs[base..];
            for j in 0..dim {
                let ydiff = y_new[j] - y[j];
                let bspl = h * k[0][j] - ydiff;
                c[j] = y[j];
                c[dim + j] = ydiff;
                c[2 * dim + j] = bspl;
                c[3 * dim + j] = ydiff - h * k[6][j] - bspl;
                c[4 * dim + j] = h
                    * (D1 * k[0][j] + D3 * k[2][j] + D4 * k[3][j] + D5 * k[4][j] + D6 * k[5][j]
                        + D7 * k[6][j]);
            }
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y_new);
            sol.times.push(t);
            sol.states.extend_from_slice(&y);
            k.swap(0, 6);
            let grow = if rejected_last { fac.min(1.0) } else { fac };
            rejected_last = false;
            h *= grow;
        } else {
            let fac = if e.is_finite() {
                (SAFETY * e.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            h *= fac;
            rejected_last = true;
        }
    }
    Ok(sol)
}
