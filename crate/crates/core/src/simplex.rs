//! Nelder-Mead simplex minimization with dimension-adaptive coefficients.

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// Offset of each initial vertex from the start point, one per coordinate.
    pub initial_step: Vec<f64>,
    pub max_evals: usize,
    /// Stop as soon as the best value drops to this level.
    pub f_target: f64,
    /// Stop when every vertex is within this relative distance of the best one.
    pub x_rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `objective` from `x0`. Non-finite objective values act as walls.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut objective: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let dim = x0.len();
    assert!(dim >= 1 && opts.initial_step.len() == dim);
    let nd = dim as f64;
    let (alpha, beta, gamma, delta) = if dim >= 2 {
        (1.0, 1.0 + 2.0 / nd, 0.75 - 0.5 / nd, 1.0 - 1.0 / nd)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(objective(x))
    };

    let mut simplex: Vec<Vertex> = Vec::with_capacity(dim + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push(Vertex { x: x0.to_vec(), f: f0 });
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step[i];
        let f = eval(&x, &mut evals);
        simplex.push(Vertex { x, f });
    }

    let mut centroid = vec![0.0; dim];
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(c, w)| c + t * (w - c)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let best = &simplex[0];
        if best.f <= opts.f_target || evals >= opts.max_evals {
            break;
        }
        let spread = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs() / b.abs().max(1e-300)))
            .fold(0.0f64, f64::max);
        if spread <= opts.x_rel_tol {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(&v.x) {
                *c += x / nd;
            }
        }
        let worst = &simplex[dim];
        let xr = point(&centroid, &worst.x, -alpha);
        let fr = eval(&xr, &mut evals);

        if fr < simplex[0].f {
            let xe = point(&centroid, &worst.x, -alpha * beta);
            let fe = eval(&xe, &mut evals);
            simplex[dim] = if fe < fr { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
            continue;
        }
        if fr < simplex[dim - 1].f {
            simplex[dim] = Vertex { x: xr, f: fr };
            continue;
        }
        let (xc, fc) = if fr < simplex[dim].f {
            let xc = point(&centroid, &worst.x, -alpha * gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst.x, gamma);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(simplex[dim].f) {
            simplex[dim] = Vertex { x: xc, f: fc };
            continue;
        }
        let x_best = simplex[0].x.clone();
        for v in simplex[1..].iter_mut() {
            v.x = point(&x_best, &v.x, delta);
            v.f = eval(&v.x, &mut evals);
        }
    }

    simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
    let best = simplex.swap_remove(0);
    SimplexResult {
        x: best.x,
        f: best.f,
        evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(step: f64, dim: usize) -> SimplexOptions {
        SimplexOptions {
            initial_step: vec![step; dim],
            max_evals: 20_000,
            f_target: 1e-20,
            x_rel_tol: 1e-14,
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &opts(0.1, 2));
        assert!(r.f < 1e-16, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn shifted_quadratic_in_four_dimensions() {
        let target = [10.0, 3.0, -2.0, 30.0];
        let f = |x: &[f64]| x.iter().zip(&target).enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2)).sum();
        let r = minimize(f, &[9.0, 2.5, -1.0, 29.0], &opts(0.5, 4));
        assert!(r.f < 1e-18);
    }

    #[test]
    fn walls_are_respected() {
        // Minimum of the smooth part sits in the forbidden region x < 0.
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2) };
        let r = minimize(f, &[3.0, 0.0], &opts(0.5, 2));
        assert!(r.x[0] >= 0.0 && r.x[0] < 1e-6);
        assert!((r.x[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn budget_stops_the_search() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let o = SimplexOptions { max_evals: 10, ..opts(1.0, 3) };
        let r = minimize(f, &[5.0, 5.0, 5.0], &o);
        assert!(r.evals <= 14);
    }
}
