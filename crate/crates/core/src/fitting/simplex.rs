//! Box-constrained Nelder-Mead.
//!
//! Trial points are projected onto the box by clamping. Periodic dimensions are left
//! unconstrained; the objective is expected to be periodic in them and callers wrap
//! the reported coordinates.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dim {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Dim {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn project(&self, x: f64) -> f64 {
        if self.periodic {
            x
        } else {
            x.clamp(self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    /// Relative spread of vertex values accepted as converged.
    pub ftol: f64,
    /// Absolute floor for the spread test.
    pub ftol_abs: f64,
    /// Vertex spread as a fraction of each box width.
    pub xtol: f64,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub(crate) fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    dims: &[Dim],
    opts: &SimplexOptions,
) -> SimplexOutcome {
    let n = x0.len();
    debug_assert_eq!(n, dims.len());
    let project = |x: &mut Vec<f64>| {
        for (v, d) in x.iter_mut().zip(dims) {
            *v = d.project(*v);
        }
    };

    let mut start = x0.to_vec();
    project(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.clone(), eval(f, &start)));
    for (i, d) in dims.iter().enumerate() {
        let mut v = start.clone();
        let step = opts.initial_step * d.width();
        // step away from the nearer bound
        v[i] += if d.periodic || start[i] - d.lo <= d.hi - start[i] { step } else { -step };
        project(&mut v);
        let fv = eval(f, &v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let fspread_ok = if worst.is_finite() { worst - best <= opts.ftol * best.abs() + opts.ftol_abs } else { false };
        let xspread_ok = simplex[1..].iter().all(|(v, _)| {
            v.iter()
                .zip(&simplex[0].0)
                .zip(dims)
                .all(|((a, b), d)| d.width() == 0.0 || (a - b).abs() <= opts.xtol * d.width())
        });
        if fspread_ok && xspread_ok {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |coef: f64| {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + coef * (c - w)).collect();
            project(&mut p);
            p
        };

        let xr = along(1.0);
        let fr = eval(f, &xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(f, &xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = eval(f, &xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(f, &xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best_x = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, b) in v.iter_mut().zip(&best_x) {
                *x = b + 0.5 * (*x - b);
            }
            project(v);
            *fv = eval(f, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    SimplexOutcome { x, f: fx, iterations, converged }
}

/// Nelder-Mead followed by restarts from the best point until a restart stops improving.
pub(crate) fn local_search(
    f: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    dims: &[Dim],
    opts: &SimplexOptions,
    max_restarts: usize,
) -> SimplexOutcome {
    let mut out = nelder_mead(f, x0, dims, opts);
    let restart = SimplexOptions { initial_step: opts.initial_step * 0.25, ..*opts };
    for _ in 0..max_restarts {
        let next = nelder_mead(f, &out.x, dims, &restart);
        let improved = next.f < out.f - (opts.ftol * out.f.abs() + opts.ftol_abs);
        let iterations = out.iterations + next.iterations;
        if next.f <= out.f {
            out = SimplexOutcome { iterations, ..next };
        } else {
            out.iterations = iterations;
        }
        if !improved {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SimplexOptions {
        SimplexOptions { max_iterations: 5000, ftol: 1e-14, ftol_abs: 1e-20, xtol: 1e-10, initial_step: 0.1 }
    }

    #[test]
    fn rosenbrock_interior_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let dims = [Dim { lo: -2.0, hi: 2.0, periodic: false }; 2];
        let out = local_search(&f, &[-1.2, 1.0], &dims, &opts(), 3);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5, "{:?}", out.x);
    }

    #[test]
    fn minimum_outside_box_binds_at_edge() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2) + (x[1] + 1.0).powi(2);
        let dims = [Dim { lo: 0.0, hi: 2.0, periodic: false }, Dim { lo: -3.0, hi: 3.0, periodic: false }];
        let out = local_search(&f, &[1.0, 1.0], &dims, &opts(), 3);
        assert!((out.x[0] - 2.0).abs() < 1e-8);
        assert!((out.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn periodic_dimension_is_unconstrained() {
        let f = |x: &[f64]| 1.0 - x[0].cos();
        let dims = [Dim { lo: 1.0, hi: 1.0 + std::f64::consts::TAU, periodic: true }];
        let out = local_search(&f, &[1.2], &dims, &opts(), 3);
        assert!(out.f < 1e-10);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() + (2.0 * x[1]).cos() + 0.1 * x[0] * x[1];
        let dims = [Dim { lo: -4.0, hi: 4.0, periodic: false }; 2];
        for start in [[0.0, 0.0], [3.0, -2.0], [-4.0, 4.0]] {
            let out = nelder_mead(&f, &start, &dims, &opts());
            assert!(out.f <= f(&start));
        }
    }
}
