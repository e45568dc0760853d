//! Nelder–Mead downhill simplex with restarts from the incumbent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Simplex coefficients and stopping rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when `f_worst - f_best` falls below this...
    pub f_tol: f64,
    /// ...and every vertex is within this of the best one (max-norm).
    pub x_tol: f64,
    /// Budget over all restarts.
    pub max_evals: usize,
    pub max_restarts: usize,
    /// Relative size of the simplex built around a (re)start point.
    pub perturbation: f64,
    /// Seeds the signs of restart perturbations.
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_evals: 50_000,
            max_restarts: 5,
            perturbation: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub restarts: usize,
    /// The last simplex met both tolerances within the budget.
    pub converged: bool,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn f_spread(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }

    fn x_spread(&self) -> f64 {
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn point_on(c: &[f64], toward: &[f64], coef: f64) -> Vec<f64> {
    c.iter().zip(toward).map(|(ci, ti)| ci + coef * (ti - ci)).collect()
}

/// Axis-aligned simplex around `x0`, each step `perturbation · |x_i|`
/// (or a small absolute step at zero) with the given signs.
fn build_simplex(x0: &[f64], perturbation: f64, signs: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut p = x0.to_vec();
        let step = if x0[i].abs() > 1e-8 {
            perturbation * x0[i].abs()
        } else {
            0.0025
        };
        p[i] += signs[i] * step;
        pts.push(p);
    }
    pts
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// One simplex descent; returns whether the tolerances were met.
fn descend<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<F>,
    start: Vec<Vec<f64>>,
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, bool) {
    let values = start.iter().map(|p| counter.eval(p)).collect();
    let mut s = Simplex {
        points: start,
        values,
    };
    let n = s.points.len() - 1;
    loop {
        s.order();
        if s.f_spread() < opts.f_tol && s.x_spread() < opts.x_tol {
            return (s.points[0].clone(), s.values[0], true);
        }
        if counter.evals >= opts.max_evals {
            return (s.points[0].clone(), s.values[0], false);
        }

        let mut centroid = vec![0.0; n];
        for p in &s.points[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = s.points[n].clone();
        let (f_best, f_second, f_worst) = (s.values[0], s.values[n - 1], s.values[n]);

        let xr = point_on(&centroid, &worst, -opts.reflection);
        let fr = counter.eval(&xr);
        if fr < f_best {
            let xe = point_on(&centroid, &xr, opts.expansion);
            let fe = counter.eval(&xe);
            if fe < fr {
                s.points[n] = xe;
                s.values[n] = fe;
            } else {
                s.points[n] = xr;
                s.values[n] = fr;
            }
            continue;
        }
        if fr < f_second {
            s.points[n] = xr;
            s.values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = point_on(&centroid, &xr, opts.contraction);
            let fc = counter.eval(&xc);
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = point_on(&centroid, &worst, opts.contraction);
            let fc = counter.eval(&xc);
            let ok = fc < f_worst;
            (xc, fc, ok)
        };
        if accept {
            s.points[n] = xc;
            s.values[n] = fc;
            continue;
        }
        let best = s.points[0].clone();
        for i in 1..=n {
            s.points[i] = point_on(&best, &s.points[i], opts.shrink);
            s.values[i] = counter.eval(&s.points[i]);
        }
    }
}

/// Minimizes `f` from `x0`. After the first descent the simplex is rebuilt
/// around the incumbent up to `max_restarts` times, stopping early once a
/// restart no longer improves the minimum by more than `f_tol`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    assert!(!x0.is_empty(), "cannot minimize over zero parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut counter = Counter { f, evals: 0 };
    let ones = vec![1.0; x0.len()];
    let (mut x, mut fx, mut converged) = descend(&mut counter, build_simplex(x0, opts.perturbation, &ones), opts);
    let mut restarts = 0;
    while restarts < opts.max_restarts && counter.evals < opts.max_evals {
        restarts += 1;
        let signs: Vec<f64> = (0..x.len())
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let (x_new, f_new, conv) = descend(&mut counter, build_simplex(&x, opts.perturbation, &signs), opts);
        let improvement = fx - f_new;
        if f_new <= fx {
            x = x_new;
            fx = f_new;
        }
        converged = conv;
        if !(improvement > opts.f_tol) && conv {
            break;
        }
    }
    Minimum {
        x,
        f: fx,
        evals: counter.evals,
        restarts,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn retreats_from_infinite_region() {
        // minimum on the boundary of the feasible half-plane x > 0
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.5).powi(2) + (x[1] + 2.0).powi(2)
            }
        };
        let m = minimize(f, &[3.0, 3.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 0.5).abs() < 1e-5 && (m.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let m = minimize(|x: &[f64]| (x[0] - 3.0).powi(2), &[0.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = NelderMeadOptions {
            max_evals: 30,
            ..Default::default()
        };
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &opts);
        assert!(!m.converged);
        assert!(m.evals <= 40);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(4) + (x[0] + x[1]).powi(2) + x[2].abs();
        let a = minimize(f, &[2.0, 2.0, 2.0], &NelderMeadOptions::default());
        let b = minimize(f, &[2.0, 2.0, 2.0], &NelderMeadOptions::default());
        assert_eq!(a, b);
    }
}
