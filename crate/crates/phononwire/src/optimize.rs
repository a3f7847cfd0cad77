//! Derivative-free simplex minimizer with seeded restarts and an optional
//! finite-difference quasi-Newton polish. Deterministic for a fixed seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Simplex/restart controls.
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Iteration budget per simplex run.
    pub max_iters: usize,
    /// Convergence threshold on the relative cost spread of the simplex.
    pub tol_rel: f64,
    /// Number of perturbed restarts after the first run.
    pub restarts: usize,
    /// Seed for restart perturbations.
    pub seed: u64,
    /// Reflection, expansion, contraction and shrink coefficients.
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol_rel: 1e-12,
            restarts: 1,
            seed: 0,
            alpha: 1.0,
            gamma: 2.0,
            beta: 0.5,
            sigma: 0.5,
        }
    }
}

/// Outcome of a minimization.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub xmin: Vec<f64>,
    pub fmin: f64,
    pub iterations: usize,
    pub fn_evals: usize,
    pub converged: bool,
    /// Best cost after each iteration of the final accepted run.
    pub trace: Vec<f64>,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    costs: Vec<f64>,
}

impl Simplex {
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.costs.len()).collect();
        idx.sort_by(|&a, &b| self.costs[a].total_cmp(&self.costs[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.costs = idx.iter().map(|&i| self.costs[i]).collect();
    }
}

fn run_simplex<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
    fn_evals: &mut usize,
) -> MinimizeResult {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        *fn_evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    };

    let mut points = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        points.push(p);
    }
    let costs: Vec<f64> = points.iter().map(|p| eval(p)).collect();
    let mut s = Simplex { points, costs };
    s.order();

    let mut trace = Vec::with_capacity(opts.max_iters.min(4096));
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        iterations += 1;
        let best = s.costs[0];
        let worst = s.costs[n];
        trace.push(best);
        if (worst - best).abs() <= opts.tol_rel * (best.abs() + 1e-300) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &s.points[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let dir: Vec<f64> = centroid.iter().zip(&s.points[n]).map(|(c, w)| c - w).collect();
        let at = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&dir).map(|(c, d)| c + t * d).collect()
        };

        let xr = at(opts.alpha);
        let fr = eval(&xr);
        if fr < s.costs[0] {
            let xe = at(opts.gamma);
            let fe = eval(&xe);
            if fe < fr {
                s.points[n] = xe;
                s.costs[n] = fe;
            } else {
                s.points[n] = xr;
                s.costs[n] = fr;
            }
        } else if fr < s.costs[n - 1] {
            s.points[n] = xr;
            s.costs[n] = fr;
        } else {
            let (xc, fc) = if fr < s.costs[n] {
                let xc = at(opts.beta * opts.alpha);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = at(-opts.beta);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < s.costs[n].min(fr) {
                s.points[n] = xc;
                s.costs[n] = fc;
            } else {
                for i in 1..=n {
                    let base = s.points[0].clone();
                    for (v, b) in s.points[i].iter_mut().zip(&base) {
                        *v = b + opts.sigma * (*v - b);
                    }
                    s.costs[i] = eval(&s.points[i].clone());
                }
            }
        }
        s.order();
    }

    MinimizeResult {
        xmin: s.points[0].clone(),
        fmin: s.costs[0],
        iterations,
        fn_evals: *fn_evals,
        converged,
        trace,
    }
}

/// Nelder-Mead with perturbed restarts. `steps` sets the initial simplex
/// extent per coordinate; restarts shrink it and jitter its signs around the
/// best point found so far.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> MinimizeResult {
    assert_eq!(x0.len(), steps.len(), "one step per coordinate");
    let mut fn_evals = 0usize;
    let mut best = run_simplex(&f, x0, steps, opts, &mut fn_evals);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut iterations = best.iterations;

    for round in 0..opts.restarts {
        let shrink = 0.3_f64.powi(round as i32 + 1);
        let jittered: Vec<f64> = steps
            .iter()
            .map(|s| {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let scale = 0.5 + rng.gen::<f64>();
                sign * s * shrink * scale
            })
            .collect();
        let next = run_simplex(&f, &best.xmin, &jittered, opts, &mut fn_evals);
        iterations += next.iterations;
        if next.fmin < best.fmin {
            best = next;
        }
    }
    best.iterations = iterations;
    best.fn_evals = fn_evals;
    best
}

/// Central-difference gradient.
fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: &[f64], evals: &mut usize) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let hi = h[i];
        xp[i] = x[i] + hi;
        let fp = f(&xp);
        xp[i] = x[i] - hi;
        let fm = f(&xp);
        xp[i] = x[i];
        *evals += 2;
        g[i] = (fp - fm) / (2.0 * hi);
    }
    g
}

/// BFGS with Armijo backtracking, gradients from central differences.
/// Intended as a short polish after the simplex; returns the simplex input
/// unchanged when no descent is found. Converged means the line search
/// failed, the gradient reached working precision, or three consecutive
/// steps each improved the cost by under 1e-11 relative, which is as
/// stationary as finite-difference gradients can certify.
pub fn quasi_newton_refine<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: &[f64],
    max_iters: usize,
) -> MinimizeResult {
    let n = x0.len();
    let h: Vec<f64> = scale.iter().map(|s| 1e-6 * s.abs().max(1e-12)).collect();
    let mut fn_evals = 1usize;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut inv_h = vec![vec![0.0; n]; n];
    for (i, row) in inv_h.iter_mut().enumerate() {
        row[i] = scale[i] * scale[i];
    }
    let mut g = fd_gradient(&f, &x, &h, &mut fn_evals);
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0usize;

    for _ in 0..max_iters {
        iterations += 1;
        let mut dir = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                dir[i] -= inv_h[i][j] * g[j];
            }
        }
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        if !slope.is_finite() || slope >= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut drop = 0.0;
        for _ in 0..40 {
            let xt: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let ft = f(&xt);
            fn_evals += 1;
            if ft <= fx + 1e-4 * t * slope {
                let gt = fd_gradient(&f, &xt, &h, &mut fn_evals);
                let s_vec: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y_vec: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = s_vec.iter().zip(&y_vec).map(|(a, b)| a * b).sum();
                if sy > 1e-300 {
                    // BFGS inverse update.
                    let mut hy = vec![0.0; n];
                    for i in 0..n {
                        for j in 0..n {
                            hy[i] += inv_h[i][j] * y_vec[j];
                        }
                    }
                    let yhy: f64 = y_vec.iter().zip(&hy).map(|(a, b)| a * b).sum();
                    for i in 0..n {
                        for j in 0..n {
                            inv_h[i][j] += ((sy + yhy) * s_vec[i] * s_vec[j]) / (sy * sy)
                                - (hy[i] * s_vec[j] + s_vec[i] * hy[j]) / sy;
                        }
                    }
                }
                drop = fx - ft;
                x = xt;
                fx = ft;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(fx);
        if !accepted {
            converged = true;
            break;
        }
        if drop <= 1e-11 * (fx.abs() + 1.0) {
            stalled += 1;
            if stalled >= 3 {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
        let gnorm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= 1e-12 * (fx.abs() + 1.0) {
            converged = true;
            break;
        }
    }

    MinimizeResult {
        xmin: x,
        fmin: fx,
        iterations,
        fn_evals,
        converged,
        trace,
    }
}
