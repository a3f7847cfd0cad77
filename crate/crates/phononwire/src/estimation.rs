//! Coherent-response fitting: phase models, seed picking and a staged
//! simplex fit of the shared transducer parameters, per-power drive
//! detunings and per-mode waveguide parameters against measured two-tone
//! phase traces.
//!
//! Fits run on unwrapped phase rather than magnitude because the phase of
//! the two-tone response carries the mode dispersion with near-constant
//! sensitivity across the comb, while the magnitude is dominated by the
//! broad cavity envelope. Rates are optimized in log space so the simplex
//! cannot cross zero; frequencies move as offsets from the initial guess
//! scaled to a characteristic megahertz step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, quasi_newton_refine, NelderMeadOptions};
use crate::response::s21_spectrum;
use crate::system::{DriveCondition, LocalizedTransducer, WaveguideMode, WaveguideModeSet};
use crate::TWO_PI;

/// Frequency-like fit coordinates are offsets from the initial guess in
/// units of this scale (2 pi x 1 MHz).
const FREQ_SCALE: f64 = TWO_PI * 1.0e6;

/// One measured two-tone phase trace at a fixed drive power.
#[derive(Debug, Clone)]
pub struct CoherentDataset {
    omega: Vec<f64>,
    phase: Vec<f64>,
    weight: Vec<f64>,
    n_c: f64,
}

impl CoherentDataset {
    /// Wraps an already-unwrapped phase trace. The grid must be strictly
    /// increasing and everything finite; weights default to one.
    pub fn new(
        omega: Vec<f64>,
        phase: Vec<f64>,
        weight: Option<Vec<f64>>,
        n_c: f64,
    ) -> Result<Self> {
        if omega.len() != phase.len() {
            return Err(Error::DimensionMismatch {
                context: "CoherentDataset",
                expected: omega.len(),
                got: phase.len(),
            });
        }
        if omega.len() < 2 {
            return Err(Error::invalid("omega", "need at least 2 samples"));
        }
        if let Some(idx) = omega.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite { context: "dataset omega", index: idx });
        }
        if let Some(idx) = phase.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { context: "dataset phase", index: idx });
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("omega", "grid must be strictly increasing"));
        }
        let weight = match weight {
            Some(w) => {
                if w.len() != omega.len() {
                    return Err(Error::DimensionMismatch {
                        context: "CoherentDataset weights",
                        expected: omega.len(),
                        got: w.len(),
                    });
                }
                if let Some(idx) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::NonFinite { context: "dataset weight", index: idx });
                }
                w
            }
            None => vec![1.0; omega.len()],
        };
        if !n_c.is_finite() || n_c < 0.0 {
            return Err(Error::invalid("n_c", format!("must be finite and >= 0, got {n_c}")));
        }
        Ok(Self { omega, phase, weight, n_c })
    }

    /// Same as [`CoherentDataset::new`] but for raw wrapped phase; the trace
    /// is unwrapped once here. Call exactly one of the two constructors so
    /// unwrapping is never applied twice.
    pub fn from_wrapped(
        omega: Vec<f64>,
        mut phase: Vec<f64>,
        weight: Option<Vec<f64>>,
        n_c: f64,
    ) -> Result<Self> {
        unwrap_phase(&mut phase);
        Self::new(omega, phase, weight, n_c)
    }

    #[must_use]
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    #[must_use]
    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    #[must_use]
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    #[must_use]
    pub fn n_c(&self) -> f64 {
        self.n_c
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Removes 2 pi jumps in place. The first sample is kept as the anchor, so
/// traces that should be compared must share the same anchoring convention.
pub fn unwrap_phase(phase: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phase.len() {
        let step = phase[i] - (phase[i - 1] - offset);
        offset -= TWO_PI * (step / TWO_PI).round();
        phase[i] += offset;
    }
}

/// Unwrapped phase of the two-tone response over the grid, anchored to the
/// principal value at the first grid point.
pub fn model_phase(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let spectrum = s21_spectrum(sys, wg, drive, grid)?;
    let mut phase: Vec<f64> = spectrum
        .complex_values()
        .expect("s21_spectrum is complex")
        .iter()
        .map(|s| s.im.atan2(s.re))
        .collect();
    unwrap_phase(&mut phase);
    Ok(phase)
}

/// Full parameter set of the coherent model: the shared transducer, one
/// drive detuning per dataset and the waveguide mode list. Plain fields so
/// the same shape can carry fitted values or their uncertainties; physical
/// validation happens when a system is built from it.
#[derive(Debug, Clone)]
pub struct CoherentFitParams {
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub g0: f64,
    pub gamma_i: f64,
    pub omega_m: f64,
    /// Carried through to the built systems; not optimized.
    pub omega_c: f64,
    /// One laser-cavity detuning per dataset.
    pub deltas: Vec<f64>,
    pub modes: Vec<WaveguideMode>,
}

impl CoherentFitParams {
    /// Builds the transducer and mode set for dataset `index`.
    pub fn to_system(&self, index: usize) -> Result<(LocalizedTransducer, WaveguideModeSet)> {
        let delta = *self.deltas.get(index).ok_or(Error::DimensionMismatch {
            context: "CoherentFitParams deltas",
            expected: index + 1,
            got: self.deltas.len(),
        })?;
        let sys = LocalizedTransducer::new(
            self.kappa_i,
            self.kappa_e,
            self.g0,
            self.gamma_i,
            self.omega_m,
            self.omega_c,
            delta,
        )?;
        let wg = if self.modes.is_empty() {
            WaveguideModeSet::empty()
        } else {
            WaveguideModeSet::new(self.modes.clone())?
        };
        Ok((sys, wg))
    }
}

/// Weighted squared phase residual summed over all datasets. Datasets are
/// evaluated in parallel and reduced in index order, so the value is
/// independent of thread count.
pub fn fit_cost(params: &CoherentFitParams, datasets: &[CoherentDataset]) -> Result<f64> {
    if params.deltas.len() != datasets.len() {
        return Err(Error::DimensionMismatch {
            context: "fit_cost deltas",
            expected: datasets.len(),
            got: params.deltas.len(),
        });
    }
    let per_dataset: Vec<f64> = datasets
        .par_iter()
        .enumerate()
        .map(|(i, ds)| -> Result<f64> {
            let (sys, wg) = params.to_system(i)?;
            let drive = DriveCondition::new(ds.n_c())?;
            let model = model_phase(&sys, &wg, &drive, ds.omega())?;
            Ok(model
                .iter()
                .zip(ds.phase())
                .zip(ds.weight())
                .map(|((m, p), w)| w * (m - p) * (m - p))
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_dataset.iter().sum())
}

/// Candidate mode frequencies from a measured trace: local maxima of the
/// background-subtracted phase slope, deduplicated by a minimum spacing and
/// returned in ascending order.
#[must_use]
pub fn pick_mode_seeds(dataset: &CoherentDataset, max_modes: usize, min_spacing: f64) -> Vec<f64> {
    let n = dataset.len();
    if n < 16 || max_modes == 0 {
        return Vec::new();
    }
    let omega = dataset.omega();
    let phase = dataset.phase();
    let mut slope = vec![0.0; n];
    for i in 1..n - 1 {
        slope[i] = ((phase[i + 1] - phase[i - 1]) / (omega[i + 1] - omega[i - 1])).abs();
    }
    slope[0] = slope[1];
    slope[n - 1] = slope[n - 2];

    // Moving-average background; a sharp mode contributes little to it.
    let half = (n / 32).max(4);
    let mut background = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        background[i] = slope[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    }

    let mut candidates: Vec<(f64, usize)> = (1..n - 1)
        .filter(|&i| slope[i] > slope[i - 1] && slope[i] >= slope[i + 1])
        .filter(|&i| slope[i] > 1.5 * background[i])
        .map(|i| (slope[i] - background[i], i))
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut picked: Vec<f64> = Vec::new();
    for (_, i) in candidates {
        let w = omega[i];
        if picked.iter().all(|p| (p - w).abs() >= min_spacing) {
            picked.push(w);
            if picked.len() == max_modes {
                break;
            }
        }
    }
    picked.sort_by(f64::total_cmp);
    picked
}

/// Controls for [`fit_coherent`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Run the staged pipeline (shared params, then per-mode windows, then
    /// joint). When false only the joint stage runs.
    pub staged: bool,
    /// Simplex iteration budget per stage.
    pub max_iters: usize,
    /// Perturbed simplex restarts per stage.
    pub restarts: usize,
    /// Relative cost-spread tolerance for simplex convergence.
    pub tol_rel: f64,
    /// Quasi-Newton polish after the joint stage.
    pub refine: bool,
    /// Fit an extra per-dataset linear phase background. Off by default:
    /// it absorbs cable delay in measured data but is redundant on clean
    /// synthetic traces.
    pub linear_phase: bool,
    /// Report per-parameter scales from the cost curvature at the optimum.
    pub uncertainties: bool,
    /// Seed for restart perturbations.
    pub seed: u64,
    /// Half-width of the per-mode refinement window (rad/s).
    pub mode_window: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            staged: true,
            max_iters: 3000,
            restarts: 1,
            tol_rel: 1e-12,
            refine: true,
            linear_phase: false,
            uncertainties: false,
            seed: 0,
            mode_window: TWO_PI * 0.6e6,
        }
    }
}

/// Outcome of [`fit_coherent`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: CoherentFitParams,
    /// Per-dataset (offset, slope) of the linear phase background when that
    /// nuisance was enabled; slope is in radians per [`FREQ_SCALE`] of
    /// detuning from the fitted mechanical frequency.
    pub linear_phase: Option<Vec<(f64, f64)>>,
    pub cost: f64,
    pub iterations: usize,
    pub fn_evals: usize,
    pub converged: bool,
    /// Best cost after each accepted simplex iteration, stages concatenated.
    pub cost_trace: Vec<f64>,
    /// Curvature-based one-sigma scales in the shape of the parameters.
    /// These assume an uncorrelated quadratic cost around the optimum and
    /// underestimate errors when parameters are correlated; entries are
    /// infinite where the curvature is not positive.
    pub curvature_sigma: Option<CoherentFitParams>,
}

/// Which packed coordinates a stage optimizes.
#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Shared,
    Mode(usize),
    Joint,
}

/// Maps between [`CoherentFitParams`] (+ optional nuisance) and the packed
/// optimizer vector. Rates are packed as natural logs, frequencies as
/// offsets from the reference in units of [`FREQ_SCALE`].
struct Packing {
    reference: CoherentFitParams,
    n_datasets: usize,
    linear_phase: bool,
}

impl Packing {
    fn n_modes(&self) -> usize {
        self.reference.modes.len()
    }

    fn len(&self) -> usize {
        5 + self.n_datasets + 3 * self.n_modes() + if self.linear_phase { 2 * self.n_datasets } else { 0 }
    }

    fn mode_base(&self, k: usize) -> usize {
        5 + self.n_datasets + 3 * k
    }

    fn nuisance_base(&self, i: usize) -> usize {
        5 + self.n_datasets + 3 * self.n_modes() + 2 * i
    }

    fn pack(&self, params: &CoherentFitParams, nuisance: Option<&[(f64, f64)]>) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        x[0] = params.kappa_i.ln();
        x[1] = params.kappa_e.ln();
        x[2] = params.g0.ln();
        x[3] = params.gamma_i.ln();
        x[4] = (params.omega_m - self.reference.omega_m) / FREQ_SCALE;
        for (i, d) in params.deltas.iter().enumerate() {
            x[5 + i] = (d - self.reference.deltas[i]) / FREQ_SCALE;
        }
        for (k, m) in params.modes.iter().enumerate() {
            let b = self.mode_base(k);
            x[b] = (m.omega - self.reference.modes[k].omega) / FREQ_SCALE;
            x[b + 1] = m.f.ln();
            x[b + 2] = m.gamma_i.ln();
        }
        if self.linear_phase {
            let nu = nuisance.expect("nuisance values required when linear_phase is on");
            for (i, (a, b)) in nu.iter().enumerate() {
                let base = self.nuisance_base(i);
                x[base] = *a;
                x[base + 1] = *b;
            }
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> (CoherentFitParams, Option<Vec<(f64, f64)>>) {
        let mut params = self.reference.clone();
        params.kappa_i = x[0].exp();
        params.kappa_e = x[1].exp();
        params.g0 = x[2].exp();
        params.gamma_i = x[3].exp();
        params.omega_m = self.reference.omega_m + x[4] * FREQ_SCALE;
        for i in 0..self.n_datasets {
            params.deltas[i] = self.reference.deltas[i] + x[5 + i] * FREQ_SCALE;
        }
        for k in 0..self.n_modes() {
            let b = self.mode_base(k);
            params.modes[k].omega = self.reference.modes[k].omega + x[b] * FREQ_SCALE;
            params.modes[k].f = x[b + 1].exp();
            params.modes[k].gamma_i = x[b + 2].exp();
        }
        let nuisance = self.linear_phase.then(|| {
            (0..self.n_datasets)
                .map(|i| {
                    let base = self.nuisance_base(i);
                    (x[base], x[base + 1])
                })
                .collect()
        });
        (params, nuisance)
    }

    /// Initial simplex steps and coordinate activity mask for one stage.
    fn steps_for(&self, stage: Stage) -> Vec<f64> {
        let log_step = 0.15;
        let freq_step = 0.3;
        let mut steps = vec![0.0; self.len()];
        match stage {
            Stage::Shared => {
                steps[0] = log_step;
                steps[1] = log_step;
                steps[2] = log_step;
                steps[3] = log_step;
                steps[4] = freq_step;
                for i in 0..self.n_datasets {
                    steps[5 + i] = freq_step;
                }
            }
            Stage::Mode(k) => {
                let b = self.mode_base(k);
                steps[b] = freq_step;
                steps[b + 1] = log_step;
                steps[b + 2] = log_step;
            }
            Stage::Joint => {
                for (i, s) in steps.iter_mut().enumerate() {
                    *s = if self.is_log_coord(i) { log_step } else { freq_step };
                }
            }
        }
        if self.linear_phase {
            let active = matches!(stage, Stage::Shared | Stage::Joint);
            for i in 0..self.n_datasets {
                let base = self.nuisance_base(i);
                steps[base] = if active { 0.1 } else { 0.0 };
                steps[base + 1] = if active { 0.05 } else { 0.0 };
            }
        }
        steps
    }

    fn is_log_coord(&self, i: usize) -> bool {
        i < 4
            || (i >= 5 + self.n_datasets
                && i < 5 + self.n_datasets + 3 * self.n_modes()
                && (i - 5 - self.n_datasets) % 3 != 0)
    }
}

/// Cost of a packed vector over full traces, including the optional linear
/// background; non-physical parameter sets cost `f64::MAX`.
fn packed_cost(packing: &Packing, datasets: &[CoherentDataset], x: &[f64]) -> f64 {
    let (params, nuisance) = packing.unpack(x);
    let per_dataset: Vec<f64> = datasets
        .par_iter()
        .enumerate()
        .map(|(i, ds)| -> Result<f64> {
            let (sys, wg) = params.to_system(i)?;
            let drive = DriveCondition::new(ds.n_c())?;
            let model = model_phase(&sys, &wg, &drive, ds.omega())?;
            let (a, b) = nuisance.as_ref().map_or((0.0, 0.0), |nu| nu[i]);
            Ok(model
                .iter()
                .zip(ds.omega())
                .zip(ds.phase())
                .zip(ds.weight())
                .map(|(((m, w_i), p), w)| {
                    let bg = a + b * (w_i - params.omega_m) / FREQ_SCALE;
                    let r = m + bg - p;
                    w * r * r
                })
                .sum())
        })
        .collect::<std::result::Result<Vec<f64>, Error>>()
        .unwrap_or_else(|_| vec![f64::MAX]);
    per_dataset.iter().sum()
}

/// Mean-subtracted phase mismatch restricted to windows around mode `k`.
/// Demeaning makes the window cost insensitive to the absolute unwrapping
/// offset and to slow backgrounds, which is all a local mode refit needs.
fn windowed_mode_cost(
    packing: &Packing,
    datasets: &[CoherentDataset],
    x: &[f64],
    k: usize,
    window: f64,
) -> f64 {
    let (params, _) = packing.unpack(x);
    let center = params.modes[k].omega;
    let mut total = 0.0;
    let mut any = false;
    for (i, ds) in datasets.iter().enumerate() {
        let omega = ds.omega();
        let lo = omega.partition_point(|&w| w < center - window);
        let hi = omega.partition_point(|&w| w <= center + window);
        if hi - lo < 8 {
            continue;
        }
        let sub = &omega[lo..hi];
        let Ok((sys, wg)) = params.to_system(i) else {
            return f64::MAX;
        };
        let Ok(drive) = DriveCondition::new(ds.n_c()) else {
            return f64::MAX;
        };
        let Ok(model) = model_phase(&sys, &wg, &drive, sub) else {
            return f64::MAX;
        };
        let data = &ds.phase()[lo..hi];
        let m_mean = model.iter().sum::<f64>() / model.len() as f64;
        let d_mean = data.iter().sum::<f64>() / data.len() as f64;
        total += model
            .iter()
            .zip(data)
            .map(|(m, d)| {
                let r = (m - m_mean) - (d - d_mean);
                r * r
            })
            .sum::<f64>();
        any = true;
    }
    if any {
        total
    } else {
        f64::MAX
    }
}

/// Fits the coherent model to one or more phase traces. Stages: shared
/// transducer parameters with modes frozen, one windowed refit per mode,
/// then a joint simplex over everything with an optional quasi-Newton
/// polish. Deterministic for fixed inputs, options and seed.
pub fn fit_coherent(
    datasets: &[CoherentDataset],
    init: &CoherentFitParams,
    options: &FitOptions,
) -> Result<FitResult> {
    if datasets.is_empty() {
        return Err(Error::invalid("datasets", "need at least one dataset"));
    }
    if init.deltas.len() != datasets.len() {
        return Err(Error::DimensionMismatch {
            context: "fit_coherent deltas",
            expected: datasets.len(),
            got: init.deltas.len(),
        });
    }
    init.to_system(0)?;

    let packing = Packing {
        reference: init.clone(),
        n_datasets: datasets.len(),
        linear_phase: options.linear_phase,
    };
    let nuisance0 = options
        .linear_phase
        .then(|| vec![(0.0, 0.0); datasets.len()]);
    let mut x = packing.pack(init, nuisance0.as_deref());

    let nm_opts = NelderMeadOptions {
        max_iters: options.max_iters,
        tol_rel: options.tol_rel,
        restarts: options.restarts,
        seed: options.seed,
        ..Default::default()
    };
    let mut iterations = 0;
    let mut fn_evals = 0;
    let mut cost_trace = Vec::new();

    if options.staged {
        let r = nelder_mead(
            |y| packed_cost(&packing, datasets, y),
            &x,
            &packing.steps_for(Stage::Shared),
            &nm_opts,
        );
        iterations += r.iterations;
        fn_evals += r.fn_evals;
        cost_trace.extend_from_slice(&r.trace);
        x = r.xmin;

        for k in 0..packing.n_modes() {
            let r = nelder_mead(
                |y| windowed_mode_cost(&packing, datasets, y, k, options.mode_window),
                &x,
                &packing.steps_for(Stage::Mode(k)),
                &nm_opts,
            );
            // A window with no usable points leaves the coordinates alone.
            if r.fmin < f64::MAX {
                iterations += r.iterations;
                fn_evals += r.fn_evals;
                x = r.xmin;
            }
        }
    }

    let joint = nelder_mead(
        |y| packed_cost(&packing, datasets, y),
        &x,
        &packing.steps_for(Stage::Joint),
        &nm_opts,
    );
    iterations += joint.iterations;
    fn_evals += joint.fn_evals;
    cost_trace.extend_from_slice(&joint.trace);
    let mut converged = joint.converged;
    x = joint.xmin;
    let mut cost = joint.fmin;

    if options.refine {
        // The polish owns final convergence, so it gets enough iterations to
        // terminate on its own stall criteria rather than on this budget;
        // BFGS needs on the order of the dimension count just to learn the
        // curvature before its endgame.
        let scales = vec![1e-2; packing.len()];
        let r = quasi_newton_refine(
            |y| packed_cost(&packing, datasets, y),
            &x,
            &scales,
            30 * packing.len().max(4),
        );
        iterations += r.iterations;
        fn_evals += r.fn_evals;
        // Stationarity of the gradient polish counts as convergence even
        // when the simplex spread never collapsed: on noisy data the cost
        // floor keeps the spread finite while the minimum is already found.
        converged = converged || r.converged;
        if r.fmin < cost {
            cost = r.fmin;
            x = r.xmin;
            cost_trace.extend_from_slice(&r.trace);
        }
    }

    let (params, linear_phase) = packing.unpack(&x);
    let curvature_sigma = if options.uncertainties {
        Some(curvature_sigma(&packing, datasets, &x, cost, &mut fn_evals))
    } else {
        None
    };

    Ok(FitResult {
        params,
        linear_phase,
        cost,
        iterations,
        fn_evals,
        converged,
        cost_trace,
        curvature_sigma,
    })
}

/// Diagonal-curvature scales at the optimum, mapped back to parameter units.
fn curvature_sigma(
    packing: &Packing,
    datasets: &[CoherentDataset],
    x: &[f64],
    cost: f64,
    fn_evals: &mut usize,
) -> CoherentFitParams {
    let n_points: usize = datasets.iter().map(CoherentDataset::len).sum();
    let dof = n_points.saturating_sub(packing.len()).max(1) as f64;
    let s2 = cost / dof;
    let h = 1e-4;
    let mut sigma_x = vec![f64::INFINITY; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = packed_cost(packing, datasets, &xp);
        xp[i] = x[i] - h;
        let fm = packed_cost(packing, datasets, &xp);
        xp[i] = x[i];
        *fn_evals += 2;
        let curv = (fp - 2.0 * cost + fm) / (h * h);
        if curv > 0.0 {
            sigma_x[i] = (2.0 * s2 / curv).sqrt();
        }
    }
    let (params, _) = packing.unpack(x);
    let to_abs = |sig: f64, value: f64, log: bool| {
        if log {
            value.abs() * sig
        } else {
            sig * FREQ_SCALE
        }
    };
    CoherentFitParams {
        kappa_i: to_abs(sigma_x[0], params.kappa_i, true),
        kappa_e: to_abs(sigma_x[1], params.kappa_e, true),
        g0: to_abs(sigma_x[2], params.g0, true),
        gamma_i: to_abs(sigma_x[3], params.gamma_i, true),
        omega_m: to_abs(sigma_x[4], 0.0, false),
        omega_c: 0.0,
        deltas: (0..packing.n_datasets)
            .map(|i| to_abs(sigma_x[5 + i], 0.0, false))
            .collect(),
        modes: (0..packing.n_modes())
            .map(|k| {
                let b = packing.mode_base(k);
                WaveguideMode {
                    omega: to_abs(sigma_x[b], 0.0, false),
                    f: to_abs(sigma_x[b + 1], params.modes[k].f, true),
                    gamma_i: to_abs(sigma_x[b + 2], params.modes[k].gamma_i, true),
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::linear_grid;
    use approx::assert_relative_eq;

    fn test_params(n_datasets: usize) -> CoherentFitParams {
        CoherentFitParams {
            kappa_i: TWO_PI * 800.0e6,
            kappa_e: TWO_PI * 200.0e6,
            g0: TWO_PI * 690.0e3,
            gamma_i: TWO_PI * 122.0e3,
            omega_m: TWO_PI * 4.393e9,
            omega_c: TWO_PI * 192.2e12,
            deltas: vec![TWO_PI * 4.217e9; n_datasets],
            modes: vec![
                WaveguideMode {
                    omega: TWO_PI * (4.393e9 - 1.55e6),
                    f: TWO_PI * 260.0e3,
                    gamma_i: TWO_PI * 21.0e3,
                },
                WaveguideMode {
                    omega: TWO_PI * (4.393e9 + 0.65e6),
                    f: TWO_PI * 320.0e3,
                    gamma_i: TWO_PI * 23.0e3,
                },
            ],
        }
    }

    fn synth_dataset(params: &CoherentFitParams, index: usize, n_c: f64, points: usize) -> CoherentDataset {
        let (sys, wg) = params.to_system(index).unwrap();
        let drive = DriveCondition::new(n_c).unwrap();
        let grid = linear_grid(params.omega_m, TWO_PI * 8.0e6, points).unwrap();
        let phase = model_phase(&sys, &wg, &drive, &grid).unwrap();
        CoherentDataset::new(grid, phase, None, n_c).unwrap()
    }

    #[test]
    fn unwrap_restores_a_smooth_trace() {
        let n = 400;
        let smooth: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                9.0 * t + 3.5 * (6.0 * t).sin()
            })
            .collect();
        let mut wrapped: Vec<f64> = smooth
            .iter()
            .map(|p| p - TWO_PI * ((p + std::f64::consts::PI) / TWO_PI).floor())
            .collect();
        unwrap_phase(&mut wrapped);
        let anchor = smooth[0] - wrapped[0];
        for (w, s) in wrapped.iter().zip(&smooth) {
            assert_relative_eq!(w + anchor, s, epsilon = 1e-9);
        }
    }

    #[test]
    fn model_phase_has_no_residual_jumps() {
        let params = test_params(1);
        let (sys, wg) = params.to_system(0).unwrap();
        let drive = DriveCondition::new(800.0).unwrap();
        let grid = linear_grid(params.omega_m, TWO_PI * 10.0e6, 4001).unwrap();
        let phase = model_phase(&sys, &wg, &drive, &grid).unwrap();
        for pair in phase.windows(2) {
            assert!((pair[1] - pair[0]).abs() < std::f64::consts::PI);
        }
    }

    #[test]
    fn fit_cost_vanishes_at_truth_and_grows_away_from_it() {
        let params = test_params(2);
        let datasets = vec![
            synth_dataset(&params, 0, 400.0, 601),
            synth_dataset(&params, 1, 900.0, 601),
        ];
        let at_truth = fit_cost(&params, &datasets).unwrap();
        assert!(at_truth < 1e-18, "cost at truth was {at_truth}");

        let mut off = params.clone();
        off.g0 *= 1.05;
        assert!(fit_cost(&off, &datasets).unwrap() > 1e-6);
    }

    #[test]
    fn fit_cost_checks_delta_count() {
        let params = test_params(1);
        let datasets = vec![
            synth_dataset(&params, 0, 400.0, 64),
            synth_dataset(&params, 0, 500.0, 64),
        ];
        assert!(matches!(
            fit_cost(&params, &datasets),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mode_seeds_land_on_planted_modes() {
        let params = test_params(1);
        let ds = synth_dataset(&params, 0, 700.0, 3001);
        let seeds = pick_mode_seeds(&ds, 4, TWO_PI * 0.4e6);
        assert_eq!(seeds.len(), 2, "seeds: {seeds:?}");
        let step = ds.omega()[1] - ds.omega()[0];
        for mode in &params.modes {
            let nearest = seeds
                .iter()
                .map(|s| (s - mode.omega).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 40.0 * step, "mode missed by {nearest}");
        }
    }

    #[test]
    fn mode_seed_count_is_capped() {
        let params = test_params(1);
        let ds = synth_dataset(&params, 0, 700.0, 3001);
        let seeds = pick_mode_seeds(&ds, 1, TWO_PI * 0.4e6);
        assert_eq!(seeds.len(), 1);
    }

    #[test]
    fn packing_roundtrips() {
        let params = test_params(3);
        let packing = Packing {
            reference: params.clone(),
            n_datasets: 3,
            linear_phase: true,
        };
        let nuisance = vec![(0.1, -0.2), (0.0, 0.3), (-0.4, 0.0)];
        let x = packing.pack(&params, Some(&nuisance));
        let (back, nu_back) = packing.unpack(&x);
        assert_relative_eq!(back.kappa_i, params.kappa_i, max_relative = 1e-12);
        assert_relative_eq!(back.omega_m, params.omega_m, max_relative = 1e-12);
        assert_relative_eq!(back.modes[1].f, params.modes[1].f, max_relative = 1e-12);
        assert_eq!(nu_back.unwrap(), nuisance);
    }

    #[test]
    fn windowed_cost_ignores_constant_offsets() {
        let params = test_params(1);
        let ds = synth_dataset(&params, 0, 700.0, 1501);
        let shifted = CoherentDataset::new(
            ds.omega().to_vec(),
            ds.phase().iter().map(|p| p + 5.0).collect(),
            None,
            ds.n_c(),
        )
        .unwrap();
        let packing = Packing {
            reference: params.clone(),
            n_datasets: 1,
            linear_phase: false,
        };
        let x = packing.pack(&params, None);
        let w = TWO_PI * 0.6e6;
        let plain = windowed_mode_cost(&packing, &[ds], &x, 0, w);
        let offset = windowed_mode_cost(&packing, &[shifted], &x, 0, w);
        assert_relative_eq!(plain, offset, epsilon = 1e-9);
        assert!(plain < 1e-18);
    }
}
