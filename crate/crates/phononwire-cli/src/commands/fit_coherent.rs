//! Fits the coherent response model to measured phase traces taken at one or
//! more drive powers. Mode positions are seeded from phase-slope peaks in the
//! first dataset; shared transducer parameters and per-mode couplings come
//! out as ordinary frequencies.

use super::{Command, CommandOutput, RunContext};
use anyhow::{bail, Context, Result};
use phononwire::estimation::{
    fit_coherent, model_phase, pick_mode_seeds, CoherentDataset, CoherentFitParams, FitOptions,
};
use phononwire::system::{DriveCondition, WaveguideMode};
use phononwire::TWO_PI;

pub struct FitCoherent;

impl Command for FitCoherent {
    fn name(&self) -> &'static str {
        "fit-coherent"
    }

    fn about(&self) -> &'static str {
        "fit the coherent response model to wrapped phase traces"
    }

    fn run(&self, ctx: &RunContext) -> Result<CommandOutput> {
        let fit_cfg = ctx
            .config
            .fit
            .as_ref()
            .context("the [fit] section is required for this command")?;
        if fit_cfg.data.is_empty() {
            bail!("[fit] lists no datasets");
        }
        let sys_cfg = ctx.config.system()?;

        let mut warnings = Vec::new();
        let mut datasets = Vec::with_capacity(fit_cfg.data.len());
        for entry in &fit_cfg.data {
            let path = ctx.data_path(&entry.path);
            let trace = crate::csvio::read_trace(&path, "phase_rad")?;
            warnings.extend(trace.warnings);
            let omega: Vec<f64> = trace.frequency_hz.iter().map(|f| TWO_PI * f).collect();
            datasets.push(CoherentDataset::from_wrapped(omega, trace.value, None, entry.n_c)?);
        }

        // Mode seeds from the first trace; sharp phase-slope features mark
        // hybridized waveguide modes.
        let seeds = pick_mode_seeds(
            &datasets[0],
            fit_cfg.max_modes,
            TWO_PI * fit_cfg.min_spacing_hz,
        );
        if seeds.is_empty() {
            warnings.push("no mode candidates found; fitting a bare transducer".to_string());
        }
        let f_init = TWO_PI * fit_cfg.f_init_hz.unwrap_or(300e3);
        let gamma_init = TWO_PI * fit_cfg.gamma_init_hz.unwrap_or(25e3);
        let modes: Vec<WaveguideMode> = seeds
            .iter()
            .map(|&omega| WaveguideMode { omega, f: f_init, gamma_i: gamma_init })
            .collect();

        let default_delta = sys_cfg.delta_hz.unwrap_or(sys_cfg.omega_m_hz);
        let deltas: Vec<f64> = match &fit_cfg.delta_init_hz {
            Some(list) => {
                if list.len() != datasets.len() {
                    bail!(
                        "[fit] `delta_init_hz` has {} entries for {} datasets",
                        list.len(),
                        datasets.len()
                    );
                }
                list.iter().map(|d| TWO_PI * d).collect()
            }
            None => vec![TWO_PI * default_delta; datasets.len()],
        };

        let init = CoherentFitParams {
            kappa_i: TWO_PI * sys_cfg.kappa_i_hz,
            kappa_e: TWO_PI * sys_cfg.kappa_e_hz,
            g0: TWO_PI * sys_cfg.g0_hz,
            gamma_i: TWO_PI * sys_cfg.gamma_i_hz,
            omega_m: TWO_PI * sys_cfg.omega_m_hz,
            omega_c: TWO_PI * sys_cfg.omega_c_hz,
            deltas,
            modes,
        };

        let defaults = FitOptions::default();
        let options = FitOptions {
            staged: fit_cfg.staged.unwrap_or(defaults.staged),
            max_iters: fit_cfg.max_iters.unwrap_or(defaults.max_iters),
            restarts: fit_cfg.restarts.unwrap_or(defaults.restarts),
            tol_rel: fit_cfg.tol_rel.unwrap_or(defaults.tol_rel),
            refine: fit_cfg.refine.unwrap_or(defaults.refine),
            linear_phase: fit_cfg.linear_phase.unwrap_or(defaults.linear_phase),
            uncertainties: fit_cfg.uncertainties.unwrap_or(defaults.uncertainties),
            seed: ctx.seed,
            mode_window: fit_cfg
                .mode_window_hz
                .map(|w| TWO_PI * w)
                .unwrap_or(defaults.mode_window),
        };

        let fit = fit_coherent(&datasets, &init, &options)?;

        let mut out = CommandOutput::default();
        out.warnings = warnings;
        let p = &fit.params;
        out.insert("kappa_i_hz", p.kappa_i / TWO_PI, "Hz");
        out.insert("kappa_e_hz", p.kappa_e / TWO_PI, "Hz");
        out.insert("g0_hz", p.g0 / TWO_PI, "Hz");
        out.insert("gamma_i_hz", p.gamma_i / TWO_PI, "Hz");
        out.insert("omega_m_hz", p.omega_m / TWO_PI, "Hz");
        for (i, d) in p.deltas.iter().enumerate() {
            out.outputs.insert(
                format!("delta_{i}_hz"),
                crate::envelope::Quantity::new(d / TWO_PI, "Hz"),
            );
        }
        for (k, m) in p.modes.iter().enumerate() {
            out.outputs.insert(
                format!("mode_{k}_omega_hz"),
                crate::envelope::Quantity::new(m.omega / TWO_PI, "Hz"),
            );
            out.outputs.insert(
                format!("mode_{k}_f_hz"),
                crate::envelope::Quantity::new(m.f / TWO_PI, "Hz"),
            );
            out.outputs.insert(
                format!("mode_{k}_gamma_i_hz"),
                crate::envelope::Quantity::new(m.gamma_i / TWO_PI, "Hz"),
            );
        }
        out.insert("cost", fit.cost, "rad^2");
        out.insert("iterations", fit.iterations as f64, "1");
        out.insert("fn_evals", fit.fn_evals as f64, "1");
        out.insert("converged", if fit.converged { 1.0 } else { 0.0 }, "flag");
        if !fit.converged {
            out.warnings
                .push("fit did not converge; treat the recovered parameters as a starting point".to_string());
        }
        if let Some(sigma) = &fit.curvature_sigma {
            out.insert("sigma_gamma_i_hz", sigma.gamma_i / TWO_PI, "Hz");
            out.insert("sigma_omega_m_hz", sigma.omega_m / TWO_PI, "Hz");
        }

        // Fitted model evaluated on each dataset's grid, for overlay plots.
        for (i, dataset) in datasets.iter().enumerate() {
            let (sys, wg) = fit.params.to_system(i)?;
            let drive = DriveCondition::new(dataset.n_c())?;
            let phase = model_phase(&sys, &wg, &drive, dataset.omega())?;
            let rows: Vec<(f64, f64)> = dataset
                .omega()
                .iter()
                .zip(&phase)
                .map(|(w, p)| (w / TWO_PI, *p))
                .collect();
            let name = format!("fit_model_{i}.csv");
            crate::csvio::write_trace(&ctx.out_dir.join(&name), "phase_rad", &rows)?;
            out.artifacts.push(name);
            if ctx.emit_plots {
                let name = format!("fit_model_{i}.dat");
                crate::plot::write_xy_plot(
                    &ctx.out_dir.join(&name),
                    "frequency_hz",
                    "phase_rad",
                    &rows,
                )?;
                out.artifacts.push(name);
            }
        }
        Ok(out)
    }
}
