//! Calibrated thermometry: decomposes a measured output noise spectrum onto
//! the per-bath transduction basis and solves for the occupancies by least
//! squares. Negative or ill-conditioned solutions are surfaced as warnings,
//! never clamped silently.

use super::{Command, CommandOutput, RunContext};
use anyhow::{Context, Result};
use phononwire::system::DriveCondition;
use phononwire::thermometry::{
    build_noise_basis, solve_bath_occupancies, solve_bath_occupancies_nonnegative,
};
use phononwire::TWO_PI;

pub struct FitThermal;

impl Command for FitThermal {
    fn name(&self) -> &'static str {
        "fit-thermal"
    }

    fn about(&self) -> &'static str {
        "solve bath occupancies from a measured noise spectrum"
    }

    fn run(&self, ctx: &RunContext) -> Result<CommandOutput> {
        let tf = ctx
            .config
            .thermal_fit
            .as_ref()
            .context("the [thermal_fit] section is required for this command")?;
        let sys = ctx.config.system()?.build()?;
        let wg = ctx.config.waveguide()?;
        let drive = DriveCondition::new(ctx.config.drive_n_c()?)?;

        let path = ctx.data_path(&tf.data);
        let trace = crate::csvio::read_trace(&path, "psd")?;
        let mut out = CommandOutput::default();
        out.warnings.extend(trace.warnings);
        let grid: Vec<f64> = trace.frequency_hz.iter().map(|f| TWO_PI * f).collect();

        let basis = build_noise_basis(&sys, &wg, &drive, &grid)?;
        let solve = if tf.nonnegative.unwrap_or(false) {
            solve_bath_occupancies_nonnegative(&basis, &trace.value)?
        } else {
            solve_bath_occupancies(&basis, &trace.value)?
        };

        out.insert("n_localized", solve.occupancies[0], "quanta");
        for (k, n) in solve.occupancies[1..].iter().enumerate() {
            out.outputs.insert(
                format!("n_waveguide_{k}"),
                crate::envelope::Quantity::new(*n, "quanta"),
            );
        }
        out.insert("noise_floor", solve.floor, "quanta/(rad/s)");
        out.insert("condition_number", solve.condition, "1");
        out.insert("residual_norm", solve.residual_norm, "quanta/(rad/s)");
        if solve.ill_conditioned {
            out.warnings.push(format!(
                "basis condition number {:.3e}; occupancies are weakly separated on this grid",
                solve.condition
            ));
        }
        if !solve.negative_indices.is_empty() {
            out.warnings.push(format!(
                "negative occupancies at basis columns {:?}; model mismatch or rerun with nonnegative = true",
                solve.negative_indices
            ));
        }

        // Reconstruction from the solved occupancies, for residual plots.
        let n_cols = basis.ncols();
        let mut rows = Vec::with_capacity(grid.len());
        for (i, f) in trace.frequency_hz.iter().enumerate() {
            let mut model = 0.0;
            for j in 0..n_cols - 1 {
                model += basis[(i, j)] * solve.occupancies[j];
            }
            model += basis[(i, n_cols - 1)] * solve.floor;
            rows.push((*f, model));
        }
        crate::csvio::write_trace(&ctx.out_dir.join("thermal_fit_model.csv"), "psd", &rows)?;
        out.artifacts.push("thermal_fit_model.csv".to_string());
        if ctx.emit_plots {
            crate::plot::write_xy_plot(
                &ctx.out_dir.join("thermal_fit_model.dat"),
                "frequency_hz",
                "psd",
                &rows,
            )?;
            out.artifacts.push("thermal_fit_model.dat".to_string());
        }
        Ok(out)
    }
}
