//! Inhomogeneous dephasing figures: the Gaussian envelope decay of a
//! propagating wavepacket under frequency jitter of width sigma and the
//! corresponding one-way 3 dB distance.

use super::{Command, CommandOutput, RunContext};
use anyhow::{Context, Result};
use phononwire::disorder::{dephasing_fidelity, l3db_from_sigma};
use phononwire::TWO_PI;

pub struct Dephasing;

impl Command for Dephasing {
    fn name(&self) -> &'static str {
        "dephasing"
    }

    fn about(&self) -> &'static str {
        "dephasing envelope and 3 dB distance from frequency jitter"
    }

    fn run(&self, ctx: &RunContext) -> Result<CommandOutput> {
        let d = ctx
            .config
            .dephasing
            .as_ref()
            .context("the [dephasing] section is required for this command")?;
        let sigma = TWO_PI * d.sigma_hz;

        let mut out = CommandOutput::default();
        out.insert("l3db_m", l3db_from_sigma(sigma, d.v_g)?, "m");

        let times_us: Vec<f64> = match &d.times_us {
            Some(list) => list.clone(),
            None => {
                // Default curve spans the envelope down to a few percent.
                let t_half = (2.0 * (2.0f64).ln()).sqrt() / sigma * 1e6;
                (0..=100).map(|i| 3.0 * t_half * i as f64 / 100.0).collect()
            }
        };
        let rows: Vec<(f64, f64)> = times_us
            .iter()
            .map(|t_us| (*t_us, dephasing_fidelity(t_us * 1e-6, sigma)))
            .collect();

        let mut csv = csv::Writer::from_path(ctx.out_dir.join("dephasing_fidelity.csv"))?;
        csv.write_record(["time_us", "fidelity"])?;
        for (t, f) in &rows {
            csv.write_record([format!("{t:.6}"), format!("{f:.9}")])?;
        }
        csv.flush()?;
        out.artifacts.push("dephasing_fidelity.csv".to_string());
        if ctx.emit_plots {
            crate::plot::write_xy_plot(
                &ctx.out_dir.join("dephasing_fidelity.dat"),
                "time_us",
                "fidelity",
                &rows,
            )?;
            out.artifacts.push("dephasing_fidelity.dat".to_string());
        }

        if let Some(list) = &d.times_us {
            for (t, f) in list.iter().zip(rows.iter().map(|r| r.1)) {
                out.outputs.insert(
                    format!("fidelity_at_{t}_us"),
                    crate::envelope::Quantity::new(f, "1"),
                );
            }
        }
        Ok(out)
    }
}
