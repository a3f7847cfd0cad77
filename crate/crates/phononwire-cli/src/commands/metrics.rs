//! Propagation figures of merit for a straight waveguide section: free
//! spectral range, round-trip time, loss per length, and the 3 dB signal
//! distances for cold, thermal, and dephasing-limited transport.

use super::{Command, CommandOutput, RunContext};
use anyhow::{Context, Result};
use phononwire::modal::propagation_metrics;
use phononwire::TWO_PI;

pub struct Metrics;

impl Command for Metrics {
    fn name(&self) -> &'static str {
        "metrics"
    }

    fn about(&self) -> &'static str {
        "propagation figures of merit from group velocity, length, and loss"
    }

    fn run(&self, ctx: &RunContext) -> Result<CommandOutput> {
        let m = ctx
            .config
            .metrics
            .as_ref()
            .context("the [metrics] section is required for this command")?;
        let report = propagation_metrics(
            m.v_g,
            m.length_m,
            TWO_PI * m.gamma_k_i_hz,
            m.n_i,
            m.sigma_hz.map(|s| TWO_PI * s),
        )?;

        let mut out = CommandOutput::default();
        out.insert("fsr_hz", report.fsr / TWO_PI, "Hz");
        out.insert("round_trip_s", report.round_trip, "s");
        out.insert("alpha_m_db_per_cm", report.alpha_m_db_per_cm, "dB/cm");
        out.insert("alpha_m_th_db_per_cm", report.alpha_m_th_db_per_cm, "dB/cm");
        out.insert("l3db_cold_m", report.l3db_cold, "m");
        out.insert("l3db_thermal_m", report.l3db_thermal, "m");
        if let Some(l) = report.l3db_dephasing {
            out.insert("l3db_dephasing_m", l, "m");
        }
        Ok(out)
    }
}
