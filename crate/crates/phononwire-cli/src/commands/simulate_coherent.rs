//! Synthesizes a coherent phase trace: the wrapped phase of S21 across the
//! probe grid, optionally with seeded Gaussian phase noise so downstream fits
//! can be exercised on realistic data.

use super::{Command, CommandOutput, RunContext};
use anyhow::Result;
use phononwire::response::{reflection_coefficient, s21_spectrum};
use phononwire::system::DriveCondition;
use phononwire::TWO_PI;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub struct SimulateCoherent;

impl Command for SimulateCoherent {
    fn name(&self) -> &'static str {
        "simulate-coherent"
    }

    fn about(&self) -> &'static str {
        "synthesize a wrapped S21 phase trace over the probe grid"
    }

    fn run(&self, ctx: &RunContext) -> Result<CommandOutput> {
        let sys = ctx.config.system()?.build()?;
        let wg = ctx.config.waveguide()?;
        let drive = DriveCondition::new(ctx.config.drive_n_c()?)?;
        let grid = ctx.config.grid()?;

        let spectrum = s21_spectrum(&sys, &wg, &drive, &grid)?;
        let s21 = spectrum.complex_values().expect("s21 spectrum is complex");
        let mut phase: Vec<f64> = s21.iter().map(|v| v.arg()).collect();

        let noise_rad = ctx.config.coherent.as_ref().and_then(|c| c.phase_noise_rad);
        if let Some(sigma) = noise_rad {
            if sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
                let dist = Normal::new(0.0, sigma)?;
                for p in &mut phase {
                    *p += dist.sample(&mut rng);
                }
            }
        }

        let rows: Vec<(f64, f64)> =
            grid.iter().zip(&phase).map(|(w, p)| (w / TWO_PI, *p)).collect();
        let csv = ctx.out_dir.join("coherent_phase.csv");
        crate::csvio::write_trace(&csv, "phase_rad", &rows)?;

        let mut out = CommandOutput::default();
        out.artifacts.push("coherent_phase.csv".to_string());
        if ctx.emit_plots {
            let dat = ctx.out_dir.join("coherent_phase.dat");
            crate::plot::write_xy_plot(&dat, "frequency_hz", "phase_rad", &rows)?;
            out.artifacts.push("coherent_phase.dat".to_string());
        }

        let r_center = reflection_coefficient(&sys, &wg, &drive, sys.omega_m());
        out.insert("reflection_magnitude_at_omega_m", r_center.norm(), "1");
        out.insert("n_points", grid.len() as f64, "1");
        if let Some(sigma) = noise_rad {
            out.insert("phase_noise_rad", sigma, "rad");
        }
        Ok(out)
    }
}
