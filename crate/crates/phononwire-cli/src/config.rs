//! TOML run configuration. All `*_hz` fields are ordinary frequencies in Hz
//! and are converted to angular rates at the boundary; lengths are meters,
//! velocities m/s. Unknown keys are rejected so a typo cannot silently fall
//! back to a default.

use anyhow::{bail, Context, Result};
use phononwire::system::{
    linear_grid, BathOccupancies, LocalizedTransducer, WaveguideMode, WaveguideModeSet,
};
use phononwire::TWO_PI;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub system: Option<SystemConfig>,
    pub waveguide: Option<WaveguideConfig>,
    pub drive: Option<DriveConfig>,
    pub grid: Option<GridConfig>,
    pub baths: Option<BathsConfig>,
    pub coherent: Option<CoherentConfig>,
    pub fit: Option<FitConfig>,
    pub thermal_fit: Option<ThermalFitConfig>,
    pub metrics: Option<MetricsConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub dephasing: Option<DephasingConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kappa_i_hz: f64,
    pub kappa_e_hz: f64,
    pub g0_hz: f64,
    pub gamma_i_hz: f64,
    pub omega_m_hz: f64,
    pub omega_c_hz: f64,
    /// Pump detuning from the cavity; defaults to `omega_m_hz` (pump parked
    /// on the red motional sideband).
    pub delta_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideConfig {
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub omega_hz: f64,
    pub f_hz: f64,
    pub gamma_i_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub n_c: Option<f64>,
    /// Drive sweep for `eigen-report`.
    pub n_c_list: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub center_hz: f64,
    pub span_hz: f64,
    pub points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathsConfig {
    /// One occupancy for the localized mode and every waveguide mode.
    pub uniform: Option<f64>,
    pub n_localized: Option<f64>,
    pub n_waveguide: Option<Vec<f64>>,
    pub floor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentConfig {
    /// Additive Gaussian phase noise on the synthesized trace (radians).
    pub phase_noise_rad: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDataConfig {
    /// CSV with `frequency_hz` and `phase_rad` columns, relative to the
    /// config file.
    pub path: String,
    pub n_c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: Vec<FitDataConfig>,
    pub max_modes: usize,
    pub min_spacing_hz: f64,
    /// Initial per-mode coupling guess; seeds only set positions.
    pub f_init_hz: Option<f64>,
    pub gamma_init_hz: Option<f64>,
    /// Per-dataset initial pump detunings; defaults to the system delta.
    pub delta_init_hz: Option<Vec<f64>>,
    pub staged: Option<bool>,
    pub restarts: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol_rel: Option<f64>,
    pub refine: Option<bool>,
    pub linear_phase: Option<bool>,
    pub uncertainties: Option<bool>,
    pub mode_window_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalFitConfig {
    /// CSV with `frequency_hz` and `psd` columns, relative to the config
    /// file.
    pub data: String,
    pub nonnegative: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub v_g: f64,
    pub length_m: f64,
    pub gamma_k_i_hz: f64,
    pub n_i: f64,
    pub sigma_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub v_g: f64,
    pub lattice_a_m: f64,
    pub band_center_hz: f64,
    pub length_m: f64,
    pub delta_omega_hz: f64,
    pub realizations: usize,
    /// Half-width of the statistics window in units of the clean center-mode
    /// spacing.
    pub window_modes: Option<f64>,
    pub bins: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingConfig {
    pub sigma_hz: f64,
    pub v_g: f64,
    /// Sample times for the fidelity curve, microseconds.
    pub times_us: Option<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<(Config, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: Config =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok((config, text))
}

impl Config {
    pub fn system(&self) -> Result<&SystemConfig> {
        self.system.as_ref().context("the [system] section is required for this command")
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let g = self.grid.as_ref().context("the [grid] section is required for this command")?;
        Ok(linear_grid(TWO_PI * g.center_hz, TWO_PI * g.span_hz, g.points)?)
    }

    pub fn drive_n_c(&self) -> Result<f64> {
        self.drive
            .as_ref()
            .and_then(|d| d.n_c)
            .context("the [drive] section with `n_c` is required for this command")
    }

    pub fn drive_sweep(&self) -> Result<Vec<f64>> {
        let d = self.drive.as_ref().context("the [drive] section is required for this command")?;
        match (&d.n_c, &d.n_c_list) {
            (Some(_), Some(_)) => bail!("[drive] sets both `n_c` and `n_c_list`; pick one"),
            (Some(v), None) => Ok(vec![*v]),
            (None, Some(l)) if !l.is_empty() => Ok(l.clone()),
            _ => bail!("[drive] needs `n_c` or a non-empty `n_c_list`"),
        }
    }

    /// Waveguide mode set; an absent section means a bare transducer.
    pub fn waveguide(&self) -> Result<WaveguideModeSet> {
        let modes: Vec<WaveguideMode> = match &self.waveguide {
            None => Vec::new(),
            Some(w) => w
                .modes
                .iter()
                .map(|m| WaveguideMode {
                    omega: TWO_PI * m.omega_hz,
                    f: TWO_PI * m.f_hz,
                    gamma_i: TWO_PI * m.gamma_i_hz,
                })
                .collect(),
        };
        if modes.is_empty() {
            Ok(WaveguideModeSet::empty())
        } else {
            Ok(WaveguideModeSet::new(modes)?)
        }
    }

    pub fn baths(&self, n_modes: usize) -> Result<BathOccupancies> {
        let b = self.baths.as_ref().context("the [baths] section is required for this command")?;
        let floor = b.floor.unwrap_or(0.0);
        match (&b.uniform, &b.n_localized, &b.n_waveguide) {
            (Some(n), None, None) => {
                let mut baths = BathOccupancies::uniform(*n, n_modes)?;
                if floor != 0.0 {
                    baths = BathOccupancies::new(*n, vec![*n; n_modes], floor)?;
                }
                Ok(baths)
            }
            (None, Some(loc), Some(wg)) => {
                if wg.len() != n_modes {
                    bail!(
                        "[baths] `n_waveguide` has {} entries but the waveguide has {} modes",
                        wg.len(),
                        n_modes
                    );
                }
                Ok(BathOccupancies::new(*loc, wg.clone(), floor)?)
            }
            (Some(_), _, _) => {
                bail!("[baths] sets `uniform` together with explicit occupancies; pick one")
            }
            _ => bail!("[baths] needs either `uniform` or both `n_localized` and `n_waveguide`"),
        }
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<LocalizedTransducer> {
        let delta_hz = self.delta_hz.unwrap_or(self.omega_m_hz);
        Ok(LocalizedTransducer::new(
            TWO_PI * self.kappa_i_hz,
            TWO_PI * self.kappa_e_hz,
            TWO_PI * self.g0_hz,
            TWO_PI * self.gamma_i_hz,
            TWO_PI * self.omega_m_hz,
            TWO_PI * self.omega_c_hz,
            TWO_PI * delta_hz,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [system]
        kappa_i_hz = 800e6
        kappa_e_hz = 200e6
        g0_hz = 690e3
        gamma_i_hz = 122e3
        omega_m_hz = 4.393e9
        omega_c_hz = 192.2e12
    "#;

    #[test]
    fn delta_defaults_to_the_mechanical_frequency() {
        let config: Config = toml::from_str(MINIMAL).unwrap();
        let sys = config.system().unwrap().build().unwrap();
        assert_eq!(sys.delta(), sys.omega_m());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<Config>("[system]\nkapa_i_hz = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("kapa_i_hz"), "{err}");
    }

    #[test]
    fn drive_sweep_rejects_ambiguous_input() {
        let config: Config =
            toml::from_str("[drive]\nn_c = 1.0\nn_c_list = [1.0, 2.0]\n").unwrap();
        assert!(config.drive_sweep().is_err());
    }

    #[test]
    fn baths_uniform_expands_to_every_mode() {
        let config: Config = toml::from_str("[baths]\nuniform = 87.0\n").unwrap();
        let baths = config.baths(3).unwrap();
        assert_eq!(baths.n_wg().len(), 3);
        assert_eq!(baths.n_local(), 87.0);
    }
}
