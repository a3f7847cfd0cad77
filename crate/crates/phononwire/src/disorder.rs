//! Tight-binding disorder ensembles and dephasing estimates.
//!
//! A finite waveguide is modeled as an open chain of `N` sites with nearest
//! neighbor hopping `J` and independent Gaussian site-frequency disorder.
//! The clean chain has eigenfrequencies `Omega + 2J cos(pi m / (N + 1))` and
//! its hopping follows from the group velocity, `J = v_g / (2a)`, so one
//! lattice reproduces both the dispersion near band center and the free
//! spectral range of the physical wire. The transducer sits at the chain
//! end, so each eigenmode couples in proportion to its end-site amplitude.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::response::{thermal_output_spectrum, MODE_CAP_DEFAULT};
use crate::system::{
    BathOccupancies, DriveCondition, LocalizedTransducer, SpectrumGrid, WaveguideMode,
    WaveguideModeSet,
};
use crate::tridiag;

/// One disordered-chain specification. Site frequencies are
/// `band_center + eps_n` with `eps_n ~ N(0, delta_omega^2)` drawn from a
/// ChaCha stream, so a given seed always yields the same chain.
#[derive(Debug, Clone)]
pub struct DisorderChain {
    n_sites: usize,
    band_center: f64,
    hopping_j: f64,
    delta_omega: f64,
    lattice_a: f64,
    seed: u64,
}

impl DisorderChain {
    pub fn new(
        n_sites: usize,
        band_center: f64,
        hopping_j: f64,
        delta_omega: f64,
        lattice_a: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid("n_sites", format!("need at least 2 sites, got {n_sites}")));
        }
        if !band_center.is_finite() || band_center <= 0.0 {
            return Err(Error::invalid("band_center", format!("must be finite and > 0, got {band_center}")));
        }
        if !hopping_j.is_finite() || hopping_j <= 0.0 {
            return Err(Error::invalid("hopping_j", format!("must be finite and > 0, got {hopping_j}")));
        }
        if !delta_omega.is_finite() || delta_omega < 0.0 {
            return Err(Error::invalid("delta_omega", format!("must be finite and >= 0, got {delta_omega}")));
        }
        if !lattice_a.is_finite() || lattice_a <= 0.0 {
            return Err(Error::invalid("lattice_a", format!("must be finite and > 0, got {lattice_a}")));
        }
        Ok(Self { n_sites, band_center, hopping_j, delta_omega, lattice_a, seed })
    }

    /// Builds the chain from the physical wire: `n = round(length / a)`
    /// sites and `J = v_g / (2a)`.
    pub fn from_dispersion(
        v_g: f64,
        lattice_a: f64,
        band_center: f64,
        length: f64,
        delta_omega: f64,
        seed: u64,
    ) -> Result<Self> {
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::invalid("length", format!("must be finite and > 0, got {length}")));
        }
        let n_sites = (length / lattice_a).round() as usize;
        Self::new(
            n_sites,
            band_center,
            hopping_from_group_velocity(v_g, lattice_a)?,
            delta_omega,
            lattice_a,
            seed,
        )
    }

    #[must_use]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[must_use]
    pub fn band_center(&self) -> f64 {
        self.band_center
    }

    #[must_use]
    pub fn hopping_j(&self) -> f64 {
        self.hopping_j
    }

    #[must_use]
    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    #[must_use]
    pub fn lattice_a(&self) -> f64 {
        self.lattice_a
    }

    #[must_use]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Full tight-binding bandwidth `4J`.
    #[must_use]
    pub fn bandwidth(&self) -> f64 {
        4.0 * self.hopping_j
    }

    /// Clean-chain mode spacing at band center, `2 pi J / (N + 1)`. Equals
    /// the free spectral range `pi v_g / L` of the physical wire when the
    /// chain was built from its dispersion.
    #[must_use]
    pub fn center_mode_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hopping_j / (self.n_sites as f64 + 1.0)
    }

    /// A copy with a derived seed, for ensemble realizations.
    #[must_use]
    pub fn with_realization(&self, index: u64) -> Self {
        let mut c = self.clone();
        c.seed = self.seed.wrapping_add(index);
        c
    }

    /// The disordered site frequencies for this seed.
    #[must_use]
    pub fn site_frequencies(&self) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        if self.delta_omega == 0.0 {
            return vec![self.band_center; self.n_sites];
        }
        let dist = Normal::new(0.0, self.delta_omega).expect("validated std");
        (0..self.n_sites).map(|_| self.band_center + dist.sample(&mut rng)).collect()
    }

    /// Eigenfrequencies and end-site amplitudes of this realization.
    pub fn eigenmodes(&self) -> Result<ChainModes> {
        self.eigenmodes_in_window(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Like [`DisorderChain::eigenmodes`] but restricted to eigenfrequencies
    /// inside `[lo, hi]`. Eigenvalues always cost `O(n^2)`; skipping the
    /// out-of-window eigenvectors is what makes large ensembles cheap.
    pub fn eigenmodes_in_window(&self, lo: f64, hi: f64) -> Result<ChainModes> {
        let diag = self.site_frequencies();
        let off = vec![self.hopping_j; self.n_sites - 1];
        let all = tridiag::eigenvalues(&diag, &off)?;
        let frequencies: Vec<f64> = all.into_iter().filter(|w| *w >= lo && *w <= hi).collect();
        let end_amplitudes = tridiag::end_amplitudes(&diag, &off, &frequencies)?;
        Ok(ChainModes { frequencies, end_amplitudes })
    }
}

/// Hopping rate reproducing a group velocity on lattice constant `a`:
/// `J = v_g / (2a)`.
pub fn hopping_from_group_velocity(v_g: f64, lattice_a: f64) -> Result<f64> {
    if !v_g.is_finite() || v_g <= 0.0 {
        return Err(Error::invalid("v_g", format!("must be finite and > 0, got {v_g}")));
    }
    if !lattice_a.is_finite() || lattice_a <= 0.0 {
        return Err(Error::invalid("lattice_a", format!("must be finite and > 0, got {lattice_a}")));
    }
    Ok(v_g / (2.0 * lattice_a))
}

/// Eigenmodes of one chain realization, sorted by frequency.
#[derive(Debug, Clone)]
pub struct ChainModes {
    frequencies: Vec<f64>,
    end_amplitudes: Vec<f64>,
}

impl ChainModes {
    #[must_use]
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `|psi_m(end)|` per mode; a clean chain has
    /// `sqrt(2 / (N + 1)) |sin(pi m N / (N + 1))|`.
    #[must_use]
    pub fn end_amplitudes(&self) -> &[f64] {
        &self.end_amplitudes
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Converts chain modes inside `[lo, hi]` into waveguide modes for the
/// coupled-mode model. Couplings follow the end-site amplitudes and are
/// scaled so their mean over the selected window equals `f_mean`; all modes
/// share `gamma_mode`.
pub fn waveguide_modes_from_chain(
    modes: &ChainModes,
    f_mean: f64,
    gamma_mode: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<WaveguideMode>> {
    if !f_mean.is_finite() || f_mean <= 0.0 {
        return Err(Error::invalid("f_mean", format!("must be finite and > 0, got {f_mean}")));
    }
    if !gamma_mode.is_finite() || gamma_mode <= 0.0 {
        return Err(Error::invalid("gamma_mode", format!("must be finite and > 0, got {gamma_mode}")));
    }
    if !(lo < hi) {
        return Err(Error::invalid("window", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let selected: Vec<(f64, f64)> = modes
        .frequencies()
        .iter()
        .zip(modes.end_amplitudes())
        .filter(|(w, _)| **w >= lo && **w <= hi)
        .map(|(w, a)| (*w, *a))
        .collect();
    if selected.is_empty() {
        return Err(Error::invalid("window", "no chain modes inside the window"));
    }
    let amp_mean = selected.iter().map(|(_, a)| a).sum::<f64>() / selected.len() as f64;
    if amp_mean <= 0.0 {
        return Err(Error::invalid("window", "selected modes have no end-site weight"));
    }
    let scale = f_mean / amp_mean;
    Ok(selected
        .into_iter()
        .map(|(omega, amp)| WaveguideMode { omega, f: scale * amp, gamma_i: gamma_mode })
        .collect())
}

/// Fixed-width histogram of scalar samples.
#[derive(Debug, Clone)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bins `samples` between their extremes; the top edge is inclusive.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(Error::invalid("histogram", "need samples and at least one bin"));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite { context: "histogram samples", index: 0 });
        }
        let width = if hi > lo { hi - lo } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64 / bins as f64).collect();
        let mut counts = vec![0u64; bins];
        for s in samples {
            let idx = (((s - lo) / width * bins as f64) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Ok(Self { edges, counts })
    }
}

/// Disorder statistics of the modes inside a window around band center,
/// aggregated over seeded realizations.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    /// Mean adjacent-mode spacing inside the window (rad/s).
    pub spacing_mean: f64,
    /// Standard deviation of the adjacent spacings (rad/s).
    pub spacing_std: f64,
    /// Mean end-site coupling weight, normalized so a clean chain gives 1.
    pub coupling_mean: f64,
    /// Standard deviation of the normalized coupling weights.
    pub coupling_std: f64,
    /// Number of spacing samples aggregated.
    pub n_spacings: usize,
    pub spacing_hist: Histogram,
    pub coupling_hist: Histogram,
}

impl EnsembleStats {
    /// Fractional spacing fluctuation `std / mean`. For site disorder equal
    /// to one mode spacing this approaches `sqrt(a / L) = 1 / sqrt(N + 1)`.
    #[must_use]
    pub fn spacing_ratio(&self) -> f64 {
        self.spacing_std / self.spacing_mean
    }
}

fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Runs `realizations` seeded copies of `template` and gathers spacing and
/// coupling statistics for modes within `window_half` of band center.
/// Realizations run in parallel but are reduced in index order, so the
/// result is identical for any thread count.
pub fn ensemble_stats(
    template: &DisorderChain,
    realizations: usize,
    window_half: f64,
    bins: usize,
) -> Result<EnsembleStats> {
    if realizations == 0 {
        return Err(Error::invalid("realizations", "need at least one realization"));
    }
    if !window_half.is_finite() || window_half <= 0.0 {
        return Err(Error::invalid("window_half", format!("must be finite and > 0, got {window_half}")));
    }
    let clean_amp = (2.0 / (template.n_sites() as f64 + 1.0)).sqrt();
    let lo = template.band_center() - window_half;
    let hi = template.band_center() + window_half;
    let per_seed: Vec<(Vec<f64>, Vec<f64>)> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| -> Result<(Vec<f64>, Vec<f64>)> {
            let modes = template.with_realization(r).eigenmodes_in_window(lo, hi)?;
            let spacings = modes.frequencies().windows(2).map(|p| p[1] - p[0]).collect();
            let couplings = modes.end_amplitudes().iter().map(|a| a / clean_amp).collect();
            Ok((spacings, couplings))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut spacings = Vec::new();
    let mut couplings = Vec::new();
    for (s, c) in per_seed {
        spacings.extend(s);
        couplings.extend(c);
    }
    if spacings.len() < 2 {
        return Err(Error::invalid("window_half", "window holds too few modes for spacing statistics"));
    }
    let (spacing_mean, spacing_std) = mean_and_std(&spacings);
    let (coupling_mean, coupling_std) = mean_and_std(&couplings);
    Ok(EnsembleStats {
        spacing_mean,
        spacing_std,
        coupling_mean,
        coupling_std,
        n_spacings: spacings.len(),
        spacing_hist: Histogram::from_samples(&spacings, bins)?,
        coupling_hist: Histogram::from_samples(&couplings, bins)?,
    })
}

/// Thermal output spectrum of a transducer loaded by the eigenmodes of one
/// or more disordered chains (one chain per band). Modes are taken from a
/// margin-widened copy of the grid span, all at occupancy `n_bath` with
/// linewidth `gamma_mode` and window-mean coupling `f_mean` per chain.
pub fn tb_thermal_spectrum(
    chains: &[DisorderChain],
    sys: &LocalizedTransducer,
    drive: &DriveCondition,
    f_mean: f64,
    gamma_mode: f64,
    n_bath: f64,
    floor: f64,
    grid: &[f64],
) -> Result<SpectrumGrid> {
    if chains.is_empty() {
        return Err(Error::invalid("chains", "need at least one chain"));
    }
    if grid.len() < 2 {
        return Err(Error::invalid("grid", "need at least 2 grid points"));
    }
    let span = grid[grid.len() - 1] - grid[0];
    let margin = 0.1 * span;
    let lo = grid[0] - margin;
    let hi = grid[grid.len() - 1] + margin;

    let mut all_modes = Vec::new();
    for chain in chains {
        // A band whose edge misses the window entirely is allowed: other
        // bands may still cover it.
        match waveguide_modes_from_chain(&chain.eigenmodes()?, f_mean, gamma_mode, lo, hi) {
            Ok(mut m) => all_modes.append(&mut m),
            Err(Error::InvalidParameter { name: "window", .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if all_modes.is_empty() {
        return Err(Error::invalid("grid", "no chain modes fall inside the grid span"));
    }
    if all_modes.len() > MODE_CAP_DEFAULT {
        return Err(Error::TooManyModes { count: all_modes.len(), cap: MODE_CAP_DEFAULT });
    }
    let wg = WaveguideModeSet::new(all_modes)?;
    let baths = BathOccupancies::new(n_bath, vec![n_bath; wg.len()], floor)?;
    thermal_output_spectrum(sys, &wg, drive, &baths, grid)
}

/// Ensemble-averaged phase coherence of a wavepacket after time `t` under
/// Gaussian frequency disorder of width `sigma`: `exp(-t^2 sigma^2 / 2)`.
#[must_use]
pub fn dephasing_fidelity(t: f64, sigma: f64) -> f64 {
    (-0.5 * t * t * sigma * sigma).exp()
}

/// One-way propagation length at which the dephasing fidelity drops 3 dB:
/// `v_g sqrt(2 ln 2) / sigma`.
pub fn l3db_from_sigma(sigma: f64, v_g: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
    }
    if !v_g.is_finite() || v_g <= 0.0 {
        return Err(Error::invalid("v_g", format!("must be finite and > 0, got {v_g}")));
    }
    Ok(v_g * (2.0 * std::f64::consts::LN_2).sqrt() / sigma)
}
