//! Parameter containers for the coupled optical/mechanical system.
//!
//! All frequencies and rates are angular (rad/s). Constructors enforce the
//! domain invariants, so a value of one of these types is always usable.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Localized transducer mode and the optical cavity reading it out.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedTransducer {
    kappa_i: f64,
    kappa_e: f64,
    g0: f64,
    gamma_i: f64,
    omega_m: f64,
    omega_c: f64,
    delta: f64,
}

impl LocalizedTransducer {
    /// Builds a transducer from intrinsic/extrinsic optical rates, vacuum
    /// coupling, intrinsic mechanical damping, mechanical and optical carrier
    /// frequencies, and the laser-cavity detuning.
    ///
    /// All rates must be strictly positive and `omega_m > 0`; the total
    /// cavity decay is `kappa = kappa_i + kappa_e` by construction.
    pub fn new(
        kappa_i: f64,
        kappa_e: f64,
        g0: f64,
        gamma_i: f64,
        omega_m: f64,
        omega_c: f64,
        delta: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("kappa_i", kappa_i),
            ("kappa_e", kappa_e),
            ("g0", g0),
            ("gamma_i", gamma_i),
            ("omega_m", omega_m),
            ("omega_c", omega_c),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(Self {
            kappa_i,
            kappa_e,
            g0,
            gamma_i,
            omega_m,
            omega_c,
            delta,
        })
    }

    /// Total cavity decay rate `kappa_i + kappa_e`.
    #[must_use]
    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_e
    }

    #[must_use]
    pub fn kappa_i(&self) -> f64 {
        self.kappa_i
    }

    #[must_use]
    pub fn kappa_e(&self) -> f64 {
        self.kappa_e
    }

    #[must_use]
    pub fn g0(&self) -> f64 {
        self.g0
    }

    #[must_use]
    pub fn gamma_i(&self) -> f64 {
        self.gamma_i
    }

    #[must_use]
    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    #[must_use]
    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Laser-cavity detuning. The driven model assumes red detuning near
    /// `omega_m`; the value itself is unconstrained.
    #[must_use]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// True when the cavity is sideband resolved (`omega_m > kappa`).
    #[must_use]
    pub fn sideband_resolved(&self) -> bool {
        self.omega_m > self.kappa()
    }

    /// Optomechanically induced damping `4 G^2 / kappa` at the given drive.
    #[must_use]
    pub fn gamma_om(&self, drive: &DriveCondition) -> f64 {
        4.0 * drive.g(self).powi(2) / self.kappa()
    }
}

/// One standing-wave waveguide mode as seen by the transducer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideMode {
    /// Mode frequency (rad/s, absolute).
    pub omega: f64,
    /// Coupling rate to the localized mode (rad/s, >= 0).
    pub f: f64,
    /// Intrinsic damping rate (rad/s, > 0).
    pub gamma_i: f64,
}

/// Waveguide mode comb, sorted strictly ascending in frequency.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaveguideModeSet {
    modes: Vec<WaveguideMode>,
}

impl WaveguideModeSet {
    /// Validates and sorts the modes. Frequencies must be distinct and
    /// positive, couplings non-negative, dampings strictly positive.
    pub fn new(mut modes: Vec<WaveguideMode>) -> Result<Self> {
        for m in &modes {
            if !m.omega.is_finite() || m.omega <= 0.0 {
                return Err(Error::invalid("omega_k", format!("must be finite and > 0, got {}", m.omega)));
            }
            if !m.f.is_finite() || m.f < 0.0 {
                return Err(Error::invalid("f_k", format!("must be finite and >= 0, got {}", m.f)));
            }
            if !m.gamma_i.is_finite() || m.gamma_i <= 0.0 {
                return Err(Error::invalid("gamma_k_i", format!("must be finite and > 0, got {}", m.gamma_i)));
            }
        }
        modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        if modes.windows(2).any(|w| w[0].omega >= w[1].omega) {
            return Err(Error::invalid("omega_k", "mode frequencies must be strictly ascending"));
        }
        Ok(Self { modes })
    }

    /// Empty comb (transducer only).
    #[must_use]
    pub fn empty() -> Self {
        Self { modes: Vec::new() }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    #[must_use]
    pub fn modes(&self) -> &[WaveguideMode] {
        &self.modes
    }

    /// Detunings `omega_k - omega_m` from a reference frequency.
    #[must_use]
    pub fn detunings(&self, omega_m: f64) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega - omega_m).collect()
    }

    /// Frequency span `max(omega_k) - min(omega_k)`; zero for < 2 modes.
    #[must_use]
    pub fn span(&self) -> f64 {
        match (self.modes.first(), self.modes.last()) {
            (Some(a), Some(b)) => b.omega - a.omega,
            _ => 0.0,
        }
    }
}

/// Drive strength expressed as an intracavity photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCondition {
    n_c: f64,
}

impl DriveCondition {
    pub fn new(n_c: f64) -> Result<Self> {
        if !n_c.is_finite() || n_c < 0.0 {
            return Err(Error::invalid("n_c", format!("must be finite and >= 0, got {n_c}")));
        }
        Ok(Self { n_c })
    }

    #[must_use]
    pub fn n_c(&self) -> f64 {
        self.n_c
    }

    /// Parametric coupling `G = g0 sqrt(n_c)`.
    #[must_use]
    pub fn g(&self, sys: &LocalizedTransducer) -> f64 {
        sys.g0() * self.n_c.sqrt()
    }
}

/// Bath occupancies feeding the thermal model: one for the localized mode,
/// one per waveguide mode, plus a uniform detection floor.
#[derive(Debug, Clone, PartialEq)]
pub struct BathOccupancies {
    n_local: f64,
    n_wg: Vec<f64>,
    floor: f64,
}

impl BathOccupancies {
    pub fn new(n_local: f64, n_wg: Vec<f64>, floor: f64) -> Result<Self> {
        if !n_local.is_finite() || n_local < 0.0 {
            return Err(Error::invalid("n_local", format!("must be finite and >= 0, got {n_local}")));
        }
        if let Some(bad) = n_wg.iter().find(|n| !n.is_finite() || **n < 0.0) {
            return Err(Error::invalid("n_wg", format!("entries must be finite and >= 0, got {bad}")));
        }
        if !floor.is_finite() || floor < 0.0 {
            return Err(Error::invalid("floor", format!("must be finite and >= 0, got {floor}")));
        }
        Ok(Self { n_local, n_wg, floor })
    }

    /// Same occupancy `n` for the localized mode and all `count` waveguide
    /// baths, no floor.
    pub fn uniform(n: f64, count: usize) -> Result<Self> {
        Self::new(n, vec![n; count], 0.0)
    }

    #[must_use]
    pub fn n_local(&self) -> f64 {
        self.n_local
    }

    #[must_use]
    pub fn n_wg(&self) -> &[f64] {
        &self.n_wg
    }

    #[must_use]
    pub fn floor(&self) -> f64 {
        self.floor
    }
}

/// What a spectrum grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Complex two-tone response samples.
    CoherentS21,
    /// Real output photon-flux spectral density.
    ThermalPsd,
    /// Real displacement-like spectral density of one internal mode.
    InternalPsd,
}

/// Sample payload of a spectrum grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl SpectrumValues {
    #[must_use]
    pub fn len(&self) -> usize {
        match self {
            SpectrumValues::Real(v) => v.len(),
            SpectrumValues::Complex(v) => v.len(),
        }
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sampled spectrum over a strictly increasing frequency grid.
///
/// `omega` is the probe detuning from the pump (rad/s), so driven and thermal
/// features appear near the mechanical frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    omega: Vec<f64>,
    values: SpectrumValues,
    kind: SpectrumKind,
}

impl SpectrumGrid {
    pub fn new(omega: Vec<f64>, values: SpectrumValues, kind: SpectrumKind) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "SpectrumGrid",
                expected: omega.len(),
                got: values.len(),
            });
        }
        if let Some(idx) = omega.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite {
                context: "SpectrumGrid omega",
                index: idx,
            });
        }
        if omega.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("omega", "grid must be strictly increasing"));
        }
        Ok(Self { omega, values, kind })
    }

    #[must_use]
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    #[must_use]
    pub fn values(&self) -> &SpectrumValues {
        &self.values
    }

    #[must_use]
    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Real samples, or `None` for complex-valued grids.
    #[must_use]
    pub fn real_values(&self) -> Option<&[f64]> {
        match &self.values {
            SpectrumValues::Real(v) => Some(v),
            SpectrumValues::Complex(_) => None,
        }
    }

    /// Complex samples, or `None` for real-valued grids.
    #[must_use]
    pub fn complex_values(&self) -> Option<&[Complex64]> {
        match &self.values {
            SpectrumValues::Complex(v) => Some(v),
            SpectrumValues::Real(_) => None,
        }
    }
}

/// Uniform grid of `points >= 2` frequencies centered on `center` and
/// spanning `center +- span/2`.
pub fn linear_grid(center: f64, span: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::invalid("points", format!("need at least 2 grid points, got {points}")));
    }
    if !(center.is_finite() && span.is_finite()) || span <= 0.0 {
        return Err(Error::invalid("span", "center and span must be finite, span > 0"));
    }
    let start = center - 0.5 * span;
    let step = span / (points - 1) as f64;
    Ok((0..points).map(|i| start + step * i as f64).collect())
}

/// Default spectrum span around `omega_m`: ten times the waveguide comb span,
/// falling back to a multiple of the relevant linewidths when the comb is
/// degenerate or empty.
#[must_use]
pub fn default_span(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
) -> f64 {
    let comb = wg.span();
    if comb > 0.0 {
        10.0 * comb
    } else {
        100.0 * (sys.gamma_i() + sys.gamma_om(drive) + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TWO_PI;

    fn si_transducer() -> LocalizedTransducer {
        LocalizedTransducer::new(
            TWO_PI * 800.0e6,
            TWO_PI * 200.0e6,
            TWO_PI * 690.0e3,
            TWO_PI * 122.0e3,
            TWO_PI * 4.393e9,
            TWO_PI * 192.2e12,
            TWO_PI * 4.217e9,
        )
        .unwrap()
    }

    #[test]
    fn kappa_is_sum_of_parts() {
        let sys = si_transducer();
        assert_eq!(sys.kappa(), sys.kappa_i() + sys.kappa_e());
        assert!((sys.kappa() - TWO_PI * 1.0e9).abs() < 1e-3);
    }

    #[test]
    fn sideband_resolution_flag() {
        let sys = si_transducer();
        assert!(sys.sideband_resolved());
    }

    #[test]
    fn rejects_nonpositive_rates() {
        let bad = LocalizedTransducer::new(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert!(matches!(bad, Err(Error::InvalidParameter { name: "kappa_i", .. })));
        let bad = LocalizedTransducer::new(1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 0.0);
        assert!(matches!(bad, Err(Error::InvalidParameter { name: "gamma_i", .. })));
    }

    #[test]
    fn drive_coupling_squares_to_g0_squared_nc() {
        let sys = si_transducer();
        for n_c in [0.0, 1.0, 188.0, 1099.0] {
            let d = DriveCondition::new(n_c).unwrap();
            let g = d.g(&sys);
            let expected = sys.g0() * sys.g0() * n_c;
            assert!((g * g - expected).abs() <= 4.0 * f64::EPSILON * expected.max(1.0));
        }
        assert!(DriveCondition::new(-1.0).is_err());
    }

    #[test]
    fn mode_set_sorts_and_rejects_duplicates() {
        let set = WaveguideModeSet::new(vec![
            WaveguideMode { omega: 3.0, f: 0.1, gamma_i: 0.01 },
            WaveguideMode { omega: 1.0, f: 0.1, gamma_i: 0.01 },
            WaveguideMode { omega: 2.0, f: 0.1, gamma_i: 0.01 },
        ])
        .unwrap();
        let freqs: Vec<f64> = set.modes().iter().map(|m| m.omega).collect();
        assert_eq!(freqs, vec![1.0, 2.0, 3.0]);
        assert_eq!(set.span(), 2.0);

        let dup = WaveguideModeSet::new(vec![
            WaveguideMode { omega: 1.0, f: 0.1, gamma_i: 0.01 },
            WaveguideMode { omega: 1.0, f: 0.1, gamma_i: 0.01 },
        ]);
        assert!(dup.is_err());
    }

    #[test]
    fn grid_is_uniform_and_increasing() {
        let g = linear_grid(10.0, 4.0, 5).unwrap();
        assert_eq!(g, vec![8.0, 9.0, 10.0, 11.0, 12.0]);
        assert!(linear_grid(10.0, 4.0, 1).is_err());
    }

    #[test]
    fn spectrum_grid_rejects_unsorted_axis() {
        let r = SpectrumGrid::new(
            vec![1.0, 1.0, 2.0],
            SpectrumValues::Real(vec![0.0; 3]),
            SpectrumKind::ThermalPsd,
        );
        assert!(r.is_err());
    }
}
