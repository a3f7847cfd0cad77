//! Calibrated thermometry: turning detected RF power and noise spectra into
//! phonon occupancies.
//!
//! The two routes share one calibration chain. The coherent route references
//! the sideband power of a drive tone against a probe tone of known photon
//! flux, so detector gain drops out of the occupancy up to the efficiency
//! chain. The incoherent route normalizes a measured noise PSD into output
//! photon-flux units and solves a linear least-squares problem whose basis
//! columns are the per-bath output gains of the coupled-mode model.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::response::output_noise_weights;
use crate::system::{DriveCondition, LocalizedTransducer, WaveguideModeSet};
use crate::HBAR;

/// Detection-path efficiencies and gains between the device and the RF
/// spectrum analyzer.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationChain {
    /// Cavity-to-fiber collection efficiency (0, 1].
    pub eta_c: f64,
    /// Fiber-path transmission (0, 1].
    pub eta_f: f64,
    /// Switch/splitter transmission applied per pass (0, 1]; detected noise
    /// power carries its cube.
    pub eta_s: f64,
    /// Optical amplifier power gain (> 0).
    pub g_edfa: f64,
    /// Variable attenuation after the amplifier (0, 1].
    pub attenuation: f64,
    /// Photodiode responsivity in A/W (> 0).
    pub responsivity: f64,
    /// Detection impedance in ohms (> 0).
    pub impedance: f64,
}

impl CalibrationChain {
    pub fn new(
        eta_c: f64,
        eta_f: f64,
        eta_s: f64,
        g_edfa: f64,
        attenuation: f64,
        responsivity: f64,
        impedance: f64,
    ) -> Result<Self> {
        let efficiency = |name: &'static str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::invalid(name, format!("must be in (0, 1], got {v}")));
            }
            Ok(())
        };
        efficiency("eta_c", eta_c)?;
        efficiency("eta_f", eta_f)?;
        efficiency("eta_s", eta_s)?;
        efficiency("attenuation", attenuation)?;
        let positive = |name: &'static str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
            Ok(())
        };
        positive("g_edfa", g_edfa)?;
        positive("responsivity", responsivity)?;
        positive("impedance", impedance)?;
        Ok(Self {
            eta_c,
            eta_f,
            eta_s,
            g_edfa,
            attenuation,
            responsivity,
            impedance,
        })
    }

    /// Product of the per-photon detection efficiencies seen by emitted
    /// noise: collection, fiber and three switch passes.
    #[must_use]
    pub fn noise_path_efficiency(&self) -> f64 {
        self.eta_c * self.eta_f * self.eta_s.powi(3)
    }
}

/// Measured photon-flux-to-RF-power gain from a reference tone: the ratio of
/// detected RF tone power to the optical probe power that produced it.
pub fn gain_from_two_tone(p_rf_tone: f64, p_probe: f64) -> Result<f64> {
    if !p_rf_tone.is_finite() || p_rf_tone <= 0.0 {
        return Err(Error::invalid("p_rf_tone", format!("must be finite and > 0, got {p_rf_tone}")));
    }
    if !p_probe.is_finite() || p_probe <= 0.0 {
        return Err(Error::invalid("p_probe", format!("must be finite and > 0, got {p_probe}")));
    }
    Ok(p_rf_tone / p_probe)
}

/// Gain with the amplifier and attenuator settings divided out, so settings
/// swept between datasets collapse onto one number.
#[must_use]
pub fn normalized_gain(g_r: f64, chain: &CalibrationChain) -> f64 {
    g_r / (chain.g_edfa * chain.attenuation).powi(2)
}

/// Predicted calibration gain for a local-oscillator amplitude `|alpha_L|^2`
/// (photon flux units) beating against the signal on the photodiode:
/// `2 hbar omega_p / Z * (pi R eta_s eta_f eta_c G A)^2 |alpha_L|^2`.
pub fn predicted_gain(chain: &CalibrationChain, omega_probe: f64, alpha_l_sq: f64) -> Result<f64> {
    if !omega_probe.is_finite() || omega_probe <= 0.0 {
        return Err(Error::invalid("omega_probe", format!("must be finite and > 0, got {omega_probe}")));
    }
    if !alpha_l_sq.is_finite() || alpha_l_sq < 0.0 {
        return Err(Error::invalid("alpha_l_sq", format!("must be finite and >= 0, got {alpha_l_sq}")));
    }
    let front = std::f64::consts::PI
        * chain.responsivity
        * chain.eta_s
        * chain.eta_f
        * chain.eta_c
        * chain.g_edfa
        * chain.attenuation;
    Ok(2.0 * HBAR * omega_probe / chain.impedance * front * front * alpha_l_sq)
}

/// Sideband photon flux leaving the cavity for a coherent phonon population:
/// `(kappa_e / kappa) gamma_OM n_phon`.
pub fn sideband_photon_flux(
    sys: &LocalizedTransducer,
    drive: &DriveCondition,
    n_phon: f64,
) -> Result<f64> {
    if !n_phon.is_finite() || n_phon < 0.0 {
        return Err(Error::invalid("n_phon", format!("must be finite and >= 0, got {n_phon}")));
    }
    Ok(sys.kappa_e() / sys.kappa() * sys.gamma_om(drive) * n_phon)
}

fn check_gain_and_drive(g_r: f64, sys: &LocalizedTransducer, drive: &DriveCondition) -> Result<()> {
    if !g_r.is_finite() || g_r <= 0.0 {
        return Err(Error::invalid("g_r", format!("must be finite and > 0, got {g_r}")));
    }
    if sys.gamma_om(drive) <= 0.0 {
        return Err(Error::invalid("n_c", "sideband thermometry needs a nonzero drive"));
    }
    Ok(())
}

/// Coherent phonon occupancy referenced to detected RF sideband power:
/// `n = P_RF / (hbar omega_c) * kappa / (G_R kappa_e gamma_OM eta_c eta_f eta_s^3)`.
pub fn phonon_occupancy_from_power(
    p_rf: f64,
    g_r: f64,
    chain: &CalibrationChain,
    sys: &LocalizedTransducer,
    drive: &DriveCondition,
) -> Result<f64> {
    if !p_rf.is_finite() || p_rf < 0.0 {
        return Err(Error::invalid("p_rf", format!("must be finite and >= 0, got {p_rf}")));
    }
    check_gain_and_drive(g_r, sys, drive)?;
    let flux_per_phonon = sys.kappa_e() / sys.kappa() * sys.gamma_om(drive);
    Ok(p_rf / (HBAR * sys.omega_c()) / (g_r * flux_per_phonon * chain.noise_path_efficiency()))
}

/// Detected RF power for a coherent phonon occupancy; exact inverse of
/// [`phonon_occupancy_from_power`].
pub fn rf_power_from_occupancy(
    n_phon: f64,
    g_r: f64,
    chain: &CalibrationChain,
    sys: &LocalizedTransducer,
    drive: &DriveCondition,
) -> Result<f64> {
    check_gain_and_drive(g_r, sys, drive)?;
    let flux = sideband_photon_flux(sys, drive, n_phon)?;
    Ok(HBAR * sys.omega_c() * flux * g_r * chain.noise_path_efficiency())
}

/// Measured electrical PSD rescaled into output photon-flux spectral density
/// at the cavity: `S / (G_R eta_c eta_f eta_s^3 hbar omega_c)`.
pub fn normalize_measured_psd(
    s_vv: &[f64],
    g_r: f64,
    chain: &CalibrationChain,
    omega_c: f64,
) -> Result<Vec<f64>> {
    if !g_r.is_finite() || g_r <= 0.0 {
        return Err(Error::invalid("g_r", format!("must be finite and > 0, got {g_r}")));
    }
    if !omega_c.is_finite() || omega_c <= 0.0 {
        return Err(Error::invalid("omega_c", format!("must be finite and > 0, got {omega_c}")));
    }
    if let Some(idx) = s_vv.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "measured psd", index: idx });
    }
    let denom = g_r * chain.noise_path_efficiency() * HBAR * omega_c;
    Ok(s_vv.iter().map(|v| v / denom).collect())
}

/// Least-squares basis for bath thermometry: one column of output gains per
/// mechanical bath (localized first, then each waveguide mode) and a final
/// constant column for the detection floor.
pub fn build_noise_basis(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    grid: &[f64],
) -> Result<DMatrix<f64>> {
    let weights = output_noise_weights(sys, wg, drive, grid)?;
    let rows = weights.len();
    let channels = wg.len() + 1;
    let mut basis = DMatrix::<f64>::zeros(rows, channels + 1);
    for (i, row) in weights.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            basis[(i, j)] = *w;
        }
        basis[(i, channels)] = 1.0;
    }
    Ok(basis)
}

/// Solution of the bath-occupancy least-squares problem.
#[derive(Debug, Clone)]
pub struct BathSolve {
    /// Fitted occupancies in basis-column order (localized bath first).
    pub occupancies: Vec<f64>,
    /// Fitted detection floor (last basis column).
    pub floor: f64,
    /// Singular-value condition number of the basis.
    pub condition: f64,
    /// True when `condition` exceeds 1e8; coefficients are then poorly
    /// determined even though the solve succeeded.
    pub ill_conditioned: bool,
    /// Indices of negative fitted coefficients (an index equal to the
    /// occupancy count means the floor). Left unclamped: a negative value is
    /// evidence of model mismatch, not something to hide.
    pub negative_indices: Vec<usize>,
    /// Euclidean norm of the fit residual.
    pub residual_norm: f64,
}

fn validate_basis(basis: &DMatrix<f64>, measured: &[f64]) -> Result<()> {
    if basis.nrows() != measured.len() {
        return Err(Error::DimensionMismatch {
            context: "bath solve rows",
            expected: basis.nrows(),
            got: measured.len(),
        });
    }
    if basis.ncols() < 2 || basis.nrows() < basis.ncols() {
        return Err(Error::invalid(
            "basis",
            format!("need rows >= cols >= 2, got {}x{}", basis.nrows(), basis.ncols()),
        ));
    }
    if let Some(idx) = measured.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "measured spectrum", index: idx });
    }
    Ok(())
}

/// Names the most collinear column pair for a rank-deficiency report.
fn most_collinear_pair(basis: &DMatrix<f64>) -> (usize, usize) {
    let cols = basis.ncols();
    let norms: Vec<f64> = (0..cols).map(|j| basis.column(j).norm()).collect();
    if let Some(zero) = norms.iter().position(|n| *n == 0.0) {
        return (zero, zero);
    }
    let mut best = (0, 1);
    let mut best_corr = -1.0;
    for a in 0..cols {
        for b in a + 1..cols {
            let corr = (basis.column(a).dot(&basis.column(b)) / (norms[a] * norms[b])).abs();
            if corr > best_corr {
                best_corr = corr;
                best = (a, b);
            }
        }
    }
    best
}

fn finish_solve(basis: &DMatrix<f64>, measured: &[f64], x: DVector<f64>, condition: f64) -> BathSolve {
    let cols = basis.ncols();
    let residual = basis * &x - DVector::from_column_slice(measured);
    let negative_indices: Vec<usize> = x.iter().enumerate().filter(|(_, v)| **v < 0.0).map(|(i, _)| i).collect();
    BathSolve {
        occupancies: x.as_slice()[..cols - 1].to_vec(),
        floor: x[cols - 1],
        condition,
        ill_conditioned: condition > 1e8,
        negative_indices,
        residual_norm: residual.norm(),
    }
}

/// Solves `basis * x ~ measured` in the least-squares sense via SVD.
/// Rank deficiency is an error naming the most collinear column pair;
/// negative coefficients are reported, not clamped.
pub fn solve_bath_occupancies(basis: &DMatrix<f64>, measured: &[f64]) -> Result<BathSolve> {
    validate_basis(basis, measured)?;
    let svd = basis.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let tol = basis.nrows().max(basis.ncols()) as f64 * f64::EPSILON * s_max;
    if s_min <= tol {
        let (first, second) = most_collinear_pair(basis);
        return Err(Error::RankDeficient { first, second, sigma_min: s_min });
    }
    let x = svd
        .solve(&DVector::from_column_slice(measured), tol)
        .map_err(|detail| Error::NoConvergence { routine: "bath svd solve", detail: detail.into() })?;
    Ok(finish_solve(basis, measured, x, s_max / s_min))
}

/// Non-negative variant (active-set Lawson-Hanson). Off the default path:
/// clamping is only appropriate once negative coefficients are understood,
/// since it biases the remaining occupancies upward.
pub fn solve_bath_occupancies_nonnegative(
    basis: &DMatrix<f64>,
    measured: &[f64],
) -> Result<BathSolve> {
    validate_basis(basis, measured)?;
    let svd = basis.clone().svd(false, false);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let tol = basis.nrows().max(basis.ncols()) as f64 * f64::EPSILON * s_max;
    if s_min <= tol {
        let (first, second) = most_collinear_pair(basis);
        return Err(Error::RankDeficient { first, second, sigma_min: s_min });
    }

    let cols = basis.ncols();
    let b = DVector::from_column_slice(measured);
    let mut x = DVector::<f64>::zeros(cols);
    let mut passive = vec![false; cols];
    let w_tol = 1e-10 * (basis.transpose() * &b).abs().max();

    for _ in 0..10 * cols {
        let w = basis.transpose() * (&b - basis * &x);
        let candidate = (0..cols)
            .filter(|&j| !passive[j])
            .max_by(|&a, &c| w[a].total_cmp(&w[c]));
        let Some(j_star) = candidate else { break };
        if w[j_star] <= w_tol {
            break;
        }
        passive[j_star] = true;

        loop {
            let active_cols: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let sub = basis.select_columns(active_cols.iter());
            let z_sub = sub
                .clone()
                .svd(true, true)
                .solve(&b, tol)
                .map_err(|detail| Error::NoConvergence { routine: "nnls subproblem", detail: detail.into() })?;
            if z_sub.iter().all(|v| *v > 0.0) {
                x.fill(0.0);
                for (pos, &j) in active_cols.iter().enumerate() {
                    x[j] = z_sub[pos];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (pos, &j) in active_cols.iter().enumerate() {
                if z_sub[pos] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z_sub[pos]));
                }
            }
            for (pos, &j) in active_cols.iter().enumerate() {
                x[j] += alpha * (z_sub[pos] - x[j]);
                if x[j] <= f64::EPSILON * z_sub.amax() {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(finish_solve(basis, measured, x, s_max / s_min))
}

/// Noise and net heating rates of waveguide modes from their effective
/// occupancies: `Gamma_noise = gamma_i n_eff` and
/// `Gamma_heating = Gamma_noise - gamma_i n_init`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingRate {
    pub gamma_noise: f64,
    pub gamma_heating: f64,
}

pub fn heating_rates(n_eff: &[f64], gamma_i: &[f64], n_init: f64) -> Result<Vec<HeatingRate>> {
    if n_eff.len() != gamma_i.len() {
        return Err(Error::DimensionMismatch {
            context: "heating_rates",
            expected: n_eff.len(),
            got: gamma_i.len(),
        });
    }
    if !n_init.is_finite() || n_init < 0.0 {
        return Err(Error::invalid("n_init", format!("must be finite and >= 0, got {n_init}")));
    }
    Ok(n_eff
        .iter()
        .zip(gamma_i)
        .map(|(n, g)| {
            let gamma_noise = g * n;
            HeatingRate {
                gamma_noise,
                gamma_heating: gamma_noise - g * n_init,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::thermal_output_spectrum;
    use crate::system::{linear_grid, BathOccupancies, WaveguideMode};
    use crate::TWO_PI;
    use approx::assert_relative_eq;

    fn chain() -> CalibrationChain {
        CalibrationChain::new(0.3, 0.5, 0.79, 1000.0, 0.1, 0.8, 50.0).unwrap()
    }

    fn test_system(delta: f64) -> LocalizedTransducer {
        LocalizedTransducer::new(
            TWO_PI * 800.0e6,
            TWO_PI * 200.0e6,
            TWO_PI * 690.0e3,
            TWO_PI * 122.0e3,
            TWO_PI * 4.393e9,
            TWO_PI * 192.2e12,
            delta,
        )
        .unwrap()
    }

    fn test_modes() -> WaveguideModeSet {
        WaveguideModeSet::new(vec![
            WaveguideMode {
                omega: TWO_PI * (4.393e9 - 1.6e6),
                f: TWO_PI * 280.0e3,
                gamma_i: TWO_PI * 21.0e3,
            },
            WaveguideMode {
                omega: TWO_PI * (4.393e9 + 0.7e6),
                f: TWO_PI * 330.0e3,
                gamma_i: TWO_PI * 24.0e3,
            },
        ])
        .unwrap()
    }

    #[test]
    fn chain_rejects_out_of_range_efficiencies() {
        assert!(CalibrationChain::new(1.2, 0.5, 0.8, 10.0, 0.5, 0.8, 50.0).is_err());
        assert!(CalibrationChain::new(0.3, 0.0, 0.8, 10.0, 0.5, 0.8, 50.0).is_err());
        assert!(CalibrationChain::new(0.3, 0.5, 0.8, -1.0, 0.5, 0.8, 50.0).is_err());
    }

    #[test]
    fn two_tone_gain_is_a_power_ratio() {
        assert_relative_eq!(gain_from_two_tone(2.0e-6, 5.0e-4).unwrap(), 4.0e-3);
        assert!(gain_from_two_tone(0.0, 1.0).is_err());
        assert!(gain_from_two_tone(1.0, 0.0).is_err());
    }

    #[test]
    fn normalized_gain_divides_out_amplifier_settings() {
        let c = chain();
        let g_r = 7.0e-3;
        let expected = g_r / (1000.0_f64 * 0.1).powi(2);
        assert_relative_eq!(normalized_gain(g_r, &c), expected, max_relative = 1e-14);
    }

    #[test]
    fn predicted_gain_scales_with_lo_power_and_responsivity() {
        let c = chain();
        let omega_p = TWO_PI * 192.2e12;
        let base = predicted_gain(&c, omega_p, 1.0e14).unwrap();
        assert_relative_eq!(predicted_gain(&c, omega_p, 4.0e14).unwrap(), 4.0 * base, max_relative = 1e-13);
        let mut c2 = c;
        c2.responsivity *= 2.0;
        assert_relative_eq!(predicted_gain(&c2, omega_p, 1.0e14).unwrap(), 4.0 * base, max_relative = 1e-13);
    }

    #[test]
    fn occupancy_and_power_are_exact_inverses() {
        let sys = test_system(TWO_PI * 4.217e9);
        let drive = DriveCondition::new(850.0).unwrap();
        let c = chain();
        let g_r = 3.2e-3;
        let n = 100.0;
        let p = rf_power_from_occupancy(n, g_r, &c, &sys, &drive).unwrap();
        assert!(p > 0.0);
        let back = phonon_occupancy_from_power(p, g_r, &c, &sys, &drive).unwrap();
        assert_relative_eq!(back, n, max_relative = 1e-12);
    }

    #[test]
    fn occupancy_requires_a_drive() {
        let sys = test_system(TWO_PI * 4.217e9);
        let undriven = DriveCondition::new(0.0).unwrap();
        assert!(phonon_occupancy_from_power(1e-9, 1e-3, &chain(), &sys, &undriven).is_err());
    }

    #[test]
    fn psd_normalization_inverts_the_detection_chain() {
        let c = chain();
        let omega_c = TWO_PI * 192.2e12;
        let g_r = 2.5e-3;
        let s_vv = vec![1.0e-15, 4.0e-15, 2.0e-16];
        let s_flux = normalize_measured_psd(&s_vv, g_r, &c, omega_c).unwrap();
        let denom = g_r * c.noise_path_efficiency() * HBAR * omega_c;
        for (raw, flux) in s_vv.iter().zip(&s_flux) {
            assert_relative_eq!(flux * denom, raw, max_relative = 1e-14);
        }
    }

    #[test]
    fn noise_basis_reconstructs_the_thermal_spectrum() {
        let sys = test_system(TWO_PI * 4.393e9);
        let wg = test_modes();
        let drive = DriveCondition::new(600.0).unwrap();
        let grid = linear_grid(sys.omega_m(), TWO_PI * 6.0e6, 801).unwrap();
        let baths = BathOccupancies::new(90.0, vec![60.0, 35.0], 2.5).unwrap();

        let basis = build_noise_basis(&sys, &wg, &drive, &grid).unwrap();
        assert_eq!(basis.shape(), (801, 4));
        let spectrum = thermal_output_spectrum(&sys, &wg, &drive, &baths, &grid).unwrap();
        let s = spectrum.real_values().unwrap();
        for i in 0..grid.len() {
            let recon = 90.0 * basis[(i, 0)] + 60.0 * basis[(i, 1)] + 35.0 * basis[(i, 2)] + 2.5;
            assert_relative_eq!(recon, s[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn solve_recovers_known_occupancies() {
        let sys = test_system(TWO_PI * 4.393e9);
        let wg = test_modes();
        let drive = DriveCondition::new(600.0).unwrap();
        let grid = linear_grid(sys.omega_m(), TWO_PI * 6.0e6, 1201).unwrap();
        let baths = BathOccupancies::new(87.0, vec![55.0, 30.0], 1.8).unwrap();
        let spectrum = thermal_output_spectrum(&sys, &wg, &drive, &baths, &grid).unwrap();

        let basis = build_noise_basis(&sys, &wg, &drive, &grid).unwrap();
        let solved = solve_bath_occupancies(&basis, spectrum.real_values().unwrap()).unwrap();
        assert_relative_eq!(solved.occupancies[0], 87.0, max_relative = 1e-8);
        assert_relative_eq!(solved.occupancies[1], 55.0, max_relative = 1e-8);
        assert_relative_eq!(solved.occupancies[2], 30.0, max_relative = 1e-8);
        assert_relative_eq!(solved.floor, 1.8, max_relative = 1e-8);
        assert!(solved.negative_indices.is_empty());
        assert!(solved.residual_norm < 1e-8);
    }

    #[test]
    fn duplicate_columns_are_reported_as_rank_deficiency() {
        let mut basis = DMatrix::<f64>::zeros(6, 3);
        for i in 0..6 {
            basis[(i, 0)] = 1.0 + i as f64;
            basis[(i, 1)] = 2.0 * (1.0 + i as f64);
            basis[(i, 2)] = (i as f64).sin() + 2.0;
        }
        let measured = vec![1.0; 6];
        match solve_bath_occupancies(&basis, &measured) {
            Err(Error::RankDeficient { first, second, .. }) => {
                assert_eq!((first, second), (0, 1));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn negative_coefficients_are_flagged_not_clamped() {
        let mut basis = DMatrix::<f64>::zeros(4, 2);
        for i in 0..4 {
            basis[(i, 0)] = 1.0 + (i as f64) * (i as f64);
            basis[(i, 1)] = 1.0;
        }
        let measured: Vec<f64> = (0..4).map(|i| -2.0 * (1.0 + (i as f64) * (i as f64)) + 5.0).collect();
        let solved = solve_bath_occupancies(&basis, &measured).unwrap();
        assert!(solved.occupancies[0] < 0.0);
        assert_eq!(solved.negative_indices, vec![0]);
    }

    #[test]
    fn nnls_matches_ls_when_the_solution_is_interior() {
        let sys = test_system(TWO_PI * 4.393e9);
        let wg = test_modes();
        let drive = DriveCondition::new(600.0).unwrap();
        let grid = linear_grid(sys.omega_m(), TWO_PI * 6.0e6, 601).unwrap();
        let baths = BathOccupancies::new(87.0, vec![55.0, 30.0], 1.8).unwrap();
        let spectrum = thermal_output_spectrum(&sys, &wg, &drive, &baths, &grid).unwrap();
        let basis = build_noise_basis(&sys, &wg, &drive, &grid).unwrap();
        let measured = spectrum.real_values().unwrap();

        let ls = solve_bath_occupancies(&basis, measured).unwrap();
        let nn = solve_bath_occupancies_nonnegative(&basis, measured).unwrap();
        for (a, b) in ls.occupancies.iter().zip(&nn.occupancies) {
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
        assert_relative_eq!(ls.floor, nn.floor, max_relative = 1e-6);
    }

    #[test]
    fn nnls_zeroes_what_ls_makes_negative() {
        let mut basis = DMatrix::<f64>::zeros(4, 2);
        for i in 0..4 {
            basis[(i, 0)] = 1.0 + (i as f64) * (i as f64);
            basis[(i, 1)] = 1.0;
        }
        let measured: Vec<f64> = (0..4).map(|i| -2.0 * (1.0 + (i as f64) * (i as f64)) + 5.0).collect();
        let nn = solve_bath_occupancies_nonnegative(&basis, &measured).unwrap();
        assert_eq!(nn.occupancies[0], 0.0);
        assert!(nn.negative_indices.is_empty());
        assert!(nn.residual_norm > 0.0);
    }

    #[test]
    fn heating_rates_follow_the_linear_law() {
        let rates = heating_rates(&[150.0, 90.0], &[TWO_PI * 22.0e3, TWO_PI * 20.0e3], 87.0).unwrap();
        assert_relative_eq!(rates[0].gamma_noise, TWO_PI * 22.0e3 * 150.0, max_relative = 1e-14);
        assert_relative_eq!(rates[0].gamma_heating, TWO_PI * 22.0e3 * 63.0, max_relative = 1e-12);
        assert!(rates[1].gamma_heating > 0.0);
        assert!(heating_rates(&[1.0], &[1.0, 2.0], 0.0).is_err());
    }
}
