//! Linear response of the driven system: dynamical matrix, reflection,
//! two-tone response, and thermal spectra.
//!
//! Everything is built from one matrix. In the frame rotating at the
//! mechanical frequency the coupled equations read `ds/dt = -M s - K v_in`,
//! with `M` holding positive damping rates on its diagonal. A probe at
//! detuning `omega` from the pump therefore sees the resolvent
//! `(M + i (omega_m - omega) 1)^-1`; that sign pairing is what makes the
//! matrix path agree with the closed-form reflection coefficient, and it is
//! locked in by tests rather than by convention comments elsewhere.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::system::{
    BathOccupancies, DriveCondition, LocalizedTransducer, SpectrumGrid, SpectrumKind,
    SpectrumValues, WaveguideModeSet,
};

/// Default cap on the waveguide mode count in dense-matrix paths.
pub const MODE_CAP_DEFAULT: usize = 256;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Builds the dynamical matrix of the driven system in the frame rotating at
/// `omega_m`, using the default mode cap.
///
/// Layout (0-based): row/column 0 is the optical mode, 1 the localized
/// mechanical mode, `2 + k` the k-th waveguide mode. The diagonal holds
/// `i(delta - omega_m) + kappa/2`, `gamma_i/2` and
/// `i(omega_k - omega_m) + gamma_k_i/2`; couplings are `iG` (optical to
/// localized) and `i f_k` (localized to waveguide k). Waveguide modes do not
/// couple to each other, and the matrix equals its transpose.
pub fn build_dynamical_matrix(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
) -> Result<DMatrix<Complex64>> {
    build_dynamical_matrix_capped(sys, wg, drive, MODE_CAP_DEFAULT)
}

/// Same as [`build_dynamical_matrix`] with an explicit mode cap.
pub fn build_dynamical_matrix_capped(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    cap: usize,
) -> Result<DMatrix<Complex64>> {
    let n_wg = wg.len();
    if n_wg > cap {
        return Err(Error::TooManyModes { count: n_wg, cap });
    }
    let dim = n_wg + 2;
    let g = drive.g(sys);
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);

    m[(0, 0)] = I * (sys.delta() - sys.omega_m()) + Complex64::from(0.5 * sys.kappa());
    m[(1, 1)] = Complex64::from(0.5 * sys.gamma_i());
    m[(0, 1)] = I * g;
    m[(1, 0)] = I * g;
    for (k, mode) in wg.modes().iter().enumerate() {
        let j = 2 + k;
        m[(j, j)] = I * (mode.omega - sys.omega_m()) + Complex64::from(0.5 * mode.gamma_i);
        m[(1, j)] = I * mode.f;
        m[(j, 1)] = I * mode.f;
    }
    Ok(m)
}

/// `M + i (omega_m - omega) 1`: the system matrix probed at detuning `omega`
/// from the pump.
fn probed_matrix(
    m: &DMatrix<Complex64>,
    omega_m: f64,
    omega: f64,
) -> DMatrix<Complex64> {
    let mut a = m.clone();
    let shift = I * (omega_m - omega);
    for j in 0..a.nrows() {
        a[(j, j)] += shift;
    }
    a
}

/// Input coupling-rate square roots ordered as the matrix rows:
/// optical, localized, waveguide modes.
fn input_rates(sys: &LocalizedTransducer, wg: &WaveguideModeSet) -> Vec<f64> {
    let mut k = Vec::with_capacity(wg.len() + 2);
    k.push(sys.kappa_e().sqrt());
    k.push(sys.gamma_i().sqrt());
    k.extend(wg.modes().iter().map(|m| m.gamma_i.sqrt()));
    k
}

/// Reflection coefficient at probe detuning `omega` from the pump, as the
/// explicit nested form
/// `r = 1 - kappa_e / (i(delta - omega) + kappa/2 + G^2 / (i(omega_m - omega)
/// + gamma_i/2 + sum_k f_k^2 / (i(omega_k - omega) + gamma_k_i/2)))`.
#[must_use]
pub fn reflection_coefficient(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    omega: f64,
) -> Complex64 {
    let g = drive.g(sys);
    let mut wg_sum = Complex64::from(0.0);
    for mode in wg.modes() {
        wg_sum += Complex64::from(mode.f * mode.f)
            / (I * (mode.omega - omega) + Complex64::from(0.5 * mode.gamma_i));
    }
    let mech = I * (sys.omega_m() - omega) + Complex64::from(0.5 * sys.gamma_i()) + wg_sum;
    let opt = I * (sys.delta() - omega) + Complex64::from(0.5 * sys.kappa())
        + Complex64::from(g * g) / mech;
    Complex64::from(1.0) - Complex64::from(sys.kappa_e()) / opt
}

/// Two-tone response at probe detuning `omega`, combining the upper and
/// lower sidebands of the reflected field:
/// `S21 = ((1+i) r*(0) r(omega) + (1-i) r(0) r*(-omega)) / 2`.
#[must_use]
pub fn s21(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    omega: f64,
) -> Complex64 {
    let r0 = reflection_coefficient(sys, wg, drive, 0.0);
    s21_with_carrier(sys, wg, drive, r0, omega)
}

fn s21_with_carrier(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    r0: Complex64,
    omega: f64,
) -> Complex64 {
    let rp = reflection_coefficient(sys, wg, drive, omega);
    let rm = reflection_coefficient(sys, wg, drive, -omega);
    0.5 * ((Complex64::new(1.0, 1.0)) * r0.conj() * rp
        + (Complex64::new(1.0, -1.0)) * r0 * rm.conj())
}

/// Two-tone response sampled over a probe-detuning grid.
pub fn s21_spectrum(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    grid: &[f64],
) -> Result<SpectrumGrid> {
    let r0 = reflection_coefficient(sys, wg, drive, 0.0);
    let values: Vec<Complex64> = grid
        .par_iter()
        .map(|&w| s21_with_carrier(sys, wg, drive, r0, w))
        .collect();
    SpectrumGrid::new(grid.to_vec(), SpectrumValues::Complex(values), SpectrumKind::CoherentS21)
}

/// LU-factors the probed matrix and rejects numerically singular systems,
/// reporting the probe frequency and a condition estimate from the ratio of
/// extreme `U` pivots.
fn checked_lu(
    a: DMatrix<Complex64>,
    omega: f64,
) -> Result<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>> {
    let dim = a.nrows();
    let lu = a.lu();
    let u = lu.u();
    let mut max_p = 0.0_f64;
    let mut min_p = f64::INFINITY;
    for j in 0..dim {
        let p = u[(j, j)].norm();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
    }
    let condition = if min_p > 0.0 { max_p / min_p } else { f64::INFINITY };
    if min_p <= dim as f64 * f64::EPSILON * max_p {
        return Err(Error::SingularSolve { omega, condition });
    }
    Ok(lu)
}

/// Solves `(M + i(omega_m - omega)) x = e_row`. Because the matrix equals its
/// transpose, `x` is simultaneously row `row` of the resolvent.
fn resolvent_row(
    m: &DMatrix<Complex64>,
    omega_m: f64,
    omega: f64,
    row: usize,
) -> Result<Vec<Complex64>> {
    let dim = m.nrows();
    let lu = checked_lu(probed_matrix(m, omega_m, omega), omega)?;
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(dim);
    rhs[row] = Complex64::from(1.0);
    let x = lu.solve(&rhs).ok_or(Error::SingularSolve {
        omega,
        condition: f64::INFINITY,
    })?;
    Ok(x.iter().copied().collect())
}

/// Full input-output Green matrix at probe detuning `omega`:
/// `G = 1 - K_out (M + i(omega_m - omega))^-1 K_in`, with `K_out` carrying
/// the optical port only. Row 0 is the detected output; its first entry
/// equals the reflection coefficient.
pub fn io_green_function(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    omega: f64,
) -> Result<DMatrix<Complex64>> {
    let m = build_dynamical_matrix(sys, wg, drive)?;
    let dim = m.nrows();
    let lu = checked_lu(probed_matrix(&m, sys.omega_m(), omega), omega)?;
    let resolvent = lu.try_inverse().ok_or(Error::SingularSolve {
        omega,
        condition: f64::INFINITY,
    })?;
    let rates = input_rates(sys, wg);
    let sqrt_kappa_e = sys.kappa_e().sqrt();
    let mut g = DMatrix::<Complex64>::identity(dim, dim);
    for j in 0..dim {
        g[(0, j)] -= Complex64::from(sqrt_kappa_e) * resolvent[(0, j)] * Complex64::from(rates[j]);
    }
    Ok(g)
}

/// Detected-output row of the Green matrix (`G[0, :]`) computed with a single
/// solve per frequency.
fn output_green_row(
    m: &DMatrix<Complex64>,
    rates: &[f64],
    omega_m: f64,
    omega: f64,
) -> Result<Vec<Complex64>> {
    let x = resolvent_row(m, omega_m, omega, 0)?;
    let sqrt_kappa_e = rates[0];
    Ok(x.iter()
        .zip(rates)
        .enumerate()
        .map(|(j, (xi, rj))| {
            let direct = if j == 0 { Complex64::from(1.0) } else { Complex64::from(0.0) };
            direct - Complex64::from(sqrt_kappa_e) * xi * Complex64::from(*rj)
        })
        .collect())
}

/// Thermal photon-flux spectral density of the detected output over the
/// probe-detuning grid:
/// `S(omega) = sum_j n_j |G[0, j]|^2 + floor`, summed over the mechanical
/// input channels (localized bath then each waveguide bath).
pub fn thermal_output_spectrum(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    baths: &BathOccupancies,
    grid: &[f64],
) -> Result<SpectrumGrid> {
    if baths.n_wg().len() != wg.len() {
        return Err(Error::DimensionMismatch {
            context: "thermal_output_spectrum baths",
            expected: wg.len(),
            got: baths.n_wg().len(),
        });
    }
    let m = build_dynamical_matrix(sys, wg, drive)?;
    let rates = input_rates(sys, wg);
    let omega_m = sys.omega_m();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&w| -> Result<f64> {
            let row = output_green_row(&m, &rates, omega_m, w)?;
            let mut s = baths.n_local() * row[1].norm_sqr();
            for (k, n_k) in baths.n_wg().iter().enumerate() {
                s += n_k * row[2 + k].norm_sqr();
            }
            Ok(s + baths.floor())
        })
        .collect::<Result<Vec<f64>>>()?;
    SpectrumGrid::new(grid.to_vec(), SpectrumValues::Real(values), SpectrumKind::ThermalPsd)
}

/// Per-channel output gains `|G[0, j]|^2` of the mechanical input channels
/// (localized bath first, then each waveguide bath), one row per grid point.
/// The thermal output spectrum is the occupancy-weighted sum of these columns
/// plus the detection floor, so they double as a least-squares basis for bath
/// thermometry.
pub fn output_noise_weights(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let m = build_dynamical_matrix(sys, wg, drive)?;
    let rates = input_rates(sys, wg);
    let omega_m = sys.omega_m();
    grid.par_iter()
        .map(|&w| -> Result<Vec<f64>> {
            let row = output_green_row(&m, &rates, omega_m, w)?;
            Ok(row[1..].iter().map(|g| g.norm_sqr()).collect())
        })
        .collect()
}

/// Which internal mode a displacement spectrum targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InternalMode {
    Localized,
    /// Index into the sorted waveguide mode set.
    Waveguide(usize),
}

/// Displacement-like spectral density of one internal mode, built from the
/// internal Green function `(M + i(omega_m - omega))^-1 K_in` and summed over
/// the mechanical input channels.
pub fn internal_mode_spectrum(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    baths: &BathOccupancies,
    target: InternalMode,
    grid: &[f64],
) -> Result<SpectrumGrid> {
    if baths.n_wg().len() != wg.len() {
        return Err(Error::DimensionMismatch {
            context: "internal_mode_spectrum baths",
            expected: wg.len(),
            got: baths.n_wg().len(),
        });
    }
    let row = match target {
        InternalMode::Localized => 1,
        InternalMode::Waveguide(k) => {
            if k >= wg.len() {
                return Err(Error::invalid("target", format!("waveguide index {k} out of range (N_wg = {})", wg.len())));
            }
            2 + k
        }
    };
    let m = build_dynamical_matrix(sys, wg, drive)?;
    let rates = input_rates(sys, wg);
    let omega_m = sys.omega_m();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&w| -> Result<f64> {
            let x = resolvent_row(&m, omega_m, w, row)?;
            let mut s = baths.n_local() * (x[1] * Complex64::from(rates[1])).norm_sqr();
            for (k, n_k) in baths.n_wg().iter().enumerate() {
                s += n_k * (x[2 + k] * Complex64::from(rates[2 + k])).norm_sqr();
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?;
    SpectrumGrid::new(grid.to_vec(), SpectrumValues::Real(values), SpectrumKind::InternalPsd)
}

/// Occupancy integral of a real spectrum with a truncation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyEstimate {
    /// `(1/2pi) integral S(omega) d omega` by the trapezoid rule.
    pub value: f64,
    /// Set when an edge sample exceeds 1e-3 of the spectrum peak, i.e. the
    /// grid visibly truncates the lineshape.
    pub grid_truncation: bool,
}

/// Integrates a real spectrum into an occupancy estimate.
pub fn occupancy_from_spectrum(spectrum: &SpectrumGrid) -> Result<OccupancyEstimate> {
    let values = spectrum.real_values().ok_or(Error::invalid(
        "spectrum",
        "occupancy integral needs a real-valued spectrum",
    ))?;
    if values.len() < 2 {
        return Err(Error::invalid("spectrum", "need at least 2 samples"));
    }
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "spectrum values", index: idx });
    }
    let omega = spectrum.omega();
    let mut integral = 0.0;
    for i in 0..values.len() - 1 {
        integral += 0.5 * (values[i] + values[i + 1]) * (omega[i + 1] - omega[i]);
    }
    let peak = values.iter().cloned().fold(f64::MIN, f64::max);
    let edge = values[0].max(values[values.len() - 1]);
    let grid_truncation = peak > 0.0 && edge > 1.0e-3 * peak;
    Ok(OccupancyEstimate {
        value: integral / crate::TWO_PI,
        grid_truncation,
    })
}
