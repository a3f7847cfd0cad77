//! Eigenvalue reports, sympathetic cooling, cooperativity and waveguide
//! propagation metrics.
//!
//! The driven system's complex eigenvalues `lambda` map to mode frequencies
//! `Im(lambda)` (relative to `omega_m`) and total linewidths `2 Re(lambda)`.
//! Comparing a driven report with the zero-power report of the same system
//! yields per-mode sympathetic rates and cooperativities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::response::build_dynamical_matrix;
use crate::system::{DriveCondition, LocalizedTransducer, WaveguideModeSet};

/// How eigenvalue matching treats near-ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPolicy {
    /// Raise [`Error::MatchingAmbiguity`] when two candidates sit within
    /// 1e-3 of each other in the matching metric.
    Strict,
    /// Keep the order-preserving assignment even when it is nearly tied.
    ForceNearest,
}

/// One mechanical eigenvalue at a drive point, matched to its zero-power
/// counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRecord {
    /// `None` for the localized mode, `Some(k)` for waveguide mode `k`
    /// (index into the sorted mode set).
    pub waveguide_index: Option<usize>,
    /// `Im(lambda)`: mode frequency relative to `omega_m` (rad/s).
    pub omega_rel: f64,
    /// `2 Re(lambda)`: total linewidth at this drive (rad/s).
    pub gamma_total: f64,
    /// Zero-power total linewidth of the matched eigenvalue (rad/s).
    pub gamma_zero: f64,
    /// Sympathetic rate `gamma_total - gamma_zero` (rad/s). Signed: a
    /// negative value means the drive narrowed this mode.
    pub gamma_s: f64,
    /// `gamma_s / gamma_zero`.
    pub cooperativity: f64,
}

/// Eigenvalue report of one system at one drive power.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub n_c: f64,
    /// Optical eigenvalue, identified by `Re(lambda) ~ kappa/2`.
    pub optical: Complex64,
    /// Mechanical records sorted by `omega_rel`.
    pub modes: Vec<ModeRecord>,
}

impl ModeReport {
    /// Record of the localized mode.
    #[must_use]
    pub fn localized(&self) -> Option<&ModeRecord> {
        self.modes.iter().find(|m| m.waveguide_index.is_none())
    }

    /// Record of waveguide mode `k`.
    #[must_use]
    pub fn waveguide(&self, k: usize) -> Option<&ModeRecord> {
        self.modes.iter().find(|m| m.waveguide_index == Some(k))
    }
}

fn eigenvalues_of(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
) -> Result<Vec<Complex64>> {
    let m = build_dynamical_matrix(sys, wg, drive)?;
    let schur = m.schur();
    let evs = schur.eigenvalues().ok_or(Error::NoConvergence {
        routine: "complex Schur",
        detail: "eigenvalue extraction failed".into(),
    })?;
    Ok(evs.iter().copied().collect())
}

/// Splits off the eigenvalue closest to `Re(lambda) = kappa/2` as optical and
/// returns the rest sorted by imaginary part.
fn split_optical(
    evs: Vec<Complex64>,
    kappa: f64,
    policy: MatchPolicy,
) -> Result<(Complex64, Vec<Complex64>)> {
    let target = 0.5 * kappa;
    let mut scored: Vec<(f64, Complex64)> =
        evs.into_iter().map(|l| ((l.re - target).abs(), l)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    if policy == MatchPolicy::Strict && scored.len() > 1 {
        let (d0, d1) = (scored[0].0, scored[1].0);
        if (d1 - d0) <= 1.0e-3 * d1.max(f64::EPSILON * kappa) {
            return Err(Error::MatchingAmbiguity {
                target,
                first: scored[0].1.re,
                second: scored[1].1.re,
            });
        }
    }
    let optical = scored[0].1;
    let mut mech: Vec<Complex64> = scored.into_iter().skip(1).map(|(_, l)| l).collect();
    mech.sort_by(|a, b| a.im.total_cmp(&b.im));
    Ok((optical, mech))
}

/// Labels zero-power mechanical eigenvalues against the bare mode list.
///
/// Both sequences are sorted, so the order-preserving pairing is the nearest
/// assignment; when the localized mode is strongly mixed with an adjacent
/// waveguide eigenvalue, the broader branch keeps the localized label.
fn label_zero_power(
    mech_sorted: &[Complex64],
    wg: &WaveguideModeSet,
    omega_m: f64,
) -> Vec<Option<usize>> {
    let mut bare: Vec<(f64, Option<usize>)> = vec![(0.0, None)];
    for (k, m) in wg.modes().iter().enumerate() {
        bare.push((m.omega - omega_m, Some(k)));
    }
    bare.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut labels: Vec<Option<usize>> = bare.iter().map(|(_, l)| *l).collect();

    let loc = labels.iter().position(|l| l.is_none()).expect("localized label present");
    for nb in [loc.wrapping_sub(1), loc + 1] {
        if nb >= labels.len() || labels[nb].is_none() {
            continue;
        }
        let a = mech_sorted[loc];
        let b = mech_sorted[nb];
        let mixed = (a.im - b.im).abs() < a.re + b.re;
        if mixed && b.re > a.re {
            labels.swap(loc, nb);
            break;
        }
    }
    labels
}

/// Order-preserving match of driven onto zero-power eigenvalues (both sorted
/// by imaginary part), with a near-tie ambiguity check on the |Im| distance
/// metric.
fn match_driven_to_zero(
    driven: &[Complex64],
    zero: &[Complex64],
    policy: MatchPolicy,
) -> Result<()> {
    if policy == MatchPolicy::ForceNearest {
        return Ok(());
    }
    for (i, l) in driven.iter().enumerate() {
        let d_self = (l.im - zero[i].im).abs();
        let mut d_alt = f64::INFINITY;
        let mut alt = None;
        for (j, z) in zero.iter().enumerate() {
            if j == i {
                continue;
            }
            let d = (l.im - z.im).abs();
            if d < d_alt {
                d_alt = d;
                alt = Some(z);
            }
        }
        if let Some(alt) = alt {
            if (d_alt - d_self).abs() <= 1.0e-3 * d_alt.max(d_self).max(f64::EPSILON) {
                return Err(Error::MatchingAmbiguity {
                    target: l.im,
                    first: zero[i].im,
                    second: alt.im,
                });
            }
        }
    }
    Ok(())
}

/// Full eigenvalue report with strict ambiguity handling.
pub fn eigen_report(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
) -> Result<ModeReport> {
    eigen_report_with(sys, wg, drive, MatchPolicy::Strict)
}

/// Eigenvalue report comparing the driven system against its own zero-power
/// limit. At `n_c = 0` the comparison is the identity, so sympathetic rates
/// and cooperativities are exactly zero.
pub fn eigen_report_with(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    policy: MatchPolicy,
) -> Result<ModeReport> {
    let zero_drive = DriveCondition::new(0.0)?;
    let evs_zero = eigenvalues_of(sys, wg, &zero_drive)?;
    let (optical_zero, mech_zero) = split_optical(evs_zero, sys.kappa(), policy)?;
    let labels = label_zero_power(&mech_zero, wg, sys.omega_m());

    let (optical, mech_driven) = if drive.n_c() == 0.0 {
        (optical_zero, mech_zero.clone())
    } else {
        let evs = eigenvalues_of(sys, wg, drive)?;
        let (optical, mech) = split_optical(evs, sys.kappa(), policy)?;
        if mech.len() != mech_zero.len() {
            return Err(Error::DimensionMismatch {
                context: "eigen_report mechanical branch count",
                expected: mech_zero.len(),
                got: mech.len(),
            });
        }
        match_driven_to_zero(&mech, &mech_zero, policy)?;
        (optical, mech)
    };

    let at_zero_power = drive.n_c() == 0.0;
    let mut modes: Vec<ModeRecord> = mech_driven
        .iter()
        .zip(mech_zero.iter())
        .zip(labels.iter())
        .map(|((l, l0), label)| {
            let gamma_total = 2.0 * l.re;
            let gamma_zero = 2.0 * l0.re;
            let gamma_s = if at_zero_power { 0.0 } else { gamma_total - gamma_zero };
            let cooperativity = if at_zero_power { 0.0 } else { gamma_s / gamma_zero };
            ModeRecord {
                waveguide_index: *label,
                omega_rel: l.im,
                gamma_total,
                gamma_zero,
                gamma_s,
                cooperativity,
            }
        })
        .collect();
    modes.sort_by(|a, b| a.omega_rel.total_cmp(&b.omega_rel));

    Ok(ModeReport {
        n_c: drive.n_c(),
        optical,
        modes,
    })
}

/// Waveguide cooperativity `C_k = gamma_k_s / gamma_k(n_c = 0)` from the
/// eigenvalue report.
pub fn cooperativity(
    sys: &LocalizedTransducer,
    wg: &WaveguideModeSet,
    drive: &DriveCondition,
    k: usize,
) -> Result<f64> {
    let report = eigen_report(sys, wg, drive)?;
    report
        .waveguide(k)
        .map(|m| m.cooperativity)
        .ok_or_else(|| Error::invalid("k", format!("waveguide index {k} out of range (N_wg = {})", wg.len())))
}

/// Weak-coupling sympathetic cooling rate
/// `gamma_k_s ~ f_k^2 gamma_om / (delta_k^2 + gamma_om^2)`.
pub fn weak_coupling_cooling(f_k: f64, delta_k: f64, gamma_om: f64) -> Result<f64> {
    if !(f_k.is_finite() && delta_k.is_finite()) || f_k < 0.0 {
        return Err(Error::invalid("f_k", "must be finite, f_k >= 0"));
    }
    if !gamma_om.is_finite() || gamma_om <= 0.0 {
        return Err(Error::invalid("gamma_om", format!("must be finite and > 0, got {gamma_om}")));
    }
    Ok(f_k * f_k * gamma_om / (delta_k * delta_k + gamma_om * gamma_om))
}

/// Per-mode coupling implied by the mode spacing and the end-coupling rate:
/// `f = sqrt(fsr * gamma_e / 2 pi)`.
pub fn coupling_from_fsr(fsr: f64, gamma_e: f64) -> Result<f64> {
    if !fsr.is_finite() || fsr <= 0.0 {
        return Err(Error::invalid("fsr", format!("must be finite and > 0, got {fsr}")));
    }
    if !gamma_e.is_finite() || gamma_e <= 0.0 {
        return Err(Error::invalid("gamma_e", format!("must be finite and > 0, got {gamma_e}")));
    }
    Ok((fsr * gamma_e / crate::TWO_PI).sqrt())
}

/// Propagation figures of merit for a waveguide of length `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationMetrics {
    /// Standing-wave mode spacing `pi v_g / L` (rad/s).
    pub fsr: f64,
    /// Round-trip time `2 L / v_g` (s).
    pub round_trip: f64,
    /// Cold propagation loss `10 log10(e) gamma_k_i / v_g`, dB/cm.
    pub alpha_m_db_per_cm: f64,
    /// Thermal-decoherence loss `(n_i + 1)` times larger, dB/cm.
    pub alpha_m_th_db_per_cm: f64,
    /// 3 dB length against cold loss (m).
    pub l3db_cold: f64,
    /// 3 dB length against thermal decoherence (m).
    pub l3db_thermal: f64,
    /// One-way 3 dB length against static dephasing,
    /// `v_g sqrt(2 ln 2) / sigma` (m); present when `sigma` was given.
    pub l3db_dephasing: Option<f64>,
}

/// Computes [`PropagationMetrics`] from group velocity (m/s), length (m),
/// per-mode intrinsic damping (rad/s), intrinsic bath occupancy, and an
/// optional static frequency-disorder scale `sigma` (rad/s).
pub fn propagation_metrics(
    v_g: f64,
    length: f64,
    gamma_k_i: f64,
    n_i: f64,
    sigma: Option<f64>,
) -> Result<PropagationMetrics> {
    if !v_g.is_finite() || v_g <= 0.0 {
        return Err(Error::invalid("v_g", format!("must be finite and > 0, got {v_g}")));
    }
    if !length.is_finite() || length <= 0.0 {
        return Err(Error::invalid("length", format!("must be finite and > 0, got {length}")));
    }
    if !gamma_k_i.is_finite() || gamma_k_i <= 0.0 {
        return Err(Error::invalid("gamma_k_i", format!("must be finite and > 0, got {gamma_k_i}")));
    }
    if !n_i.is_finite() || n_i < 0.0 {
        return Err(Error::invalid("n_i", format!("must be finite and >= 0, got {n_i}")));
    }
    if let Some(s) = sigma {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {s}")));
        }
    }
    let db_per_neper = 10.0 * std::f64::consts::E.log10();
    let alpha_m_db_per_m = db_per_neper * gamma_k_i / v_g;
    let alpha_m_th_db_per_m = db_per_neper * (n_i + 1.0) * gamma_k_i / v_g;
    Ok(PropagationMetrics {
        fsr: std::f64::consts::PI * v_g / length,
        round_trip: 2.0 * length / v_g,
        alpha_m_db_per_cm: alpha_m_db_per_m / 100.0,
        alpha_m_th_db_per_cm: alpha_m_th_db_per_m / 100.0,
        l3db_cold: 3.0 / alpha_m_db_per_m,
        l3db_thermal: 3.0 / alpha_m_th_db_per_m,
        l3db_dephasing: sigma.map(|s| v_g * (2.0 * std::f64::consts::LN_2).sqrt() / s),
    })
}
