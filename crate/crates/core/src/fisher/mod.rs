//! Quantum and classical Fisher information for conventional measurements.
//!
//! The phase generator is Jz, so the quantum Fisher information of a pure
//! probe is 4 Var(Jz); for amplitude-symmetric probes `<Jz> = 0` and the
//! folded closed form `8 sum_j sum_{m>=0} |C_{j,m}|^2 m^2` applies. Sector-
//! block mixtures (each block pure, blocks preserved by the phase shift)
//! contribute weight-averaged block values.

mod distribution;
mod husimi;

use std::fmt;

use crate::error::{Error, Result};
use crate::states::{MixedSectorState, SectoredState, SYMMETRY_TOL};

pub use distribution::{
    outcome_distribution, Outcome, OutcomeDistribution, OutcomeEntry,
    DEAD_OUTCOME_DERIVATIVE_TOL, DERIVATIVE_SUM_TOL, DISTRIBUTION_NORM_TOL, PROBABILITY_FLOOR,
};
pub use husimi::{husimi, HusimiGrid, HusimiMap};

/// Slack allowed on the information inequality cfi <= qfi.
pub const QCRB_SLACK: f64 = 1e-8;
/// Relative tolerance used when classifying optimality over the phase grid.
pub const OPTIMALITY_REL_TOL: f64 = 1e-6;
/// Default phase-grid resolution on [0, pi].
pub const DEFAULT_GRID_POINTS: usize = 181;
/// Offsets used for the endpoint-limit Richardson cross-check.
pub const LIMIT_PROBE_OFFSETS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// Relative agreement demanded between the closed-form endpoint limit and
/// its Richardson extrapolation.
pub const LIMIT_CROSS_CHECK_REL_TOL: f64 = 1e-4;

/// The conventional measurement choices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measurement {
    /// Two-output-port particle count (n_c, n_d).
    Top,
    /// Single-output-port particle count n_c.
    Sop,
    /// Population difference (Jz projection), definite particle number only.
    Pd,
    /// Population difference blurred by a Gaussian detection resolution.
    NoisyPd { sigma: f64 },
}

impl Measurement {
    /// Noisy population difference with resolution sigma > 0.
    pub fn noisy_pd(sigma: f64) -> Result<Measurement> {
        if sigma.is_nan() || sigma <= 0.0 || sigma.is_infinite() {
            return Err(Error::invalid(format!(
                "detection resolution must be positive and finite, got {sigma}"
            )));
        }
        Ok(Measurement::NoisyPd { sigma })
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Measurement::NoisyPd { sigma } => *sigma,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measurement::Top => write!(f, "TOP"),
            Measurement::Sop => write!(f, "SOP"),
            Measurement::Pd => write!(f, "PD"),
            Measurement::NoisyPd { .. } => write!(f, "NoisyPD"),
        }
    }
}

/// A probe handed to the information engines: pure or sector-block mixed.
#[derive(Clone, Copy)]
pub enum Probe<'a> {
    Pure(&'a SectoredState),
    Mixed(&'a MixedSectorState),
}

impl<'a> From<&'a SectoredState> for Probe<'a> {
    fn from(state: &'a SectoredState) -> Self {
        Probe::Pure(state)
    }
}

impl<'a> From<&'a MixedSectorState> for Probe<'a> {
    fn from(state: &'a MixedSectorState) -> Self {
        Probe::Mixed(state)
    }
}

/// (weight, sector, amplitudes, normalized?) per block.
fn blocks<'a>(
    probe: &Probe<'a>,
) -> Vec<(f64, crate::spin::Sector, &'a nalgebra::DVector<num_complex::Complex64>)> {
    match probe {
        Probe::Pure(state) => state
            .sectors()
            .iter()
            .map(|p| (1.0, p.sector(), p.amplitudes()))
            .collect(),
        Probe::Mixed(mixed) => mixed
            .components()
            .iter()
            .map(|c| (c.weight(), c.state().sector(), c.state().amplitudes()))
            .collect(),
    }
}

/// The folded QFI form needs |C_{j,m}| = |C_{j,-m}| per block, which already
/// forces <Jz> = 0. This is weaker than the amplitude symmetry used by the
/// state classifier: probes like the beam-split twin Fock state carry an
/// alternating sign pattern yet still satisfy it.
fn magnitudes_symmetric(probe: &Probe<'_>) -> bool {
    blocks(probe).iter().all(|(_, _, amps)| {
        let dim = amps.len();
        (0..dim).all(|i| (amps[i].norm() - amps[dim - 1 - i].norm()).abs() <= SYMMETRY_TOL)
    })
}

/// Quantum Fisher information of a magnitude-symmetric probe: the folded sum
/// `8 sum_j sum_{m >= 0} |C_{j,m}|^2 m^2` (weight-averaged over mixture
/// blocks). Errors when some |C_{j,m}| differs from |C_{j,-m}|; use
/// [`qfi_variance`] there.
pub fn qfi<'a>(probe: impl Into<Probe<'a>>) -> Result<f64> {
    let probe = probe.into();
    if !magnitudes_symmetric(&probe) {
        return Err(Error::AsymmetricState);
    }
    let mut total = 0.0;
    for (weight, sector, amps) in blocks(&probe) {
        let mut folded = 0.0;
        for k in 0..sector.dim() {
            let tm = sector.twice_m(k);
            if tm >= 0 {
                let m = tm as f64 / 2.0;
                folded += amps[k].norm_sqr() * m * m;
            }
        }
        total += weight * 8.0 * folded;
    }
    Ok(total)
}

/// Variance form of the quantum Fisher information, valid for any probe:
/// 4 Var(Jz) for a pure state, weight-averaged block variances for a sector
/// mixture. Coincides with [`qfi`] on symmetric probes.
pub fn qfi_variance<'a>(probe: impl Into<Probe<'a>>) -> f64 {
    let probe = probe.into();
    match probe {
        Probe::Pure(state) => {
            let mut first = 0.0;
            let mut second = 0.0;
            for part in state.sectors() {
                for k in 0..part.sector().dim() {
                    let m = part.sector().m(k);
                    let w = part.amplitudes()[k].norm_sqr();
                    first += w * m;
                    second += w * m * m;
                }
            }
            4.0 * (second - first * first)
        }
        Probe::Mixed(mixed) => mixed
            .components()
            .iter()
            .map(|c| {
                let mut first = 0.0;
                let mut second = 0.0;
                for k in 0..c.state().sector().dim() {
                    let m = c.state().sector().m(k);
                    let w = c.state().amplitudes()[k].norm_sqr();
                    first += w * m;
                    second += w * m * m;
                }
                c.weight() * 4.0 * (second - first * first)
            })
            .sum(),
    }
}

/// Classical and quantum Fisher information at one phase.
#[derive(Clone, Copy, Debug)]
pub struct FisherReport {
    pub qfi: f64,
    pub cfi: f64,
    pub measurement: Measurement,
    pub theta: f64,
}

/// Classical Fisher information of the measurement at phase theta, bundled
/// with the probe's QFI. The information inequality is re-validated within
/// [`QCRB_SLACK`].
pub fn cfi<'a>(
    probe: impl Into<Probe<'a>>,
    theta: f64,
    measurement: &Measurement,
) -> Result<FisherReport> {
    let probe = probe.into();
    let dist = outcome_distribution(probe, theta, measurement)?;
    let cfi_value = dist.fisher_sum()?;
    let qfi_value = qfi_variance(probe);
    if cfi_value > qfi_value + QCRB_SLACK {
        return Err(Error::QcrbViolated {
            cfi: cfi_value,
            qfi: qfi_value,
        });
    }
    Ok(FisherReport {
        qfi: qfi_value,
        cfi: cfi_value,
        measurement: *measurement,
        theta,
    })
}

/// Endpoints of the principal phase interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseEndpoint {
    Zero,
    Pi,
}

impl PhaseEndpoint {
    fn offset_theta(self, offset: f64) -> f64 {
        match self {
            PhaseEndpoint::Zero => offset,
            PhaseEndpoint::Pi => std::f64::consts::PI - offset,
        }
    }
}

/// Classical Fisher information in the limit theta -> 0 or pi for the
/// counting measurements on symmetric probes, where it equals the QFI.
///
/// The value is the closed form `8 sum_j sum_nu |C_{j,nu}|^2 nu^2`; it is
/// cross-checked by Richardson extrapolation of [`cfi`] evaluated at three
/// offsets from the endpoint, and the call fails if the two disagree (for
/// example for number-parity-mixed superpositions under single-port counting,
/// where the limit genuinely falls short of the QFI).
pub fn cfi_limit<'a>(
    probe: impl Into<Probe<'a>>,
    endpoint: PhaseEndpoint,
    measurement: &Measurement,
) -> Result<f64> {
    let probe = probe.into();
    match measurement {
        Measurement::NoisyPd { .. } => {
            return Err(Error::UnsupportedLimit {
                measurement: measurement.to_string(),
            })
        }
        Measurement::Pd => {
            let sectors = blocks(&probe).len();
            if sectors != 1 {
                return Err(Error::PdOnMultiSector { sectors });
            }
        }
        Measurement::Top | Measurement::Sop => {}
    }
    let closed_form = qfi(probe)?;
    // Richardson extrapolation assuming an even error series in the offset.
    let mut samples = [0.0; 3];
    for (slot, offset) in samples.iter_mut().zip(LIMIT_PROBE_OFFSETS) {
        *slot = cfi(probe, endpoint.offset_theta(offset), measurement)?.cfi;
    }
    let b1 = (4.0 * samples[1] - samples[0]) / 3.0;
    let b2 = (4.0 * samples[2] - samples[1]) / 3.0;
    let extrapolated = (16.0 * b2 - b1) / 15.0;
    let scale = closed_form.abs().max(1e-300);
    if ((extrapolated - closed_form) / scale).abs() > LIMIT_CROSS_CHECK_REL_TOL {
        return Err(Error::LimitCrossCheck {
            closed_form,
            extrapolated,
        });
    }
    Ok(closed_form)
}

/// Single-port versus two-port information at one phase.
#[derive(Clone, Copy, Debug)]
pub struct CauchySchwarzReport {
    pub sop_cfi: f64,
    pub top_cfi: f64,
    /// top_cfi - sop_cfi >= 0; vanishes exactly when the per-outcome
    /// derivative-to-probability ratio is constant within every single-port
    /// outcome group, which happens in the limits theta -> 0 and pi.
    pub equality_gap: f64,
}

/// Compares single-port and two-port information at one phase.
pub fn check_cauchy_schwarz<'a>(
    probe: impl Into<Probe<'a>>,
    theta: f64,
) -> Result<CauchySchwarzReport> {
    let probe = probe.into();
    let top = cfi(probe, theta, &Measurement::Top)?.cfi;
    let sop = cfi(probe, theta, &Measurement::Sop)?.cfi;
    Ok(CauchySchwarzReport {
        sop_cfi: sop,
        top_cfi: top,
        equality_gap: top - sop,
    })
}

/// Phase interval over which a measurement attains the quantum bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseCondition {
    /// Attains the bound on the whole interval [0, pi].
    WholeInterval,
    /// Attains the bound only in the limits theta -> 0 and pi.
    EndpointsOnly,
    NotOptimal,
    /// Measurement unavailable for this probe (multi-sector PD).
    Inapplicable,
}

impl fmt::Display for PhaseCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseCondition::WholeInterval => write!(f, "0<=theta<=pi"),
            PhaseCondition::EndpointsOnly => write!(f, "theta->0,pi"),
            PhaseCondition::NotOptimal => write!(f, "none"),
            PhaseCondition::Inapplicable => write!(f, "inapplicable"),
        }
    }
}

/// One row of the optimality classification.
#[derive(Clone, Debug)]
pub struct OptimalityRow {
    pub measurement: Measurement,
    pub phase_condition: PhaseCondition,
    pub attains_qcrb: bool,
    pub remark: Option<String>,
}

/// Classifies each counting measurement as whole-interval optimal, endpoint
/// optimal, or not optimal for the given symmetric probe, by scanning the
/// interior of a uniform phase grid and taking closed-form endpoint limits.
pub fn optimality_table<'a>(probe: impl Into<Probe<'a>>) -> Result<Vec<OptimalityRow>> {
    optimality_table_with(probe, DEFAULT_GRID_POINTS, OPTIMALITY_REL_TOL)
}

/// [`optimality_table`] with explicit grid resolution and relative tolerance.
pub fn optimality_table_with<'a>(
    probe: impl Into<Probe<'a>>,
    grid_points: usize,
    rel_tol: f64,
) -> Result<Vec<OptimalityRow>> {
    let probe = probe.into();
    if grid_points < 3 {
        return Err(Error::invalid("phase grid needs at least 3 points"));
    }
    let qfi_value = qfi(probe)?;
    let close = |value: f64| (value - qfi_value).abs() <= rel_tol * qfi_value;
    let single_sector = blocks(&probe).len() == 1;
    let mut rows = Vec::with_capacity(3);
    for measurement in [Measurement::Top, Measurement::Sop, Measurement::Pd] {
        if matches!(measurement, Measurement::Pd) && !single_sector {
            rows.push(OptimalityRow {
                measurement,
                phase_condition: PhaseCondition::Inapplicable,
                attains_qcrb: false,
                remark: Some("requires a definite particle number".into()),
            });
            continue;
        }
        let mut interior_optimal = true;
        for i in 1..grid_points - 1 {
            let theta = std::f64::consts::PI * i as f64 / (grid_points - 1) as f64;
            let report = cfi(probe, theta, &measurement)?;
            if !close(report.cfi) {
                interior_optimal = false;
                break;
            }
        }
        let endpoint_optimal = [PhaseEndpoint::Zero, PhaseEndpoint::Pi]
            .into_iter()
            .all(|endpoint| match cfi_limit(probe, endpoint, &measurement) {
                Ok(value) => close(value),
                Err(Error::LimitCrossCheck { .. }) => false,
                // other errors are programming/contract errors worth surfacing,
                // but classification treats them as non-optimal
                Err(_) => false,
            });
        let phase_condition = if interior_optimal && endpoint_optimal {
            PhaseCondition::WholeInterval
        } else if endpoint_optimal {
            PhaseCondition::EndpointsOnly
        } else {
            PhaseCondition::NotOptimal
        };
        let remark = if matches!(measurement, Measurement::Pd) {
            Some("requires a definite particle number".into())
        } else {
            None
        };
        rows.push(OptimalityRow {
            measurement,
            phase_condition,
            attains_qcrb: phase_condition != PhaseCondition::NotOptimal,
            remark,
        });
    }
    Ok(rows)
}

/// Phase uncertainty and decibel gain over the shot-noise limit.
#[derive(Clone, Copy, Debug)]
pub struct Sensitivity {
    pub delta_theta: f64,
    pub gain_db: f64,
}

/// Converts Fisher information into the estimator bound
/// `delta_theta = 1/sqrt(nu F)` and the gain
/// `g = -10 log10(delta_theta sqrt(nu N))` in decibels.
pub fn sensitivity(fisher: f64, nu: u64, n: u32) -> Result<Sensitivity> {
    if fisher.is_nan() || fisher <= 0.0 {
        return Err(Error::invalid(format!(
            "fisher information must be positive, got {fisher}"
        )));
    }
    if nu < 1 {
        return Err(Error::invalid("measurement count must be at least 1"));
    }
    let delta_theta = 1.0 / (nu as f64 * fisher).sqrt();
    let gain_db = -10.0 * (delta_theta * (nu as f64 * n as f64).sqrt()).log10();
    Ok(Sensitivity { delta_theta, gain_db })
}

/// One row of a Fisher scan, ready for CSV serialization.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ScanRecord {
    pub theta: f64,
    pub measurement: String,
    pub sigma: f64,
    pub n: u32,
    pub qfi: f64,
    pub cfi: f64,
    /// delta_theta sqrt(nu N) = sqrt(N / cfi); independent of nu.
    pub delta_theta_normalized: f64,
    pub gain_db: f64,
}

impl ScanRecord {
    pub const CSV_HEADER: &'static str =
        "theta,measurement,sigma,N,qfi,cfi,delta_theta_normalized,gain_db";

    pub fn from_report(report: &FisherReport, n: u32) -> ScanRecord {
        let normalized = (n as f64 / report.cfi).sqrt();
        ScanRecord {
            theta: report.theta,
            measurement: report.measurement.to_string(),
            sigma: report.measurement.sigma(),
            n,
            qfi: report.qfi,
            cfi: report.cfi,
            delta_theta_normalized: normalized,
            gain_db: -10.0 * normalized.log10(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.theta,
            self.measurement,
            self.sigma,
            self.n,
            self.qfi,
            self.cfi,
            self.delta_theta_normalized,
            self.gain_db
        )
    }
}
