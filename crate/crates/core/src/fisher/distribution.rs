//! Outcome-probability models for the conventional measurements.
//!
//! Probabilities come from direct matrix application of `B^dag U_theta` to
//! the probe amplitudes, sector by sector, with the exact theta-derivative
//! computed alongside from the same amplitudes (`d/dtheta U_theta =
//! -i Jz U_theta`). Single-port counts marginalize the two-port outcomes,
//! population difference requires a definite particle number, and finite
//! detection resolution convolves the population-difference column with a
//! discrete Gaussian.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::interferometer::sector_optics;
use crate::spin::Sector;

use super::{Measurement, Probe};

/// Probabilities below this floor are treated as numerically dead.
pub const PROBABILITY_FLOOR: f64 = 1e-14;
/// Maximum derivative magnitude tolerated on a dead outcome before the
/// evaluation is declared singular.
pub const DEAD_OUTCOME_DERIVATIVE_TOL: f64 = 1e-6;
/// Distribution normalization tolerance.
pub const DISTRIBUTION_NORM_TOL: f64 = 1e-10;
/// Tolerance on the derivative sum, which must vanish.
pub const DERIVATIVE_SUM_TOL: f64 = 1e-8;

/// Label of one measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    /// Particle counts on both output ports.
    Counts { n_c: u32, n_d: u32 },
    /// Particle count on the c output port only.
    CountAtC { n_c: u32 },
    /// Population difference, stored as 2*mu so half-integers stay exact.
    PopulationDiff { twice_mu: i64 },
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Counts { n_c, n_d } => write!(f, "({n_c},{n_d})"),
            Outcome::CountAtC { n_c } => write!(f, "{n_c}"),
            Outcome::PopulationDiff { twice_mu } => {
                if twice_mu % 2 == 0 {
                    write!(f, "{}", twice_mu / 2)
                } else {
                    write!(f, "{twice_mu}/2")
                }
            }
        }
    }
}

/// One outcome with its probability and exact theta-derivative.
#[derive(Clone, Copy, Debug)]
pub struct OutcomeEntry {
    pub outcome: Outcome,
    pub probability: f64,
    pub dprob_dtheta: f64,
}

/// A complete outcome distribution `p(chi | theta)` at a fixed phase.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    theta: f64,
    outcomes: Vec<OutcomeEntry>,
}

impl OutcomeDistribution {
    /// Validates normalization and the vanishing derivative sum; negative
    /// probabilities within the floor are clipped to zero.
    pub fn new(theta: f64, mut outcomes: Vec<OutcomeEntry>) -> Result<Self> {
        for entry in &mut outcomes {
            if entry.probability < 0.0 {
                if entry.probability < -PROBABILITY_FLOOR {
                    return Err(Error::UnnormalizedDistribution {
                        sum: entry.probability,
                    });
                }
                entry.probability = 0.0;
            }
        }
        let sum: f64 = outcomes.iter().map(|e| e.probability).sum();
        if (sum - 1.0).abs() > DISTRIBUTION_NORM_TOL {
            return Err(Error::UnnormalizedDistribution { sum });
        }
        let dsum: f64 = outcomes.iter().map(|e| e.dprob_dtheta).sum();
        if dsum.abs() > DERIVATIVE_SUM_TOL {
            return Err(Error::invalid(format!(
                "derivative sum {dsum:.3e} does not vanish"
            )));
        }
        Ok(OutcomeDistribution { theta, outcomes })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn outcomes(&self) -> &[OutcomeEntry] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Fisher-information sum over live outcomes. Dead outcomes (probability
    /// at or below the floor) contribute nothing but must not carry
    /// derivative mass; if one does, the phase sits on a singular point and
    /// the endpoint limit should be used instead.
    pub fn fisher_sum(&self) -> Result<f64> {
        let mut total = 0.0;
        for entry in &self.outcomes {
            if entry.probability > PROBABILITY_FLOOR {
                total += entry.dprob_dtheta * entry.dprob_dtheta / entry.probability;
            } else if entry.dprob_dtheta.abs() > DEAD_OUTCOME_DERIVATIVE_TOL {
                return Err(Error::SingularTheta {
                    outcome: entry.outcome.to_string(),
                    probability: entry.probability,
                    derivative: entry.dprob_dtheta,
                });
            }
        }
        Ok(total)
    }
}

/// Per-sector signal after the second beam splitter: amplitudes of
/// `B^dag U_theta |psi_j>` and their exact theta-derivatives. The incoming
/// amplitudes may carry a weight scale (mixture weight square root).
struct SectorSignal {
    sector: Sector,
    amplitudes: DVector<C64>,
    derivatives: DVector<C64>,
}

fn sector_signal(sector: Sector, amps: &DVector<C64>, scale: f64, theta: f64) -> SectorSignal {
    let dim = sector.dim();
    let mut shifted = DVector::<C64>::zeros(dim);
    let mut dshifted = DVector::<C64>::zeros(dim);
    for k in 0..dim {
        let m = sector.m(k);
        let u = amps[k] * C64::from_polar(scale, -theta * m);
        shifted[k] = u;
        dshifted[k] = u * C64::new(0.0, -m);
    }
    let optics = sector_optics(sector);
    SectorSignal {
        sector,
        amplitudes: &optics.beam_splitter_dagger * shifted,
        derivatives: &optics.beam_splitter_dagger * dshifted,
    }
}

/// (scale, sector, amplitudes) triples covering both pure and mixed probes;
/// scaled amplitudes carry total weight one.
fn weighted_parts<'a>(
    probe: &'a Probe<'a>,
) -> Vec<(f64, Sector, &'a DVector<C64>)> {
    match probe {
        Probe::Pure(state) => state
            .sectors()
            .iter()
            .map(|p| (1.0, p.sector(), p.amplitudes()))
            .collect(),
        Probe::Mixed(mixed) => mixed
            .components()
            .iter()
            .map(|c| (c.weight().sqrt(), c.state().sector(), c.state().amplitudes()))
            .collect(),
    }
}

fn signals(probe: &Probe<'_>, theta: f64) -> Vec<SectorSignal> {
    weighted_parts(probe)
        .into_iter()
        .map(|(scale, sector, amps)| sector_signal(sector, amps, scale, theta))
        .collect()
}

fn sector_count(probe: &Probe<'_>) -> usize {
    match probe {
        Probe::Pure(state) => state.sectors().len(),
        Probe::Mixed(mixed) => mixed.components().len(),
    }
}

/// Outcome distribution of the probe under the chosen measurement at phase
/// theta, with exact derivatives. Mixed probes contribute probability-
/// weighted sums per outcome.
pub fn outcome_distribution<'a>(
    probe: impl Into<Probe<'a>>,
    theta: f64,
    measurement: &Measurement,
) -> Result<OutcomeDistribution> {
    let probe = probe.into();
    if !theta.is_finite() {
        return Err(Error::invalid("theta must be finite"));
    }
    match measurement {
        Measurement::Top => {
            let mut entries = Vec::new();
            for signal in signals(&probe, theta) {
                let tj = signal.sector.twice_j();
                for k in 0..signal.sector.dim() {
                    let tmu = signal.sector.twice_m(k);
                    let n_c = ((tj as i64 + tmu) / 2) as u32;
                    let n_d = ((tj as i64 - tmu) / 2) as u32;
                    entries.push(OutcomeEntry {
                        outcome: Outcome::Counts { n_c, n_d },
                        probability: signal.amplitudes[k].norm_sqr(),
                        dprob_dtheta: 2.0
                            * (signal.amplitudes[k].conj() * signal.derivatives[k]).re,
                    });
                }
            }
            OutcomeDistribution::new(theta, entries)
        }
        Measurement::Sop => {
            let mut merged: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
            for signal in signals(&probe, theta) {
                let tj = signal.sector.twice_j();
                for k in 0..signal.sector.dim() {
                    let tmu = signal.sector.twice_m(k);
                    let n_c = ((tj as i64 + tmu) / 2) as u32;
                    let slot = merged.entry(n_c).or_insert((0.0, 0.0));
                    slot.0 += signal.amplitudes[k].norm_sqr();
                    slot.1 += 2.0 * (signal.amplitudes[k].conj() * signal.derivatives[k]).re;
                }
            }
            let entries = merged
                .into_iter()
                .map(|(n_c, (probability, dprob_dtheta))| OutcomeEntry {
                    outcome: Outcome::CountAtC { n_c },
                    probability,
                    dprob_dtheta,
                })
                .collect();
            OutcomeDistribution::new(theta, entries)
        }
        Measurement::Pd => {
            let (p, dp, sector) = population_difference_columns(&probe, theta)?;
            let entries = (0..sector.dim())
                .map(|k| OutcomeEntry {
                    outcome: Outcome::PopulationDiff {
                        twice_mu: sector.twice_m(k),
                    },
                    probability: p[k],
                    dprob_dtheta: dp[k],
                })
                .collect();
            OutcomeDistribution::new(theta, entries)
        }
        Measurement::NoisyPd { sigma } => {
            // the variant fields are public; re-validate in case the
            // Measurement::noisy_pd constructor was bypassed
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::invalid(format!(
                    "detection resolution must be positive and finite, got {sigma}"
                )));
            }
            let (p, dp, sector) = population_difference_columns(&probe, theta)?;
            let kernel = GaussianKernel::new(sector, *sigma);
            let (pt, dpt) = kernel.convolve(&p, &dp);
            let entries = (0..kernel.extended_len())
                .map(|t| OutcomeEntry {
                    outcome: Outcome::PopulationDiff {
                        twice_mu: kernel.twice_mu_at(t),
                    },
                    probability: pt[t],
                    dprob_dtheta: dpt[t],
                })
                .collect();
            OutcomeDistribution::new(theta, entries)
        }
    }
}

/// PD probabilities and derivatives for a definite-particle-number probe.
fn population_difference_columns(
    probe: &Probe<'_>,
    theta: f64,
) -> Result<(Vec<f64>, Vec<f64>, Sector)> {
    let sectors = sector_count(probe);
    if sectors != 1 {
        return Err(Error::PdOnMultiSector { sectors });
    }
    let signal = signals(probe, theta).pop().expect("one sector");
    let dim = signal.sector.dim();
    let mut p = vec![0.0; dim];
    let mut dp = vec![0.0; dim];
    for k in 0..dim {
        p[k] = signal.amplitudes[k].norm_sqr();
        dp[k] = 2.0 * (signal.amplitudes[k].conj() * signal.derivatives[k]).re;
    }
    Ok((p, dp, signal.sector))
}

/// Discrete Gaussian detection-resolution kernel on the population-difference
/// lattice, column-normalized over an extended target lattice so probability
/// is conserved exactly. The extension of ceil(6 sigma) counts keeps the
/// per-column truncated mass below 1e-8.
pub(crate) struct GaussianKernel {
    sector: Sector,
    pad: usize,
    /// columns[s][t] = g(target t | source s), each column summing to one
    columns: Vec<Vec<f64>>,
}

impl GaussianKernel {
    pub(crate) fn new(sector: Sector, sigma: f64) -> GaussianKernel {
        let pad = (6.0 * sigma).ceil() as usize;
        let dim = sector.dim();
        let ext = dim + 2 * pad;
        let mut columns = vec![vec![0.0; ext]; dim];
        for (s, col) in columns.iter_mut().enumerate() {
            let mut total = 0.0;
            for (t, slot) in col.iter_mut().enumerate() {
                let d = t as f64 - (s + pad) as f64;
                *slot = (-d * d / (2.0 * sigma * sigma)).exp();
                total += *slot;
            }
            for slot in col.iter_mut() {
                *slot /= total;
            }
        }
        GaussianKernel { sector, pad, columns }
    }

    pub(crate) fn extended_len(&self) -> usize {
        self.sector.dim() + 2 * self.pad
    }

    pub(crate) fn twice_mu_at(&self, t: usize) -> i64 {
        self.sector.twice_m(0) - 2 * self.pad as i64 + 2 * t as i64
    }

    pub(crate) fn convolve(&self, p: &[f64], dp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ext = self.extended_len();
        let mut pt = vec![0.0; ext];
        let mut dpt = vec![0.0; ext];
        for (s, col) in self.columns.iter().enumerate() {
            for t in 0..ext {
                pt[t] += col[t] * p[s];
                dpt[t] += col[t] * dp[s];
            }
        }
        (pt, dpt)
    }
}

