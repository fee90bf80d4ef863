//! Seeded Monte-Carlo simulation of Bayesian phase estimation.
//!
//! A sequence draws `nu` independent outcomes at the true phase, accumulates
//! the log-likelihood over a uniform phase grid (uniform prior), and reads
//! off the posterior maximum and the 68% credible interval grown outward
//! from it. Randomness comes from ChaCha12 streams derived by hashing the
//! base seed with the work-item indices, so sweeps are reproducible cell by
//! cell regardless of scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::fisher::{outcome_distribution, Measurement, OutcomeDistribution, Probe};
use crate::states::SectoredState;

/// Default number of posterior grid points on [0, pi].
pub const DEFAULT_POSTERIOR_POINTS: usize = 2048;
/// Smallest allowed posterior grid.
pub const MIN_POSTERIOR_POINTS: usize = 64;
/// Default credible-interval mass.
pub const DEFAULT_CI_MASS: f64 = 0.68;

/// Uniform grid of candidate phases.
#[derive(Clone, Debug)]
pub struct PhaseGrid {
    points: Vec<f64>,
}

impl PhaseGrid {
    /// Uniformly spaced candidates over [lo, hi] within [0, pi].
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<PhaseGrid> {
        if count < MIN_POSTERIOR_POINTS {
            return Err(Error::invalid(format!(
                "phase grid needs at least {MIN_POSTERIOR_POINTS} points, got {count}"
            )));
        }
        if !(lo >= 0.0 && hi <= std::f64::consts::PI && lo < hi) {
            return Err(Error::invalid(
                "phase grid bounds must satisfy 0 <= lo < hi <= pi",
            ));
        }
        let step = (hi - lo) / (count - 1) as f64;
        Ok(PhaseGrid {
            points: (0..count).map(|i| lo + step * i as f64).collect(),
        })
    }

    pub fn default_span() -> PhaseGrid {
        PhaseGrid::uniform(0.0, std::f64::consts::PI, DEFAULT_POSTERIOR_POINTS)
            .expect("default grid parameters are valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.points[1] - self.points[0]
    }
}

/// Derives an independent stream seed from a base seed and work-item indices
/// (splitmix-style avalanche; stable across platforms).
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    let mut state = base ^ 0x9E3779B97F4A7C15;
    for &index in indices {
        state = state.wrapping_add(index).wrapping_add(0x9E3779B97F4A7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        state = z ^ (z >> 31);
    }
    state
}

/// Draws `count` i.i.d. outcome indices from the distribution.
///
/// Indices refer to the distribution's outcome order, which is identical for
/// every phase of the same (probe, measurement) pair.
pub fn sample_outcomes(
    distribution: &OutcomeDistribution,
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if count < 1 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let sum: f64 = distribution.outcomes().iter().map(|e| e.probability).sum();
    if (sum - 1.0).abs() > crate::fisher::DISTRIBUTION_NORM_TOL {
        return Err(Error::UnnormalizedDistribution { sum });
    }
    let cdf: Vec<f64> = distribution
        .outcomes()
        .iter()
        .scan(0.0, |acc, e| {
            *acc += e.probability;
            Some(*acc)
        })
        .collect();
    let last_live = distribution
        .outcomes()
        .iter()
        .rposition(|e| e.probability > 0.0)
        .unwrap_or(0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        let u: f64 = rng.random();
        let index = cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last_live);
        draws.push(index);
    }
    Ok(draws)
}

/// Posterior probabilities over the grid given observed outcome indices and a
/// likelihood model `theta -> OutcomeDistribution`.
///
/// The likelihood must produce identically ordered outcomes at every grid
/// phase. Accumulation runs in the log domain with a max shift before
/// exponentiation, and the result is normalized to sum one.
pub fn posterior(
    grid: &PhaseGrid,
    outcomes: &[usize],
    likelihood: impl Fn(f64) -> Result<OutcomeDistribution>,
) -> Result<Vec<f64>> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let first = likelihood(grid.points()[0])?;
    let n_outcomes = first.len();
    let mut counts = vec![0u32; n_outcomes];
    for &index in outcomes {
        if index >= n_outcomes {
            return Err(Error::invalid(format!(
                "outcome index {index} outside the distribution ({n_outcomes} outcomes)"
            )));
        }
        counts[index] += 1;
    }
    let mut log_post = Vec::with_capacity(grid.len());
    for (i, &theta) in grid.points().iter().enumerate() {
        let dist = if i == 0 { first.clone() } else { likelihood(theta)? };
        if dist.len() != n_outcomes {
            return Err(Error::invalid(
                "likelihood outcome count changed across the grid",
            ));
        }
        // ln(0) = -inf zeroes the posterior where an observed outcome is
        // impossible; if that happens on the whole grid the data are
        // inconsistent with the model and normalization reports it
        let mut ll = 0.0;
        for (k, &count) in counts.iter().enumerate() {
            if count > 0 {
                ll += count as f64 * dist.outcomes()[k].probability.ln();
            }
        }
        log_post.push(ll);
    }
    normalize_log_posterior(log_post)
}

fn normalize_log_posterior(mut log_post: Vec<f64>) -> Result<Vec<f64>> {
    let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::InconsistentLikelihood);
    }
    let mut total = 0.0;
    for value in log_post.iter_mut() {
        *value = (*value - max).exp();
        total += *value;
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InconsistentLikelihood);
    }
    for value in log_post.iter_mut() {
        *value /= total;
    }
    Ok(log_post)
}

/// Maximum-a-posteriori estimate and credible interval.
///
/// The MAP is the grid point of maximum posterior mass, ties broken toward
/// the lower phase. The interval grows outward from the MAP point one grid
/// cell at a time, extending whichever side currently holds less mass, until
/// the requested mass is covered; the returned bounds are cell edges (half a
/// grid step beyond the outermost included points), so a point-mass posterior
/// yields an interval one grid step wide.
pub fn map_and_ci(
    posterior: &[f64],
    grid: &PhaseGrid,
    mass: f64,
) -> Result<(f64, (f64, f64))> {
    if posterior.len() != grid.len() {
        return Err(Error::invalid("posterior length must match the grid"));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::invalid("credible mass must lie in (0, 1)"));
    }
    let total: f64 = posterior.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::UnnormalizedDistribution { sum: total });
    }
    let mut map_index = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &p) in posterior.iter().enumerate() {
        if p > best {
            best = p;
            map_index = i;
        }
    }
    let (mut lo, mut hi) = (map_index, map_index);
    let mut covered = posterior[map_index];
    let (mut left_mass, mut right_mass) = (0.0, 0.0);
    while covered < mass {
        let can_left = lo > 0;
        let can_right = hi + 1 < posterior.len();
        if !can_left && !can_right {
            break;
        }
        let go_left = can_left && (!can_right || left_mass <= right_mass);
        if go_left {
            lo -= 1;
            left_mass += posterior[lo];
            covered += posterior[lo];
        } else {
            hi += 1;
            right_mass += posterior[hi];
            covered += posterior[hi];
        }
    }
    let half_step = grid.step() / 2.0;
    let interval = (grid.points()[lo] - half_step, grid.points()[hi] + half_step);
    Ok((grid.points()[map_index], interval))
}

/// Result of one estimation sequence.
#[derive(Clone, Debug)]
pub struct EstimationRun {
    pub theta_true: f64,
    pub nu: usize,
    pub map_estimate: f64,
    pub ci68: (f64, f64),
    pub posterior: Vec<f64>,
}

/// Aggregate statistics over repeated sequences at one true phase.
#[derive(Clone, Debug)]
pub struct SequenceStats {
    pub theta_true: f64,
    pub runs: usize,
    pub mean_estimate: f64,
    /// Sample standard deviation over sequence estimates; NaN for one run.
    pub std_estimate: f64,
    pub mean_ci_halfwidth: f64,
}

/// Log-likelihood table over a phase grid, shared across sequences.
struct LikelihoodTable {
    grid: PhaseGrid,
    /// log p(outcome k | grid point g), row-major by grid point
    log_probs: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    fn build(
        state: &SectoredState,
        measurement: &Measurement,
        grid: PhaseGrid,
    ) -> Result<LikelihoodTable> {
        let mut log_probs = Vec::with_capacity(grid.len());
        let mut n_outcomes = None;
        for &theta in grid.points() {
            let dist = outcome_distribution(Probe::Pure(state), theta, measurement)?;
            if *n_outcomes.get_or_insert(dist.len()) != dist.len() {
                return Err(Error::invalid(
                    "outcome count changed across the phase grid",
                ));
            }
            log_probs.push(
                dist.outcomes()
                    .iter()
                    .map(|e| e.probability.ln())
                    .collect(),
            );
        }
        Ok(LikelihoodTable { grid, log_probs })
    }

    fn posterior_from_counts(&self, counts: &[u32]) -> Result<Vec<f64>> {
        let log_post = self
            .log_probs
            .iter()
            .map(|row| {
                counts
                    .iter()
                    .zip(row)
                    .filter(|(c, _)| **c > 0)
                    .map(|(c, lp)| *c as f64 * lp)
                    .sum()
            })
            .collect();
        normalize_log_posterior(log_post)
    }
}

/// Runs one estimation sequence of `nu` draws on the default grid.
pub fn estimate_sequence(
    state: &SectoredState,
    theta_true: f64,
    measurement: &Measurement,
    nu: usize,
    seed: u64,
) -> Result<EstimationRun> {
    let grid = PhaseGrid::default_span();
    let sampling = outcome_distribution(Probe::Pure(state), theta_true, measurement)?;
    let outcomes = sample_outcomes(&sampling, nu, seed)?;
    let post = posterior(&grid, &outcomes, |theta| {
        outcome_distribution(Probe::Pure(state), theta, measurement)
    })?;
    let (map_estimate, ci68) = map_and_ci(&post, &grid, DEFAULT_CI_MASS)?;
    Ok(EstimationRun {
        theta_true,
        nu,
        map_estimate,
        ci68,
        posterior: post,
    })
}

/// Runs `sequences` independent estimation sequences of length `nu` at one
/// true phase and aggregates their statistics.
///
/// Per-sequence seeds derive from (seed, sequence index); the caller is
/// expected to derive `seed` itself from its sweep indices when running many
/// cells (see [`derive_seed`]).
pub fn run_sequences(
    state: &SectoredState,
    theta_true: f64,
    measurement: &Measurement,
    nu: usize,
    sequences: usize,
    seed: u64,
) -> Result<SequenceStats> {
    if nu < 1 || sequences < 1 {
        return Err(Error::invalid(
            "sequence length and sequence count must be at least 1",
        ));
    }
    let table = LikelihoodTable::build(state, measurement, PhaseGrid::default_span())?;
    let sampling = outcome_distribution(Probe::Pure(state), theta_true, measurement)?;
    let n_outcomes = sampling.len();
    let mut estimates = Vec::with_capacity(sequences);
    let mut halfwidths = Vec::with_capacity(sequences);
    for sequence in 0..sequences {
        let stream = derive_seed(seed, &[sequence as u64]);
        let outcomes = sample_outcomes(&sampling, nu, stream)?;
        let mut counts = vec![0u32; n_outcomes];
        for index in outcomes {
            counts[index] += 1;
        }
        let post = table.posterior_from_counts(&counts)?;
        let (map_estimate, ci) = map_and_ci(&post, &table.grid, DEFAULT_CI_MASS)?;
        estimates.push(map_estimate);
        halfwidths.push((ci.1 - ci.0) / 2.0);
    }
    let runs = estimates.len();
    let mean_estimate = estimates.iter().sum::<f64>() / runs as f64;
    let std_estimate = if runs > 1 {
        (estimates
            .iter()
            .map(|e| (e - mean_estimate).powi(2))
            .sum::<f64>()
            / (runs as f64 - 1.0))
            .sqrt()
    } else {
        f64::NAN
    };
    Ok(SequenceStats {
        theta_true,
        runs,
        mean_estimate,
        std_estimate,
        mean_ci_halfwidth: halfwidths.iter().sum::<f64>() / runs as f64,
    })
}
