//! Probe-state constructors and classifiers.
//!
//! A pure two-mode state is stored as amplitude vectors over one or more
//! angular-momentum sectors, `|psi> = sum_j sum_m C_{j,m} |j,m>`, globally
//! normalized. Sectors are kept in ascending 2j order so serialization is
//! bit-reproducible.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{self, Axis, HermitianOperator, Sector};

/// Global/state normalization tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Default tolerance for symmetry classification.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Amplitudes over a single sector's Dicke basis, ascending in m.
#[derive(Clone, Debug)]
pub struct SectorAmplitudes {
    sector: Sector,
    amplitudes: DVector<C64>,
}

impl SectorAmplitudes {
    pub fn new(sector: Sector, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::SectorMismatch {
                expected: sector.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(SectorAmplitudes { sector, amplitudes })
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn weight(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// A pure state spread over one or more particle-number sectors.
#[derive(Clone, Debug)]
pub struct SectoredState {
    sectors: Vec<SectorAmplitudes>,
}

impl SectoredState {
    /// Builds a state from per-sector amplitudes; sorts sectors ascending,
    /// rejects duplicates, and enforces global normalization.
    pub fn new(mut sectors: Vec<SectorAmplitudes>) -> Result<Self> {
        if sectors.is_empty() {
            return Err(Error::EmptyInput);
        }
        sectors.sort_by_key(|s| s.sector().twice_j());
        for pair in sectors.windows(2) {
            if pair[0].sector() == pair[1].sector() {
                return Err(Error::DuplicateSector {
                    twice_j: pair[0].sector().twice_j(),
                });
            }
        }
        let state = SectoredState { sectors };
        let deviation = (state.norm_sqr() - 1.0).abs();
        if deviation > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(state)
    }

    pub fn single_sector(sector: Sector, amplitudes: DVector<C64>) -> Result<Self> {
        SectoredState::new(vec![SectorAmplitudes::new(sector, amplitudes)?])
    }

    pub fn sectors(&self) -> &[SectorAmplitudes] {
        &self.sectors
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors.iter().map(|s| s.weight()).sum()
    }

    /// (sector, weight) pairs; weights sum to 1 for a normalized state.
    pub fn sector_weights(&self) -> Vec<(Sector, f64)> {
        self.sectors.iter().map(|s| (s.sector(), s.weight())).collect()
    }

    /// The single sector of a fixed-particle-number state.
    pub fn only_sector(&self) -> Result<&SectorAmplitudes> {
        if self.sectors.len() != 1 {
            return Err(Error::SingleSectorRequired {
                sectors: self.sectors.len(),
            });
        }
        Ok(&self.sectors[0])
    }

    /// Applies a per-sector linear map that is expected to be unitary
    /// (norm re-checked by the constructor contract).
    pub(crate) fn map_unitary(
        &self,
        f: impl Fn(&SectorAmplitudes) -> Result<DVector<C64>>,
    ) -> Result<SectoredState> {
        let mut out = Vec::with_capacity(self.sectors.len());
        for part in &self.sectors {
            out.push(SectorAmplitudes::new(part.sector(), f(part)?)?);
        }
        SectoredState::new(out)
    }

    /// Serializes as `{"sectors":[{"twice_j":..,"re":[..],"im":[..]}]}` with
    /// amplitudes in ascending-m order.
    pub fn to_json(&self) -> String {
        let dto = StateJson {
            sectors: self
                .sectors
                .iter()
                .map(|s| SectorJson {
                    twice_j: s.sector().twice_j(),
                    re: s.amplitudes().iter().map(|z| z.re).collect(),
                    im: s.amplitudes().iter().map(|z| z.im).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&dto).expect("state serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: StateJson =
            serde_json::from_str(text).map_err(|e| Error::StateJson(e.to_string()))?;
        let mut parts = Vec::new();
        for s in dto.sectors {
            if s.re.len() != s.im.len() {
                return Err(Error::StateJson(format!(
                    "sector 2j={}: re/im length mismatch",
                    s.twice_j
                )));
            }
            let amps = DVector::from_iterator(
                s.re.len(),
                s.re.iter().zip(&s.im).map(|(re, im)| C64::new(*re, *im)),
            );
            parts.push(SectorAmplitudes::new(Sector::new(s.twice_j), amps)?);
        }
        SectoredState::new(parts)
    }
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    sectors: Vec<SectorJson>,
}

#[derive(Serialize, Deserialize)]
struct SectorJson {
    twice_j: u32,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Symmetry classification of the amplitude pattern C_{j,m} vs C_{j,-m}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryTag {
    /// C_{j,m} = C_{j,-m} and every sector is real after factoring out one
    /// per-sector phase.
    RealSymmetric,
    /// C_{j,m} = C_{j,-m} only.
    ComplexSymmetric,
    Asymmetric,
}

/// Result of [`classify_symmetry`], carrying the tolerance that was used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryClass {
    pub tag: SymmetryTag,
    pub tolerance: f64,
}

/// (symmetric, real-up-to-phase) for one sector's amplitude vector.
///
/// Reality is tested after removing the phase of the largest-magnitude
/// amplitude, which absorbs both the global phase and any per-sector phase
/// factor.
pub(crate) fn vector_symmetry(amps: &DVector<C64>, tolerance: f64) -> (bool, bool) {
    let dim = amps.len();
    let mut symmetric = true;
    for i in 0..dim {
        let mirrored = dim - 1 - i;
        if (amps[i] - amps[mirrored]).norm() > tolerance {
            symmetric = false;
            break;
        }
    }
    let mut real = true;
    let anchor = amps
        .iter()
        .cloned()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_else(|| C64::new(1.0, 0.0));
    if anchor.norm() > tolerance {
        let phase = anchor / anchor.norm();
        for z in amps.iter() {
            if (z * phase.conj()).im.abs() > tolerance {
                real = false;
                break;
            }
        }
    }
    (symmetric, real)
}

/// Classifies a normalized state as real-symmetric, complex-symmetric, or
/// asymmetric. Each sector may carry its own phase factor without spoiling
/// the real classification.
pub fn classify_symmetry(state: &SectoredState, tolerance: f64) -> SymmetryClass {
    let mut symmetric = true;
    let mut real = true;
    for part in state.sectors() {
        let (part_symmetric, part_real) = vector_symmetry(part.amplitudes(), tolerance);
        symmetric &= part_symmetric;
        real &= part_real;
    }
    let tag = if !symmetric {
        SymmetryTag::Asymmetric
    } else if real {
        SymmetryTag::RealSymmetric
    } else {
        SymmetryTag::ComplexSymmetric
    };
    SymmetryClass { tag, tolerance }
}

/// Classifies with the default tolerance.
pub fn classify_symmetry_default(state: &SectoredState) -> SymmetryClass {
    classify_symmetry(state, SYMMETRY_TOL)
}

/// A sector-block mixture: weighted pure states living in distinct sectors.
#[derive(Clone, Debug)]
pub struct MixedSectorState {
    components: Vec<MixedComponent>,
}

#[derive(Clone, Debug)]
pub struct MixedComponent {
    weight: f64,
    state: SectorAmplitudes,
}

impl MixedComponent {
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn state(&self) -> &SectorAmplitudes {
        &self.state
    }
}

impl MixedSectorState {
    pub fn new(components: Vec<(f64, SectorAmplitudes)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput);
        }
        let sum: f64 = components.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL || components.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::BadWeights { sum });
        }
        let mut components: Vec<MixedComponent> = components
            .into_iter()
            .map(|(weight, state)| MixedComponent { weight, state })
            .collect();
        components.sort_by_key(|c| c.state.sector().twice_j());
        for pair in components.windows(2) {
            if pair[0].state.sector() == pair[1].state.sector() {
                return Err(Error::DuplicateSector {
                    twice_j: pair[0].state.sector().twice_j(),
                });
            }
        }
        for c in &components {
            let deviation = (c.state.weight() - 1.0).abs();
            if deviation > NORMALIZATION_TOL {
                return Err(Error::NotNormalized { deviation });
            }
        }
        Ok(MixedSectorState { components })
    }

    pub fn components(&self) -> &[MixedComponent] {
        &self.components
    }
}

/// Erases inter-sector coherences: the mixture with weights p_j = sum_m
/// |C_{j,m}|^2 and per-sector renormalized pure components.
pub fn phase_average(state: &SectoredState) -> MixedSectorState {
    let components = state
        .sectors()
        .iter()
        .filter(|part| part.weight() > 0.0)
        .map(|part| {
            let w = part.weight();
            let scale = C64::new(1.0 / w.sqrt(), 0.0);
            let amps = part.amplitudes().map(|z| z * scale);
            (
                w,
                SectorAmplitudes::new(part.sector(), amps).expect("dimensions preserved"),
            )
        })
        .collect();
    MixedSectorState::new(components).expect("weights inherited from a normalized state")
}

/// Coherent spin state: rotation of the fully polarized |j,j> by the given
/// polar and azimuthal angles, `exp(-i azimuth Jz) exp(-i polar Jy) |j,j>`.
pub fn coherent_spin_state(sector: Sector, polar: f64, azimuth: f64) -> SectoredState {
    let dim = sector.dim();
    let mut top = DVector::<C64>::zeros(dim);
    top[dim - 1] = C64::new(1.0, 0.0);
    let tilted = spin::rotation(sector, Axis::Y, polar)
        .apply(&top)
        .expect("dimensions match");
    let spun = DVector::from_fn(dim, |k, _| {
        tilted[k] * C64::from_polar(1.0, -azimuth * sector.m(k))
    });
    SectoredState::single_sector(sector, spun).expect("rotation preserves the norm")
}

/// Generator Jx^2 for one-axis twisting.
pub fn one_axis_twisting_generator(sector: Sector) -> HermitianOperator {
    let jx = spin::angular_momentum(sector, Axis::X);
    HermitianOperator::new(sector, jx.matrix() * jx.matrix())
        .expect("square of Hermitian is Hermitian")
}

/// Generator Jx^2 - Jy^2 for two-axis counter-twisting.
pub fn two_axis_countertwisting_generator(sector: Sector) -> HermitianOperator {
    let jx = spin::angular_momentum(sector, Axis::X);
    let jy = spin::angular_momentum(sector, Axis::Y);
    HermitianOperator::new(
        sector,
        jx.matrix() * jx.matrix() - jy.matrix() * jy.matrix(),
    )
    .expect("difference of Hermitian squares is Hermitian")
}

/// Two-axis counter-twisted state in the z frame:
/// `exp(-i Jz pi/4) exp(-i chi_t (Jx^2 - Jy^2)) |j,j>` with j = N/2.
///
/// The trailing z rotation re-orients the squeezing ellipse so the sensitive
/// quadrature lines up with the interferometer phase.
pub fn tact_state(n: u32, chi_t: f64) -> Result<SectoredState> {
    if n < 1 {
        return Err(Error::invalid("particle count must be at least 1"));
    }
    let sector = Sector::new(n);
    let dim = sector.dim();
    let mut psi = DVector::<C64>::zeros(dim);
    psi[dim - 1] = C64::new(1.0, 0.0);
    let twisted = spin::evolve(&psi, &two_axis_countertwisting_generator(sector), chi_t)?;
    let reoriented = DVector::from_fn(dim, |k, _| {
        twisted[k] * C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4 * sector.m(k))
    });
    SectoredState::single_sector(sector, reoriented)
}

/// Reorientation angle for [`oat_state`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReorientAngle {
    /// Fixed angle in radians.
    Fixed(f64),
    /// Maximize 4 Var(Jx) over [0, pi) with a 720-point grid followed by
    /// golden-section refinement.
    Auto,
}

/// One-axis twisted state in the z frame:
/// `exp(-i phi Jz) exp(-i chi_t Jx^2) |j,j>` with j = N/2.
pub fn oat_state(n: u32, chi_t: f64, phi: ReorientAngle) -> Result<SectoredState> {
    if n < 1 {
        return Err(Error::invalid("particle count must be at least 1"));
    }
    let sector = Sector::new(n);
    let dim = sector.dim();
    let mut psi = DVector::<C64>::zeros(dim);
    psi[dim - 1] = C64::new(1.0, 0.0);
    let twisted = spin::evolve(&psi, &one_axis_twisting_generator(sector), chi_t)?;
    let phi = match phi {
        ReorientAngle::Fixed(value) => value,
        ReorientAngle::Auto => best_reorientation_angle(sector, &twisted),
    };
    let reoriented = DVector::from_fn(dim, |k, _| {
        twisted[k] * C64::from_polar(1.0, -phi * sector.m(k))
    });
    SectoredState::single_sector(sector, reoriented)
}

/// 4 Var(Jx) of `exp(-i phi Jz) |psi>`; the figure of merit the auto
/// reorientation maximizes (it equals the x-frame probe's QFI).
pub fn transverse_variance_merit(sector: Sector, psi: &DVector<C64>, phi: f64) -> f64 {
    let jx = spin::angular_momentum(sector, Axis::X);
    let dim = sector.dim();
    let rotated = DVector::from_fn(dim, |k, _| psi[k] * C64::from_polar(1.0, -phi * sector.m(k)));
    let jpsi = jx.apply(&rotated).expect("dimensions match");
    let mean: f64 = rotated
        .iter()
        .zip(jpsi.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    let second: f64 = jpsi.iter().map(|z| z.norm_sqr()).sum();
    4.0 * (second - mean * mean)
}

fn best_reorientation_angle(sector: Sector, psi: &DVector<C64>) -> f64 {
    const GRID: usize = 720;
    let merit = |phi: f64| transverse_variance_merit(sector, psi, phi);
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..GRID {
        let phi = std::f64::consts::PI * i as f64 / GRID as f64;
        let value = merit(phi);
        if value > best.1 {
            best = (phi, value);
        }
    }
    // golden-section refinement within one grid step on either side
    let step = std::f64::consts::PI / GRID as f64;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = merit(x1);
    let mut f2 = merit(x2);
    for _ in 0..60 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = merit(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = merit(x2);
        }
    }
    let refined = 0.5 * (lo + hi);
    if merit(refined) >= best.1 {
        refined.rem_euclid(std::f64::consts::PI)
    } else {
        best.0
    }
}

/// NOON probe: (|j,j> + |j,-j>)/sqrt(2) with j = N/2.
pub fn noon_state(n: u32) -> Result<SectoredState> {
    if n < 1 {
        return Err(Error::invalid("particle count must be at least 1"));
    }
    let sector = Sector::new(n);
    let dim = sector.dim();
    let mut amps = DVector::<C64>::zeros(dim);
    let w = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = w;
    amps[dim - 1] = w;
    SectoredState::single_sector(sector, amps)
}

/// Twin-Fock probe: the beam-splitter image `exp(-i (pi/2) Jy) |j,0>` of the
/// balanced Fock input |N/2, N/2>. Requires even N so that m = 0 exists.
pub fn twin_fock_probe(n: u32) -> Result<SectoredState> {
    if n < 1 {
        return Err(Error::invalid("particle count must be at least 1"));
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddParticleNumber { n: n as u64 });
    }
    let sector = Sector::new(n);
    let dim = sector.dim();
    let mut mid = DVector::<C64>::zeros(dim);
    mid[sector.index_of_twice_m(0).expect("even N has m = 0")] = C64::new(1.0, 0.0);
    let amps = spin::rotation(sector, Axis::Y, std::f64::consts::FRAC_PI_2)
        .apply(&mid)
        .expect("dimensions match");
    SectoredState::single_sector(sector, amps)
}

/// Normalized superposition across several sectors.
///
/// Each amplitude vector is normalized within its sector and scaled by the
/// square root of its relative weight; weights only need to be normalizable.
pub fn multi_sector_superposition(
    parts: Vec<(u32, Vec<C64>)>,
    weights: Vec<f64>,
) -> Result<SectoredState> {
    if parts.is_empty() {
        return Err(Error::EmptyInput);
    }
    if parts.len() != weights.len() {
        return Err(Error::invalid("one weight per sector part is required"));
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::BadWeights { sum: total });
    }
    let mut sectors = Vec::with_capacity(parts.len());
    for ((twice_j, raw), weight) in parts.into_iter().zip(weights) {
        let sector = Sector::new(twice_j);
        let norm_sqr: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr.is_nan() || norm_sqr <= 0.0 {
            return Err(Error::invalid(format!(
                "sector 2j={twice_j}: amplitude vector has zero norm"
            )));
        }
        let scale = C64::new((weight / total / norm_sqr).sqrt(), 0.0);
        let amps = DVector::from_iterator(raw.len(), raw.into_iter().map(|z| z * scale));
        sectors.push(SectorAmplitudes::new(sector, amps)?);
    }
    SectoredState::new(sectors)
}
