//! The interferometric transformation pipeline.
//!
//! The Mach-Zehnder picture is `|psi_out> = B^dag U_theta B |psi_in>` with
//! balanced beam splitters `B = exp(-i (pi/2) Jy)` and the phase shift
//! `U_theta = exp(-i theta Jz)`, applied per sector. The Ramsey picture uses
//! `R_x(theta) = exp(+i theta Jx)` instead; the two are connected by the
//! z-frame to x-frame mapping `|psi>_x = B |psi>_z`, under which outcome
//! distributions match point for point.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::spin::{self, Axis, Sector};
use crate::states::SectoredState;

/// A phase shift reduced to the principal interval [0, pi].
///
/// Raw transformations accept any real angle; this wrapper is for scans and
/// classification, where only the principal interval is meaningful. Values
/// outside are folded by periodicity and reflection and flagged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseShift {
    theta: f64,
    reduced: bool,
}

impl PhaseShift {
    pub fn canonical(theta: f64) -> PhaseShift {
        let tau = 2.0 * std::f64::consts::PI;
        let mut folded = theta.rem_euclid(tau);
        if folded > std::f64::consts::PI {
            folded = tau - folded;
        }
        PhaseShift {
            theta: folded,
            reduced: folded != theta,
        }
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    /// True when the input was folded into [0, pi].
    pub fn was_reduced(self) -> bool {
        self.reduced
    }
}

/// Cached per-sector beam-splitter matrices.
pub(crate) struct SectorOptics {
    pub beam_splitter: DMatrix<C64>,
    pub beam_splitter_dagger: DMatrix<C64>,
}

/// Beam splitter and its adjoint for one sector, memoized across calls since
/// scans revisit the same sectors at many phases.
pub(crate) fn sector_optics(sector: Sector) -> Arc<SectorOptics> {
    static CACHE: OnceLock<Mutex<BTreeMap<u32, Arc<SectorOptics>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(hit) = cache.lock().expect("optics cache poisoned").get(&sector.twice_j()) {
        return Arc::clone(hit);
    }
    let b = spin::rotation(sector, Axis::Y, std::f64::consts::FRAC_PI_2);
    let entry = Arc::new(SectorOptics {
        beam_splitter_dagger: b.matrix().adjoint(),
        beam_splitter: b.matrix().clone(),
    });
    cache
        .lock()
        .expect("optics cache poisoned")
        .insert(sector.twice_j(), Arc::clone(&entry));
    entry
}

fn apply_phase(sector: Sector, state: &DVector<C64>, theta: f64) -> DVector<C64> {
    DVector::from_fn(state.len(), |k, _| {
        state[k] * C64::from_polar(1.0, -theta * sector.m(k))
    })
}

/// Probe state: the input state after the first beam splitter, `B |psi_in>`.
pub fn probe_from_input(input: &SectoredState) -> Result<SectoredState> {
    input.map_unitary(|part| {
        let optics = sector_optics(part.sector());
        Ok(&optics.beam_splitter * part.amplitudes())
    })
}

/// Full MZI output `B^dag U_theta B |psi_in>`.
pub fn mzi_output(input: &SectoredState, theta: f64) -> Result<SectoredState> {
    let probe = probe_from_input(input)?;
    probe.map_unitary(|part| {
        let optics = sector_optics(part.sector());
        let shifted = apply_phase(part.sector(), part.amplitudes(), theta);
        Ok(&optics.beam_splitter_dagger * shifted)
    })
}

/// Ramsey rotation `exp(+i theta Jx) |psi>`.
pub fn ramsey_rotate(state: &SectoredState, theta: f64) -> Result<SectoredState> {
    state.map_unitary(|part| {
        let u = spin::rotation(part.sector(), Axis::X, -theta);
        u.apply(part.amplitudes())
    })
}

/// z-frame to x-frame mapping `exp(-i (pi/2) Jy) |psi>_z`, the same linear map
/// as [`probe_from_input`].
pub fn frame_to_x(state_z: &SectoredState) -> Result<SectoredState> {
    probe_from_input(state_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{self, Measurement};
    use crate::states::{
        classify_symmetry_default, coherent_spin_state, multi_sector_superposition, tact_state,
        twin_fock_probe, SymmetryTag,
    };
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fully_polarized(n: u32) -> SectoredState {
        coherent_spin_state(Sector::new(n), 0.0, 0.0)
    }

    #[test]
    fn canonical_phase_reduction() {
        let p = PhaseShift::canonical(0.3);
        assert_eq!(p.theta(), 0.3);
        assert!(!p.was_reduced());
        let q = PhaseShift::canonical(PI + 0.3);
        assert!((q.theta() - (PI - 0.3)).abs() < 1e-14);
        assert!(q.was_reduced());
        let r = PhaseShift::canonical(-0.3);
        assert!((r.theta() - 0.3).abs() < 1e-14);
        assert!(r.was_reduced());
        let s = PhaseShift::canonical(2.0 * PI + 0.1);
        assert!((s.theta() - 0.1).abs() < 1e-13);
        assert!(s.was_reduced());
    }

    #[test]
    fn zero_phase_is_identity() {
        let input = tact_state(6, 0.2).unwrap();
        let out = mzi_output(&input, 0.0).unwrap();
        for (a, b) in input.sectors().iter().zip(out.sectors()) {
            for k in 0..a.amplitudes().len() {
                assert!((a.amplitudes()[k] - b.amplitudes()[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn classic_fringe_on_polarized_input() {
        // <Jz> after the MZI on |j,j> is (N/2) cos(theta)
        let n = 8u32;
        let input = fully_polarized(n);
        for theta in [0.0, 0.4, 1.1, 2.8] {
            let out = mzi_output(&input, theta).unwrap();
            let part = &out.sectors()[0];
            let mean: f64 = part
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(k, z)| z.norm_sqr() * part.sector().m(k))
                .sum();
            let want = (n as f64 / 2.0) * theta.cos();
            assert!((mean - want).abs() < 1e-10, "theta={theta}: {mean} vs {want}");
        }
    }

    #[test]
    fn sector_weights_conserved() {
        let input = multi_sector_superposition(
            vec![
                (2, vec![C64::new(0.2, 0.5), C64::new(0.4, 0.0), C64::new(0.3, -0.1)]),
                (5, vec![C64::new(1.0, 0.0); 6]),
            ],
            vec![0.35, 0.65],
        )
        .unwrap();
        let before = input.sector_weights();
        let out = mzi_output(&input, 1.234).unwrap();
        let after = out.sector_weights();
        for (b, a) in before.iter().zip(&after) {
            assert_eq!(b.0, a.0);
            assert!((b.1 - a.1).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_of_balanced_fock_is_twin_fock() {
        // B|n,n> (the m = 0 Dicke state of sector N = 2n) is the twin-Fock probe
        let n = 6u32;
        let sector = Sector::new(n);
        let mut mid = DVector::<C64>::zeros(sector.dim());
        mid[sector.index_of_twice_m(0).unwrap()] = C64::new(1.0, 0.0);
        let input = SectoredState::single_sector(sector, mid).unwrap();
        let probe = probe_from_input(&input).unwrap();
        let want = twin_fock_probe(n).unwrap();
        for k in 0..sector.dim() {
            assert!(
                (probe.sectors()[0].amplitudes()[k] - want.sectors()[0].amplitudes()[k]).norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn double_beam_splitter_is_pi_rotation() {
        let n = 5u32;
        let input = tact_state(n, 0.17).unwrap();
        let twice = probe_from_input(&probe_from_input(&input).unwrap()).unwrap();
        let direct = input
            .map_unitary(|part| {
                spin::rotation(part.sector(), Axis::Y, PI).apply(part.amplitudes())
            })
            .unwrap();
        for k in 0..input.sectors()[0].amplitudes().len() {
            assert!(
                (twice.sectors()[0].amplitudes()[k] - direct.sectors()[0].amplitudes()[k]).norm()
                    < 1e-10
            );
        }
    }

    #[test]
    fn ramsey_zero_angle_is_identity() {
        let state = tact_state(4, 0.3).unwrap();
        let out = ramsey_rotate(&state, 0.0).unwrap();
        for k in 0..state.sectors()[0].amplitudes().len() {
            assert!(
                (state.sectors()[0].amplitudes()[k] - out.sectors()[0].amplitudes()[k]).norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn ramsey_phase_only_on_x_eigenstate() {
        // |j,j> tipped to +x is a Jx eigenstate; R_x(theta) changes it by a phase
        let state = coherent_spin_state(Sector::new(6), FRAC_PI_2, 0.0);
        let out = ramsey_rotate(&state, 0.77).unwrap();
        let a = state.sectors()[0].amplitudes();
        let b = out.sectors()[0].amplitudes();
        let phase = b[0] / a[0];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        for k in 0..a.len() {
            assert!((b[k] - a[k] * phase).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn frame_to_x_moves_pole_to_equator() {
        let n = 9u32;
        let state = fully_polarized(n);
        let mapped = frame_to_x(&state).unwrap();
        let want = coherent_spin_state(Sector::new(n), FRAC_PI_2, 0.0);
        for k in 0..mapped.sectors()[0].amplitudes().len() {
            assert!(
                (mapped.sectors()[0].amplitudes()[k] - want.sectors()[0].amplitudes()[k]).norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn tact_probe_is_real_symmetric() {
        let probe = frame_to_x(&tact_state(12, 0.12).unwrap()).unwrap();
        assert_eq!(
            classify_symmetry_default(&probe).tag,
            SymmetryTag::RealSymmetric
        );
    }

    #[test]
    fn composition_identity() {
        // mzi_output literally composes B^dag U_theta with probe_from_input
        let input = tact_state(7, 0.21).unwrap();
        let theta = 0.9;
        let via_parts = probe_from_input(&input)
            .unwrap()
            .map_unitary(|part| {
                let optics = sector_optics(part.sector());
                let shifted = apply_phase(part.sector(), part.amplitudes(), theta);
                Ok(&optics.beam_splitter_dagger * shifted)
            })
            .unwrap();
        let direct = mzi_output(&input, theta).unwrap();
        for k in 0..direct.sectors()[0].amplitudes().len() {
            assert!(
                (direct.sectors()[0].amplitudes()[k] - via_parts.sectors()[0].amplitudes()[k])
                    .norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn ramsey_and_mzi_distributions_agree() {
        // PD statistics of R_x(theta)|psi>_z equal PD statistics of the MZI
        // pipeline on the x-frame probe, for every theta on a grid
        let state_z = tact_state(6, 0.23).unwrap();
        let probe_x = frame_to_x(&state_z).unwrap();
        for i in 0..=16 {
            let theta = PI * i as f64 / 16.0;
            let rotated = ramsey_rotate(&state_z, theta).unwrap();
            let direct: Vec<f64> = rotated.sectors()[0]
                .amplitudes()
                .iter()
                .map(|z| z.norm_sqr())
                .collect();
            let dist =
                fisher::outcome_distribution(&probe_x, theta, &Measurement::Pd).unwrap();
            for (k, entry) in dist.outcomes().iter().enumerate() {
                assert!(
                    (entry.probability - direct[k]).abs() < 1e-10,
                    "theta={theta} k={k}"
                );
            }
        }
    }
}
