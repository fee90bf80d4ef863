//! Husimi quasi-probability maps over the sphere.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::states::SectoredState;

/// A (polar, azimuth) evaluation lattice.
#[derive(Clone, Debug)]
pub struct HusimiGrid {
    polar: Vec<f64>,
    azimuth: Vec<f64>,
}

impl HusimiGrid {
    /// Uniform lattice: polar inclusive over [0, pi], azimuth over [0, 2 pi)
    /// with an open end.
    pub fn uniform(polar_points: usize, azimuth_points: usize) -> Result<HusimiGrid> {
        if polar_points < 2 || azimuth_points < 1 {
            return Err(Error::invalid(
                "husimi grid needs at least 2 polar and 1 azimuth points",
            ));
        }
        let polar = (0..polar_points)
            .map(|i| std::f64::consts::PI * i as f64 / (polar_points - 1) as f64)
            .collect();
        let azimuth = (0..azimuth_points)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / azimuth_points as f64)
            .collect();
        Ok(HusimiGrid { polar, azimuth })
    }

    pub fn polar(&self) -> &[f64] {
        &self.polar
    }

    pub fn azimuth(&self) -> &[f64] {
        &self.azimuth
    }
}

/// Husimi values Q(polar, azimuth) on a lattice, row per polar angle.
#[derive(Clone, Debug)]
pub struct HusimiMap {
    pub polar: Vec<f64>,
    pub azimuth: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl HusimiMap {
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Q(n) = |<css(n)|psi>|^2 over the lattice for a single-sector state.
///
/// The coherent-state amplitudes use the closed binomial form
/// `sqrt(binom(2j, k)) cos^(k)(t/2) sin^(2j-k)(t/2) e^(-i phi m_k)`, which
/// matches the rotation-based constructor.
pub fn husimi(state: &SectoredState, grid: &HusimiGrid) -> Result<HusimiMap> {
    let part = state.only_sector()?;
    let sector = part.sector();
    let dim = sector.dim();
    let tj = sector.twice_j() as u64;
    // sqrt of binomial coefficients, built multiplicatively
    let mut sqrt_binom = vec![1.0f64; dim];
    for k in 1..dim {
        let prev = sqrt_binom[k - 1] * sqrt_binom[k - 1];
        sqrt_binom[k] = (prev * (tj - k as u64 + 1) as f64 / k as f64).sqrt();
    }
    let amps = part.amplitudes();
    let mut values = Vec::with_capacity(grid.polar.len());
    for &t in &grid.polar {
        let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
        // css magnitude profile at this polar angle
        let mags: Vec<f64> = (0..dim)
            .map(|k| sqrt_binom[k] * c.powi(k as i32) * s.powi((tj - k as u64) as i32))
            .collect();
        let mut row = Vec::with_capacity(grid.azimuth.len());
        for &phi in &grid.azimuth {
            let mut overlap = C64::new(0.0, 0.0);
            for k in 0..dim {
                let m = sector.m(k);
                // conj(css_k) = mags[k] * e^{+i phi m}
                overlap += C64::from_polar(mags[k], phi * m) * amps[k];
            }
            row.push(overlap.norm_sqr());
        }
        values.push(row);
    }
    Ok(HusimiMap {
        polar: grid.polar.clone(),
        azimuth: grid.azimuth.clone(),
        values,
    })
}
