//! The experiment runners.
//!
//! Every runner maps its sweep onto independent cells, evaluates them on the
//! current rayon pool, and assembles rows in deterministic cell order, so the
//! emitted bytes do not depend on worker scheduling.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use qcrb_core::bayes::{derive_seed, run_sequences};
use qcrb_core::fisher::{
    cfi, cfi_limit, husimi, optimality_table, qfi_variance, FisherReport, HusimiGrid,
    Measurement, PhaseEndpoint, ScanRecord,
};
use qcrb_core::interferometer::{frame_to_x, ramsey_rotate};
use qcrb_core::spin::Sector;
use qcrb_core::states::{coherent_spin_state, oat_state, tact_state, ReorientAngle, SectoredState};

use crate::config::{
    auto_chi_t, config_hash, resolve_state, resolve_symmetric_state, AutoOrValue, Experiment,
    ExperimentConfig,
};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Document};

/// Runs one experiment to a finished document.
pub fn run(experiment: Experiment, config: &ExperimentConfig) -> CliResult<Document> {
    config.validate(experiment)?;
    let mut document = match experiment {
        Experiment::Table1 => run_table1(config)?,
        Experiment::FisherScan => run_fisher_scan(config)?,
        Experiment::NoiseScan => run_noise_scan(config)?,
        Experiment::GainVsN => run_gain_vs_n(config)?,
        Experiment::BayesSim => run_bayes_sim(config)?,
        Experiment::Husimi => run_husimi(config)?,
    };
    // hash and seed go first in the header
    let mut comments = vec![
        ("config_hash".to_string(), format!("{:#018x}", config_hash(experiment, config))),
        ("seed".to_string(), config.seed.to_string()),
    ];
    comments.append(&mut document.comments);
    document.comments = comments;
    Ok(document)
}

/// Mean particle count of the probe, exact for a single sector.
fn mean_particle_count(state: &SectoredState) -> f64 {
    state
        .sector_weights()
        .iter()
        .map(|(sector, weight)| weight * sector.particle_count() as f64)
        .sum()
}

fn is_endpoint(theta: f64) -> Option<PhaseEndpoint> {
    if theta.abs() < 1e-12 {
        Some(PhaseEndpoint::Zero)
    } else if (theta - PI).abs() < 1e-12 {
        Some(PhaseEndpoint::Pi)
    } else {
        None
    }
}

/// Fisher information at one grid point. Exact endpoints of noise-free
/// counting measurements are 0/0 limits, so they use the closed-form
/// endpoint value; everything else is evaluated directly.
fn fisher_at(
    state: &SectoredState,
    theta: f64,
    measurement: &Measurement,
) -> Result<FisherReport, qcrb_core::Error> {
    if !matches!(measurement, Measurement::NoisyPd { .. }) {
        if let Some(endpoint) = is_endpoint(theta) {
            match cfi_limit(state, endpoint, measurement) {
                Ok(value) => {
                    return Ok(FisherReport {
                        qfi: qfi_variance(state),
                        cfi: value,
                        measurement: *measurement,
                        theta,
                    })
                }
                // no closed-form limit for asymmetric probes; the direct
                // evaluation below is well defined there
                Err(qcrb_core::Error::AsymmetricState) => {}
                Err(err) => return Err(err),
            }
        }
    }
    cfi(state, theta, measurement)
}

fn run_table1(config: &ExperimentConfig) -> CliResult<Document> {
    let state = resolve_symmetric_state(&config.state)?;
    let rows = optimality_table(&state).map_err(|err| CliError::from_core("table1", err))?;
    let mut document = Document::new(
        "table1",
        vec!["measurement", "phase_condition", "attains_qcrb", "remark"],
    );
    document.comment("state", &config.state.constructor);
    document.comment("n", config.state.n);
    let mut table = String::from("measurement  phase_condition  attains_qcrb  remark\n");
    for row in &rows {
        let remark = row.remark.clone().unwrap_or_default();
        let _ = writeln!(
            table,
            "{:<11}  {:<15}  {:<12}  {remark}",
            row.measurement.to_string(),
            row.phase_condition.to_string(),
            row.attains_qcrb
        );
        document.push_row(vec![
            Cell::Text(row.measurement.to_string()),
            Cell::Text(row.phase_condition.to_string()),
            Cell::Text(row.attains_qcrb.to_string()),
            Cell::Text(remark),
        ]);
    }
    document.table = Some(table);
    Ok(document)
}

fn run_fisher_scan(config: &ExperimentConfig) -> CliResult<Document> {
    let state = resolve_state(&config.state)?;
    let measurement = config.measurement()?;
    let n = mean_particle_count(&state).round() as u32;
    let thetas = config.theta_grid();
    let records: Vec<ScanRecord> = thetas
        .par_iter()
        .map(|&theta| {
            fisher_at(&state, theta, &measurement)
                .map(|report| ScanRecord::from_report(&report, n))
                .map_err(|err| CliError::from_core(&format!("theta={theta}"), err))
        })
        .collect::<CliResult<_>>()?;
    let mut document = Document::new(
        "fisher-scan",
        vec![
            "theta",
            "measurement",
            "sigma",
            "N",
            "qfi",
            "cfi",
            "delta_theta_normalized",
            "gain_db",
        ],
    );
    document.comment("state", &config.state.constructor);
    document.comment("n", n);
    for r in records {
        document.push_row(vec![
            Cell::Float(r.theta),
            Cell::Text(r.measurement),
            Cell::Float(r.sigma),
            Cell::UInt(r.n as u64),
            Cell::Float(r.qfi),
            Cell::Float(r.cfi),
            Cell::Float(r.delta_theta_normalized),
            Cell::Float(r.gain_db),
        ]);
    }
    Ok(document)
}

/// Probe for the twisting-based scans at one particle count.
fn scan_probe(config: &ExperimentConfig, n: u32) -> CliResult<SectoredState> {
    if config.state.constructor != "tact" {
        return Err(CliError::Config(format!(
            "this scan sweeps the two-axis counter-twisted family; \
             state.constructor must be \"tact\", got \"{}\"",
            config.state.constructor
        )));
    }
    let chi_t = match config.state.chi_t {
        AutoOrValue::Auto => auto_chi_t("tact", n),
        AutoOrValue::Value(v) => v,
    };
    let state = tact_state(n, chi_t).map_err(|err| CliError::from_core("state", err))?;
    frame_to_x(&state).map_err(|err| CliError::from_core("frame", err))
}

fn noisy_or_pd(sigma: f64) -> CliResult<Measurement> {
    if sigma == 0.0 {
        Ok(Measurement::Pd)
    } else {
        Measurement::noisy_pd(sigma).map_err(|err| CliError::Config(err.to_string()))
    }
}

fn run_noise_scan(config: &ExperimentConfig) -> CliResult<Document> {
    let thetas = config.theta_grid();
    let cells: Vec<(u32, f64)> = config
        .scan
        .n_list
        .iter()
        .flat_map(|&n| config.scan.sigma_list.iter().map(move |&sigma| (n, sigma)))
        .collect();
    let blocks: Vec<Vec<(f64, f64, u32, f64)>> = cells
        .par_iter()
        .map(|&(n, sigma)| -> CliResult<_> {
            let probe = scan_probe(config, n)?;
            let measurement = noisy_or_pd(sigma)?;
            let mut rows = Vec::with_capacity(thetas.len());
            for &theta in &thetas {
                let report = fisher_at(&probe, theta, &measurement).map_err(|err| {
                    CliError::from_core(&format!("N={n} sigma={sigma} theta={theta}"), err)
                })?;
                // delta_theta sqrt(nu N); diverges where the information dies
                let normalized = (n as f64 / report.cfi).sqrt();
                rows.push((theta, sigma, n, normalized));
            }
            Ok(rows)
        })
        .collect::<CliResult<_>>()?;
    let mut document = Document::new(
        "noise-scan",
        vec!["theta", "sigma", "N", "delta_theta_normalized"],
    );
    document.comment("chi_t", "near-heisenberg");
    for block in blocks {
        for (theta, sigma, n, normalized) in block {
            document.push_row(vec![
                Cell::Float(theta),
                Cell::Float(sigma),
                Cell::UInt(n as u64),
                Cell::Float(normalized),
            ]);
        }
    }
    Ok(document)
}

fn run_gain_vs_n(config: &ExperimentConfig) -> CliResult<Document> {
    // cells ordered N outer, sigma inner
    let cells: Vec<(u32, f64)> = config
        .scan
        .n_list
        .iter()
        .flat_map(|&n| config.scan.sigma_list.iter().map(move |&sigma| (n, sigma)))
        .collect();
    let gains: Vec<f64> = cells
        .par_iter()
        .map(|&(n, sigma)| -> CliResult<f64> {
            let probe = scan_probe(config, n)?;
            let measurement = noisy_or_pd(sigma)?;
            let theta = PI / (2.0 * n as f64);
            let report = cfi(&probe, theta, &measurement)
                .map_err(|err| CliError::from_core(&format!("N={n} sigma={sigma}"), err))?;
            // g = -10 log10(delta_theta sqrt(nu N)) = -10 log10(sqrt(N / F))
            Ok(-10.0 * (n as f64 / report.cfi).sqrt().log10())
        })
        .collect::<CliResult<_>>()?;
    // per-sigma least-squares fit of g = -10 log10(alpha / sqrt(N))
    let mut alpha_for_sigma = Vec::new();
    for &sigma in &config.scan.sigma_list {
        let mut acc = 0.0;
        let mut count = 0usize;
        for (&(n, cell_sigma), &gain) in cells.iter().zip(&gains) {
            if cell_sigma == sigma {
                acc += 5.0 * (n as f64).log10() - gain;
                count += 1;
            }
        }
        alpha_for_sigma.push((sigma, 10f64.powf(acc / count as f64 / 10.0)));
    }
    let mut document = Document::new("gain-vs-n", vec!["N", "sigma", "gain_db", "alpha_fit"]);
    document.comment("theta", "pi/2N");
    for (&(n, sigma), &gain) in cells.iter().zip(&gains) {
        let alpha = alpha_for_sigma
            .iter()
            .find(|(s, _)| *s == sigma)
            .map(|(_, a)| *a)
            .expect("sigma present");
        document.push_row(vec![
            Cell::UInt(n as u64),
            Cell::Float(sigma),
            Cell::Float(gain),
            Cell::Float(alpha),
        ]);
    }
    Ok(document)
}

fn run_bayes_sim(config: &ExperimentConfig) -> CliResult<Document> {
    let state = resolve_state(&config.state)?;
    let measurement = config.measurement()?;
    let n = mean_particle_count(&state).round().max(1.0);
    let nu = config.bayes.nu;
    let sequences = config.bayes.sequences;
    let thetas = config.bayes_thetas();
    struct CellResult {
        theta: f64,
        mean: f64,
        std: f64,
        halfwidth: f64,
        crb: f64,
    }
    let results: Vec<CellResult> = thetas
        .par_iter()
        .enumerate()
        .map(|(index, &theta0)| -> CliResult<CellResult> {
            let cell = format!("theta0={theta0}");
            let fisher = cfi(&state, theta0, &measurement)
                .map_err(|err| CliError::from_core(&cell, err))?
                .cfi;
            let stats = run_sequences(
                &state,
                theta0,
                &measurement,
                nu,
                sequences,
                derive_seed(config.seed, &[index as u64]),
            )
            .map_err(|err| CliError::from_core(&cell, err))?;
            Ok(CellResult {
                theta: theta0,
                mean: stats.mean_estimate,
                std: stats.std_estimate,
                halfwidth: stats.mean_ci_halfwidth,
                crb: 1.0 / (nu as f64 * fisher).sqrt(),
            })
        })
        .collect::<CliResult<_>>()?;
    let mut document = Document::new(
        "bayes-sim",
        vec![
            "theta_true",
            "nu",
            "sequences",
            "mean_estimate",
            "std_estimate",
            "mean_ci_halfwidth",
            "crb_prediction",
            "std_normalized",
            "crb_normalized",
        ],
    );
    document.comment("state", &config.state.constructor);
    document.comment("measurement", measurement);
    // std_estimate of a single sequence is undefined and serialized as NaN
    let scale = (nu as f64 * n).sqrt();
    for r in results {
        document.push_row(vec![
            Cell::Float(r.theta),
            Cell::UInt(nu as u64),
            Cell::UInt(sequences as u64),
            Cell::Float(r.mean),
            Cell::Float(r.std),
            Cell::Float(r.halfwidth),
            Cell::Float(r.crb),
            Cell::Float(r.std * scale),
            Cell::Float(r.crb * scale),
        ]);
    }
    Ok(document)
}

fn run_husimi(config: &ExperimentConfig) -> CliResult<Document> {
    let spec = &config.state;
    let n = spec.n;
    let z_state = match spec.constructor.as_str() {
        "tact" => tact_state(n, spec.chi_t.resolve(auto_chi_t("tact", n))),
        "oat" => {
            let phi = match spec.phi {
                AutoOrValue::Auto => ReorientAngle::Auto,
                AutoOrValue::Value(v) => ReorientAngle::Fixed(v),
            };
            oat_state(n, spec.chi_t.resolve(auto_chi_t("oat", n)), phi)
        }
        other => {
            return Err(CliError::Config(format!(
                "husimi stages need a twisting constructor (tact or oat), got \"{other}\""
            )))
        }
    }
    .map_err(|err| CliError::from_core("state", err))?;
    let initial = coherent_spin_state(Sector::new(n), 0.0, 0.0);
    let rotated = ramsey_rotate(&z_state, config.husimi.theta)
        .map_err(|err| CliError::from_core("rotated stage", err))?;
    let grid = HusimiGrid::uniform(config.husimi.polar_points, config.husimi.azimuth_points)
        .map_err(|err| CliError::from_core("grid", err))?;
    let stages: Vec<(&str, &SectoredState)> = vec![
        ("initial", &initial),
        ("twisted", &z_state),
        ("rotated", &rotated),
    ];
    let mut document = Document::new("husimi", vec!["stage", "polar", "azimuth", "q"]);
    document.comment("n", n);
    document.comment("rotation_theta", config.husimi.theta);
    for (name, state) in stages {
        let map = husimi(state, &grid).map_err(|err| CliError::from_core(name, err))?;
        for (pi_idx, &polar) in map.polar.iter().enumerate() {
            for (ai_idx, &azimuth) in map.azimuth.iter().enumerate() {
                document.push_row(vec![
                    Cell::Text(name.to_string()),
                    Cell::Float(polar),
                    Cell::Float(azimuth),
                    Cell::Float(map.values[pi_idx][ai_idx]),
                ]);
            }
        }
    }
    Ok(document)
}
