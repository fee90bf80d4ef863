//! End-to-end checks of the experiment runners and the binary surface.

use std::path::PathBuf;
use std::process::Command;

use qcrb_cli::config::{Experiment, ExperimentConfig};
use qcrb_cli::error::CliError;
use qcrb_cli::experiments;

fn run_doc(experiment: Experiment, config: &ExperimentConfig) -> qcrb_cli::output::Document {
    experiments::run(experiment, config).expect("experiment should succeed")
}

#[test]
fn table1_rows_for_the_default_twisted_state() {
    let config = ExperimentConfig::default_for(Experiment::Table1);
    let doc = run_doc(Experiment::Table1, &config);
    assert_eq!(doc.rows.len(), 3);
    let csv = doc.render_csv();
    // single sector: every counting measurement attains the bound everywhere
    assert!(csv.contains("TOP,0<=theta<=pi,true"));
    assert!(csv.contains("SOP,0<=theta<=pi,true"));
    assert!(csv.contains("PD,0<=theta<=pi,true,requires a definite particle number"));
}

#[test]
fn table1_rows_for_oat_probe_are_endpoints_only() {
    let mut config = ExperimentConfig::default_for(Experiment::Table1);
    config.state.constructor = "oat".into();
    let doc = run_doc(Experiment::Table1, &config);
    let csv = doc.render_csv();
    assert!(csv.contains("TOP,theta->0,pi,true") || csv.contains("TOP,theta->0"));
    for row in &doc.rows {
        match &row[1] {
            qcrb_cli::output::Cell::Text(cond) => assert_eq!(cond, "theta->0,pi"),
            other => panic!("unexpected cell {other:?}"),
        }
    }
}

#[test]
fn table1_multi_sector_pd_row_inapplicable() {
    let mut config = ExperimentConfig::default_for(Experiment::Table1);
    config.state.constructor = "multi-sector".into();
    config.state.sectors = vec![
        qcrb_cli::config::SectorSpec {
            twice_j: 2,
            re: vec![2.0, 1.0, 2.0],
            im: vec![],
            weight: 0.5,
        },
        qcrb_cli::config::SectorSpec {
            twice_j: 4,
            re: vec![1.0, 2.0, 3.0, 2.0, 1.0],
            im: vec![],
            weight: 0.5,
        },
    ];
    let doc = run_doc(Experiment::Table1, &config);
    let csv = doc.render_csv();
    assert!(csv.contains("PD,inapplicable,false"));
    assert!(csv.contains("SOP,theta->0,pi,true"));
    assert!(csv.contains("TOP,0<=theta<=pi,true"));
}

#[test]
fn noise_scan_row_count_and_baseline() {
    let mut config = ExperimentConfig::default_for(Experiment::NoiseScan);
    config.grid.points = 11;
    config.scan.n_list = vec![20];
    config.scan.sigma_list = vec![0.0, 0.7];
    let doc = run_doc(Experiment::NoiseScan, &config);
    assert_eq!(doc.rows.len(), 11 * 2);
    // the sigma = 0 baseline is flat near 1.2/sqrt(N)
    let want = 1.197 / (20f64).sqrt();
    for row in doc.rows.iter().take(11) {
        let value = match row[3] {
            qcrb_cli::output::Cell::Float(v) => v,
            _ => panic!("expected float"),
        };
        assert!((value - want).abs() < 0.01 * want, "{value} vs {want}");
    }
    // with noise the sensitivity collapses at the interval ends
    let first_noisy = match doc.rows[11][3] {
        qcrb_cli::output::Cell::Float(v) => v,
        _ => panic!("expected float"),
    };
    assert!(first_noisy > 10.0 * want);
}

#[test]
fn gain_scan_matches_published_anchors() {
    let mut config = ExperimentConfig::default_for(Experiment::GainVsN);
    config.scan.n_list = vec![50, 200];
    config.scan.sigma_list = vec![0.0, 0.7];
    let doc = run_doc(Experiment::GainVsN, &config);
    let mut gain_200_07 = f64::NAN;
    let mut gain_50_07 = f64::NAN;
    let mut alpha_ideal = f64::NAN;
    for row in &doc.rows {
        let n = match row[0] {
            qcrb_cli::output::Cell::UInt(v) => v,
            _ => panic!("expected uint"),
        };
        let sigma = match row[1] {
            qcrb_cli::output::Cell::Float(v) => v,
            _ => panic!("expected float"),
        };
        let gain = match row[2] {
            qcrb_cli::output::Cell::Float(v) => v,
            _ => panic!("expected float"),
        };
        let alpha = match row[3] {
            qcrb_cli::output::Cell::Float(v) => v,
            _ => panic!("expected float"),
        };
        if n == 200 && sigma == 0.7 {
            gain_200_07 = gain;
        }
        if n == 50 && sigma == 0.7 {
            gain_50_07 = gain;
        }
        if sigma == 0.0 {
            alpha_ideal = alpha;
        }
    }
    assert!((gain_200_07 - 3.0).abs() <= 0.5, "gain(200, 0.7) = {gain_200_07}");
    assert!(gain_50_07 <= 0.3, "gain(50, 0.7) = {gain_50_07}");
    assert!((alpha_ideal - 1.24).abs() < 0.06, "alpha = {alpha_ideal}");
}

#[test]
fn bayes_sim_tracks_the_information_bound() {
    // default nine-phase run: simulated spread sits on the predicted curve
    // and the estimates are consistent with the true phases
    let config = ExperimentConfig::default_for(Experiment::BayesSim);
    let doc = run_doc(Experiment::BayesSim, &config);
    assert_eq!(doc.rows.len(), 9);
    for row in &doc.rows {
        let get = |i: usize| match row[i] {
            qcrb_cli::output::Cell::Float(v) => v,
            qcrb_cli::output::Cell::UInt(v) => v as f64,
            _ => panic!("expected numeric cell"),
        };
        let (theta0, sequences) = (get(0), get(2));
        let (mean, std, crb) = (get(3), get(4), get(6));
        assert!((mean - theta0).abs() <= 3.0 * std / sequences.sqrt());
        let ratio = std / crb;
        assert!((0.7..1.45).contains(&ratio), "theta0={theta0}: ratio {ratio}");
    }
}

#[test]
fn bayes_sim_reproducible_and_single_sequence_nan() {
    let mut config = ExperimentConfig::default_for(Experiment::BayesSim);
    config.bayes.sequences = 4;
    config.bayes.theta_list = vec![0.9];
    config.seed = 77;
    let a = run_doc(Experiment::BayesSim, &config).render_csv();
    let b = run_doc(Experiment::BayesSim, &config).render_csv();
    assert_eq!(a, b);
    config.bayes.sequences = 1;
    let doc = run_doc(Experiment::BayesSim, &config);
    let csv = doc.render_csv();
    let data_line = csv.lines().last().unwrap();
    assert!(data_line.contains("NaN"), "std sentinel missing: {data_line}");
    // the NaN becomes null in the JSON mirror
    let json = doc.render_json();
    assert!(json["rows"][0].as_array().unwrap().iter().any(|v| v.is_null()));
}

#[test]
fn husimi_grid_size_honored_and_profiles_sane() {
    let mut config = ExperimentConfig::default_for(Experiment::Husimi);
    config.state.n = 60;
    config.husimi.polar_points = 21;
    config.husimi.azimuth_points = 40;
    let doc = run_doc(Experiment::Husimi, &config);
    assert_eq!(doc.rows.len(), 3 * 21 * 40);
    // stage names appear in order and the initial stage peaks at the pole
    let mut initial_first = f64::NAN;
    let mut initial_max = f64::NEG_INFINITY;
    for row in &doc.rows {
        let stage = match &row[0] {
            qcrb_cli::output::Cell::Text(s) => s.clone(),
            _ => panic!("expected text"),
        };
        if stage == "initial" {
            let q = match row[3] {
                qcrb_cli::output::Cell::Float(v) => v,
                _ => panic!("expected float"),
            };
            if initial_first.is_nan() {
                initial_first = q;
            }
            initial_max = initial_max.max(q);
        }
    }
    assert!(initial_max > 0.0);
    // polar = 0 is the first lattice row; |j,j> along z peaks there
    assert!((initial_first - initial_max).abs() < 1e-12);
}

#[test]
fn json_state_import_drives_a_scan() {
    // export from the library, re-import through the config layer
    let dir = std::env::temp_dir().join("qcrb-cli-test-state");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("probe.json");
    let n = 8u32;
    let chi_t = (2.0 * std::f64::consts::PI * n as f64).ln() / (2.0 * n as f64);
    let probe = qcrb_core::interferometer::frame_to_x(
        &qcrb_core::states::tact_state(n, chi_t).unwrap(),
    )
    .unwrap();
    std::fs::write(&path, probe.to_json()).unwrap();
    let mut config = ExperimentConfig::default_for(Experiment::FisherScan);
    config.state.constructor = "json".into();
    config.state.path = Some(path);
    config.grid.points = 21;
    config.measurement.kind = "top".into();
    let doc = run_doc(Experiment::FisherScan, &config);
    assert_eq!(doc.rows.len(), 21);
    // the imported probe is real symmetric, so cfi tracks qfi on every row
    for row in &doc.rows {
        let (qfi, cfi) = match (&row[4], &row[5]) {
            (qcrb_cli::output::Cell::Float(q), qcrb_cli::output::Cell::Float(c)) => (*q, *c),
            _ => panic!("expected float cells"),
        };
        assert!((cfi - qfi).abs() <= 1e-6 * qfi);
    }
}

#[test]
fn rejects_mismatched_experiment_tag() {
    let mut config = ExperimentConfig::default_for(Experiment::Table1);
    config.experiment = Some("husimi".into());
    let err = experiments::run(Experiment::Table1, &config).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn numeric_errors_map_to_exit_three() {
    let err = CliError::from_core(
        "cell",
        qcrb_core::Error::QcrbViolated { cfi: 2.0, qfi: 1.0 },
    );
    assert_eq!(err.exit_code(), 3);
    let err = CliError::from_core("cell", qcrb_core::Error::AsymmetricState);
    assert_eq!(err.exit_code(), 2);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcrb"))
}

#[test]
fn binary_runs_and_exit_codes() {
    let dir = std::env::temp_dir().join("qcrb-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out: PathBuf = dir.join("t1.csv");
    let status = binary()
        .args(["table1", "--out"])
        .arg(&out)
        .status()
        .expect("binary runs");
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# qcrb v"));
    assert!(text.contains("# config_hash=0x"));
    assert!(text.contains("# seed="));

    // unreadable config: exit 2
    let status = binary()
        .args(["table1", "--config", "/nonexistent/qcrb.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // bad constructor in a real file: exit 2
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[state]\nconstructor = \"nosuch\"\nn = 4\nchi_t = \"auto\"\nphi = \"auto\"\npolar = 0.0\nazimuth = 0.0\n").unwrap();
    let status = binary()
        .args(["table1", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("x.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn binary_output_independent_of_worker_count() {
    let dir = std::env::temp_dir().join("qcrb-cli-test-workers");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("scan.toml");
    std::fs::write(
        &config,
        "experiment = \"noise-scan\"\n[grid]\npoints = 7\nlo = 0.0\nhi = 3.141592653589793\n\
         [scan]\nn_list = [8, 12]\nsigma_list = [0.0, 0.5]\n",
    )
    .unwrap();
    let run = |workers: &str, out: &PathBuf| {
        let status = binary()
            .args(["noise-scan", "--config"])
            .arg(&config)
            .args(["--workers", workers, "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let one = run("1", &dir.join("w1.csv"));
    let many = run("6", &dir.join("w6.csv"));
    assert_eq!(one, many);
}

#[test]
fn binary_seed_override_changes_hash_and_json_mirror() {
    let dir = std::env::temp_dir().join("qcrb-cli-test-json");
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("bs.csv");
    let mut config_text = String::from("experiment = \"bayes-sim\"\n[bayes]\nnu = 40\nsequences = 2\ntheta_list = [0.9]\n");
    config_text.push_str("[state]\nconstructor = \"tact\"\nn = 6\nchi_t = \"auto\"\nphi = \"auto\"\npolar = 0.0\nazimuth = 0.0\n");
    let config_path = dir.join("bs.toml");
    std::fs::write(&config_path, config_text).unwrap();
    let run = |seed: &str, out: &PathBuf| {
        let status = binary()
            .args(["bayes-sim", "--config"])
            .arg(&config_path)
            .args(["--seed", seed, "--json", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("3", &out);
    let b = run("4", &out);
    assert_ne!(a, b);
    let json_path = out.with_extension("json");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(json["meta"]["experiment"], "bayes-sim");
    assert_eq!(json["columns"].as_array().unwrap().len(), 9);
}
