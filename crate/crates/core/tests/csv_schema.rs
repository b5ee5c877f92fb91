use std::path::Path;

use wavefront_core::harness::{run_experiment, Experiment, ScenarioConfig};

fn tiny(out: &Path) -> ScenarioConfig {
    ScenarioConfig {
        apertures_m: vec![[0.025, 0.1]],
        grid_d_min_m: 8.0,
        grid_d_max_m: 12.0,
        grid_theta_min_deg: -2.0,
        grid_theta_max_deg: 2.0,
        sweep_distances_m: vec![10.0],
        n_mc: 3,
        room_x_m: 20.0,
        room_y_m: 20.0,
        room_step_m: 10.0,
        map_step_m: 10.0,
        useful_x_m: 10.0,
        useful_y_m: 10.0,
        sir_sweep_delta_step_m: 5.0,
        ppp_n_mc: 4,
        quadrature_step_lambda: 0.5,
        output_dir: out.to_path_buf(),
        ..ScenarioConfig::default()
    }
}

/// Reads a CSV file, checks its header and returns the rows.
fn read(path: &Path, header: &[&str]) -> Vec<csv::StringRecord> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let got: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(got, header, "{}", path.display());
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty(), "{}", path.display());
    rows
}

fn num(rec: &csv::StringRecord, i: usize) -> f64 {
    rec[i].parse().unwrap()
}

fn name(path: &Path) -> &str {
    path.file_name().unwrap().to_str().unwrap()
}

#[test]
fn fraunhofer_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let paths = run_experiment(&cfg, Experiment::Fraunhofer).unwrap();
    let rows = read(&paths[0], &["f0_hz", "diameter_m", "d_f_m"]);
    assert_eq!(
        rows.len(),
        cfg.fraunhofer_f0_ghz.len() * cfg.fraunhofer_diameters_m.len()
    );
    for r in &rows {
        let lambda = 3e8 / num(r, 0);
        assert!((num(r, 2) - 2.0 * num(r, 1).powi(2) / lambda).abs() < 1e-9 * num(r, 2));
    }
}

#[test]
fn rmse_sweep_schema() {
    let dir = tempfile::tempdir().unwrap();
    let paths = run_experiment(&tiny(dir.path()), Experiment::RmseSweep).unwrap();
    let names: Vec<&str> = paths.iter().map(|p| name(p)).collect();
    assert_eq!(
        names,
        [
            "rmse-sweep_r-lens_ae100.csv",
            "rmse-sweep_r-lens_ae100_trials.csv",
            "rmse-sweep_nr-lens_ae100.csv",
            "rmse-sweep_nr-lens_ae100_trials.csv",
            "rmse-sweep_no-lens_ae100.csv",
            "rmse-sweep_no-lens_ae100_trials.csv",
        ]
    );
    let summary = ["d_m", "theta_rad", "arch", "estimator", "a_e", "rmse_m", "n_mc", "seed"];
    let trials = [
        "d_m",
        "theta_rad",
        "arch",
        "estimator",
        "a_e",
        "trial",
        "d_hat_m",
        "theta_hat_rad",
        "error_m",
    ];
    let rows = read(&paths[4], &summary);
    let estimators: Vec<&str> = rows.iter().map(|r| r.get(3).unwrap()).collect();
    assert_eq!(estimators, ["ml", "differential"]);
    assert_eq!(read(&paths[0], &summary)[0].get(3), Some("energy-scan"));

    // each RMSE is recomputable from its trial log
    let log = read(&paths[5], &trials);
    for r in &rows {
        let errs: Vec<f64> = log.iter().filter(|t| t[3] == r[3]).map(|t| num(t, 8)).collect();
        assert_eq!(errs.len(), 3);
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        assert!((rmse - num(r, 5)).abs() < 1e-9);
    }
}

#[test]
fn grid_and_sweep_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    for exp in [Experiment::RmseMap, Experiment::SirMap, Experiment::CoveragePpp] {
        let paths = run_experiment(&cfg, exp).unwrap();
        assert!(!paths.is_empty());
        for p in &paths {
            assert!(name(p).starts_with(exp.name()), "{}", p.display());
            let rows = read(p, &["x_m", "y_m", "value"]);
            assert_eq!(rows.len(), 9);
            // the receiver corner is never a valid source position
            assert!(num(&rows[0], 2).is_nan());
        }
    }
    let paths = run_experiment(&cfg, Experiment::SirSweep).unwrap();
    let names: Vec<&str> = paths.iter().map(|p| name(p)).collect();
    assert!(names.contains(&"sir-closed-form_no-lens_ae100.csv"));
    assert!(!names.iter().any(|n| n.starts_with("sir-closed-form_nr-lens")));
    for p in &paths {
        let rows = read(p, &["delta_d_m", "arch", "a_e", "sir_db"]);
        assert_eq!(rows.len(), 8);
        assert_eq!(&rows[0][2], "100");
    }
}

#[test]
fn dump_response_schema() {
    let dir = tempfile::tempdir().unwrap();
    let paths = run_experiment(&tiny(dir.path()), Experiment::DumpResponse).unwrap();
    let counts: Vec<usize> = paths
        .iter()
        .map(|p| read(p, &["antenna_index", "magnitude", "phase_rad"]).len())
        .collect();
    assert_eq!(counts, [1, 41, 400]);
}
