use std::collections::BTreeMap;

use htmest::io::{read_ellipse, read_sample};
use htmest::sim::{self, run_table1, table4_repeat, univariate_draw, Experiment, ExperimentConfig, Scale};

fn small(experiment: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(experiment, Scale::Desk);
    cfg.replications = cfg.replications.min(20);
    cfg.bootstrap = cfg.bootstrap.min(60);
    cfg.series_terms = 300;
    cfg
}

fn files_of(cfg: &ExperimentConfig) -> BTreeMap<String, Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    let written = sim::run(cfg).unwrap().write_to(dir.path()).unwrap();
    written.into_iter().map(|name| {
        let bytes = std::fs::read(dir.path().join(&name)).unwrap();
        (name, bytes)
    }).collect()
}

#[test]
fn huge_tuning_constant_reproduces_the_sample_mean() {
    let mut cfg = ExperimentConfig::preset(Experiment::Table1, Scale::Desk);
    cfg.replications = 200;
    cfg.alphas = vec![vec![1.5], vec![2.0]];
    cfg.c_grid = vec![1e12];
    let report = run_table1(&cfg).unwrap();
    for alpha in [1.5, 2.0] {
        let devs: Vec<f64> = (0..200)
            .map(|rep| {
                let (xs, _) = univariate_draw(cfg.seed, "table1", alpha, 3.0, 100, rep).unwrap();
                (xs.iter().sum::<f64>() / 100.0 - 3.0).abs()
            })
            .collect();
        let mad = devs.iter().sum::<f64>() / 200.0;
        let label = format!("{alpha:.1}");
        let cell = report.cell(&[label.as_str()], "1000000000000").unwrap();
        assert!((cell.value - mad).abs() < 1e-10, "alpha {alpha}: {} vs {mad}", cell.value);
    }
}

#[test]
fn table1_layout_and_fig1() {
    let mut cfg = small(Experiment::Table1);
    cfg.alphas = vec![vec![1.1], vec![1.9]];
    let files = files_of(&cfg);
    assert!(files.contains_key("table1.csv") && files.contains_key("table1.json"));
    let csv = String::from_utf8(files["table1.csv"].clone()).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("alpha,0.5,0.5_se,1,1_se"));
    assert_eq!(csv.lines().count(), 3);
    let fig1 = String::from_utf8(files["fig1.csv"].clone()).unwrap();
    let mut lines = fig1.lines();
    assert_eq!(lines.next(), Some("alpha,c,avg_dev,se"));
    assert_eq!(lines.count(), 2 * 9);

    let fig_only = files_of(&ExperimentConfig { experiment: Experiment::Fig1, ..cfg.clone() });
    assert_eq!(fig_only.keys().collect::<Vec<_>>(), vec!["fig1.csv"]);
    assert_eq!(fig_only["fig1.csv"], files["fig1.csv"]);
}

#[test]
fn reruns_are_byte_identical() {
    for exp in [Experiment::Table1, Experiment::Table2, Experiment::Table4, Experiment::Fig2Density, Experiment::Fig3Ellipse] {
        let mut cfg = small(exp);
        if exp == Experiment::Table4 {
            cfg.alphas.truncate(2);
            cfg.n = vec![60];
            cfg.replications = 6;
        }
        if exp == Experiment::Fig2Density {
            cfg.n = vec![300];
            cfg.grid_points = 20;
        }
        assert_eq!(files_of(&cfg), files_of(&cfg), "{exp:?}");
    }
}

#[test]
fn seed_changes_output() {
    let cfg = small(Experiment::Table1);
    let other = ExperimentConfig { seed: cfg.seed + 1, ..cfg.clone() };
    assert_ne!(files_of(&cfg)["table1.csv"], files_of(&other)["table1.csv"]);
}

#[test]
fn table2_and_table3_shapes() {
    let mut cfg = small(Experiment::Table2);
    cfg.alphas = vec![vec![1.3], vec![2.0]];
    let t = htmest::sim::run_table2_table3(&cfg).unwrap();
    assert_eq!(t.table2.columns, vec!["M-estimation", "m=n/ln(ln(n)) (65)", "m=n^0.9 (63)", "m=n^0.95 (79)"]);
    assert_eq!(t.table2.rows.len(), 6);
    assert_eq!(t.table3.columns, vec!["1.3", "2.0"]);
    for row in &t.table2.rows {
        for cell in &row.cells {
            assert!((0.0..=1.0).contains(&cell.value));
            assert!((cell.se - (cell.value * (1.0 - cell.value) / 20.0).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn region_coverage_is_nested_in_level() {
    let mut cfg = small(Experiment::Table4);
    cfg.bootstrap = 100;
    for rep in 0..8 {
        let hits = table4_repeat(&cfg, &[1.5, 1.5], 80, rep).unwrap();
        assert_eq!(hits.len(), 3);
        assert!(hits[0] <= hits[1] && hits[1] <= hits[2], "rep {rep}: {hits:?}");
    }
}

#[test]
fn fig3_boundary_is_the_region_edge() {
    let cfg = small(Experiment::Fig3Ellipse);
    let files = files_of(&cfg);
    let sample = read_sample::<f64, _>(&files["fig3_sample.csv"][..]).unwrap();
    assert_eq!((sample.n(), sample.p()), (100, 2));
    let region: serde_json::Value = serde_json::from_slice(&files["fig3_region.json"]).unwrap();
    let center: Vec<f64> = serde_json::from_value(region["center"].clone()).unwrap();
    let sigma: Vec<Vec<f64>> = serde_json::from_value(region["sigma"].clone()).unwrap();
    let tau = region["tau"].as_f64().unwrap();
    let n = region["n"].as_u64().unwrap() as f64;
    let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
    let inv = [[sigma[1][1] / det, -sigma[0][1] / det], [-sigma[1][0] / det, sigma[0][0] / det]];
    let points = read_ellipse(&files["fig3_ellipse.csv"][..]).unwrap();
    assert_eq!(points.len(), cfg.ellipse_points);
    for p in points {
        let d = [p.x[0] - center[0], p.x[1] - center[1]];
        let q = n * (d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]));
        assert!((q - tau).abs() <= 1e-8 * tau.max(1.0), "t={}: {q} vs {tau}", p.t);
    }
}

#[test]
fn fig2_density_grid_shape() {
    let mut cfg = small(Experiment::Fig2Density);
    cfg.n = vec![400];
    cfg.grid_points = 15;
    let files = files_of(&cfg);
    let names: Vec<&String> = files.keys().collect();
    assert_eq!(names, ["fig2_1.3_1.8_density.csv", "fig2_1.3_1.8_sample.csv", "fig2_1.5_1.5_density.csv", "fig2_1.5_1.5_sample.csv"]);
    let dens = String::from_utf8(files["fig2_1.5_1.5_density.csv"].clone()).unwrap();
    assert_eq!(dens.lines().count(), 1 + 15 * 15);
    assert!(dens.lines().skip(1).all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn desk_scale_agrees_with_full_scale() {
    // Independent Monte Carlo runs of 1,000 and 10,000 repeats.
    let mut desk = ExperimentConfig::preset(Experiment::Table1, Scale::Desk);
    desk.alphas = vec![vec![1.2], vec![1.6], vec![2.0]];
    desk.c_grid = vec![1.0, 2.0, 3.0];
    let full = ExperimentConfig { replications: 10_000, seed: desk.seed + 1, ..desk.clone() };
    let a = run_table1(&desk).unwrap();
    let b = run_table1(&full).unwrap();
    for (row, col) in [("1.2", "1"), ("1.2", "3"), ("1.6", "2"), ("2.0", "1"), ("2.0", "3")] {
        let x = a.cell(&[row], col).unwrap();
        let y = b.cell(&[row], col).unwrap();
        let tol = 3.0 * (x.se * x.se + y.se * y.se).sqrt();
        assert!((x.value - y.value).abs() <= tol, "({row}, {col}): {} vs {}", x.value, y.value);
    }
}

#[test]
fn config_files_override_presets() {
    let cfg = ExperimentConfig::from_json(r#"{"experiment": "table4", "n": 200, "B": 100, "alphas": [[1.5, 1.9]]}"#, Experiment::Table1, None).unwrap();
    assert_eq!(cfg.experiment, Experiment::Table4);
    assert_eq!(cfg.n, vec![200]);
    assert_eq!(cfg.bootstrap, 100);
    assert_eq!(cfg.mu, vec![1.0, 14.0]);
    let paper = ExperimentConfig::from_json("{}", Experiment::Table2, Some(Scale::Paper)).unwrap();
    assert_eq!((paper.replications, paper.bootstrap), (1_000, 2_000));
    assert!(ExperimentConfig::from_json(r#"{"replicates": 3}"#, Experiment::Table1, None).is_err());
    assert!(ExperimentConfig::from_json(r#"{"alphas": [0.8]}"#, Experiment::Table1, None).is_err());
}
