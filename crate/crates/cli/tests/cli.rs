use std::path::Path;
use std::process::Command;

use gravfield::{build_synthetic_scene, PhysicalConstants, SyntheticScene};
use gravfield_cli::bench::{crossover_table, run_bench};
use gravfield_cli::convergence::run_convergence;
use gravfield_cli::forward::{run_forward, RunManifest};
use gravfield_cli::{Method, MethodParams, RunConfig, StationSpec};

fn gravfield(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gravfield")).args(args).output().unwrap()
}

fn read_gz(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn forward_writes_one_row_per_station() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = gravfield(&["forward", "--method", "sum-an", "--cells", "12", "--out", out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(dir.path().join("gz.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,gz_mGal"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0.00000000000e0");
    assert_eq!(text.lines().count(), 22501);
    assert!(text.ends_with('\n') && !text.contains('\r'));
    let manifest = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.station_count, 22500);
    assert_eq!(manifest.config.method, Method::SumAn);
}

#[test]
fn manifest_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = gravfield(&[
        "forward", "--method", "fmm", "--cells", "24", "--order-p", "6", "--stations", "40x30", "--out",
        a.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let manifest = a.join("manifest.json");
    let again = gravfield(&["forward", "--manifest", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    let first = std::fs::read(a.join("gz.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("gz.csv")).unwrap());
    assert_eq!(first.iter().filter(|&&c| c == b'\n').count(), 1201);
}

#[test]
fn exit_codes() {
    assert_eq!(gravfield(&["forward", "--method", "sum-an", "--cells", "10"]).status.code(), Some(2));
    assert_eq!(gravfield(&["forward", "--method", "nope", "--cells", "12"]).status.code(), Some(2));
    assert_eq!(gravfield(&["forward", "--method", "fem-d", "--cells", "12", "--levels", "4"]).status.code(), Some(2));
    assert_eq!(gravfield(&["forward", "--method", "fem-d", "--stations", "3"]).status.code(), Some(2));
    assert_eq!(gravfield(&["convergence", "--method", "sum-g1", "--cells", "12,24"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let stuck = gravfield(&[
        "forward", "--method", "fem-d", "--cells", "12", "--rtol", "1e-300", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(stuck.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&stuck.stderr).contains("did not converge"));
}

#[test]
fn fem_manifest_reports_solver_statistics() {
    let outcome = run_forward(&RunConfig::synthetic(Method::FemGt, 24)).unwrap();
    let stats = outcome.manifest.solve.as_ref().unwrap();
    assert!(stats.converged);
    assert!(stats.iterations >= 1 && stats.iterations <= 10, "{} iterations", stats.iterations);
    assert_eq!(stats.residual_history.len(), stats.iterations + 1);
    // gz at the surface above the anomaly is positive and peaks at the centre.
    let gz = outcome.result.gz();
    let centre = gz[75 * 150 + 75];
    assert!(centre > 0.0);
    assert!(gz.iter().all(|&g| g <= centre * 1.001));
}

#[test]
fn fmm_matches_point_quadrature_at_the_surface() {
    let mut fmm = RunConfig::synthetic(Method::Fmm, 24);
    fmm.params.order_p = 20;
    let a = run_forward(&fmm).unwrap().result.gz();
    let b = run_forward(&RunConfig::synthetic(Method::SumG1z, 24)).unwrap().result.gz();
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(worst / scale <= 1e-6, "{:.2e}", worst / scale);
}

#[test]
fn user_scene_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.json");
    gravfield::io::write_scene(&path, &build_synthetic_scene(12).unwrap()).unwrap();
    let mut from_file = RunConfig::synthetic(Method::SumG1z, 12);
    from_file.cells = None;
    from_file.scene = Some(path);
    from_file.stations = StationSpec { nx: 9, ny: 7 };
    let mut direct = RunConfig::synthetic(Method::SumG1z, 12);
    direct.stations = from_file.stations;
    let a = run_forward(&from_file).unwrap();
    assert_eq!(a.result.gz(), run_forward(&direct).unwrap().result.gz());
    assert_eq!(a.manifest.scene.cells, [12, 12, 12]);
    let mut missing = from_file.clone();
    missing.scene = Some(dir.path().join("absent.json"));
    assert!(run_forward(&missing).is_err());
}

#[test]
fn centroid_stations_are_written_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::synthetic(Method::SumG2, 12);
    config.stations = StationSpec { nx: 4, ny: 5 };
    config.include_edges = false;
    let outcome = run_forward(&config).unwrap();
    outcome.write(dir.path()).unwrap();
    let gz = read_gz(&dir.path().join("gz.csv"));
    assert_eq!(gz.len(), 20);
    for (written, exact) in gz.iter().zip(outcome.result.gz_mgal()) {
        assert!((written - exact).abs() <= 1e-11 * exact.abs());
    }
}

#[test]
fn fast_summation_and_fmm_rates() {
    let scene = SyntheticScene::default();
    let c = PhysicalConstants::default();
    let r = run_convergence(&[Method::SumG2], &[12, 24, 48], &MethodParams::default(), &scene, c).unwrap();
    let [e1, e2, ei] = r[0].rates_triple();
    assert!((e1 - 2.05).abs() < 0.3 && (e2 - 1.52).abs() < 0.3 && (ei - 0.99).abs() < 0.3);
    let p4 = MethodParams { order_p: 4, ..MethodParams::default() };
    let r = run_convergence(&[Method::Fmm], &[12, 24, 48], &p4, &scene, c).unwrap();
    assert!(r[0].rates.e1.slope < 0.5);
}

#[test]
fn bench_trends_and_crossover() {
    let c = PhysicalConstants::default();
    let params = MethodParams::default();
    let stations = StationSpec { nx: 30, ny: 30 };
    let records = run_bench(&[Method::SumG1, Method::SumG1z, Method::SumAn], &[48, 96], stations, &params, c).unwrap();
    let per = |m: Method, n: usize| {
        records.iter().find(|r| r.method == m && r.cells == n).unwrap().per_station_seconds.unwrap()
    };
    let growth = per(Method::SumG1, 96) / per(Method::SumG1, 48);
    assert!((4.0..16.0).contains(&growth), "growth {growth}");
    assert!(per(Method::SumAn, 96) > 10.0 * per(Method::SumG1z, 96));
    assert!(records.iter().all(|r| r.wall_seconds > 0.0));

    let more = run_bench(&[Method::SumG1z, Method::SumAn, Method::FemGt], &[12, 24], stations, &params, c).unwrap();
    for row in crossover_table(&more) {
        assert!(row.fem_gt_vs_sum_an.unwrap() < row.fem_gt_vs_sum_g1z.unwrap());
        assert!(row.fmm_vs_sum_an.is_none());
    }
}
