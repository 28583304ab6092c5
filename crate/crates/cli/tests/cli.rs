use std::process::{Command, Output};

use qecs_cli::{contour, run_named, Grid};
use qecs_core::protocol::{
    average_cat_fidelity, distribute, generate_quasi_ecs, purify, GenerationConfig, PurificationConfig,
};
use qecs_core::{LossSpec, TruncationSpec};

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn list_presets() {
    let out = simulate(&["--list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.contains("tmsvs-baseline"));
}

#[test]
fn config_errors_exit_with_one() {
    assert_eq!(simulate(&["no-such-preset"]).status.code(), Some(1));
    assert_eq!(simulate(&["purity", "--set", "eta.min=-1"]).status.code(), Some(1));
    assert_eq!(simulate(&["purity", "--set", "eta.steps=1"]).status.code(), Some(1));
    assert_eq!(simulate(&["purity", "--plot"]).status.code(), Some(1));
    assert_eq!(simulate(&["purity", "--bogus-flag"]).status.code(), Some(1));
    assert_eq!(
        simulate(&["purity", "--config", "/nonexistent/sweep.toml"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn failed_rows_exit_with_two_and_are_flushed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ecs.csv");
    let status = simulate(&[
        "ecs-fidelity",
        "--nmax",
        "4",
        "--set",
        "r.min=0",
        "--set",
        "r.max=0.3",
        "--set",
        "r.steps=2",
        "--set",
        "z.steps=2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(2));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().starts_with("0.05,0,fidelity_ecs,,"));
}

#[test]
fn default_grid_has_400_rows() {
    let out = simulate(&["purify-prob", "--nmax", "4", "--jobs", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 401);
    assert!(text.starts_with("eta,r,metric,value,p_subtract,p_purified,p_tel,tail_mass,error\n"));
}

#[test]
fn single_point_matches_direct_call() {
    let table = run_named(
        "cat-teleport",
        &[
            "purified=true",
            "eta.min=0.6",
            "eta.max=0.6",
            "eta.steps=1",
            "r.min=0.35",
            "r.max=0.35",
            "r.steps=1",
        ],
    )
    .unwrap();
    assert_eq!(table.rows.len(), 1);
    let row = &table.rows[0];

    let trunc = TruncationSpec::default();
    let gen = generate_quasi_ecs(&GenerationConfig::at_operating_point(0.35).unwrap(), trunc).unwrap();
    let l = LossSpec::new(0.6).unwrap();
    let pur = purify(&distribute(&gen.state, &l, &l).unwrap(), &PurificationConfig::default()).unwrap();
    let avg = average_cat_fidelity(&pur.state, 0.55).unwrap();
    assert_eq!(row.value, Some(avg.fidelity));
    assert_eq!(row.p_subtract, Some(gen.probability));
    assert_eq!(row.p_purified, Some(pur.probability));
    assert_eq!(row.p_tel, Some(pur.probability * avg.success_probability));
}

#[test]
fn config_file_and_set_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, "x = \"z\"\nz.steps = 2\nr.steps = 2\neta = 0.9\nN = 1\n").unwrap();
    let out = simulate(&[
        "purity",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "r.steps=3",
        "--nmax",
        "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("z,r,"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn plot_writes_svg_and_contour() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cat.csv");
    let status = simulate(&[
        "cat-teleport",
        "--set",
        "purified=true",
        "--set",
        "eta.steps=8",
        "--set",
        "r.steps=8",
        "--out",
        out.to_str().unwrap(),
        "--plot",
    ]);
    assert!(status.status.success());
    let svg = std::fs::read_to_string(dir.path().join("cat.svg")).unwrap();
    assert!(svg.contains("<line"));
    let contour_csv = std::fs::read_to_string(dir.path().join("cat.contour.csv")).unwrap();
    assert!(contour_csv.lines().count() > 1);
}

#[test]
fn contour_vertices_sit_on_sign_changes() {
    let table = run_named("cat-teleport", &["purified=true", "eta.steps=10", "r.steps=10"]).unwrap();
    let grid = Grid::from_table(&table).unwrap();
    let level = 2.0 / 3.0;
    let segments = contour(&grid, level);
    assert!(!segments.is_empty());
    // brute force: every grid edge whose endpoints straddle the level
    let mut edges = Vec::new();
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    for i in 0..nx {
        for j in 0..ny {
            let v = grid.values[i][j].unwrap() - level;
            if i + 1 < nx && v * (grid.values[i + 1][j].unwrap() - level) <= 0.0 {
                edges.push((grid.xs[i], grid.xs[i + 1], grid.ys[j], grid.ys[j]));
            }
            if j + 1 < ny && v * (grid.values[i][j + 1].unwrap() - level) <= 0.0 {
                edges.push((grid.xs[i], grid.xs[i], grid.ys[j], grid.ys[j + 1]));
            }
        }
    }
    let dx = grid.xs[1] - grid.xs[0];
    let dy = grid.ys[1] - grid.ys[0];
    for seg in segments {
        for (x, y) in seg {
            let near = edges
                .iter()
                .any(|&(x0, x1, y0, y1)| x >= x0 - dx && x <= x1 + dx && y >= y0 - dy && y <= y1 + dy);
            assert!(near, "contour vertex ({x}, {y}) far from any sign change");
        }
    }
}

#[test]
fn tmsvs_preset_stays_classical() {
    let table = run_named("tmsvs-baseline", &["nmax=6", "eta.steps=5", "r.steps=5"]).unwrap();
    assert!(table.max_value().unwrap() < 2.0 / 3.0);
}
