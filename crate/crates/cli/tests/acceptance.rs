//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use qecs_cli::{run_named, Grid, Table};
use qecs_core::linear_optics::{apply_loss_ancilla, apply_loss_kraus};
use qecs_core::protocol::{
    average_cat_fidelity, closed_form_rho_lossy, closed_form_rho_sub, distribute, generate_quasi_ecs, purify,
    GenerationConfig, PurificationConfig, Teleporter, CLASSICAL_LIMIT,
};
use qecs_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn t(n: usize) -> TruncationSpec {
    TruncationSpec::new(n).unwrap()
}

fn cfg(r: f64, z: f64, n: usize) -> GenerationConfig {
    GenerationConfig::new(
        SqueezingSpec::real(r).unwrap(),
        TrimerConfig::with_unit_coupling(z).unwrap(),
        n,
    )
    .unwrap()
}

fn sweep(preset: &str, extra: &[&str]) -> Table {
    let table = run_named(preset, extra).unwrap();
    assert!(table.failed().next().is_none(), "{preset}: failed rows");
    table
}

fn random_density(rng: &mut ChaCha8Rng, trunc: TruncationSpec) -> DensityOperator {
    let dim = trunc.hilbert_dim(2);
    let a = ndarray::Array2::from_shape_fn((dim, dim), |_| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let mut m = a.dot(&a.t().mapv(|z| z.conj()));
    let tr: f64 = m.diag().iter().map(|z| z.re).sum();
    m.mapv_inplace(|z| z / tr);
    DensityOperator::new(trunc, 2, m).unwrap()
}

fn channel_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trunc = t(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let rho = random_density(&mut rng, trunc);
        let loss = LossSpec::new(rng.random_range(0.0..=1.0)).unwrap();
        let mode = rng.random_range(0..2);
        let a = apply_loss_kraus(&rho, mode, &loss).unwrap();
        let b = apply_loss_ancilla(&rho, mode, &loss).unwrap();
        worst = worst.max(a.max_abs_diff(&b).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10,
        format!("200 operators, max deviation {worst:.2e}, {secs:.1} s"),
    )
}

fn generation_closed_form() -> Outcome {
    let start = Instant::now();
    let trunc = t(10);
    let mut worst_state: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for (r, z, n) in [(0.2, 1.25, 1), (0.4, 1.25, 1), (0.2, 0.7, 2)] {
        let c = cfg(r, z, n);
        let brute = generate_quasi_ecs(&c, trunc).unwrap();
        let (closed, p) = closed_form_rho_sub(&c, trunc, c.default_series_cutoff(trunc))
            .unwrap()
            .normalize()
            .unwrap();
        worst_state = worst_state.max(closed.max_abs_diff(&brute.state).unwrap());
        worst_p = worst_p.max((p - brute.probability).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_state <= 1e-10 && worst_p <= 1e-10,
        format!("state deviation {worst_state:.2e}, probability deviation {worst_p:.2e}, {secs:.1} s"),
    )
}

fn loss_closed_form() -> Outcome {
    let trunc = t(10);
    let c = cfg(0.3, 1.25, 1);
    let cutoff = c.default_series_cutoff(trunc);
    let sub = closed_form_rho_sub(&c, trunc, cutoff).unwrap();
    let mut worst: f64 = 0.0;
    for eta in [0.3, 0.6, 1.0] {
        let l = LossSpec::new(eta).unwrap();
        let direct = closed_form_rho_lossy(&c, &l, trunc, cutoff).unwrap();
        worst = worst.max(direct.max_abs_diff(&distribute(&sub, &l, &l).unwrap()).unwrap());
    }
    outcome(
        worst <= 1e-10,
        format!("max deviation {worst:.2e} at eta in {{0.3, 0.6, 1.0}}"),
    )
}

fn ecs_table(nmax: usize) -> Table {
    sweep(
        "ecs-fidelity",
        &[&format!("nmax={nmax}"), "z.steps=30", "r.steps=30", "jobs=4"],
    )
}

fn quasi_ecs_quality(table: &Table) -> Outcome {
    let best = table
        .rows
        .iter()
        .max_by(|a, b| a.value.unwrap().total_cmp(&b.value.unwrap()))
        .unwrap();
    let max = best.value.unwrap();
    // mirror z_i <-> z_{29-i} on every r row
    let zs: Vec<f64> = {
        let mut v: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
        v.dedup();
        v
    };
    let by_point: BTreeMap<(usize, u64), f64> = table
        .rows
        .iter()
        .map(|r| {
            (
                (zs.iter().position(|&z| z == r.x).unwrap(), r.y.to_bits()),
                r.value.unwrap(),
            )
        })
        .collect();
    let n = zs.len();
    let asym = by_point
        .iter()
        .map(|(&(i, y), v)| (v - by_point[&(n - 1 - i, y)]).abs())
        .fold(0.0, f64::max);
    let centre = (zs[0] + zs[n - 1]) / 2.0;
    let expected = TrimerConfig::symmetric_point(1.0);
    outcome(
        max >= 0.98 && asym <= 1e-6 && (centre - expected).abs() < 1e-12,
        format!(
            "max F = {max:.6} at (z, r) = ({:.4}, {:.4}); mirror asymmetry about z = {centre:.6}: {asym:.2e}",
            best.x, best.y
        ),
    )
}

fn subtraction_probabilities() -> Outcome {
    let trunc = t(10);
    let p1 = generate_quasi_ecs(&cfg(0.3, 1.25, 1), trunc).unwrap().probability;
    let p3 = generate_quasi_ecs(&cfg(0.3, 1.25, 3), trunc).unwrap().probability;
    let pass = (0.01..1.0).contains(&p1) && (0.001..0.1).contains(&p3) && p3 < p1;
    outcome(
        pass,
        format!("z = 1.25, r = 0.3: p(N=1) = {p1:.4e} (need [0.01, 1)), p(N=3) = {p3:.4e} (need [0.001, 0.1))"),
    )
}

fn tmsvs_table(nmax: usize) -> Table {
    sweep("tmsvs-baseline", &[&format!("nmax={nmax}"), "jobs=4"])
}

fn tmsvs_baseline_check(table: &Table) -> Outcome {
    let max = table.max_value().unwrap();
    outcome(
        max < CLASSICAL_LIMIT,
        format!("max F_avg = {max:.6} over 20x20 (eta, r)"),
    )
}

fn cat_tables(nmax: usize) -> (Table, Table) {
    let n = format!("nmax={nmax}");
    (
        sweep("cat-teleport", &[&n, "jobs=4"]),
        sweep("cat-teleport", &[&n, "jobs=4", "purified=true"]),
    )
}

/// Span of eta values with F above the limit on the row nearest `r`.
fn eta_extent(table: &Table, r: f64) -> (f64, f64) {
    let row_r = table
        .rows
        .iter()
        .map(|x| x.y)
        .min_by(|a, b| (a - r).abs().total_cmp(&(b - r).abs()))
        .unwrap();
    let etas: Vec<f64> = table
        .rows
        .iter()
        .filter(|x| x.y == row_r && x.value.unwrap() > CLASSICAL_LIMIT)
        .map(|x| x.x)
        .collect();
    let span = match (etas.first(), etas.last()) {
        (Some(a), Some(b)) => b - a,
        _ => -1.0,
    };
    (row_r, span)
}

fn non_gaussian_advantage(plain: &Table, purified: &Table) -> Outcome {
    let above = purified
        .rows
        .iter()
        .filter(|r| r.value.unwrap() > CLASSICAL_LIMIT)
        .count();
    let (row_r, span_plain) = eta_extent(plain, 0.4);
    let (_, span_pur) = eta_extent(purified, 0.4);
    outcome(
        above > 0 && span_pur > span_plain,
        format!(
            "{above} purified points above 2/3; eta-extent at r = {row_r:.4}: purified {span_pur:.3} vs unpurified {span_plain:.3}"
        ),
    )
}

fn purification_benefit() -> Outcome {
    let trunc = t(10);
    let pc = PurificationConfig::default();
    let target = make_ecs(&EcsSpec::odd(0.5).unwrap(), trunc).unwrap().state;
    let mut worst_f = f64::INFINITY;
    let mut worst_p = (f64::INFINITY, 0.0, 0.0);
    for r in (0..7).map(|i| 0.1 + 0.05 * i as f64) {
        let gen = generate_quasi_ecs(&cfg(r, 1.25, 1), trunc).unwrap();
        for eta in (0..11).map(|i| 0.3 + 0.05 * i as f64) {
            let l = LossSpec::new(eta).unwrap();
            let lossy = distribute(&gen.state, &l, &l).unwrap();
            let pur = purify(&lossy, &pc).unwrap().state;
            worst_f = worst_f.min(fidelity(&target, &pur).unwrap() - fidelity(&target, &lossy).unwrap());
            let dp = pur.purity().unwrap() - lossy.purity().unwrap();
            if dp < worst_p.0 {
                worst_p = (dp, eta, r);
            }
        }
    }
    // endpoints: eta -> 0 (evaluated at 1e-3) and eta = 1
    let mut worst_end: f64 = 0.0;
    let mut at_005: Vec<String> = Vec::new();
    for r in [0.1, 0.25, 0.4] {
        let gen = generate_quasi_ecs(&cfg(r, 1.25, 1), trunc).unwrap();
        for eta in [1e-3, 1.0] {
            let l = LossSpec::new(eta).unwrap();
            let lossy = distribute(&gen.state, &l, &l).unwrap();
            let pur = purify(&lossy, &pc).unwrap().state;
            worst_end = worst_end
                .max(1.0 - lossy.purity().unwrap())
                .max(1.0 - pur.purity().unwrap());
        }
        let l = LossSpec::new(0.05).unwrap();
        let lossy = distribute(&gen.state, &l, &l).unwrap();
        let pur = purify(&lossy, &pc).unwrap().state;
        at_005.push(format!("{:.3}/{:.3}", lossy.purity().unwrap(), pur.purity().unwrap()));
    }
    let pass = worst_f >= -1e-6 && worst_p.0 >= -1e-6 && worst_end <= 0.02;
    outcome(
        pass,
        format!(
            "min dF = {worst_f:.4}; min dPurity = {:.4} at (eta, r) = ({:.2}, {:.2}); endpoint purity deficit {worst_end:.4}; purity at eta = 0.05 (plain/purified, r = 0.1, 0.25, 0.4): {}",
            worst_p.0,
            worst_p.1,
            worst_p.2,
            at_005.join(", ")
        ),
    )
}

fn coherent_validation() -> Outcome {
    let table = sweep("coherent-teleport", &["jobs=4"]);
    let max = table.max_value().unwrap();
    // 4-neighbour connectivity of the region above 2/3
    let mut xs: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
    xs.dedup();
    let ny = table.rows.len() / xs.len();
    let above: Vec<bool> = table.rows.iter().map(|r| r.value.unwrap() > CLASSICAL_LIMIT).collect();
    let mut seen = vec![false; above.len()];
    let mut components = 0;
    for start in 0..above.len() {
        if !above[start] || seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (i, j) = (k / ny, k % ny);
            let mut push = |i: usize, j: usize| {
                let q = i * ny + j;
                if above[q] && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < xs.len() {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
    }
    let trunc = t(10);
    let tp = Teleporter::shared(trunc).unwrap();
    let resource = make_ecs(&EcsSpec::odd(0.5).unwrap(), trunc).unwrap().state.to_density();
    let input = make_coherent(C64::new(0.5, 0.0), trunc).state;
    let ideal = tp.teleport(&resource, &input).unwrap();
    let worst_ideal = ideal
        .heralds
        .iter()
        .map(|h| (h.fidelity.unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let corrections: Vec<u8> = tp.corrections().iter().map(|c| c.quarter_turns()).collect();
    outcome(
        max >= 0.95 && components == 1 && worst_ideal <= 1e-8,
        format!(
            "max F = {max:.5}; region above 2/3: {components} connected component(s); ideal per-herald |F - 1| = {worst_ideal:.1e} with odd-phase corrections i^{corrections:?}"
        ),
    )
}

fn simulate(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "simulate {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn probability_composition() -> Outcome {
    let csv = simulate(&[
        "teleport-prob",
        "--set",
        "purified=true",
        "--set",
        "eta.steps=3",
        "--set",
        "r.steps=3",
    ]);
    let text = String::from_utf8(csv).unwrap();
    let trunc = t(10);
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (eta, r, value): (f64, f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[3].parse().unwrap());
        let l = LossSpec::new(eta).unwrap();
        let lossy = distribute(&generate_quasi_ecs(&cfg(r, 1.25, 1), trunc).unwrap().state, &l, &l).unwrap();
        let pur = purify(&lossy, &PurificationConfig::default()).unwrap();
        let p_tel = average_cat_fidelity(&pur.state, 0.55).unwrap().success_probability;
        worst = worst.max((value - pur.probability * p_tel).abs());
        rows += 1;
    }
    outcome(
        rows == 9 && worst <= 1e-12,
        format!("{rows} CLI rows; max |P_tel(purified) - P_purified * P_tel| = {worst:.2e}"),
    )
}

/// Largest fidelity change between two surfaces over the corners of every
/// grid cell crossed by the 2/3 contour of `a`; also returns the `r` of the
/// worst corner.
fn contour_shift(a: &Table, b: &Table) -> (f64, f64) {
    let grid = Grid::from_table(a).unwrap();
    let gb = Grid::from_table(b).unwrap();
    let mut worst = (0.0, f64::NAN);
    for i in 0..grid.xs.len() - 1 {
        for j in 0..grid.ys.len() - 1 {
            let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
            let sides: Vec<bool> = corners
                .iter()
                .map(|&(p, q)| grid.values[p][q].unwrap() > CLASSICAL_LIMIT)
                .collect();
            if sides.iter().all(|&s| s == sides[0]) {
                continue;
            }
            for &(p, q) in &corners {
                let d = (grid.values[p][q].unwrap() - gb.values[p][q].unwrap()).abs();
                if d > worst.0 {
                    worst = (d, grid.ys[q]);
                }
            }
        }
    }
    worst
}

fn truncation_robustness(ecs: &Table, tmsvs: &Table, cat: &(Table, Table)) -> Outcome {
    let ecs2 = ecs_table(12);
    let tmsvs2 = tmsvs_table(12);
    let cat2 = cat_tables(12);
    let d4 = (ecs.max_value().unwrap() - ecs2.max_value().unwrap()).abs();
    let d6 = (tmsvs.max_value().unwrap() - tmsvs2.max_value().unwrap()).abs();
    let d7max = (cat.0.max_value().unwrap() - cat2.0.max_value().unwrap())
        .abs()
        .max((cat.1.max_value().unwrap() - cat2.1.max_value().unwrap()).abs());
    let (c_plain, r_plain) = contour_shift(&cat.0, &cat2.0);
    let (c_pur, r_pur) = contour_shift(&cat.1, &cat2.1);
    let d7 = d7max.max(c_plain).max(c_pur);
    outcome(
        d4 <= 1e-3 && d6 <= 1e-3 && d7 <= 1e-3,
        format!(
            "n_max 10 -> 12: ECS max {d4:.1e}, TMSVS max {d6:.1e}, cat-teleport max {d7max:.1e}; \
             F change on 2/3-contour cells: unpurified {c_plain:.1e} (r = {r_plain:.3}), purified {c_pur:.1e} (r = {r_pur:.3})"
        ),
    )
}

fn determinism() -> Outcome {
    let args = [
        "cat-teleport",
        "--set",
        "purified=true",
        "--set",
        "eta.steps=6",
        "--set",
        "r.steps=6",
    ];
    let a = simulate(&args);
    let b = simulate(&args);
    let mut parallel = args.to_vec();
    parallel.extend(["--jobs", "4"]);
    let c = simulate(&parallel);
    outcome(
        a == b && a == c,
        format!(
            "{} bytes; rerun identical: {}; 4-job run identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let ecs = ecs_table(10);
    let tmsvs = tmsvs_table(10);
    let cat = cat_tables(10);
    let criteria: Vec<(&str, Check)> = vec![
        ("loss channel: Kraus vs ancilla", Box::new(channel_equivalence)),
        (
            "quasi-ECS: closed form vs brute force",
            Box::new(generation_closed_form),
        ),
        ("lossy closed form vs channel", Box::new(loss_closed_form)),
        (
            "quasi-ECS fidelity and z symmetry",
            Box::new(|| quasi_ecs_quality(&ecs)),
        ),
        ("subtraction probabilities", Box::new(subtraction_probabilities)),
        ("TMSVS baseline below 2/3", Box::new(|| tmsvs_baseline_check(&tmsvs))),
        (
            "non-Gaussian advantage",
            Box::new(|| non_gaussian_advantage(&cat.0, &cat.1)),
        ),
        ("purification benefit", Box::new(purification_benefit)),
        ("coherent-state validation", Box::new(coherent_validation)),
        ("probability composition via CLI", Box::new(probability_composition)),
        (
            "truncation robustness",
            Box::new(|| truncation_robustness(&ecs, &tmsvs, &cat)),
        ),
        ("CSV determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
