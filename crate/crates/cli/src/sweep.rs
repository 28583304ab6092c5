use std::collections::BTreeMap;

use qecs_core::protocol::{
    average_cat_fidelity, coherent_teleportation, distribute, generate_quasi_ecs, purify, tmsvs_baseline,
    GenerationConfig, Heralded, PurificationConfig,
};
use qecs_core::states::{make_ecs, EcsSpec, SqueezingSpec};
use qecs_core::{fidelity, LossSpec, TrimerConfig, TruncationSpec, C64};
use rayon::prelude::*;

use crate::config::{Params, Preset, SweepConfig};
use crate::error::{CliError, Result};

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub x: f64,
    pub y: f64,
    pub metric: &'static str,
    pub value: Option<f64>,
    pub p_subtract: Option<f64>,
    pub p_purified: Option<f64>,
    pub p_tel: Option<f64>,
    pub tail_mass: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x_name: &'static str,
    pub y_name: &'static str,
    pub rows: Vec<ResultRow>,
}

impl Table {
    pub fn failed(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn max_value(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.value).reduce(f64::max)
    }
}

impl Preset {
    pub fn metric(&self, purified: bool) -> &'static str {
        match (self, purified) {
            (Preset::EcsFidelity, _) => "fidelity_ecs",
            (Preset::LossyFidelity, _) => "fidelity_ecs_lossy",
            (Preset::PurifiedFidelity, _) => "fidelity_ecs_purified",
            (Preset::Purity, false) => "purity",
            (Preset::Purity, true) => "purity_purified",
            (Preset::PurifyProb, _) => "p_purified",
            (Preset::CatTeleport, false) => "f_avg",
            (Preset::CatTeleport, true) => "f_avg_purified",
            (Preset::TeleportProb, false) => "p_tel",
            (Preset::TeleportProb, true) => "p_tel_purified",
            (Preset::TmsvsBaseline, _) => "f_avg_tmsvs",
            (Preset::CoherentTeleport, false) => "f_coherent",
            (Preset::CoherentTeleport, true) => "f_coherent_purified",
        }
    }

    fn needs_generation(&self) -> bool {
        *self != Preset::TmsvsBaseline
    }

    fn needs_purification(&self, purified: bool) -> bool {
        match self {
            Preset::PurifiedFidelity | Preset::PurifyProb => true,
            Preset::Purity | Preset::CatTeleport | Preset::TeleportProb | Preset::CoherentTeleport => purified,
            _ => false,
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
struct Values {
    value: f64,
    p_subtract: Option<f64>,
    p_purified: Option<f64>,
    p_tel: Option<f64>,
    tail_mass: Option<f64>,
}

type GenKey = (u64, u64, u64, usize, usize);

fn gen_key(p: &Params) -> GenKey {
    (p.r.to_bits(), p.z.to_bits(), p.kappa.to_bits(), p.n_subtract, p.n_max)
}

fn generation_config(p: &Params) -> qecs_core::Result<GenerationConfig> {
    GenerationConfig::new(
        SqueezingSpec::real(p.r)?,
        TrimerConfig::new(p.kappa, p.z)?,
        p.n_subtract,
    )
}

fn generate(p: &Params) -> qecs_core::Result<Heralded> {
    generate_quasi_ecs(&generation_config(p)?, TruncationSpec::new(p.n_max)?)
}

fn evaluate(preset: Preset, p: &Params, generated: Option<&qecs_core::Result<Heralded>>) -> qecs_core::Result<Values> {
    let trunc = TruncationSpec::new(p.n_max)?;
    if preset == Preset::TmsvsBaseline {
        let sq = SqueezingSpec::real(p.r)?;
        let avg = tmsvs_baseline(&sq, &LossSpec::new(p.eta)?, p.beta, trunc)?;
        return Ok(Values {
            value: avg.fidelity,
            p_tel: Some(avg.success_probability),
            tail_mass: Some(p.r.powi(2 * (p.n_max as i32 + 1))),
            ..Values::default()
        });
    }
    let gen = match generated {
        Some(Ok(g)) => g,
        Some(Err(e)) => return Err(e.clone()),
        None => unreachable!("generation precomputed for every point"),
    };
    let mut out = Values {
        p_subtract: Some(gen.probability),
        tail_mass: Some(gen.tail_mass),
        ..Values::default()
    };
    let target = || -> qecs_core::Result<_> { Ok(make_ecs(&EcsSpec::odd(p.alpha)?, trunc)?.state) };
    if preset == Preset::EcsFidelity {
        out.value = fidelity(&target()?, &gen.state)?;
        return Ok(out);
    }
    let loss = LossSpec::new(p.eta)?;
    let lossy = distribute(&gen.state, &loss, &loss)?;
    let purified = if preset.needs_purification(p.purified) {
        let h = purify(&lossy, &PurificationConfig::new(p.coupler_t)?)?;
        out.p_purified = Some(h.probability);
        Some(h)
    } else {
        None
    };
    let resource = purified.as_ref().map(|h| &h.state).unwrap_or(&lossy);
    let herald = out.p_purified.unwrap_or(1.0);
    match preset {
        Preset::LossyFidelity => out.value = fidelity(&target()?, &lossy)?,
        Preset::PurifiedFidelity => out.value = fidelity(&target()?, resource)?,
        Preset::Purity => out.value = resource.purity()?,
        Preset::PurifyProb => out.value = herald,
        Preset::CatTeleport | Preset::TeleportProb => {
            let avg = average_cat_fidelity(resource, p.beta)?;
            let p_tel = herald * avg.success_probability;
            out.p_tel = Some(p_tel);
            out.value = if preset == Preset::CatTeleport {
                avg.fidelity
            } else {
                p_tel
            };
        }
        Preset::CoherentTeleport => {
            let res = coherent_teleportation(resource, C64::new(p.gamma, 0.0))?;
            out.p_tel = Some(herald * res.success_probability());
            out.value = res.fidelity();
        }
        Preset::EcsFidelity | Preset::TmsvsBaseline => unreachable!(),
    }
    Ok(out)
}

/// Evaluates every grid point of `cfg` on `cfg.jobs` worker threads. Rows are
/// sorted by `(x, y)`; failures are kept as rows with an empty value.
pub fn run_preset(cfg: &SweepConfig) -> Result<Table> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::setting("jobs", e.to_string()))?;
    let points = cfg.points();
    let preset = cfg.preset;
    let metric = preset.metric(cfg.fixed.purified);
    let mut rows = pool.install(|| {
        let generated: BTreeMap<GenKey, qecs_core::Result<Heralded>> = if preset.needs_generation() {
            let mut keys: BTreeMap<GenKey, Params> = BTreeMap::new();
            for p in &points {
                keys.entry(gen_key(p)).or_insert(*p);
            }
            keys.into_par_iter().map(|(k, p)| (k, generate(&p))).collect()
        } else {
            BTreeMap::new()
        };
        points
            .par_iter()
            .map(|p| {
                let res = evaluate(preset, p, generated.get(&gen_key(p)));
                let (x, y) = (p.get(cfg.x.param), p.get(cfg.y.param));
                match res {
                    Ok(v) => ResultRow {
                        x,
                        y,
                        metric,
                        value: Some(v.value),
                        p_subtract: v.p_subtract,
                        p_purified: v.p_purified,
                        p_tel: v.p_tel,
                        tail_mass: v.tail_mass,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("{}={x}, {}={y}: {e}", cfg.x.param.name(), cfg.y.param.name());
                        ResultRow {
                            x,
                            y,
                            metric,
                            value: None,
                            p_subtract: None,
                            p_purified: None,
                            p_tel: None,
                            tail_mass: None,
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect::<Vec<_>>()
    });
    rows.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    Ok(Table {
        x_name: cfg.x.param.name(),
        y_name: cfg.y.param.name(),
        rows,
    })
}

/// Runs a preset by name with `key=value` overrides.
pub fn run_named(name: &str, overrides: &[&str]) -> Result<Table> {
    let mut cfg = SweepConfig::for_preset(name.parse()?);
    for o in overrides {
        cfg.set_pair(o)?;
    }
    run_preset(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(preset: &str, extra: &[&str]) -> Table {
        let mut o = vec!["nmax=5", "r.steps=2", "r.max=0.4"];
        o.extend_from_slice(extra);
        if preset == "ecs-fidelity" {
            o.push("z.steps=2");
        } else if preset == "coherent-teleport" {
            o.push("gamma.steps=2");
        } else {
            o.push("eta.steps=2");
        }
        run_named(preset, &o).unwrap()
    }

    #[test]
    fn every_preset_runs_on_a_tiny_grid() {
        for p in Preset::ALL {
            let t = small(p.name(), &[]);
            assert_eq!(t.rows.len(), 4, "{p}");
            assert!(t.failed().next().is_none(), "{p}");
            for r in &t.rows {
                let v = r.value.unwrap();
                assert!(v.is_finite() && (0.0..=1.0 + 1e-12).contains(&v), "{p}: {v}");
            }
        }
    }

    #[test]
    fn rows_sorted_and_parallel_matches_serial() {
        let serial = small("cat-teleport", &["purified=true"]);
        let parallel = small("cat-teleport", &["purified=true", "jobs=4"]);
        assert_eq!(serial, parallel);
        assert!(serial.rows.windows(2).all(|w| (w[0].x, w[0].y) < (w[1].x, w[1].y)));
    }

    #[test]
    fn impossible_herald_becomes_error_row() {
        let t = run_named(
            "ecs-fidelity",
            &["nmax=4", "r.min=0", "r.max=0.3", "r.steps=2", "z.steps=2"],
        )
        .unwrap();
        let failed: Vec<_> = t.failed().collect();
        assert_eq!(failed.len(), 2);
        assert!(failed.iter().all(|r| r.y == 0.0 && r.value.is_none()));
    }

    #[test]
    fn unknown_preset_and_bad_override() {
        assert!(matches!(run_named("nope", &[]), Err(CliError::UnknownPreset(_))));
        assert!(run_named("purity", &["eta.min=2"]).is_err());
    }
}
