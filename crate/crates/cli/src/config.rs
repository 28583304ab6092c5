//! Sweep configuration: a preset, two swept axes and the fixed parameters.
//!
//! Settings are `key = value` pairs, from a TOML file or `--set`:
//!
//! ```text
//! x = eta            # parameter on the x axis
//! y = r
//! eta.min = 0.05
//! eta.max = 1.0
//! eta.steps = 20
//! z = 1.25           # fixed parameters
//! N = 1
//! purified = true
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use qecs_core::protocol::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_COUPLER_T, OPERATING_Z};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    EcsFidelity,
    LossyFidelity,
    PurifiedFidelity,
    Purity,
    PurifyProb,
    CatTeleport,
    TeleportProb,
    TmsvsBaseline,
    CoherentTeleport,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::EcsFidelity,
        Preset::LossyFidelity,
        Preset::PurifiedFidelity,
        Preset::Purity,
        Preset::PurifyProb,
        Preset::CatTeleport,
        Preset::TeleportProb,
        Preset::TmsvsBaseline,
        Preset::CoherentTeleport,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::EcsFidelity => "ecs-fidelity",
            Preset::LossyFidelity => "lossy-fidelity",
            Preset::PurifiedFidelity => "purified-fidelity",
            Preset::Purity => "purity",
            Preset::PurifyProb => "purify-prob",
            Preset::CatTeleport => "cat-teleport",
            Preset::TeleportProb => "teleport-prob",
            Preset::TmsvsBaseline => "tmsvs-baseline",
            Preset::CoherentTeleport => "coherent-teleport",
        }
    }

    /// One-line description including the default grid.
    pub fn describe(&self) -> &'static str {
        match self {
            Preset::EcsFidelity => "quasi-ECS fidelity to the odd ECS, 30x30 over (z, r)",
            Preset::LossyFidelity => "ECS fidelity after loss, 20x20 over (eta, r)",
            Preset::PurifiedFidelity => "ECS fidelity after loss and catalysis, 20x20 over (eta, r)",
            Preset::Purity => "resource purity (purified = true for the catalysed state), 20x20 over (eta, r)",
            Preset::PurifyProb => "catalysis herald probability, 20x20 over (eta, r)",
            Preset::CatTeleport => "six-cat average teleportation fidelity, 20x20 over (eta, r)",
            Preset::TeleportProb => "teleportation success probability, 20x20 over (eta, r)",
            Preset::TmsvsBaseline => "six-cat average fidelity with a lossy TMSVS resource, 20x20 over (eta, r)",
            Preset::CoherentTeleport => "lossless coherent-state teleportation fidelity, 20x20 over (gamma, r)",
        }
    }

    fn default_axes(&self) -> (Axis, Axis) {
        match self {
            Preset::EcsFidelity => (Axis::default_for(Param::Z, 30), Axis::default_for(Param::R, 30)),
            Preset::CoherentTeleport => (Axis::default_for(Param::Gamma, 20), Axis::default_for(Param::R, 20)),
            _ => (Axis::default_for(Param::Eta, 20), Axis::default_for(Param::R, 20)),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::UnknownPreset(s.to_string()))
    }
}

/// Continuous parameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Eta,
    R,
    Z,
    Kappa,
    Gamma,
    CouplerT,
    Alpha,
    Beta,
}

impl Param {
    pub const ALL: [Param; 8] = [
        Param::Eta,
        Param::R,
        Param::Z,
        Param::Kappa,
        Param::Gamma,
        Param::CouplerT,
        Param::Alpha,
        Param::Beta,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Param::Eta => "eta",
            Param::R => "r",
            Param::Z => "z",
            Param::Kappa => "kappa",
            Param::Gamma => "gamma",
            Param::CouplerT => "T",
            Param::Alpha => "alpha",
            Param::Beta => "beta",
        }
    }

    fn default_range(&self) -> (f64, f64) {
        match self {
            Param::Eta => (0.05, 1.0),
            Param::R => (0.05, 0.9),
            // symmetric about the trimer's symmetric point pi / (2 sqrt 2)
            Param::Z => (0.05, std::f64::consts::PI / std::f64::consts::SQRT_2 - 0.05),
            Param::Kappa => (0.5, 2.0),
            Param::Gamma => (0.05, 1.5),
            Param::CouplerT => (0.05, 0.95),
            Param::Alpha => (0.1, 1.5),
            Param::Beta => (0.1, 1.5),
        }
    }

    fn check(&self, v: f64) -> std::result::Result<(), &'static str> {
        let ok = v.is_finite()
            && match self {
                Param::Eta => (0.0..=1.0).contains(&v),
                Param::R => (0.0..1.0).contains(&v),
                Param::Z | Param::Gamma | Param::Beta => v >= 0.0,
                Param::Kappa | Param::Alpha => v > 0.0,
                Param::CouplerT => v > 0.0 && v < 1.0,
            };
        if ok {
            Ok(())
        } else {
            Err(match self {
                Param::Eta => "must lie in [0, 1]",
                Param::R => "must lie in [0, 1)",
                Param::Z | Param::Gamma | Param::Beta => "must be non-negative",
                Param::Kappa | Param::Alpha => "must be positive",
                Param::CouplerT => "must lie in (0, 1)",
            })
        }
    }
}

impl FromStr for Param {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::setting(s, "unknown parameter"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn default_for(param: Param, steps: usize) -> Self {
        let (min, max) = param.default_range();
        Self { param, min, max, steps }
    }

    /// Evenly spaced values; the last one is exactly `max`.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let key = self.param.name();
        for v in [self.min, self.max] {
            self.param.check(v).map_err(|r| CliError::setting(key, r))?;
        }
        if self.min > self.max {
            return Err(CliError::setting(key, "min exceeds max"));
        }
        // a single step is only meaningful for a degenerate range
        if self.steps < 2 && !(self.steps == 1 && self.min == self.max) {
            return Err(CliError::setting(
                format!("{key}.steps"),
                "need at least 2 steps (or 1 with min == max)",
            ));
        }
        Ok(())
    }
}

/// Values of every parameter at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub eta: f64,
    pub r: f64,
    pub z: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub coupler_t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_subtract: usize,
    pub n_max: usize,
    pub purified: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eta: 1.0,
            r: 0.3,
            z: OPERATING_Z,
            kappa: 1.0,
            gamma: DEFAULT_ALPHA,
            coupler_t: DEFAULT_COUPLER_T,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            n_subtract: 1,
            n_max: 10,
            purified: false,
        }
    }
}

impl Params {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Eta => self.eta,
            Param::R => self.r,
            Param::Z => self.z,
            Param::Kappa => self.kappa,
            Param::Gamma => self.gamma,
            Param::CouplerT => self.coupler_t,
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
        }
    }

    pub fn with(mut self, p: Param, v: f64) -> Self {
        *match p {
            Param::Eta => &mut self.eta,
            Param::R => &mut self.r,
            Param::Z => &mut self.z,
            Param::Kappa => &mut self.kappa,
            Param::Gamma => &mut self.gamma,
            Param::CouplerT => &mut self.coupler_t,
            Param::Alpha => &mut self.alpha,
            Param::Beta => &mut self.beta,
        } = v;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub preset: Preset,
    pub x: Axis,
    pub y: Axis,
    pub fixed: Params,
    pub jobs: usize,
    pub contour_level: f64,
}

impl SweepConfig {
    pub fn for_preset(preset: Preset) -> Self {
        let (x, y) = preset.default_axes();
        Self {
            preset,
            x,
            y,
            fixed: Params::default(),
            jobs: 1,
            contour_level: 2.0 / 3.0,
        }
    }

    fn axis_mut(&mut self, p: Param) -> Option<&mut Axis> {
        if self.x.param == p {
            Some(&mut self.x)
        } else if self.y.param == p {
            Some(&mut self.y)
        } else {
            None
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "x" | "y" => {
                let p: Param = value.parse()?;
                let other = if key == "x" { self.y.param } else { self.x.param };
                if p == other {
                    return Err(CliError::setting(key, format!("`{value}` is already the other axis")));
                }
                let steps = if key == "x" { self.x.steps } else { self.y.steps };
                let axis = Axis::default_for(p, steps);
                if key == "x" {
                    self.x = axis;
                } else {
                    self.y = axis;
                }
            }
            "N" => self.fixed.n_subtract = parse(key, value)?,
            "nmax" | "n_max" => self.fixed.n_max = parse(key, value)?,
            "purified" => self.fixed.purified = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "contour" => self.contour_level = parse(key, value)?,
            _ => {
                if let Some((name, field)) = key.split_once('.') {
                    let p: Param = name.parse()?;
                    let axis = self
                        .axis_mut(p)
                        .ok_or_else(|| CliError::setting(key, format!("`{name}` is not a swept axis")))?;
                    match field {
                        "min" => axis.min = parse(key, value)?,
                        "max" => axis.max = parse(key, value)?,
                        "steps" => axis.steps = parse(key, value)?,
                        _ => return Err(CliError::setting(key, "expected min, max or steps")),
                    }
                } else {
                    let p: Param = key.parse()?;
                    if self.axis_mut(p).is_some() {
                        return Err(CliError::setting(
                            key,
                            format!("`{key}` is swept; set {key}.min/{key}.max/{key}.steps instead"),
                        ));
                    }
                    self.fixed = self.fixed.with(p, parse(key, value)?);
                }
            }
        }
        Ok(())
    }

    /// Applies a `key=value` string as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::setting(pair, "expected key=value"))?;
        self.set(k.trim(), v)
    }

    /// Applies every setting of a TOML file. Axis selections (`x`, `y`) are
    /// applied before range settings.
    pub fn apply_toml(&mut self, text: &str, path: &Path) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::ConfigSyntax {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let mut pairs = Vec::new();
        flatten(&table, "", &mut pairs);
        pairs.sort_by_key(|(k, _)| !(k == "x" || k == "y"));
        for (k, v) in pairs {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        for p in Param::ALL {
            if p != self.x.param && p != self.y.param {
                p.check(self.fixed.get(p)).map_err(|r| CliError::setting(p.name(), r))?;
            }
        }
        if self.fixed.n_max == 0 {
            return Err(CliError::setting("nmax", "must be at least 1"));
        }
        if self.fixed.n_subtract == 0 || self.fixed.n_subtract > self.fixed.n_max {
            return Err(CliError::setting("N", "must lie in 1..=nmax"));
        }
        if self.jobs == 0 {
            return Err(CliError::setting("jobs", "must be at least 1"));
        }
        if !self.contour_level.is_finite() {
            return Err(CliError::setting("contour", "must be finite"));
        }
        Ok(())
    }

    /// Parameters of every grid point, x-major.
    pub fn points(&self) -> Vec<Params> {
        let ys = self.y.values();
        self.x
            .values()
            .into_iter()
            .flat_map(|x| {
                ys.iter()
                    .map(move |&y| self.fixed.with(self.x.param, x).with(self.y.param, y))
            })
            .collect()
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::setting(key, format!("cannot parse `{value}`")))
}

fn flatten(table: &toml::Table, prefix: &str, out: &mut Vec<(String, String)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(t, &key, out),
            toml::Value::String(s) => out.push((key, s.clone())),
            other => out.push((key, other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig9".parse::<Preset>().is_err());
    }

    #[test]
    fn axis_values_hit_endpoints() {
        let a = Axis::default_for(Param::Eta, 20);
        let v = a.values();
        assert_eq!(v.len(), 20);
        assert_eq!(v[0], 0.05);
        assert_eq!(v[19], 1.0);
    }

    #[test]
    fn set_ranges_and_fixed_values() {
        let mut c = SweepConfig::for_preset(Preset::CatTeleport);
        c.set_pair("eta.steps=3").unwrap();
        c.set_pair("r.min = 0.2").unwrap();
        c.set_pair("beta=0.7").unwrap();
        c.set_pair("purified=true").unwrap();
        assert_eq!(c.x.steps, 3);
        assert_eq!(c.y.min, 0.2);
        assert_eq!(c.fixed.beta, 0.7);
        assert!(c.fixed.purified);
        assert!(c.set_pair("eta=0.5").is_err());
        assert!(c.set_pair("z.min=0.5").is_err());
        assert!(c.set_pair("bogus=1").is_err());
        assert!(c.set_pair("noequals").is_err());
    }

    #[test]
    fn switching_axes() {
        let mut c = SweepConfig::for_preset(Preset::CatTeleport);
        c.set("x", "z").unwrap();
        assert_eq!(c.x.param, Param::Z);
        assert!(c.set("y", "z").is_err());
        c.set("eta", "0.5").unwrap();
        assert_eq!(c.points()[0].eta, 0.5);
    }

    #[test]
    fn validation() {
        let mut c = SweepConfig::for_preset(Preset::Purity);
        c.validate().unwrap();
        c.set("eta.steps", "1").unwrap();
        assert!(c.validate().is_err());
        c.set("eta.min", "0.4").unwrap();
        c.set("eta.max", "0.4").unwrap();
        c.validate().unwrap();
        c.set("r.max", "1.0").unwrap();
        assert!(c.validate().is_err());
        let mut c = SweepConfig::for_preset(Preset::Purity);
        c.set("N", "11").unwrap();
        assert!(c.validate().is_err());
        let mut c = SweepConfig::for_preset(Preset::Purity);
        c.set("T", "1.0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_config_applies_axes_first() {
        let mut c = SweepConfig::for_preset(Preset::CatTeleport);
        let text = "z.min = 0.3\nz.steps = 4\nx = \"z\"\neta = 0.8\npurified = true\n[r]\nmax = 0.5\n";
        c.apply_toml(text, Path::new("sweep.toml")).unwrap();
        assert_eq!(c.x.param, Param::Z);
        assert_eq!(c.x.min, 0.3);
        assert_eq!(c.x.steps, 4);
        assert_eq!(c.y.max, 0.5);
        assert_eq!(c.fixed.eta, 0.8);
        assert!(c.fixed.purified);
        assert!(matches!(
            c.apply_toml("x = ", Path::new("bad.toml")),
            Err(CliError::ConfigSyntax { .. })
        ));
    }

    #[test]
    fn points_are_x_major() {
        let mut c = SweepConfig::for_preset(Preset::Purity);
        c.set("eta.steps", "2").unwrap();
        c.set("r.steps", "3").unwrap();
        let pts = c.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].eta, pts[2].eta);
        assert!(pts[0].r < pts[1].r);
    }
}
