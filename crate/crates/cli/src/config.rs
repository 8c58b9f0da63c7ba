//! Experiment configuration: one JSON document, optionally patched with
//! dotted `key=value` overrides before it is deserialized.

use std::path::{Path, PathBuf};

use delaywave::box_solver::SolverConfig;
use delaywave::nonlinearity::FamilySpec;
use delaywave::simulator::{InitialDatum, InitialHistory, SimConfig};
use delaywave::wave_analysis::AnalysisConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model; required except by `theorem-suite`, which has presets.
    pub nonlinearity: Option<FamilySpec>,
    pub tau: f64,
    pub verify: VerifySection,
    pub solver: Option<SolverConfig>,
    pub growth: Option<GrowthSection>,
    pub analysis: AnalysisConfig,
    pub simulation: Option<SimulationSection>,
    pub characteristic: CharSection,
    pub suite: SuiteSection,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub tol: f64,
    /// Also check the oscillatory assumption; defaults to whether the model
    /// carries landmarks.
    pub oscillatory: Option<bool>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { tol: delaywave::nonlinearity::DEFAULT_TOL, oscillatory: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    pub a_schedule: Vec<f64>,
    /// Right end of the window on which successive profiles are compared.
    #[serde(default)]
    pub right_window: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub numerics: SimConfig,
    pub initial: InitialDatum,
    pub history: InitialHistory,
    /// Spatial shift `h` of the reaction argument.
    pub shift: f64,
    /// Keep every this many grid points in `snapshots.csv`.
    pub snapshot_stride: usize,
    pub frame: Option<FrameSection>,
    pub probes: Option<ProbeSection>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            numerics: SimConfig::default(),
            initial: InitialDatum::Step { at: 100.0 },
            history: InitialHistory::Constant,
            shift: 0.0,
            snapshot_stride: 1,
            frame: None,
            probes: None,
        }
    }
}

/// Moving-frame samples `u(t, ξ - c t)`; offsets are relative to the final
/// front position in frame coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    /// Frame speed; `None` uses the fitted front speed.
    pub speed: Option<f64>,
    pub offsets: Range,
    pub t_min: f64,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self { speed: None, offsets: Range { from: -20.0, to: 20.0, step: 1.0 }, t_min: 0.0 }
    }
}

/// Lab-fixed probes; the period of each series after `t_min` is reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub xs: Vec<f64>,
    #[serde(default = "default_probe_every")]
    pub every: usize,
    #[serde(default)]
    pub t_min: f64,
}

fn default_probe_every() -> usize {
    10
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.from + k as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharSection {
    pub mus: Vec<f64>,
    pub hs: Vec<f64>,
    pub taus: Vec<f64>,
    pub tau_epsilon: Option<TauEpsilonSection>,
    pub random: Option<RandomSection>,
}

impl Default for CharSection {
    fn default() -> Self {
        Self { mus: vec![-2.0, -5.0, -10.0, -20.0], hs: vec![0.5, 1.0, 2.0], taus: vec![1.0, 10.0], tau_epsilon: None, random: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauEpsilonSection {
    pub mu: f64,
    pub eps: f64,
    pub tau0: f64,
    pub factor: f64,
    pub cap: f64,
}

impl Default for TauEpsilonSection {
    fn default() -> Self {
        Self { mu: -20.0, eps: 0.1, tau0: 1.0, factor: 2.0, cap: 1024.0 }
    }
}

/// Uniformly drawn `(μ, h, τ)` triples from `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSection {
    pub count: usize,
    pub mu: (f64, f64),
    pub h: (f64, f64),
    pub tau: (f64, f64),
}

impl Default for RandomSection {
    fn default() -> Self {
        Self { count: 50, mu: (-50.0, -1.1), h: (0.05, 3.0), tau: (0.1, 50.0) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    SmallDelay,
    #[serde(alias = "M=1")]
    #[value(alias = "M=1")]
    MOne,
    LargeDelay,
    MonotoneShift,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub scenario: Scenario,
    /// small-delay: `τ ‖f'‖` values; M=1: delays; large-delay: `[τ0, factor, cap]`.
    pub taus: Option<Vec<f64>>,
    /// monotone-shift: shifts, the first being 0.
    pub hs: Option<Vec<f64>>,
}

/// Set `path.to.key` in `root`, creating objects on the way. The value is
/// parsed as JSON, falling back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("empty segment in `{key}`")));
        }
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split yields at least one segment")
}

/// Read `path` (or start from `{}`), apply the overrides and deserialize.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let cfg: ExperimentConfig = serde_json::from_value(root).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn non_empty(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        Err(CliError::Config(format!("{name} is empty")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(FamilySpec::Tabulated { csv, .. }) = &self.nonlinearity {
            if !csv.is_file() {
                return Err(CliError::Config(format!("nonlinearity table not found: {}", csv.display())));
            }
        }
        if !(self.tau >= 0.0) {
            return Err(CliError::Config(format!("tau must be non-negative, got {}", self.tau)));
        }
        positive("verify.tol", self.verify.tol)?;
        if let Some(s) = &self.solver {
            positive("solver.tol", s.tol)?;
            positive("solver.box_convergence_tol", s.box_convergence_tol)?;
            positive("solver.a", s.a)?;
        }
        if let Some(g) = &self.growth {
            non_empty("growth.a_schedule", &g.a_schedule)?;
        }
        positive("analysis.eps", self.analysis.eps)?;
        positive("analysis.trapping_tol", self.analysis.trapping_tol)?;
        if let Some(sim) = &self.simulation {
            positive("simulation.numerics.dx", sim.numerics.dx)?;
            positive("simulation.numerics.a", sim.numerics.a)?;
            if let Some(fr) = &sim.frame {
                positive("simulation.frame.offsets.step", fr.offsets.step)?;
                if fr.offsets.to < fr.offsets.from {
                    return Err(CliError::Config("simulation.frame.offsets is empty".into()));
                }
            }
            if let Some(p) = &sim.probes {
                non_empty("simulation.probes.xs", &p.xs)?;
            }
        }
        let ch = &self.characteristic;
        non_empty("characteristic.mus", &ch.mus)?;
        non_empty("characteristic.hs", &ch.hs)?;
        non_empty("characteristic.taus", &ch.taus)?;
        if let Some(r) = &ch.random {
            for (name, (lo, hi)) in [("mu", r.mu), ("h", r.h), ("tau", r.tau)] {
                if !(lo < hi) {
                    return Err(CliError::Config(format!("characteristic.random.{name} range is empty")));
                }
            }
        }
        if let Some(t) = &self.suite.taus {
            non_empty("suite.taus", t)?;
        }
        if let Some(h) = &self.suite.hs {
            non_empty("suite.hs", h)?;
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<&FamilySpec> {
        self.nonlinearity.as_ref().ok_or_else(|| CliError::Config("missing `nonlinearity` section".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_objects() {
        let mut v = serde_json::json!({"solver": {"n": 10}});
        apply_override(&mut v, "solver.n=2001").unwrap();
        apply_override(&mut v, "simulation.numerics.dx=0.05").unwrap();
        apply_override(&mut v, "out=runs/a").unwrap();
        assert_eq!(v["solver"]["n"], 2001);
        assert_eq!(v["simulation"]["numerics"]["dx"], 0.05);
        assert_eq!(v["out"], "runs/a");
    }

    #[test]
    fn malformed_override_is_a_config_error() {
        let mut v = serde_json::json!({});
        assert!(matches!(apply_override(&mut v, "tau"), Err(CliError::Config(_))));
        assert!(matches!(apply_override(&mut v, "a..b=1"), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load(None, &["solver.nn=3".into()]).is_err());
        assert!(load(None, &["bogus=1".into()]).is_err());
    }

    #[test]
    fn empty_scan_range_is_rejected() {
        assert!(load(None, &["characteristic.hs=[]".into()]).is_err());
    }

    #[test]
    fn range_includes_both_ends() {
        let r = Range { from: -1.0, to: 1.0, step: 0.5 };
        assert_eq!(r.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn scenario_accepts_its_short_name() {
        let s: SuiteSection = serde_json::from_str(r#"{"scenario":"M=1"}"#).unwrap();
        assert_eq!(s.scenario, Scenario::MOne);
    }
}
