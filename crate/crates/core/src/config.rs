//! Experiment configuration file (TOML).
//!
//! ```toml
//! catalog = "builtin"
//! faults = ["syn", "udp", "vol", "rtr", "disk", "app"]
//! slos = ["slo85", "slo50"]
//! policies = ["vertical", "horizontal"]
//! seeds = [42]
//!
//! [workload]
//! duration_s = 1200.0
//!
//! [fault_params.rtr]
//! io_wait_factor = 0.6
//!
//! [trigger]
//! mode = "all"
//! thresholds = { cpu = 0.85, network = 0.5 }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autoscaler::{
    AutoscalerConfig, CompositeTrigger, Policy, SizingRule, SloConfig, TriggerMode,
    DEFAULT_LOOKBACK_S,
};
use crate::catalog::{InstanceCatalog, InstanceType, DEFAULT_HOURS_PER_MONTH};
use crate::error::{Error, Result};
use crate::faults::{
    FaultKind, FaultParams, DEFAULT_BURSTABLE_DAMPING, DEFAULT_FAULT_DURATION_S,
    DEFAULT_FAULT_START_S,
};
use crate::metrics::Window;
use crate::workload::WorkloadProfile;

pub const SEED_ENV: &str = "FAULTSCALE_SEED";
pub const FALLBACK_SEED: u64 = 42;

/// Seed used when nothing else is configured: `$FAULTSCALE_SEED`, else 42.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(FALLBACK_SEED)
}

fn default_catalog() -> String {
    "builtin".into()
}

fn default_faults() -> Vec<String> {
    FaultKind::ALL
        .iter()
        .map(|k| k.code().to_string())
        .collect()
}

fn default_slos() -> Vec<String> {
    vec!["slo85".into(), "slo50".into()]
}

fn default_policies() -> Vec<String> {
    vec!["vertical".into(), "horizontal".into()]
}

fn default_seeds() -> Vec<u64> {
    vec![default_seed()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultWindowConfig {
    pub start_s: f64,
    pub duration_s: f64,
}

impl Default for FaultWindowConfig {
    fn default() -> Self {
        FaultWindowConfig {
            start_s: DEFAULT_FAULT_START_S,
            duration_s: DEFAULT_FAULT_DURATION_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoscalerSection {
    pub sizing_rule: SizingRule,
    pub current_replicas: u32,
    pub min_replicas: u32,
    pub max_replicas: Option<u32>,
    /// Per-minute pre-bucketing (max within bucket); off unless set.
    pub bucket_s: Option<f64>,
}

impl Default for AutoscalerSection {
    fn default() -> Self {
        AutoscalerSection {
            sizing_rule: SizingRule::Literal,
            current_replicas: 3,
            min_replicas: 1,
            max_replicas: None,
            bucket_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerSection {
    pub mode: TriggerMode,
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            csv: true,
            json: true,
            plots: true,
        }
    }
}

/// On-disk experiment description. Every field has a default, so an empty
/// file describes the full 6 × 9 × 2 × 2 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub catalog: String,
    /// `family.size` ids; empty means every catalog entry.
    pub instances: Vec<String>,
    pub faults: Vec<String>,
    pub slos: Vec<String>,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub hours_per_month: f64,
    pub lookback_s: f64,
    pub classification_tolerance_pct: f64,
    pub burstable_damping: f64,
    pub workload: WorkloadProfile,
    pub fault_window: FaultWindowConfig,
    pub fault_params: BTreeMap<String, FaultParams>,
    pub autoscaler: AutoscalerSection,
    pub trigger: Option<TriggerSection>,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            catalog: default_catalog(),
            instances: Vec::new(),
            faults: default_faults(),
            slos: default_slos(),
            policies: default_policies(),
            seeds: default_seeds(),
            hours_per_month: DEFAULT_HOURS_PER_MONTH,
            lookback_s: DEFAULT_LOOKBACK_S,
            classification_tolerance_pct: 5.0,
            burstable_damping: DEFAULT_BURSTABLE_DAMPING,
            workload: WorkloadProfile::default(),
            fault_window: FaultWindowConfig::default(),
            fault_params: BTreeMap::new(),
            autoscaler: AutoscalerSection::default(),
            trigger: None,
            output: OutputSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load a config file; the name `default` selects the built-in config.
    pub fn load(path: &str) -> Result<Self> {
        if path == "default" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {path}: {e}")))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolve names, load the catalog and validate everything.
    pub fn resolve(&self) -> Result<Experiment> {
        self.resolve_with_base(None)
    }

    /// Like [`resolve`](Self::resolve), with a relative catalog path taken
    /// relative to `base`.
    pub fn resolve_with_base(&self, base: Option<&Path>) -> Result<Experiment> {
        let catalog = match (self.catalog.as_str(), base) {
            ("builtin", _) => InstanceCatalog::builtin(),
            (path, Some(base)) if Path::new(path).is_relative() => {
                InstanceCatalog::from_path(base.join(path))?
            }
            (path, _) => InstanceCatalog::from_path(path)?,
        };

        let instances: Vec<InstanceType> = if self.instances.is_empty() {
            catalog.entries().to_vec()
        } else {
            self.instances
                .iter()
                .map(|id| {
                    catalog
                        .find(id)
                        .cloned()
                        .ok_or_else(|| Error::Config(format!("unknown instance `{id}`")))
                })
                .collect::<Result<_>>()?
        };

        let faults = self
            .faults
            .iter()
            .map(|f| f.parse::<FaultKind>())
            .collect::<Result<Vec<_>>>()?;
        for name in self.fault_params.keys() {
            name.parse::<FaultKind>()?;
        }
        let fault_params = faults
            .iter()
            .map(|&kind| {
                let overrides = self
                    .fault_params
                    .get(kind.code())
                    .cloned()
                    .unwrap_or_default();
                Ok((kind, FaultParams::with_overrides(kind, &overrides)?))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;

        let slos = self
            .slos
            .iter()
            .map(|s| SloConfig::parse(s, self.lookback_s))
            .collect::<Result<Vec<_>>>()?;
        let policies = self
            .policies
            .iter()
            .map(|p| p.parse::<Policy>())
            .collect::<Result<Vec<_>>>()?;

        if faults.is_empty() || slos.is_empty() || policies.is_empty() || instances.is_empty() {
            return Err(Error::Config(
                "at least one fault, SLO, policy and instance is required".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.hours_per_month.is_finite() && self.hours_per_month > 0.0) {
            return Err(Error::Config("hours_per_month must be > 0".into()));
        }
        if self.classification_tolerance_pct.is_nan() || self.classification_tolerance_pct < 0.0 {
            return Err(Error::Config(
                "classification_tolerance_pct must be >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.burstable_damping) {
            return Err(Error::Config("burstable_damping must lie in [0, 1]".into()));
        }
        self.workload.validate()?;
        let fault_window = Window::new(self.fault_window.start_s, self.fault_window.duration_s)?;
        if self.autoscaler.current_replicas < 1 {
            return Err(Error::Config("current_replicas must be >= 1".into()));
        }

        let gate = self
            .trigger
            .as_ref()
            .map(|t| CompositeTrigger::from_map(&t.thresholds, t.mode))
            .transpose()?;

        Ok(Experiment {
            catalog,
            instances,
            faults,
            fault_params,
            slos,
            policies,
            seeds: self.seeds.clone(),
            hours_per_month: self.hours_per_month,
            tolerance_pct: self.classification_tolerance_pct,
            burstable_damping: self.burstable_damping,
            workload: self.workload.clone(),
            fault_window,
            autoscaler: AutoscalerConfig {
                sizing_rule: self.autoscaler.sizing_rule,
                current_replicas: self.autoscaler.current_replicas,
                min_replicas: self.autoscaler.min_replicas,
                max_replicas: self.autoscaler.max_replicas,
                bucket_s: self.autoscaler.bucket_s,
                gate,
            },
        })
    }
}

/// Fully resolved experiment matrix.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub catalog: InstanceCatalog,
    pub instances: Vec<InstanceType>,
    pub faults: Vec<FaultKind>,
    pub fault_params: BTreeMap<FaultKind, FaultParams>,
    pub slos: Vec<SloConfig>,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    pub hours_per_month: f64,
    pub tolerance_pct: f64,
    pub burstable_damping: f64,
    pub workload: WorkloadProfile,
    pub fault_window: Window,
    pub autoscaler: AutoscalerConfig,
}

impl Experiment {
    pub fn scenario_count(&self) -> usize {
        self.faults.len()
            * self.instances.len()
            * self.slos.len()
            * self.policies.len()
            * self.seeds.len()
    }
}
