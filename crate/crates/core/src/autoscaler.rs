//! Vertical and horizontal scaling rules, and composite trigger gating.
//!
//! Both deciders evaluate once over a trailing lookback window, using the
//! per-channel maximum utilization as the representative value.
//!
//! Vertical: `optSpec_i = ceil(spec_i * (2 * max(m_i) - SLO))`, floored at 0,
//! followed by a grid search for the cheapest instance covering `optSpec`.
//! Note that `max(m_i) == SLO` yields a multiplier of `SLO`, i.e. a
//! downsizing recommendation; this is intentional and can be switched to the
//! target-tracking reading `spec_i * max(m_i) / SLO` with
//! [`SizingRule::Headroom`].
//!
//! Horizontal: `optReplicas = max_i ceil(current * max(m_i) / SLO)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{InstanceCatalog, InstanceType, ResourceVector};
use crate::error::{Error, Result};
use crate::metrics::{max_aggregate, Channel, MetricTrace, Window};

/// Slack absorbed before rounding up, so that products such as
/// `3 * 0.85 / 0.85` do not round to the next integer.
const CEIL_EPS: f64 = 1e-9;

pub const DEFAULT_LOOKBACK_S: f64 = 900.0;

fn ceil_guarded(x: f64) -> f64 {
    (x - CEIL_EPS).ceil().max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SloConfig {
    /// Target utilization fraction in (0, 1].
    pub target: f64,
    pub lookback_s: f64,
}

impl SloConfig {
    pub fn new(target: f64, lookback_s: f64) -> Result<Self> {
        if !(target > 0.0 && target <= 1.0) {
            return Err(Error::InvalidSlo(format!(
                "target {target} must lie in (0, 1]"
            )));
        }
        if !(lookback_s.is_finite() && lookback_s > 0.0) {
            return Err(Error::InvalidSlo(format!(
                "lookback {lookback_s} s must be > 0"
            )));
        }
        Ok(SloConfig { target, lookback_s })
    }

    /// Cost-efficiency preset.
    pub fn slo85() -> Self {
        SloConfig {
            target: 0.85,
            lookback_s: DEFAULT_LOOKBACK_S,
        }
    }

    /// Stability preset.
    pub fn slo50() -> Self {
        SloConfig {
            target: 0.50,
            lookback_s: DEFAULT_LOOKBACK_S,
        }
    }

    /// `slo85`, `slo50`, or `slo<percent>` for other targets.
    pub fn name(&self) -> String {
        let pct = self.target * 100.0;
        if (pct - pct.round()).abs() < 1e-9 {
            format!("slo{}", pct.round() as i64)
        } else {
            format!("slo{pct}")
        }
    }

    /// Parse `slo85`, `slo50`, `slo<percent>` or a bare fraction like `0.7`.
    pub fn parse(name: &str, lookback_s: f64) -> Result<Self> {
        let target = match name.strip_prefix("slo") {
            Some(pct) => {
                pct.parse::<f64>()
                    .map_err(|_| Error::InvalidSlo(format!("unknown SLO preset `{name}`")))?
                    / 100.0
            }
            None => name
                .parse::<f64>()
                .map_err(|_| Error::InvalidSlo(format!("unknown SLO preset `{name}`")))?,
        };
        SloConfig::new(target, lookback_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Vertical,
    Horizontal,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Vertical => "vertical",
            Policy::Horizontal => "horizontal",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(Policy::Vertical),
            "horizontal" => Ok(Policy::Horizontal),
            other => Err(Error::Config(format!(
                "unknown policy `{other}` (valid: vertical, horizontal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizingRule {
    /// `spec * (2 * max - SLO)`
    #[default]
    Literal,
    /// `spec * max / SLO`
    Headroom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerMode {
    Any,
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub channel: Channel,
    pub above: f64,
}

/// Multi-channel trigger: fires when the windowed maxima exceed their
/// thresholds, on all channels (`All`) or on at least one (`Any`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositeTrigger {
    pub thresholds: Vec<Threshold>,
    pub mode: TriggerMode,
}

impl CompositeTrigger {
    pub fn new(mode: TriggerMode) -> Self {
        CompositeTrigger {
            thresholds: Vec::new(),
            mode,
        }
    }

    pub fn with(mut self, channel: Channel, above: f64) -> Self {
        self.thresholds.push(Threshold { channel, above });
        self
    }

    /// Build from channel-name → threshold pairs, e.g. `{"cpu": 0.85}`.
    pub fn from_map(thresholds: &BTreeMap<String, f64>, mode: TriggerMode) -> Result<Self> {
        let thresholds = thresholds
            .iter()
            .map(|(name, &above)| {
                Ok(Threshold {
                    channel: name.parse()?,
                    above,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompositeTrigger { thresholds, mode })
    }

    pub fn fires(&self, trace: &MetricTrace, window: &Window) -> Result<bool> {
        composite_trigger(trace, window, &self.thresholds, self.mode)
    }
}

pub fn composite_trigger(
    trace: &MetricTrace,
    window: &Window,
    thresholds: &[Threshold],
    mode: TriggerMode,
) -> Result<bool> {
    let mut exceeded = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        if !trace.has_channel(t.channel) {
            return Err(Error::UnknownChannel(t.channel.name().to_string()));
        }
        exceeded.push(trace.channel_max(t.channel, window)? > t.above);
    }
    Ok(match mode {
        TriggerMode::All => exceeded.iter().all(|&e| e),
        TriggerMode::Any => exceeded.iter().any(|&e| e),
    })
}

/// Knobs shared by both deciders.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoscalerConfig {
    pub sizing_rule: SizingRule,
    pub current_replicas: u32,
    pub min_replicas: u32,
    pub max_replicas: Option<u32>,
    /// Pre-aggregate samples into buckets of this many seconds (max within
    /// bucket) before taking the lookback maximum.
    pub bucket_s: Option<f64>,
    /// When set, scaling only happens if the trigger fires over the lookback.
    pub gate: Option<CompositeTrigger>,
}

impl Default for AutoscalerConfig {
    fn default() -> Self {
        AutoscalerConfig {
            sizing_rule: SizingRule::Literal,
            current_replicas: 3,
            min_replicas: 1,
            max_replicas: None,
            bucket_s: None,
            gate: None,
        }
    }
}

/// Multiplier applied to the current spec for one resource.
pub fn sizing_multiplier(util_max: f64, slo_target: f64, interp: SizingRule) -> f64 {
    match interp {
        SizingRule::Literal => (util_max - (slo_target - util_max)).max(0.0),
        SizingRule::Headroom => util_max / slo_target,
    }
}

/// Real-valued optimal spec before rounding. Dimensions absent from `spec`
/// stay absent.
pub fn vertical_opt_spec_raw(
    spec: &ResourceVector,
    util_max: &ResourceVector,
    slo_target: f64,
    interp: SizingRule,
) -> ResourceVector {
    spec.map(|kind, size| {
        let util = util_max.get(kind).unwrap_or(0.0);
        size * sizing_multiplier(util, slo_target, interp)
    })
}

/// Optimal spec per resource, rounded up (literal interpretation).
pub fn vertical_opt_spec(
    spec: &ResourceVector,
    util_max: &ResourceVector,
    slo: &SloConfig,
) -> ResourceVector {
    vertical_opt_spec_raw(spec, util_max, slo.target, SizingRule::Literal)
        .map(|_, v| ceil_guarded(v))
}

/// Replica count needed to bring every channel back to the SLO target.
pub fn horizontal_opt_replicas(
    current_replicas: u32,
    util_max: &ResourceVector,
    slo: &SloConfig,
) -> Result<u32> {
    horizontal_opt_replicas_bounded(current_replicas, util_max, slo, 1, None)
}

pub fn horizontal_opt_replicas_bounded(
    current_replicas: u32,
    util_max: &ResourceVector,
    slo: &SloConfig,
    min_replicas: u32,
    max_replicas: Option<u32>,
) -> Result<u32> {
    if current_replicas < 1 {
        return Err(Error::Precondition("current replicas must be >= 1".into()));
    }
    let wanted = util_max
        .iter()
        .map(|(_, u)| ceil_guarded(f64::from(current_replicas) * u / slo.target))
        .fold(0.0, f64::max);
    let mut replicas = (wanted as u32).max(min_replicas).max(1);
    if let Some(cap) = max_replicas {
        replicas = replicas.min(cap.max(1));
    }
    Ok(replicas)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionOutcome {
    Vertical {
        opt_spec_raw: ResourceVector,
        opt_spec: ResourceVector,
        chosen: InstanceType,
        /// No catalog entry covered `opt_spec`; `chosen` is the largest entry.
        demand_exceeds_catalog: bool,
    },
    Horizontal {
        current_replicas: u32,
        opt_replicas: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDecision {
    pub aggregated_metrics: ResourceVector,
    /// Whether the decision changes the current deployment.
    pub triggered: bool,
    pub outcome: DecisionOutcome,
}

impl ScalingDecision {
    pub fn policy(&self) -> Policy {
        match self.outcome {
            DecisionOutcome::Vertical { .. } => Policy::Vertical,
            DecisionOutcome::Horizontal { .. } => Policy::Horizontal,
        }
    }

    pub fn chosen_instance(&self) -> Option<&InstanceType> {
        match &self.outcome {
            DecisionOutcome::Vertical { chosen, .. } => Some(chosen),
            DecisionOutcome::Horizontal { .. } => None,
        }
    }

    pub fn opt_replicas(&self) -> Option<u32> {
        match self.outcome {
            DecisionOutcome::Horizontal { opt_replicas, .. } => Some(opt_replicas),
            DecisionOutcome::Vertical { .. } => None,
        }
    }

    pub fn opt_spec_raw(&self) -> Option<&ResourceVector> {
        match &self.outcome {
            DecisionOutcome::Vertical { opt_spec_raw, .. } => Some(opt_spec_raw),
            DecisionOutcome::Horizontal { .. } => None,
        }
    }

    pub fn demand_exceeds_catalog(&self) -> bool {
        matches!(
            self.outcome,
            DecisionOutcome::Vertical {
                demand_exceeds_catalog: true,
                ..
            }
        )
    }
}

fn lookback(trace: &MetricTrace, slo: &SloConfig) -> Result<Window> {
    let span = trace.end_s() - trace.start_offset_s();
    if slo.lookback_s > span + 1e-9 {
        return Err(Error::WindowOutOfRange {
            start: trace.end_s() - slo.lookback_s,
            end: trace.end_s(),
            trace_start: trace.start_offset_s(),
            trace_end: trace.end_s(),
        });
    }
    Window::trailing(trace, slo.lookback_s)
}

fn aggregate(
    trace: &MetricTrace,
    window: &Window,
    cfg: &AutoscalerConfig,
) -> Result<ResourceVector> {
    match cfg.bucket_s {
        Some(bucket) => max_aggregate(&trace.bucket_max(bucket)?, window),
        None => max_aggregate(trace, window),
    }
}

fn gate_open(trace: &MetricTrace, window: &Window, cfg: &AutoscalerConfig) -> Result<bool> {
    match &cfg.gate {
        Some(gate) => gate.fires(trace, window),
        None => Ok(true),
    }
}

pub fn vertical_decide(
    catalog: &InstanceCatalog,
    current: &InstanceType,
    trace: &MetricTrace,
    slo: &SloConfig,
    cfg: &AutoscalerConfig,
) -> Result<ScalingDecision> {
    let window = lookback(trace, slo)?;
    let util = aggregate(trace, &window, cfg)?;
    let opt_spec_raw = vertical_opt_spec_raw(&current.specs, &util, slo.target, cfg.sizing_rule);
    let opt_spec = opt_spec_raw.map(|_, v| ceil_guarded(v));

    let (chosen, demand_exceeds_catalog) = if gate_open(trace, &window, cfg)? {
        match catalog.grid_search(&opt_spec) {
            Ok(found) => (found.clone(), false),
            Err(Error::DemandUnsatisfiable { .. }) => (catalog.largest().clone(), true),
            Err(e) => return Err(e),
        }
    } else {
        (current.clone(), false)
    };
    Ok(ScalingDecision {
        aggregated_metrics: util,
        triggered: chosen != *current,
        outcome: DecisionOutcome::Vertical {
            opt_spec_raw,
            opt_spec,
            chosen,
            demand_exceeds_catalog,
        },
    })
}

pub fn horizontal_decide(
    trace: &MetricTrace,
    slo: &SloConfig,
    cfg: &AutoscalerConfig,
) -> Result<ScalingDecision> {
    let window = lookback(trace, slo)?;
    let util = aggregate(trace, &window, cfg)?;
    let opt_replicas = if gate_open(trace, &window, cfg)? {
        horizontal_opt_replicas_bounded(
            cfg.current_replicas,
            &util,
            slo,
            cfg.min_replicas,
            cfg.max_replicas,
        )?
    } else {
        cfg.current_replicas
    };
    Ok(ScalingDecision {
        aggregated_metrics: util,
        triggered: opt_replicas != cfg.current_replicas,
        outcome: DecisionOutcome::Horizontal {
            current_replicas: cfg.current_replicas,
            opt_replicas,
        },
    })
}
