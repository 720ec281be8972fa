//! Metric-level fault models.
//!
//! A fault is a transformation of a utilization trace over an activation
//! window. Samples before the window are never touched. Every magnitude is a
//! named parameter with a default; tool settings of the original attack
//! generators (window sizes, thread counts, loss rates) ride along as
//! metadata and do not enter the distortion math.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::ResourceKind;
use crate::error::{Error, Result};
use crate::metrics::{clamp_utilization, MetricTrace, Window};

pub const DEFAULT_FAULT_START_S: f64 = 750.0;
pub const DEFAULT_FAULT_DURATION_S: f64 = 300.0;
pub const DEFAULT_BURSTABLE_DAMPING: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FaultKind {
    SynFlood,
    UdpFlood,
    Volumetric,
    RouterFailure,
    DiskFailure,
    SoftwareProblem,
}

impl FaultKind {
    pub const ALL: [FaultKind; 6] = [
        FaultKind::SynFlood,
        FaultKind::UdpFlood,
        FaultKind::Volumetric,
        FaultKind::RouterFailure,
        FaultKind::DiskFailure,
        FaultKind::SoftwareProblem,
    ];

    /// Short name used in config files, CLI flags and reports.
    pub fn code(self) -> &'static str {
        match self {
            FaultKind::SynFlood => "syn",
            FaultKind::UdpFlood => "udp",
            FaultKind::Volumetric => "vol",
            FaultKind::RouterFailure => "rtr",
            FaultKind::DiskFailure => "disk",
            FaultKind::SoftwareProblem => "app",
        }
    }

    fn param_specs(self) -> &'static [ParamSpec] {
        match self {
            FaultKind::SynFlood | FaultKind::UdpFlood => FLOOD_PARAMS,
            FaultKind::Volumetric => VOLUMETRIC_PARAMS,
            FaultKind::RouterFailure => ROUTER_PARAMS,
            FaultKind::DiskFailure => DISK_PARAMS,
            FaultKind::SoftwareProblem => SOFTWARE_PARAMS,
        }
    }

    fn salt(self) -> u64 {
        0x9E37_79B9_7F4A_7C15u64.wrapping_mul(self as u64 + 1)
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for FaultKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FaultKind::ALL
            .into_iter()
            .find(|k| k.code() == s)
            .ok_or_else(|| Error::UnknownFaultKind(s.to_string()))
    }
}

impl TryFrom<String> for FaultKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FaultKind> for String {
    fn from(k: FaultKind) -> String {
        k.code().to_string()
    }
}

struct ParamSpec {
    name: &'static str,
    default: f64,
    neutral: f64,
    min: f64,
    max: f64,
}

const fn p(name: &'static str, default: f64, neutral: f64, min: f64, max: f64) -> ParamSpec {
    ParamSpec {
        name,
        default,
        neutral,
        min,
        max,
    }
}

const FLOOD_PARAMS: &[ParamSpec] = &[
    p("saturation_level", 0.98, 0.0, 0.0, 1.0),
    p("flood_network_level", 0.9, 0.0, 0.0, 1.0),
    p("jitter", 0.02, 0.0, 0.0, 0.5),
    // hping3 settings, metadata only
    p("tool_window_bytes", 64.0, 64.0, 0.0, f64::MAX),
    p("tool_data_bytes", 120.0, 120.0, 0.0, f64::MAX),
];

const VOLUMETRIC_PARAMS: &[ParamSpec] = &[
    p("cpu_add", 0.5, 0.0, -1.0, 1.0),
    p("network_add", 0.3, 0.0, -1.0, 1.0),
    p("disk_add", 0.3, 0.0, -1.0, 1.0),
    // MHDDoS settings, metadata only
    p("tool_threads", 450.0, 450.0, 0.0, f64::MAX),
    p("tool_rps", 150.0, 150.0, 0.0, f64::MAX),
];

const ROUTER_PARAMS: &[ParamSpec] = &[
    p("latency_add_ms", 200.0, 0.0, 0.0, f64::MAX),
    p("latency_jitter_ms", 50.0, 0.0, 0.0, f64::MAX),
    p("io_wait_factor", 0.6, 1.0, 0.0, 1.0),
    p("network_factor", 0.7, 1.0, 0.0, 1.0),
];

const DISK_PARAMS: &[ParamSpec] = &[
    p("pause_fraction", 0.6, 0.6, 0.0, 1.0),
    p("pause_disk_factor", 0.05, 1.0, 0.0, 1.0),
    p("pause_cpu_factor", 0.8, 1.0, 0.0, 1.0),
    p("backlog_cpu_level", 0.95, 0.0, 0.0, 1.0),
    p("backlog_disk_level", 0.98, 0.0, 0.0, 1.0),
    p("jitter", 0.02, 0.0, 0.0, 0.5),
];

const SOFTWARE_PARAMS: &[ParamSpec] = &[
    p("retry_overhead", 0.25, 0.0, -1.0, 1.0),
    p("burst_probability", 0.1, 0.0, 0.0, 1.0),
    p("burst_amplitude", 0.4, 0.0, 0.0, 1.0),
    p("latency_add_ms", 100.0, 0.0, 0.0, f64::MAX),
    // injected packet loss, metadata only
    p("packet_loss_rate", 0.5, 0.5, 0.0, 1.0),
];

/// Named real-valued fault parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaultParams(BTreeMap<String, f64>);

impl FaultParams {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("fault parameter `{name}` missing after validation"))
    }

    /// Overlay `overrides` onto the defaults of `kind`, rejecting unknown
    /// names and out-of-range values.
    pub fn with_overrides(kind: FaultKind, overrides: &FaultParams) -> Result<Self> {
        let mut params = default_fault_params(kind);
        for (name, value) in overrides.iter() {
            params.set(name, value);
        }
        params.validate(kind)?;
        Ok(params)
    }

    /// Parameters under which `kind` leaves every sample unchanged.
    pub fn neutral(kind: FaultKind) -> Self {
        FaultParams(
            kind.param_specs()
                .iter()
                .map(|s| (s.name.to_string(), s.neutral))
                .collect(),
        )
    }

    pub fn validate(&self, kind: FaultKind) -> Result<()> {
        let specs = kind.param_specs();
        for (name, value) in self.iter() {
            let spec =
                specs
                    .iter()
                    .find(|s| s.name == name)
                    .ok_or_else(|| Error::InvalidFaultParam {
                        kind: kind.to_string(),
                        name: name.to_string(),
                        message: format!(
                            "unknown parameter (known: {})",
                            specs.iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
                        ),
                    })?;
            if !(value.is_finite() && value >= spec.min && value <= spec.max) {
                return Err(Error::InvalidFaultParam {
                    kind: kind.to_string(),
                    name: name.to_string(),
                    message: format!("{value} outside [{}, {}]", spec.min, spec.max),
                });
            }
        }
        for spec in specs {
            if self.get(spec.name).is_none() {
                return Err(Error::InvalidFaultParam {
                    kind: kind.to_string(),
                    name: spec.name.to_string(),
                    message: "missing".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn default_fault_params(kind: FaultKind) -> FaultParams {
    FaultParams(
        kind.param_specs()
            .iter()
            .map(|s| (s.name.to_string(), s.default))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    pub kind: FaultKind,
    pub window: Window,
    pub params: FaultParams,
    pub seed: u64,
    /// Whether the faulted instance has burstable CPU credits.
    pub target_burstable: bool,
    pub burstable_damping: f64,
}

impl FaultScenario {
    /// Default window and parameters for `kind`.
    pub fn new(kind: FaultKind) -> Self {
        FaultScenario {
            kind,
            window: Window {
                start_s: DEFAULT_FAULT_START_S,
                duration_s: DEFAULT_FAULT_DURATION_S,
            },
            params: default_fault_params(kind),
            seed: 0,
            target_burstable: false,
            burstable_damping: DEFAULT_BURSTABLE_DAMPING,
        }
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn with_params(mut self, params: FaultParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn burstable(mut self, burstable: bool) -> Self {
        self.target_burstable = burstable;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.kind)?;
        if !(0.0..=1.0).contains(&self.burstable_damping) {
            return Err(Error::InvalidFaultParam {
                kind: self.kind.to_string(),
                name: "burstable_damping".into(),
                message: format!("{} outside [0, 1]", self.burstable_damping),
            });
        }
        Window::new(self.window.start_s, self.window.duration_s)?;
        Ok(())
    }
}

fn jitter(rng: &mut ChaCha8Rng, amplitude: f64) -> f64 {
    if amplitude > 0.0 {
        rng.random_range(-amplitude..=amplitude)
    } else {
        0.0
    }
}

/// Apply `scenario` to `trace`, returning the distorted copy.
pub fn apply_fault(trace: &MetricTrace, scenario: &FaultScenario) -> Result<MetricTrace> {
    scenario.validate()?;
    let range = trace.index_range(&scenario.window)?;
    let p = &scenario.params;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ scenario.kind.salt());
    let mut out = trace.clone();
    let n = range.len();

    let baseline_cpu = trace.channel(ResourceKind::Cpu);
    let mut cpu = vec![0.0; n];

    match scenario.kind {
        FaultKind::SynFlood | FaultKind::UdpFlood => {
            let sat = p.value("saturation_level");
            let net_level = p.value("flood_network_level");
            let amp = p.value("jitter");
            let net = out.channel_mut(ResourceKind::Network);
            for (k, i) in range.clone().enumerate() {
                cpu[k] = baseline_cpu[i].max(sat + jitter(&mut rng, amp));
                net[i] = clamp_utilization(net[i].max(net_level + jitter(&mut rng, amp)));
            }
        }
        FaultKind::Volumetric => {
            let cpu_add = p.value("cpu_add");
            let net_add = p.value("network_add");
            let disk_add = p.value("disk_add");
            for (k, i) in range.clone().enumerate() {
                cpu[k] = baseline_cpu[i] + cpu_add;
            }
            let net = out.channel_mut(ResourceKind::Network);
            for i in range.clone() {
                net[i] = clamp_utilization(net[i] + net_add);
            }
            let disk = out.channel_mut(ResourceKind::DiskIo);
            for i in range.clone() {
                disk[i] = clamp_utilization(disk[i] + disk_add);
            }
        }
        FaultKind::RouterFailure => {
            let io_wait = p.value("io_wait_factor");
            let net_factor = p.value("network_factor");
            let lat_add = p.value("latency_add_ms");
            let lat_jitter = p.value("latency_jitter_ms");
            for (k, i) in range.clone().enumerate() {
                cpu[k] = baseline_cpu[i] * io_wait;
            }
            let net = out.channel_mut(ResourceKind::Network);
            for i in range.clone() {
                net[i] = clamp_utilization(net[i] * net_factor);
            }
            if let Some(lat) = out.latency_mut() {
                for i in range.clone() {
                    lat[i] = (lat[i] + lat_add + jitter(&mut rng, lat_jitter)).max(0.0);
                }
            }
        }
        FaultKind::DiskFailure => {
            let pause_len = (p.value("pause_fraction") * n as f64).round() as usize;
            let pause_disk = p.value("pause_disk_factor");
            let pause_cpu = p.value("pause_cpu_factor");
            let backlog_cpu = p.value("backlog_cpu_level");
            let backlog_disk = p.value("backlog_disk_level");
            let amp = p.value("jitter");
            let disk = out.channel_mut(ResourceKind::DiskIo);
            for (k, i) in range.clone().enumerate() {
                if k < pause_len {
                    // CPU drifts down while requests block on the detached volume.
                    let progress = (k + 1) as f64 / pause_len as f64;
                    cpu[k] = baseline_cpu[i] * (1.0 - progress * (1.0 - pause_cpu));
                    disk[i] = clamp_utilization(disk[i] * pause_disk);
                } else {
                    cpu[k] = baseline_cpu[i].max(backlog_cpu + jitter(&mut rng, amp));
                    disk[i] = clamp_utilization(disk[i].max(backlog_disk + jitter(&mut rng, amp)));
                }
            }
        }
        FaultKind::SoftwareProblem => {
            let overhead = p.value("retry_overhead");
            let burst_p = p.value("burst_probability");
            let burst_amp = p.value("burst_amplitude");
            let lat_add = p.value("latency_add_ms");
            for (k, i) in range.clone().enumerate() {
                let burst = if burst_p > 0.0 && rng.random_bool(burst_p) {
                    burst_amp * rng.random::<f64>()
                } else {
                    0.0
                };
                cpu[k] = baseline_cpu[i] + overhead + burst;
            }
            if let Some(lat) = out.latency_mut() {
                for i in range.clone() {
                    lat[i] += lat_add;
                }
            }
        }
    }

    let damping = if scenario.target_burstable {
        scenario.burstable_damping
    } else {
        1.0
    };
    let out_cpu = out.channel_mut(ResourceKind::Cpu);
    for (k, i) in range.enumerate() {
        let base = baseline_cpu[i];
        let distorted = if damping == 1.0 {
            cpu[k]
        } else {
            base + damping * (cpu[k] - base)
        };
        out_cpu[i] = clamp_utilization(distorted);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ResourceVector;
    use crate::metrics::max_aggregate;
    use crate::workload::{generate_baseline, WorkloadProfile};

    fn flat(level: f64) -> MetricTrace {
        let mut levels = ResourceVector::splat(level);
        levels.network = 0.25;
        MetricTrace::constant(levels, 1200, 1.0).unwrap()
    }

    fn fault_window() -> Window {
        Window::new(DEFAULT_FAULT_START_S, DEFAULT_FAULT_DURATION_S).unwrap()
    }

    #[test]
    fn kind_codes_round_trip() {
        for kind in FaultKind::ALL {
            assert_eq!(kind.code().parse::<FaultKind>().unwrap(), kind);
        }
        let err = "bogus".parse::<FaultKind>().unwrap_err().to_string();
        assert!(err.contains("syn, udp, vol, rtr, disk, app"), "{err}");
    }

    #[test]
    fn default_param_values() {
        let rtr = default_fault_params(FaultKind::RouterFailure);
        assert_eq!(rtr.get("latency_add_ms"), Some(200.0));
        let app = default_fault_params(FaultKind::SoftwareProblem);
        assert_eq!(app.get("packet_loss_rate"), Some(0.5));
        let syn = default_fault_params(FaultKind::SynFlood);
        assert_eq!(syn.get("saturation_level"), Some(0.98));
        for kind in FaultKind::ALL {
            default_fault_params(kind).validate(kind).unwrap();
            FaultParams::neutral(kind).validate(kind).unwrap();
        }
    }

    #[test]
    fn overrides_validated() {
        let mut o = FaultParams::default();
        o.set("io_wait_factor", 0.5);
        let p = FaultParams::with_overrides(FaultKind::RouterFailure, &o).unwrap();
        assert_eq!(p.get("io_wait_factor"), Some(0.5));
        assert_eq!(p.get("latency_add_ms"), Some(200.0));

        let mut bad = FaultParams::default();
        bad.set("saturation_level", 0.9);
        assert!(FaultParams::with_overrides(FaultKind::RouterFailure, &bad).is_err());
        let mut bad = FaultParams::default();
        bad.set("io_wait_factor", 1.5);
        assert!(FaultParams::with_overrides(FaultKind::RouterFailure, &bad).is_err());
    }

    #[test]
    fn syn_flood_saturates_inside_window_only() {
        let base = flat(0.45);
        let out =
            apply_fault(&base, &FaultScenario::new(FaultKind::SynFlood).with_seed(1)).unwrap();
        let inside = max_aggregate(&out, &fault_window()).unwrap();
        assert!(inside.cpu >= 0.95);
        assert!(inside.network >= 0.85);
        let before = max_aggregate(&out, &Window::new(0.0, 750.0).unwrap()).unwrap();
        let after = max_aggregate(&out, &Window::new(1050.0, 150.0).unwrap()).unwrap();
        assert!(before.cpu <= 0.55 && after.cpu <= 0.55);
    }

    #[test]
    fn router_failure_deflates_cpu_and_adds_latency() {
        let base = generate_baseline(&WorkloadProfile::default()).unwrap();
        let out = apply_fault(&base, &FaultScenario::new(FaultKind::RouterFailure)).unwrap();
        let w = fault_window();
        assert!(max_aggregate(&out, &w).unwrap().cpu < max_aggregate(&base, &w).unwrap().cpu);
        let lat_base = base
            .channel_max(crate::metrics::Channel::LatencyMs, &w)
            .unwrap();
        let lat_out = out
            .channel_max(crate::metrics::Channel::LatencyMs, &w)
            .unwrap();
        assert!(lat_out >= lat_base + 150.0);
    }

    #[test]
    fn disk_failure_has_pause_then_backlog() {
        let base = flat(0.45);
        let out = apply_fault(&base, &FaultScenario::new(FaultKind::DiskFailure)).unwrap();
        let disk = out.channel(ResourceKind::DiskIo);
        let cpu = out.channel(ResourceKind::Cpu);
        // pause: first 180 s of the window
        assert!(disk[750..930].iter().all(|&d| d < 0.05));
        assert!(cpu[929] < cpu[750]);
        // backlog: remaining 120 s
        assert!(disk[930..1050].iter().all(|&d| d >= 0.95));
        assert!(cpu[930..1050].iter().all(|&c| c >= 0.93));
        assert_eq!(&disk[1050..], &base.channel(ResourceKind::DiskIo)[1050..]);
    }

    #[test]
    fn neutral_params_are_identity() {
        let base = generate_baseline(&WorkloadProfile::default()).unwrap();
        for kind in FaultKind::ALL {
            for burstable in [false, true] {
                let s = FaultScenario::new(kind)
                    .with_params(FaultParams::neutral(kind))
                    .burstable(burstable)
                    .with_seed(9);
                assert_eq!(apply_fault(&base, &s).unwrap(), base, "{kind}");
            }
        }
    }

    #[test]
    fn window_outside_trace_rejected() {
        let base = MetricTrace::constant(ResourceVector::splat(0.4), 900, 1.0).unwrap();
        let err = apply_fault(&base, &FaultScenario::new(FaultKind::Volumetric)).unwrap_err();
        assert!(matches!(err, Error::WindowOutOfRange { .. }));
    }

    #[test]
    fn locality_boundedness_determinism() {
        for seed in [1u64, 2, 3] {
            let base = generate_baseline(&WorkloadProfile::default().with_seed(seed)).unwrap();
            for kind in FaultKind::ALL {
                for burstable in [false, true] {
                    let s = FaultScenario::new(kind)
                        .with_seed(seed)
                        .burstable(burstable);
                    let out = apply_fault(&base, &s).unwrap();
                    assert_eq!(out, apply_fault(&base, &s).unwrap());
                    for ch in ResourceKind::ALL {
                        assert_eq!(&out.channel(ch)[..750], &base.channel(ch)[..750]);
                        assert_eq!(&out.channel(ch)[1050..], &base.channel(ch)[1050..]);
                        assert!(out.channel(ch).iter().all(|v| (0.0..=1.0).contains(v)));
                    }
                    assert_eq!(
                        &out.latency_ms().unwrap()[..750],
                        &base.latency_ms().unwrap()[..750]
                    );
                }
            }
        }
    }

    #[test]
    fn sign_structure_on_default_baseline() {
        let base = generate_baseline(&WorkloadProfile::default()).unwrap();
        let w = fault_window();
        let base_max = max_aggregate(&base, &w).unwrap().cpu;
        for kind in FaultKind::ALL {
            let out = apply_fault(&base, &FaultScenario::new(kind).with_seed(42)).unwrap();
            let m = max_aggregate(&out, &w).unwrap().cpu;
            if kind == FaultKind::RouterFailure {
                assert!(m < base_max, "{kind}: {m} vs {base_max}");
            } else {
                assert!(m > base_max, "{kind}: {m} vs {base_max}");
            }
        }
    }

    #[test]
    fn burstable_damps_cpu_distortion() {
        let base = generate_baseline(&WorkloadProfile::default()).unwrap();
        for kind in FaultKind::ALL {
            let s = FaultScenario::new(kind).with_seed(5);
            let plain = apply_fault(&base, &s).unwrap();
            let damped = apply_fault(&base, &s.clone().burstable(true)).unwrap();
            let cpu = |t: &MetricTrace| t.channel(ResourceKind::Cpu)[750..1050].to_vec();
            let (b, full, soft) = (cpu(&base), cpu(&plain), cpu(&damped));
            for (i, ((b, f), s)) in b.iter().zip(&full).zip(&soft).enumerate() {
                assert!(
                    (s - b).abs() <= (f - b).abs() + 1e-12,
                    "{kind} at {}",
                    750 + i
                );
            }
        }
    }
}
