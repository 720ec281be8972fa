//! Synthetic baseline workload.
//!
//! Each channel follows a discretized Ornstein-Uhlenbeck process around its
//! mean: `x[t+1] = mean + phi * (x[t] - mean) + sd * z`, with
//! `phi = exp(-rate * dt)` and `sd = volatility * sqrt(1 - phi^2)`, so
//! `volatility` is the stationary standard deviation. The process starts at
//! the mean and observed samples are clamped to `[0, 1]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::catalog::ResourceKind;
use crate::error::{Error, Result};
use crate::metrics::{clamp_utilization, MetricTrace};

/// One value per utilization channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelLevels {
    pub cpu: f64,
    pub memory: f64,
    pub disk_io: f64,
    pub network: f64,
}

impl ChannelLevels {
    pub fn splat(v: f64) -> Self {
        ChannelLevels {
            cpu: v,
            memory: v,
            disk_io: v,
            network: v,
        }
    }

    pub fn get(&self, kind: ResourceKind) -> f64 {
        match kind {
            ResourceKind::Cpu => self.cpu,
            ResourceKind::Memory => self.memory,
            ResourceKind::DiskIo => self.disk_io,
            ResourceKind::Network => self.network,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyProfile {
    pub mean_ms: f64,
    pub volatility_ms: f64,
}

impl Default for LatencyProfile {
    fn default() -> Self {
        LatencyProfile {
            mean_ms: 40.0,
            volatility_ms: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadProfile {
    pub mean: ChannelLevels,
    pub volatility: ChannelLevels,
    pub mean_reversion_per_s: f64,
    pub duration_s: f64,
    pub sample_interval_s: f64,
    pub latency: Option<LatencyProfile>,
    pub seed: u64,
}

impl Default for WorkloadProfile {
    /// 20 minutes at 1 s resolution: 12.5 min of normal load, a 5 min fault
    /// slot, 2.5 min of recovery.
    fn default() -> Self {
        WorkloadProfile {
            mean: ChannelLevels {
                cpu: 0.45,
                memory: 0.50,
                disk_io: 0.20,
                network: 0.25,
            },
            volatility: ChannelLevels::splat(0.05),
            mean_reversion_per_s: 0.1,
            duration_s: 1200.0,
            sample_interval_s: 1.0,
            latency: Some(LatencyProfile::default()),
            seed: 42,
        }
    }
}

impl WorkloadProfile {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for kind in ResourceKind::ALL {
            let mean = self.mean.get(kind);
            if !(0.0..=1.0).contains(&mean) {
                return Err(Error::InvalidProfile(format!(
                    "{kind} mean {mean} must lie in [0, 1]"
                )));
            }
            let vol = self.volatility.get(kind);
            if !(vol.is_finite() && vol >= 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{kind} volatility {vol} must be >= 0"
                )));
            }
        }
        if !(self.mean_reversion_per_s.is_finite() && self.mean_reversion_per_s > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "mean reversion rate {} must be > 0",
                self.mean_reversion_per_s
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "duration {} must be > 0",
                self.duration_s
            )));
        }
        if !(self.sample_interval_s.is_finite() && self.sample_interval_s > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "sample interval {} must be > 0",
                self.sample_interval_s
            )));
        }
        if self.sample_count() == 0 {
            return Err(Error::InvalidProfile(
                "duration shorter than one sample interval".into(),
            ));
        }
        if let Some(lat) = &self.latency {
            if !(lat.mean_ms >= 0.0 && lat.volatility_ms >= 0.0) {
                return Err(Error::InvalidProfile(
                    "latency mean and volatility must be >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s / self.sample_interval_s).round() as usize
    }
}

struct OuProcess {
    mean: f64,
    phi: f64,
    innovation_sd: f64,
    state: f64,
}

impl OuProcess {
    fn new(mean: f64, volatility: f64, rate: f64, dt: f64) -> Self {
        let phi = (-rate * dt).exp();
        OuProcess {
            mean,
            phi,
            innovation_sd: volatility * (1.0 - phi * phi).sqrt(),
            state: mean,
        }
    }

    fn step(&mut self, z: f64) -> f64 {
        let current = self.state;
        self.state = self.mean + self.phi * (self.state - self.mean) + self.innovation_sd * z;
        current
    }
}

/// Generate the fault-free trace for `profile`. Same profile, same trace.
pub fn generate_baseline(profile: &WorkloadProfile) -> Result<MetricTrace> {
    profile.validate()?;
    let n = profile.sample_count();
    let dt = profile.sample_interval_s;
    let rate = profile.mean_reversion_per_s;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);

    let mut procs = ResourceKind::ALL
        .map(|k| OuProcess::new(profile.mean.get(k), profile.volatility.get(k), rate, dt));
    let mut latency_proc = profile
        .latency
        .map(|l| OuProcess::new(l.mean_ms, l.volatility_ms, rate, dt));

    let mut channels: [Vec<f64>; 4] = Default::default();
    for ch in channels.iter_mut() {
        ch.reserve(n);
    }
    let mut latency = latency_proc.as_ref().map(|_| Vec::with_capacity(n));

    for _ in 0..n {
        for (proc, ch) in procs.iter_mut().zip(channels.iter_mut()) {
            let z: f64 = StandardNormal.sample(&mut rng);
            ch.push(clamp_utilization(proc.step(z)));
        }
        if let (Some(proc), Some(lat)) = (latency_proc.as_mut(), latency.as_mut()) {
            let z: f64 = StandardNormal.sample(&mut rng);
            lat.push(proc.step(z).max(0.0));
        }
    }
    MetricTrace::new(dt, 0.0, channels, latency)
}
