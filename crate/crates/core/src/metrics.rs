//! Multi-channel utilization traces, windowed max aggregation and trace files.
//!
//! Utilization channels are fractions of provisioned capacity in `[0, 1]`.
//! Request latency, when present, is carried beside them in milliseconds.

use std::fmt;
use std::io::{Read, Write};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{ResourceKind, ResourceVector};
use crate::error::{Error, Result};

const TIME_EPS: f64 = 1e-9;

/// Clamp a raw demand ratio to an observable utilization.
pub fn clamp_utilization(raw: f64) -> f64 {
    if raw.is_nan() {
        0.0
    } else {
        raw.clamp(0.0, 1.0)
    }
}

/// A channel that thresholds and aggregations can reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Resource(ResourceKind),
    LatencyMs,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Resource(kind) => kind.name(),
            Channel::LatencyMs => "latency_ms",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "latency_ms" || s == "latency" {
            return Ok(Channel::LatencyMs);
        }
        ResourceKind::from_name(s)
            .map(Channel::Resource)
            .ok_or_else(|| Error::UnknownChannel(s.to_string()))
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Half-open time interval `[start_s, start_s + duration_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start_s: f64,
    pub duration_s: f64,
}

impl Window {
    pub fn new(start_s: f64, duration_s: f64) -> Result<Self> {
        if !(start_s.is_finite() && start_s >= 0.0) {
            return Err(Error::InvalidWindow(format!(
                "start {start_s} must be >= 0"
            )));
        }
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(Error::InvalidWindow(format!(
                "duration {duration_s} must be > 0"
            )));
        }
        Ok(Window {
            start_s,
            duration_s,
        })
    }

    /// The last `duration_s` seconds of `trace` (the whole trace if shorter).
    pub fn trailing(trace: &MetricTrace, duration_s: f64) -> Result<Self> {
        let start = (trace.end_s() - duration_s).max(trace.start_offset_s());
        Window::new(start, trace.end_s() - start)
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s - TIME_EPS && t < self.end_s() - TIME_EPS
    }
}

/// Fixed-interval multi-channel utilization time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTrace {
    sample_interval_s: f64,
    start_offset_s: f64,
    channels: [Vec<f64>; 4],
    latency_ms: Option<Vec<f64>>,
}

impl MetricTrace {
    /// Build a trace. `channels` is indexed by `ResourceKind::index()`.
    pub fn new(
        sample_interval_s: f64,
        start_offset_s: f64,
        channels: [Vec<f64>; 4],
        latency_ms: Option<Vec<f64>>,
    ) -> Result<Self> {
        let trace = MetricTrace {
            sample_interval_s,
            start_offset_s,
            channels,
            latency_ms,
        };
        trace.validate()?;
        Ok(trace)
    }

    /// Every channel held at a constant value for `len` samples.
    pub fn constant(levels: ResourceVector, len: usize, sample_interval_s: f64) -> Result<Self> {
        let channels = ResourceKind::ALL.map(|k| vec![levels.get(k).unwrap_or(0.0); len]);
        MetricTrace::new(sample_interval_s, 0.0, channels, None)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval_s.is_finite() && self.sample_interval_s > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "sample interval {} must be > 0",
                self.sample_interval_s
            )));
        }
        if !(self.start_offset_s.is_finite() && self.start_offset_s >= 0.0) {
            return Err(Error::InvalidTrace(format!(
                "start offset {} must be >= 0",
                self.start_offset_s
            )));
        }
        let len = self.channels[0].len();
        for kind in ResourceKind::ALL {
            let ch = &self.channels[kind.index()];
            if ch.len() != len {
                return Err(Error::InvalidTrace(format!(
                    "channel {kind} has {} samples, expected {len}",
                    ch.len()
                )));
            }
            if let Some(row) = ch.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::UtilizationOutOfRange {
                    row: row + 1,
                    value: ch[row],
                });
            }
        }
        if let Some(lat) = &self.latency_ms {
            if lat.len() != len {
                return Err(Error::InvalidTrace(format!(
                    "latency channel has {} samples, expected {len}",
                    lat.len()
                )));
            }
            if let Some(row) = lat.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::TraceRow {
                    row: row + 1,
                    message: format!("latency {} must be >= 0", lat[row]),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_interval_s(&self) -> f64 {
        self.sample_interval_s
    }

    pub fn start_offset_s(&self) -> f64 {
        self.start_offset_s
    }

    pub fn end_s(&self) -> f64 {
        self.start_offset_s + self.len() as f64 * self.sample_interval_s
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start_offset_s + index as f64 * self.sample_interval_s
    }

    pub fn channel(&self, kind: ResourceKind) -> &[f64] {
        &self.channels[kind.index()]
    }

    pub(crate) fn channel_mut(&mut self, kind: ResourceKind) -> &mut [f64] {
        &mut self.channels[kind.index()]
    }

    pub fn latency_ms(&self) -> Option<&[f64]> {
        self.latency_ms.as_deref()
    }

    pub(crate) fn latency_mut(&mut self) -> Option<&mut [f64]> {
        self.latency_ms.as_deref_mut()
    }

    pub fn has_channel(&self, channel: Channel) -> bool {
        match channel {
            Channel::Resource(_) => true,
            Channel::LatencyMs => self.latency_ms.is_some(),
        }
    }

    pub fn samples(&self, channel: Channel) -> Option<&[f64]> {
        match channel {
            Channel::Resource(kind) => Some(self.channel(kind)),
            Channel::LatencyMs => self.latency_ms(),
        }
    }

    /// Indices of the samples whose timestamps fall inside `window`.
    pub fn index_range(&self, window: &Window) -> Result<Range<usize>> {
        let out_of_range = || Error::WindowOutOfRange {
            start: window.start_s,
            end: window.end_s(),
            trace_start: self.start_offset_s,
            trace_end: self.end_s(),
        };
        if window.start_s < self.start_offset_s - TIME_EPS
            || window.end_s() > self.end_s() + TIME_EPS
        {
            return Err(out_of_range());
        }
        let first = ((window.start_s - self.start_offset_s) / self.sample_interval_s - TIME_EPS)
            .ceil()
            .max(0.0) as usize;
        let last = ((window.end_s() - self.start_offset_s) / self.sample_interval_s - TIME_EPS)
            .ceil()
            .max(0.0) as usize;
        let last = last.min(self.len());
        if first >= last {
            return Err(Error::InvalidWindow(format!(
                "window [{}, {}) s contains no samples",
                window.start_s,
                window.end_s()
            )));
        }
        Ok(first..last)
    }

    /// Maximum of one channel over `window`.
    pub fn channel_max(&self, channel: Channel, window: &Window) -> Result<f64> {
        let range = self.index_range(window)?;
        let samples = self
            .samples(channel)
            .ok_or_else(|| Error::UnknownChannel(channel.name().to_string()))?;
        Ok(samples[range]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Collapse the trace into buckets of `bucket_s` seconds, keeping the
    /// maximum of each bucket. A trailing partial bucket is kept.
    pub fn bucket_max(&self, bucket_s: f64) -> Result<MetricTrace> {
        let per_bucket = (bucket_s / self.sample_interval_s).round() as usize;
        if per_bucket == 0 {
            return Err(Error::InvalidWindow(format!(
                "bucket of {bucket_s} s is shorter than the sample interval"
            )));
        }
        let reduce = |xs: &[f64]| -> Vec<f64> {
            xs.chunks(per_bucket)
                .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect()
        };
        MetricTrace::new(
            self.sample_interval_s * per_bucket as f64,
            self.start_offset_s,
            ResourceKind::ALL.map(|k| reduce(self.channel(k))),
            self.latency_ms.as_deref().map(reduce),
        )
    }

    /// Write the trace in the `t_s,cpu,memory,disk_io,network[,latency_ms]`
    /// CSV layout.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t_s"];
        header.extend(ResourceKind::ALL.map(ResourceKind::name));
        if self.latency_ms.is_some() {
            header.push("latency_ms");
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = Vec::with_capacity(6);
            rec.push(self.time_of(i).to_string());
            for kind in ResourceKind::ALL {
                rec.push(self.channel(kind)[i].to_string());
            }
            if let Some(lat) = &self.latency_ms {
                rec.push(lat[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = r.headers()?.clone();
        let column = |name: &str| headers.iter().position(|h| h == name);
        let t_col = column("t_s").ok_or_else(|| Error::MissingColumn("t_s".into()))?;
        let mut res_cols = [0usize; 4];
        for kind in ResourceKind::ALL {
            res_cols[kind.index()] =
                column(kind.name()).ok_or_else(|| Error::MissingColumn(kind.name().into()))?;
        }
        let lat_col = column("latency_ms");

        let mut times = Vec::new();
        let mut channels: [Vec<f64>; 4] = Default::default();
        let mut latency = lat_col.map(|_| Vec::new());
        for (i, record) in r.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::TraceRow {
                row,
                message: e.to_string(),
            })?;
            let field = |col: usize, name: &str| -> Result<f64> {
                let text = record.get(col).ok_or_else(|| Error::TraceRow {
                    row,
                    message: format!("missing value for {name}"),
                })?;
                text.parse::<f64>().map_err(|_| Error::TraceRow {
                    row,
                    message: format!("{name} value `{text}` is not a number"),
                })
            };
            times.push(field(t_col, "t_s")?);
            for kind in ResourceKind::ALL {
                let v = field(res_cols[kind.index()], kind.name())?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::UtilizationOutOfRange { row, value: v });
                }
                channels[kind.index()].push(v);
            }
            if let (Some(col), Some(lat)) = (lat_col, latency.as_mut()) {
                let v = field(col, "latency_ms")?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::TraceRow {
                        row,
                        message: format!("latency {v} must be >= 0"),
                    });
                }
                lat.push(v);
            }
        }
        if times.is_empty() {
            return Err(Error::InvalidTrace("trace has no samples".into()));
        }
        let start = times[0];
        let interval = if times.len() > 1 {
            times[1] - times[0]
        } else {
            1.0
        };
        if interval.is_nan() || interval <= 0.0 {
            return Err(Error::TraceRow {
                row: 2,
                message: "timestamps must increase".into(),
            });
        }
        for (i, t) in times.iter().enumerate() {
            let expected = start + i as f64 * interval;
            if (t - expected).abs() > 1e-6 * interval.max(1.0) {
                return Err(Error::TraceRow {
                    row: i + 1,
                    message: format!("timestamp {t} breaks the fixed interval of {interval} s"),
                });
            }
        }
        MetricTrace::new(interval, start, channels, latency)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes())
    }
}

/// Per-channel maximum over `window`. The returned vector always carries a
/// disk component.
pub fn max_aggregate(trace: &MetricTrace, window: &Window) -> Result<ResourceVector> {
    let range = trace.index_range(window)?;
    let max_of = |kind: ResourceKind| {
        trace.channel(kind)[range.clone()]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(ResourceVector::new(
        max_of(ResourceKind::Cpu),
        max_of(ResourceKind::Memory),
        Some(max_of(ResourceKind::DiskIo)),
        max_of(ResourceKind::Network),
    ))
}
