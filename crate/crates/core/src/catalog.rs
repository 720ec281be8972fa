//! Instance-type catalog, resource vectors, grid-search selection and the
//! monthly cost model.
//!
//! The built-in catalog holds nine on-demand instance types across three
//! families (general purpose `m5`, burstable `t3`, compute optimized `c5`).
//! Catalogs can also be loaded from a CSV document with the header
//!
//! ```text
//! family,size,cpu_perf_ghz,vcpu,memory_gb,network_gbps,cost_per_hour[,disk_mbps]
//! ```
//!
//! `disk_mbps` is optional, both as a column and per row. Entries without a
//! disk bandwidth figure are treated as not constraining the disk dimension.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Billing hours in a month used when no other figure is configured.
pub const DEFAULT_HOURS_PER_MONTH: f64 = 730.0;

const BUILTIN_CSV: &str = include_str!("../data/instances.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Cpu,
    Memory,
    DiskIo,
    Network,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 4] = [
        ResourceKind::Cpu,
        ResourceKind::Memory,
        ResourceKind::DiskIo,
        ResourceKind::Network,
    ];

    /// Column / report name.
    pub fn name(self) -> &'static str {
        match self {
            ResourceKind::Cpu => "cpu",
            ResourceKind::Memory => "memory",
            ResourceKind::DiskIo => "disk_io",
            ResourceKind::Network => "network",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-resource quantities. Used for capacities (vCPU, GB, MB/s, Gbps),
/// demands in the same units, and utilization fractions.
///
/// `disk_io` is `None` when the dimension is unavailable, e.g. for catalog
/// entries without a published disk bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResourceVector {
    pub cpu: f64,
    pub memory: f64,
    pub disk_io: Option<f64>,
    pub network: f64,
}

impl ResourceVector {
    pub fn new(cpu: f64, memory: f64, disk_io: Option<f64>, network: f64) -> Self {
        ResourceVector {
            cpu,
            memory,
            disk_io,
            network,
        }
    }

    /// Vector with all four dimensions set to `value`.
    pub fn splat(value: f64) -> Self {
        ResourceVector::new(value, value, Some(value), value)
    }

    pub fn get(&self, kind: ResourceKind) -> Option<f64> {
        match kind {
            ResourceKind::Cpu => Some(self.cpu),
            ResourceKind::Memory => Some(self.memory),
            ResourceKind::DiskIo => self.disk_io,
            ResourceKind::Network => Some(self.network),
        }
    }

    pub fn set(&mut self, kind: ResourceKind, value: f64) {
        match kind {
            ResourceKind::Cpu => self.cpu = value,
            ResourceKind::Memory => self.memory = value,
            ResourceKind::DiskIo => self.disk_io = Some(value),
            ResourceKind::Network => self.network = value,
        }
    }

    /// Available dimensions with their values, in `ResourceKind::ALL` order.
    pub fn iter(&self) -> impl Iterator<Item = (ResourceKind, f64)> + '_ {
        ResourceKind::ALL
            .into_iter()
            .filter_map(move |k| self.get(k).map(|v| (k, v)))
    }

    /// Apply `f` to every available dimension.
    pub fn map(&self, mut f: impl FnMut(ResourceKind, f64) -> f64) -> Self {
        ResourceVector {
            cpu: f(ResourceKind::Cpu, self.cpu),
            memory: f(ResourceKind::Memory, self.memory),
            disk_io: self.disk_io.map(|d| f(ResourceKind::DiskIo, d)),
            network: f(ResourceKind::Network, self.network),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (kind, value) in self.iter() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidVector(format!(
                    "{kind} = {value} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }

    /// True when `self` covers `demand` in every dimension both provide.
    pub fn dominates(&self, demand: &ResourceVector) -> bool {
        self.shortfalls(demand).is_empty()
    }

    /// Dimensions in which `self` falls short of `demand`. Dimensions missing
    /// on either side are skipped.
    pub fn shortfalls(&self, demand: &ResourceVector) -> Vec<ResourceKind> {
        ResourceKind::ALL
            .into_iter()
            .filter(|&k| match (self.get(k), demand.get(k)) {
                (Some(have), Some(need)) => have < need,
                _ => false,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceType {
    pub family: String,
    pub size: String,
    pub cpu_perf_ghz: f64,
    pub specs: ResourceVector,
    pub hourly_cost: f64,
    pub burstable: bool,
}

impl InstanceType {
    /// `family.size`, e.g. `m5.large`.
    pub fn id(&self) -> String {
        format!("{}.{}", self.family, self.size)
    }

    fn key(&self) -> (&str, &str) {
        (&self.family, &self.size)
    }
}

impl fmt::Display for InstanceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.family, self.size)
    }
}

/// Ordinal of a size name within a family: nano < micro < small < medium <
/// large < xlarge < 2xlarge < 4xlarge < ... Unknown names yield `None`.
pub fn size_rank(size: &str) -> Option<u32> {
    match size {
        "nano" => Some(0),
        "micro" => Some(1),
        "small" => Some(2),
        "medium" => Some(3),
        "large" => Some(4),
        "xlarge" => Some(5),
        "metal" => None,
        other => {
            let n: u32 = other.strip_suffix("xlarge")?.parse().ok()?;
            (n >= 2).then(|| 4 + n)
        }
    }
}

#[derive(Debug, Deserialize)]
struct CatalogRow {
    family: String,
    size: String,
    cpu_perf_ghz: f64,
    vcpu: f64,
    memory_gb: f64,
    network_gbps: f64,
    cost_per_hour: f64,
    #[serde(default)]
    disk_mbps: Option<f64>,
}

/// Immutable, validated collection of instance types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCatalog {
    entries: Vec<InstanceType>,
}

impl InstanceCatalog {
    /// The nine-entry default catalog.
    pub fn builtin() -> Self {
        Self::from_csv_str(BUILTIN_CSV).expect("built-in catalog is valid")
    }

    pub fn builtin_csv() -> &'static str {
        BUILTIN_CSV
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    /// Load either `builtin` or a CSV file path.
    pub fn load(source: &str) -> Result<Self> {
        if source == "builtin" {
            Ok(Self::builtin())
        } else {
            Self::from_path(source)
        }
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::EmptyCatalog);
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for (i, record) in reader.deserialize::<CatalogRow>().enumerate() {
            let row = i + 1;
            let r = record.map_err(|e| Error::CatalogRow {
                row,
                message: e.to_string(),
            })?;
            let specs = ResourceVector::new(r.vcpu, r.memory_gb, r.disk_mbps, r.network_gbps);
            specs.validate().map_err(|e| Error::CatalogRow {
                row,
                message: e.to_string(),
            })?;
            if !(r.cost_per_hour.is_finite() && r.cost_per_hour > 0.0) {
                return Err(Error::CatalogRow {
                    row,
                    message: format!("cost_per_hour must be positive, got {}", r.cost_per_hour),
                });
            }
            if r.family.is_empty() || r.size.is_empty() {
                return Err(Error::CatalogRow {
                    row,
                    message: "family and size must be non-empty".into(),
                });
            }
            entries.push(InstanceType {
                burstable: r.family == "t3",
                family: r.family,
                size: r.size,
                cpu_perf_ghz: r.cpu_perf_ghz,
                specs,
                hourly_cost: r.cost_per_hour,
            });
        }
        Self::new(entries)
    }

    pub fn new(entries: Vec<InstanceType>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.key()) {
                return Err(Error::DuplicateInstance {
                    family: e.family.clone(),
                    size: e.size.clone(),
                });
            }
        }

        let mut by_family: BTreeMap<&str, Vec<(u32, &InstanceType)>> = BTreeMap::new();
        for e in &entries {
            if let Some(rank) = size_rank(&e.size) {
                by_family.entry(&e.family).or_default().push((rank, e));
            }
        }
        for (family, mut sizes) in by_family {
            sizes.sort_by_key(|(rank, _)| *rank);
            for pair in sizes.windows(2) {
                let (small, large) = (pair[0].1, pair[1].1);
                if large.hourly_cost <= small.hourly_cost {
                    return Err(Error::NonMonotoneCost {
                        family: family.to_string(),
                        smaller: small.size.clone(),
                        larger: large.size.clone(),
                    });
                }
            }
        }
        Ok(InstanceCatalog { entries })
    }

    pub fn entries(&self) -> &[InstanceType] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, family: &str, size: &str) -> Option<&InstanceType> {
        self.entries
            .iter()
            .find(|e| e.family == family && e.size == size)
    }

    /// Look up by `family.size`.
    pub fn find(&self, id: &str) -> Option<&InstanceType> {
        let (family, size) = id.split_once('.')?;
        self.get(family, size)
    }

    /// Cheapest entry whose specs cover `demand` in every dimension the entry
    /// provides. Equal costs fall back to lexicographic `(family, size)`.
    pub fn grid_search(&self, demand: &ResourceVector) -> Result<&InstanceType> {
        demand.validate()?;
        self.entries
            .iter()
            .filter(|e| e.specs.dominates(demand))
            .min_by(|a, b| {
                a.hourly_cost
                    .partial_cmp(&b.hourly_cost)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| a.key().cmp(&b.key()))
            })
            .ok_or_else(|| Error::DemandUnsatisfiable {
                violated: self.violated_dimensions(demand),
            })
    }

    fn violated_dimensions(&self, demand: &ResourceVector) -> Vec<ResourceKind> {
        let beyond_max: Vec<ResourceKind> = ResourceKind::ALL
            .into_iter()
            .filter(|&k| {
                let Some(need) = demand.get(k) else {
                    return false;
                };
                let best = self
                    .entries
                    .iter()
                    .filter_map(|e| e.specs.get(k))
                    .fold(None, |acc: Option<f64>, v| {
                        Some(acc.map_or(v, |a| a.max(v)))
                    });
                best.is_some_and(|max| need > max)
            })
            .collect();
        if !beyond_max.is_empty() {
            return beyond_max;
        }
        // Each dimension fits somewhere, but never jointly.
        self.entries
            .iter()
            .map(|e| e.specs.shortfalls(demand))
            .min_by_key(|v| v.len())
            .unwrap_or_default()
    }

    /// Largest entry by (vCPU, memory, network), cheapest on ties. Stand-in
    /// selection when a demand exceeds the catalog.
    pub fn largest(&self) -> &InstanceType {
        self.entries
            .iter()
            .max_by(|a, b| {
                let ka = (a.specs.cpu, a.specs.memory, a.specs.network);
                let kb = (b.specs.cpu, b.specs.memory, b.specs.network);
                ka.partial_cmp(&kb)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| b.hourly_cost.total_cmp(&a.hourly_cost))
            })
            .expect("catalog is non-empty")
    }

    /// Render back to the catalog CSV format.
    pub fn to_csv(&self) -> Result<String> {
        let with_disk = self.entries.iter().any(|e| e.specs.disk_io.is_some());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "family",
            "size",
            "cpu_perf_ghz",
            "vcpu",
            "memory_gb",
            "network_gbps",
            "cost_per_hour",
        ];
        if with_disk {
            header.push("disk_mbps");
        }
        w.write_record(&header)?;
        for e in &self.entries {
            let mut rec = vec![
                e.family.clone(),
                e.size.clone(),
                e.cpu_perf_ghz.to_string(),
                e.specs.cpu.to_string(),
                e.specs.memory.to_string(),
                e.specs.network.to_string(),
                e.hourly_cost.to_string(),
            ];
            if with_disk {
                rec.push(e.specs.disk_io.map(|d| d.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Monthly cost of running `replicas` copies of `instance`.
pub fn monthly_cost(instance: &InstanceType, replicas: u32, hours_per_month: f64) -> Result<f64> {
    if replicas < 1 {
        return Err(Error::Precondition("replicas must be at least 1".into()));
    }
    if !(hours_per_month.is_finite() && hours_per_month > 0.0) {
        return Err(Error::Precondition(format!(
            "hours_per_month must be positive, got {hours_per_month}"
        )));
    }
    Ok(instance.hourly_cost * f64::from(replicas) * hours_per_month)
}
