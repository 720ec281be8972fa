//! Error ratios, provisioning classification, cost deltas and the experiment
//! matrix runner.
//!
//! Every scenario runs a control trace (baseline only) and an experimental
//! trace (baseline plus fault) generated from the same seed, so the fault is
//! the only difference between the two decisions.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::autoscaler::{
    horizontal_decide, vertical_decide, AutoscalerConfig, Policy, ScalingDecision, SloConfig,
    DEFAULT_LOOKBACK_S,
};
use crate::catalog::{monthly_cost, size_rank, InstanceType, ResourceKind};
use crate::config::Experiment;
use crate::error::{Error, Result};
use crate::faults::{apply_fault, FaultKind, FaultParams, FaultScenario};
use crate::metrics::{MetricTrace, Window};
use crate::workload::{generate_baseline, WorkloadProfile};

/// Signed percentage deviation of the fault-state value from the normal one.
pub fn error_ratio(v_normal: f64, v_abnormal: f64) -> Result<f64> {
    if v_normal == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok((v_abnormal - v_normal) / v_normal * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Overprovision,
    Underprovision,
    Neutral,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Overprovision => "overprovision",
            Classification::Underprovision => "underprovision",
            Classification::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `|ratio| <= tolerance_pct` is neutral, otherwise the sign decides.
pub fn classify(ratio_pct: f64, tolerance_pct: f64) -> Classification {
    if ratio_pct.abs() <= tolerance_pct {
        Classification::Neutral
    } else if ratio_pct > 0.0 {
        Classification::Overprovision
    } else {
        Classification::Underprovision
    }
}

/// Normal vs. fault value of one decision dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionRatio {
    pub dimension: String,
    pub normal: f64,
    pub abnormal: f64,
    /// `None` when the normal value is zero.
    pub ratio_pct: Option<f64>,
}

impl DimensionRatio {
    fn new(dimension: impl Into<String>, normal: f64, abnormal: f64) -> Self {
        DimensionRatio {
            dimension: dimension.into(),
            normal,
            abnormal,
            ratio_pct: error_ratio(normal, abnormal).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ScenarioId {
    pub fault: FaultKind,
    pub family: String,
    pub size: String,
    pub slo: String,
    pub policy: Policy,
    pub seed: u64,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}.{}/{}/{}/{}",
            self.fault, self.family, self.size, self.slo, self.policy, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub ratios: Vec<DimensionRatio>,
    /// Dimension carried into the one-row-per-scenario report.
    pub headline: DimensionRatio,
    pub classification: Classification,
    pub cost_normal_usd: f64,
    pub cost_abnormal_usd: f64,
    pub cost_delta_usd: f64,
    pub risk_flag: bool,
    pub normal: ScalingDecision,
    pub abnormal: ScalingDecision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub id: ScenarioId,
    pub outcome: std::result::Result<ScenarioResult, String>,
}

impl ExperimentReport {
    pub fn result(&self) -> Option<&ScenarioResult> {
        self.outcome.as_ref().ok()
    }
}

/// The largest-magnitude defined ratio; if none is defined, the first
/// dimension that changed; else the first dimension.
fn headline(ratios: &[DimensionRatio]) -> DimensionRatio {
    let defined =
        ratios
            .iter()
            .filter(|r| r.ratio_pct.is_some())
            .fold(None::<&DimensionRatio>, |best, r| match best {
                Some(b) if b.ratio_pct.unwrap().abs() >= r.ratio_pct.unwrap().abs() => Some(b),
                _ => Some(r),
            });
    defined
        .or_else(|| ratios.iter().find(|r| r.normal != r.abnormal))
        .or_else(|| ratios.first())
        .cloned()
        .expect("at least one decision dimension")
}

fn classify_dimension(r: &DimensionRatio, tolerance_pct: f64) -> Classification {
    match r.ratio_pct {
        Some(pct) => classify(pct, tolerance_pct),
        None if r.abnormal > r.normal => Classification::Overprovision,
        None if r.abnormal < r.normal => Classification::Underprovision,
        None => Classification::Neutral,
    }
}

/// Inputs for a single control/experimental comparison.
#[derive(Debug, Clone)]
pub struct ScenarioInput<'a> {
    pub experiment: &'a Experiment,
    pub fault: FaultKind,
    pub params: FaultParams,
    pub instance: &'a InstanceType,
    pub slo: SloConfig,
    pub policy: Policy,
    pub seed: u64,
}

fn decide(
    input: &ScenarioInput<'_>,
    trace: &MetricTrace,
    autoscaler: &AutoscalerConfig,
) -> Result<ScalingDecision> {
    match input.policy {
        Policy::Vertical => vertical_decide(
            &input.experiment.catalog,
            input.instance,
            trace,
            &input.slo,
            autoscaler,
        ),
        Policy::Horizontal => horizontal_decide(trace, &input.slo, autoscaler),
    }
}

fn decision_cost(
    decision: &ScalingDecision,
    instance: &InstanceType,
    hours_per_month: f64,
) -> Result<f64> {
    match (decision.chosen_instance(), decision.opt_replicas()) {
        (Some(chosen), _) => monthly_cost(chosen, 1, hours_per_month),
        (None, Some(replicas)) => monthly_cost(instance, replicas, hours_per_month),
        (None, None) => unreachable!("decision carries either an instance or a replica count"),
    }
}

/// Control-group trace for a seed.
pub fn control_trace(profile: &WorkloadProfile, seed: u64) -> Result<MetricTrace> {
    generate_baseline(&profile.clone().with_seed(seed))
}

/// Fault scenario as applied to `instance` in an experiment.
pub fn fault_scenario(
    fault: FaultKind,
    params: FaultParams,
    window: Window,
    seed: u64,
    instance: &InstanceType,
    burstable_damping: f64,
) -> FaultScenario {
    let mut scenario = FaultScenario::new(fault)
        .with_window(window)
        .with_params(params)
        .with_seed(seed)
        .burstable(instance.burstable);
    scenario.burstable_damping = burstable_damping;
    scenario
}

pub fn evaluate_scenario(input: &ScenarioInput<'_>) -> Result<ScenarioResult> {
    let exp = input.experiment;
    let control = control_trace(&exp.workload, input.seed)?;
    let scenario = fault_scenario(
        input.fault,
        input.params.clone(),
        exp.fault_window,
        input.seed,
        input.instance,
        exp.burstable_damping,
    );
    let experimental = apply_fault(&control, &scenario)?;

    let normal = decide(input, &control, &exp.autoscaler)?;
    let abnormal = decide(input, &experimental, &exp.autoscaler)?;

    let ratios: Vec<DimensionRatio> = match input.policy {
        Policy::Vertical => {
            let n = normal.opt_spec_raw().expect("vertical decision");
            let a = abnormal.opt_spec_raw().expect("vertical decision");
            ResourceKind::ALL
                .into_iter()
                .filter_map(|k| Some(DimensionRatio::new(k.name(), n.get(k)?, a.get(k)?)))
                .collect()
        }
        Policy::Horizontal => vec![DimensionRatio::new(
            "replicas",
            f64::from(normal.opt_replicas().expect("horizontal decision")),
            f64::from(abnormal.opt_replicas().expect("horizontal decision")),
        )],
    };
    let headline = headline(&ratios);
    let classification = classify_dimension(&headline, exp.tolerance_pct);

    let cost_normal_usd = decision_cost(&normal, input.instance, exp.hours_per_month)?;
    let cost_abnormal_usd = decision_cost(&abnormal, input.instance, exp.hours_per_month)?;
    let risk_flag =
        classification == Classification::Underprovision || abnormal.demand_exceeds_catalog();

    Ok(ScenarioResult {
        ratios,
        headline,
        classification,
        cost_normal_usd,
        cost_abnormal_usd,
        cost_delta_usd: cost_abnormal_usd - cost_normal_usd,
        risk_flag,
        normal,
        abnormal,
    })
}

/// Run every (fault × instance × SLO × policy × seed) combination. Per-scenario
/// failures are recorded in their report and never abort the run. Output
/// order is the enumeration order, independent of `jobs`.
pub fn run_matrix(exp: &Experiment, jobs: usize) -> Vec<ExperimentReport> {
    let mut tasks = Vec::with_capacity(exp.scenario_count());
    for &fault in &exp.faults {
        for instance in &exp.instances {
            for slo in &exp.slos {
                for &policy in &exp.policies {
                    for &seed in &exp.seeds {
                        tasks.push((fault, instance, *slo, policy, seed));
                    }
                }
            }
        }
    }

    let run_one = |&(fault, instance, slo, policy, seed): &(
        FaultKind,
        &InstanceType,
        SloConfig,
        Policy,
        u64,
    )| {
        let input = ScenarioInput {
            experiment: exp,
            fault,
            params: exp.fault_params[&fault].clone(),
            instance,
            slo,
            policy,
            seed,
        };
        ExperimentReport {
            id: ScenarioId {
                fault,
                family: instance.family.clone(),
                size: instance.size.clone(),
                slo: slo.name(),
                policy,
                seed,
            },
            outcome: evaluate_scenario(&input).map_err(|e| e.to_string()),
        }
    };

    if jobs <= 1 {
        tasks.iter().map(run_one).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| tasks.par_iter().map(run_one).collect()),
            Err(_) => tasks.iter().map(run_one).collect(),
        }
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let r = (x * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// A ratio cell: a number, or `n/a` when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCell(pub Option<f64>);

impl Serialize for RatioCell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("n/a"),
        }
    }
}

impl<'de> Deserialize<'de> for RatioCell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Cell {
            Num(f64),
            Text(String),
        }
        match Cell::deserialize(d)? {
            Cell::Num(v) => Ok(RatioCell(Some(v))),
            Cell::Text(t) if t == "n/a" || t.is_empty() => Ok(RatioCell(None)),
            Cell::Text(t) => t
                .parse()
                .map(|v| RatioCell(Some(v)))
                .map_err(|_| serde::de::Error::custom(format!("bad ratio `{t}`"))),
        }
    }
}

/// One line of `report.csv` / one object of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub fault: String,
    pub family: String,
    pub size: String,
    pub slo: String,
    pub policy: String,
    pub seed: u64,
    pub dimension: String,
    pub error_ratio_pct: RatioCell,
    pub classification: String,
    pub cost_normal_usd: f64,
    pub cost_abnormal_usd: f64,
    pub cost_delta_usd: f64,
    pub risk_flag: bool,
}

impl ReportRow {
    pub fn from_report(report: &ExperimentReport) -> Self {
        let id = &report.id;
        let base =
            |dimension: String, ratio, classification, normal, abnormal, delta, risk| ReportRow {
                fault: id.fault.code().to_string(),
                family: id.family.clone(),
                size: id.size.clone(),
                slo: id.slo.clone(),
                policy: id.policy.name().to_string(),
                seed: id.seed,
                dimension,
                error_ratio_pct: RatioCell(ratio),
                classification,
                cost_normal_usd: normal,
                cost_abnormal_usd: abnormal,
                cost_delta_usd: delta,
                risk_flag: risk,
            };
        match &report.outcome {
            Ok(r) => base(
                r.headline.dimension.clone(),
                r.headline.ratio_pct.map(|v| round_to(v, 6)),
                r.classification.name().to_string(),
                round_to(r.cost_normal_usd, 4),
                round_to(r.cost_abnormal_usd, 4),
                round_to(r.cost_delta_usd, 4),
                r.risk_flag,
            ),
            Err(msg) => base(
                String::new(),
                None,
                format!("error: {msg}"),
                0.0,
                0.0,
                0.0,
                true,
            ),
        }
    }

    /// Canonical order: fault kind, family, size rank, SLO (stricter first),
    /// policy, seed. Unknown names sort after known ones.
    fn sort_key(&self) -> SortKey {
        let fault = self
            .fault
            .parse::<FaultKind>()
            .map(|k| k as usize)
            .unwrap_or(usize::MAX);
        let size = size_rank(&self.size).unwrap_or(u32::MAX);
        let slo = SloConfig::parse(&self.slo, DEFAULT_LOOKBACK_S)
            .map(|s| std::cmp::Reverse((s.target * 1e6).round() as i64))
            .unwrap_or(std::cmp::Reverse(i64::MIN));
        let policy = self
            .policy
            .parse::<Policy>()
            .map(|p| p as usize)
            .unwrap_or(usize::MAX);
        (
            fault,
            self.family.clone(),
            size,
            self.size.clone(),
            slo,
            self.slo.clone(),
            policy,
            self.policy.clone(),
            self.seed,
        )
    }

    /// Key without the seed, for grouping across seeds.
    fn cell_key(&self) -> SortKey {
        let mut key = self.sort_key();
        key.8 = 0;
        key
    }
}

type SortKey = (
    usize,
    String,
    u32,
    String,
    std::cmp::Reverse<i64>,
    String,
    usize,
    String,
    u64,
);

pub fn report_rows(reports: &[ExperimentReport]) -> Vec<ReportRow> {
    reports.iter().map(ReportRow::from_report).collect()
}

fn csv_to_string<T: Serialize>(rows: &[T], header: Option<&[&str]>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header.is_none())
        .from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const REPORT_HEADER: [&str; 13] = [
    "fault",
    "family",
    "size",
    "slo",
    "policy",
    "seed",
    "dimension",
    "error_ratio_pct",
    "classification",
    "cost_normal_usd",
    "cost_abnormal_usd",
    "cost_delta_usd",
    "risk_flag",
];

pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    csv_to_string(rows, Some(&REPORT_HEADER))
}

pub fn rows_to_json(rows: &[ReportRow]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(rows)?;
    s.push('\n');
    Ok(s)
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().ne(REPORT_HEADER.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected report header `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Concatenate report tables, keep the first row per scenario id and sort by
/// scenario id.
pub fn merge_rows(tables: Vec<Vec<ReportRow>>) -> Vec<ReportRow> {
    let mut merged: BTreeMap<SortKey, ReportRow> = BTreeMap::new();
    for row in tables.into_iter().flatten() {
        merged.entry(row.sort_key()).or_insert(row);
    }
    merged.into_values().collect()
}

/// Multi-seed aggregate of one (fault, instance, SLO, policy) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub fault: String,
    pub family: String,
    pub size: String,
    pub slo: String,
    pub policy: String,
    pub seeds: usize,
    pub error_ratio_mean: RatioCell,
    pub error_ratio_min: RatioCell,
    pub error_ratio_max: RatioCell,
    pub cost_delta_mean_usd: f64,
    pub cost_delta_min_usd: f64,
    pub cost_delta_max_usd: f64,
}

pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<SortKey, Vec<&ReportRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.cell_key()).or_default().push(row);
    }
    groups
        .into_values()
        .map(|g| {
            let first = g[0];
            let ratios: Vec<f64> = g.iter().filter_map(|r| r.error_ratio_pct.0).collect();
            let deltas: Vec<f64> = g.iter().map(|r| r.cost_delta_usd).collect();
            let stats = |xs: &[f64]| -> (Option<f64>, Option<f64>, Option<f64>) {
                if xs.is_empty() {
                    return (None, None, None);
                }
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (Some(round_to(mean, 6)), Some(min), Some(max))
            };
            let (rm, rmin, rmax) = stats(&ratios);
            let (dm, dmin, dmax) = stats(&deltas);
            SummaryRow {
                fault: first.fault.clone(),
                family: first.family.clone(),
                size: first.size.clone(),
                slo: first.slo.clone(),
                policy: first.policy.clone(),
                seeds: g.len(),
                error_ratio_mean: RatioCell(rm),
                error_ratio_min: RatioCell(rmin),
                error_ratio_max: RatioCell(rmax),
                cost_delta_mean_usd: dm.unwrap_or(0.0),
                cost_delta_min_usd: dmin.unwrap_or(0.0),
                cost_delta_max_usd: dmax.unwrap_or(0.0),
            }
        })
        .collect()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    csv_to_string(rows, None)
}

#[derive(Serialize)]
struct VerticalFigureRow<'a> {
    fault: &'a str,
    family: &'a str,
    size: &'a str,
    slo: &'a str,
    seed: u64,
    dimension: &'a str,
    opt_spec_normal: f64,
    opt_spec_abnormal: f64,
    error_ratio_pct: RatioCell,
}

#[derive(Serialize)]
struct HorizontalFigureRow<'a> {
    fault: &'a str,
    family: &'a str,
    size: &'a str,
    slo: &'a str,
    seed: u64,
    replicas_normal: u32,
    replicas_abnormal: u32,
    error_ratio_pct: RatioCell,
}

#[derive(Serialize)]
struct CostFigureRow {
    policy: String,
    slo: String,
    fault: String,
    family: String,
    size: String,
    scenarios: usize,
    cost_delta_mean_usd: f64,
    risk_share: f64,
}

/// Per-resource optimal-spec gaps of vertical scenarios.
pub fn vertical_gaps_csv(reports: &[ExperimentReport]) -> Result<String> {
    let mut rows = Vec::new();
    for rep in reports.iter().filter(|r| r.id.policy == Policy::Vertical) {
        let Some(res) = rep.result() else { continue };
        for d in &res.ratios {
            rows.push(VerticalFigureRow {
                fault: rep.id.fault.code(),
                family: &rep.id.family,
                size: &rep.id.size,
                slo: &rep.id.slo,
                seed: rep.id.seed,
                dimension: &d.dimension,
                opt_spec_normal: round_to(d.normal, 9),
                opt_spec_abnormal: round_to(d.abnormal, 9),
                error_ratio_pct: RatioCell(d.ratio_pct.map(|v| round_to(v, 6))),
            });
        }
    }
    csv_to_string(&rows, None)
}

/// Replica-count gaps of horizontal scenarios.
pub fn horizontal_gaps_csv(reports: &[ExperimentReport]) -> Result<String> {
    let rows: Vec<HorizontalFigureRow> = reports
        .iter()
        .filter(|r| r.id.policy == Policy::Horizontal)
        .filter_map(|rep| {
            let res = rep.result()?;
            Some(HorizontalFigureRow {
                fault: rep.id.fault.code(),
                family: &rep.id.family,
                size: &rep.id.size,
                slo: &rep.id.slo,
                seed: rep.id.seed,
                replicas_normal: res.normal.opt_replicas()?,
                replicas_abnormal: res.abnormal.opt_replicas()?,
                error_ratio_pct: RatioCell(res.headline.ratio_pct.map(|v| round_to(v, 6))),
            })
        })
        .collect();
    csv_to_string(&rows, None)
}

/// Monthly cost gaps: one row per (policy, SLO, fault, instance), averaged
/// over seeds, followed by per-fault rows over all instances (`family` and
/// `size` set to `all`).
pub fn cost_gaps_csv(reports: &[ExperimentReport]) -> Result<String> {
    type Key = (Policy, String, FaultKind, String, String);
    let mut cells: BTreeMap<Key, (usize, f64, usize)> = BTreeMap::new();
    let mut totals: BTreeMap<(Policy, String, FaultKind), (usize, f64, usize)> = BTreeMap::new();
    for rep in reports {
        let Some(res) = rep.result() else { continue };
        let id = &rep.id;
        for acc in [
            cells
                .entry((
                    id.policy,
                    id.slo.clone(),
                    id.fault,
                    id.family.clone(),
                    id.size.clone(),
                ))
                .or_default(),
            totals
                .entry((id.policy, id.slo.clone(), id.fault))
                .or_default(),
        ] {
            acc.0 += 1;
            acc.1 += res.cost_delta_usd;
            acc.2 += usize::from(res.risk_flag);
        }
    }
    let row = |policy: Policy,
               slo: &str,
               fault: FaultKind,
               family: &str,
               size: &str,
               acc: (usize, f64, usize)| {
        CostFigureRow {
            policy: policy.name().into(),
            slo: slo.into(),
            fault: fault.code().into(),
            family: family.into(),
            size: size.into(),
            scenarios: acc.0,
            cost_delta_mean_usd: round_to(acc.1 / acc.0 as f64, 4),
            risk_share: round_to(acc.2 as f64 / acc.0 as f64, 6),
        }
    };
    let mut rows: Vec<CostFigureRow> = cells
        .into_iter()
        .map(|((p, slo, f, fam, size), acc)| row(p, &slo, f, &fam, &size, acc))
        .collect();
    rows.extend(
        totals
            .into_iter()
            .map(|((p, slo, f), acc)| row(p, &slo, f, "all", "all", acc)),
    );
    csv_to_string(&rows, None)
}

/// Calibration knobs that produced a report. Written next to every report
/// because the dollar figures depend on them.
#[derive(Debug, Serialize)]
pub struct Calibration<'a> {
    pub note: &'static str,
    pub workload: &'a WorkloadProfile,
    pub fault_window: &'a Window,
    pub fault_params: BTreeMap<String, &'a FaultParams>,
    pub burstable_damping: f64,
    pub hours_per_month: f64,
    pub classification_tolerance_pct: f64,
    pub current_replicas: u32,
    pub sizing_rule: crate::autoscaler::SizingRule,
}

impl<'a> Calibration<'a> {
    pub fn from_experiment(exp: &'a Experiment) -> Self {
        Calibration {
            note:
                "synthetic workload and fault magnitudes; costs are model outputs, not measurements",
            workload: &exp.workload,
            fault_window: &exp.fault_window,
            fault_params: exp
                .fault_params
                .iter()
                .map(|(k, v)| (k.code().to_string(), v))
                .collect(),
            burstable_damping: exp.burstable_damping,
            hours_per_month: exp.hours_per_month,
            classification_tolerance_pct: exp.tolerance_pct,
            current_replicas: exp.autoscaler.current_replicas,
            sizing_rule: exp.autoscaler.sizing_rule,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OutputFormats {
    pub csv: bool,
    pub json: bool,
    pub plots: bool,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Write report, figure and calibration files into `dir`.
pub fn write_outputs(
    dir: &Path,
    exp: &Experiment,
    reports: &[ExperimentReport],
    formats: OutputFormats,
) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows = report_rows(reports);
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<()> {
        write_file(dir, name, &contents)?;
        written.push(name.to_string());
        Ok(())
    };
    if formats.csv {
        emit("report.csv", rows_to_csv(&rows)?)?;
    }
    if formats.json {
        emit("report.json", rows_to_json(&rows)?)?;
    }
    if formats.plots {
        emit("fig2_vertical.csv", vertical_gaps_csv(reports)?)?;
        emit("fig3_horizontal.csv", horizontal_gaps_csv(reports)?)?;
        emit("fig4_cost.csv", cost_gaps_csv(reports)?)?;
    }
    let mut calibration = serde_json::to_string_pretty(&Calibration::from_experiment(exp))?;
    calibration.push('\n');
    emit("calibration.json", calibration)?;
    Ok(written)
}
