//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use faultscale::analysis::{self, OutputFormats};
use faultscale::autoscaler::{
    horizontal_decide, horizontal_opt_replicas, vertical_decide, vertical_opt_spec,
    AutoscalerConfig, CompositeTrigger, Policy, SloConfig, TriggerMode,
};
use faultscale::catalog::{
    monthly_cost, InstanceCatalog, InstanceType, ResourceKind, ResourceVector,
};
use faultscale::config::{default_seed, ScenarioConfig};
use faultscale::faults::{apply_fault, FaultKind, FaultScenario};
use faultscale::metrics::{Channel, MetricTrace, Window};
use faultscale::workload::{generate_baseline, WorkloadProfile};
use faultscale::{classify, error_ratio, Classification, ExperimentReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REAL_TOL: f64 = 1e-9;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() <= REAL_TOL
}

fn within(budget: Duration, elapsed: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < budget, || {
        format!("{what} took {elapsed:?}, budget {budget:?}")
    })
}

fn util(cpu: f64, memory: f64, disk: f64, network: f64) -> ResourceVector {
    ResourceVector::new(cpu, memory, Some(disk), network)
}

fn criterion_1_scaling_rules() -> Check {
    let start = Instant::now();
    let slo85 = SloConfig::slo85();
    let slo50 = SloConfig::slo50();

    let vertical_cases = [
        (4.0, 1.0, &slo85, 5.0),
        (2.0, 0.85, &slo85, 2.0),
        (8.0, 0.2, &slo85, 0.0),
    ];
    for (spec_cpu, max_cpu, slo, want) in vertical_cases {
        let spec = ResourceVector::new(spec_cpu, 8.0, None, 5.0);
        let got = vertical_opt_spec(&spec, &util(max_cpu, 0.0, 0.0, 0.0), slo).cpu;
        ensure(got == want, || {
            format!("vertical cpu spec {spec_cpu} @ max {max_cpu}: got {got}, want {want}")
        })?;
    }

    let replica_cases = [
        (3, util(0.85, 0.85, 0.85, 0.85), &slo85, 3),
        (1, util(1.0, 0.0, 0.0, 0.0), &slo50, 2),
        (3, util(0.9, 0.0, 0.0, 0.0), &slo85, 4),
    ];
    for (current, u, slo, want) in replica_cases {
        let got = horizontal_opt_replicas(current, &u, slo).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("replicas from {current} at {u:?}: got {got}, want {want}")
        })?;
    }

    for v in [0.5, 3.0, 5.0, 1234.5] {
        ensure(error_ratio(v, v).ok() == Some(0.0), || {
            format!("ratio({v}, {v}) != 0")
        })?;
    }
    let r = error_ratio(3.0, 5.0).map_err(|e| e.to_string())?;
    ensure(approx(r, 200.0 / 3.0), || format!("ratio(3, 5) = {r}"))?;
    let r = error_ratio(6.0, 5.0).map_err(|e| e.to_string())?;
    ensure(approx(r, -100.0 / 6.0), || format!("ratio(6, 5) = {r}"))?;
    ensure(error_ratio(0.0, 1.0).is_err(), || {
        "ratio(0, 1) defined".into()
    })?;

    for (ratio, want) in [
        (0.0, Classification::Neutral),
        (140.0, Classification::Overprovision),
        (-16.7, Classification::Underprovision),
    ] {
        let got = classify(ratio, 5.0);
        ensure(got == want, || format!("classify({ratio}) = {got}"))?;
    }

    let catalog = InstanceCatalog::builtin();
    let c5x = catalog.find("c5.xlarge").ok_or("c5.xlarge missing")?;
    let cost = monthly_cost(c5x, 1, 730.0).map_err(|e| e.to_string())?;
    ensure(approx(cost, 0.172 * 730.0), || {
        format!("c5.xlarge monthly {cost}")
    })?;

    let elapsed = start.elapsed();
    within(Duration::from_secs(1), elapsed, "scaling-rule examples")?;
    Ok(format!("all examples exact ({elapsed:?})"))
}

/// Independent scan: keep instances whose every provided spec covers the
/// demand, then take the cheapest (ties by family, size).
fn brute_force<'a>(
    catalog: &'a InstanceCatalog,
    demand: &ResourceVector,
) -> Option<&'a InstanceType> {
    let covers = |inst: &InstanceType| {
        let s = &inst.specs;
        s.cpu >= demand.cpu
            && s.memory >= demand.memory
            && s.network >= demand.network
            && match (s.disk_io, demand.disk_io) {
                (Some(cap), Some(want)) => cap >= want,
                _ => true,
            }
    };
    let mut best: Option<&InstanceType> = None;
    for inst in catalog.entries().iter().filter(|i| covers(i)) {
        best = match best {
            None => Some(inst),
            Some(b) => {
                let cheaper = inst.hourly_cost < b.hourly_cost
                    || (inst.hourly_cost == b.hourly_cost
                        && (&inst.family, &inst.size) < (&b.family, &b.size));
                Some(if cheaper { inst } else { b })
            }
        };
    }
    best
}

fn criterion_2_grid_search() -> Check {
    let start = Instant::now();
    let catalog = InstanceCatalog::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(default_seed());
    let mut unsatisfiable = 0;
    for i in 0..1000 {
        let integral = rng.random_bool(0.5);
        let mut draw = |hi: f64| {
            let v: f64 = rng.random_range(0.0..hi);
            if integral {
                v.round()
            } else {
                v
            }
        };
        let demand = ResourceVector::new(draw(10.0), draw(40.0), None, draw(12.0));
        let expected = brute_force(&catalog, &demand);
        let got = catalog.grid_search(&demand).ok();
        if expected.is_none() {
            unsatisfiable += 1;
        }
        ensure(
            got.map(InstanceType::id) == expected.map(InstanceType::id),
            || {
                format!(
                    "demand #{i} {demand:?}: grid search {:?}, oracle {:?}",
                    got.map(InstanceType::id),
                    expected.map(InstanceType::id)
                )
            },
        )?;
    }
    let elapsed = start.elapsed();
    within(Duration::from_secs(1), elapsed, "1000 grid searches")?;
    Ok(format!(
        "1000/1000 agree, {unsatisfiable} unsatisfiable ({elapsed:?})"
    ))
}

fn trace_with(base: &MetricTrace, edits: &[(ResourceKind, usize, f64)]) -> MetricTrace {
    let mut channels = ResourceKind::ALL.map(|k| base.channel(k).to_vec());
    for &(kind, index, value) in edits {
        channels[kind.index()][index] = value;
    }
    MetricTrace::new(
        base.sample_interval_s(),
        base.start_offset_s(),
        channels,
        base.latency_ms().map(<[f64]>::to_vec),
    )
    .expect("edited trace is valid")
}

fn criterion_3_saturation_invariance() -> Check {
    let catalog = InstanceCatalog::builtin();
    let slo = SloConfig::slo85();
    let cfg = AutoscalerConfig::default();
    let base = generate_baseline(&WorkloadProfile::default().with_seed(default_seed()))
        .map_err(|e| e.to_string())?;
    // Normal operation already saturates cpu and network once, before the
    // fault window but inside the lookback.
    let saturated = trace_with(
        &base,
        &[
            (ResourceKind::Cpu, 500, 1.0),
            (ResourceKind::Network, 520, 1.0),
        ],
    );
    let lookback = Window::trailing(&saturated, slo.lookback_s).map_err(|e| e.to_string())?;

    let mut checked = 0;
    for kind in [FaultKind::SynFlood, FaultKind::UdpFlood] {
        for inst in catalog.entries() {
            let scenario = FaultScenario::new(kind)
                .with_seed(default_seed())
                .burstable(inst.burstable);
            let flooded = apply_fault(&saturated, &scenario).map_err(|e| e.to_string())?;
            let cpu_max = flooded
                .channel_max(Channel::Resource(ResourceKind::Cpu), &lookback)
                .map_err(|e| e.to_string())?;
            ensure(cpu_max == 1.0, || {
                format!("{kind}: flooded cpu max {cpu_max}")
            })?;

            let v_n = vertical_decide(&catalog, inst, &saturated, &slo, &cfg)
                .map_err(|e| e.to_string())?;
            let v_a =
                vertical_decide(&catalog, inst, &flooded, &slo, &cfg).map_err(|e| e.to_string())?;
            ensure(v_n == v_a, || {
                format!("{kind} on {inst}: vertical decisions differ")
            })?;
            let (n, a) = (v_n.opt_spec_raw().unwrap(), v_a.opt_spec_raw().unwrap());
            for (k, nv) in n.iter() {
                let av = a.get(k).unwrap();
                if nv != 0.0 {
                    let r = error_ratio(nv, av).unwrap();
                    ensure(r == 0.0, || format!("{kind} on {inst}: {k} ratio {r}"))?;
                }
            }

            let h_n = horizontal_decide(&saturated, &slo, &cfg).map_err(|e| e.to_string())?;
            let h_a = horizontal_decide(&flooded, &slo, &cfg).map_err(|e| e.to_string())?;
            ensure(h_n == h_a, || {
                format!("{kind} on {inst}: horizontal decisions differ")
            })?;
            let r = error_ratio(
                f64::from(h_n.opt_replicas().unwrap()),
                f64::from(h_a.opt_replicas().unwrap()),
            )
            .unwrap();
            ensure(r == 0.0, || format!("{kind} on {inst}: replica ratio {r}"))?;
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} flood/instance pairs identical, ratio exactly 0"
    ))
}

fn default_reports() -> Result<Vec<ExperimentReport>, String> {
    let exp = ScenarioConfig::default()
        .resolve()
        .map_err(|e| e.to_string())?;
    Ok(analysis::run_matrix(&exp, 1))
}

fn expected_sign(kind: FaultKind, c: Classification) -> bool {
    use Classification::*;
    match kind {
        FaultKind::SynFlood | FaultKind::UdpFlood => matches!(c, Neutral | Overprovision),
        FaultKind::Volumetric | FaultKind::DiskFailure | FaultKind::SoftwareProblem => {
            c == Overprovision
        }
        FaultKind::RouterFailure => c == Underprovision,
    }
}

fn criterion_4_sign_pattern(reports: &[ExperimentReport]) -> Check {
    // (matching, total, observed classifications) per fault and policy.
    type Cell = (usize, usize, BTreeMap<String, usize>);
    let mut cells: BTreeMap<(FaultKind, Policy), Cell> = BTreeMap::new();
    for rep in reports.iter().filter(|r| r.id.slo == "slo85") {
        let res = rep.result().ok_or_else(|| format!("{} failed", rep.id))?;
        let cell = cells.entry((rep.id.fault, rep.id.policy)).or_default();
        cell.1 += 1;
        if expected_sign(rep.id.fault, res.classification) {
            cell.0 += 1;
        }
        *cell
            .2
            .entry(res.classification.name().to_string())
            .or_default() += 1;
    }
    let failures: Vec<String> = cells
        .iter()
        .filter(|(_, (ok, _, _))| *ok < 8)
        .map(|((kind, policy), (ok, total, seen))| {
            format!("{kind}/{policy} {ok}/{total} as expected (observed {seen:?})")
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} fault/policy cells at >= 8/9", cells.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn mean_abs_cost_delta(reports: &[ExperimentReport], policy: Policy, slo: &str) -> f64 {
    let over = [
        FaultKind::Volumetric,
        FaultKind::DiskFailure,
        FaultKind::SoftwareProblem,
    ];
    let deltas: Vec<f64> = reports
        .iter()
        .filter(|r| r.id.policy == policy && r.id.slo == slo && over.contains(&r.id.fault))
        .filter_map(|r| r.result().map(|x| x.cost_delta_usd.abs()))
        .collect();
    deltas.iter().sum::<f64>() / deltas.len() as f64
}

fn criterion_5_threshold_sensitivity(reports: &[ExperimentReport]) -> Check {
    let v85 = mean_abs_cost_delta(reports, Policy::Vertical, "slo85");
    let v50 = mean_abs_cost_delta(reports, Policy::Vertical, "slo50");
    let h85 = mean_abs_cost_delta(reports, Policy::Horizontal, "slo85");
    let h50 = mean_abs_cost_delta(reports, Policy::Horizontal, "slo50");
    let summary = format!("vertical {v85:.2} -> {v50:.2} USD, horizontal {h85:.2} -> {h50:.2} USD");
    ensure(v50 < v85 && h50 > h85, || summary.clone())?;
    Ok(summary)
}

fn criterion_6_doubling() -> Check {
    let n = 1200;
    let mut cpu = vec![0.3; n];
    cpu[1000] = 1.0;
    let trace = MetricTrace::new(
        1.0,
        0.0,
        [cpu, vec![0.2; n], vec![0.1; n], vec![0.2; n]],
        None,
    )
    .map_err(|e| e.to_string())?;
    let cases = [(1, SloConfig::slo50(), 2), (3, SloConfig::slo85(), 4)];
    for (current, slo, want) in cases {
        let cfg = AutoscalerConfig {
            current_replicas: current,
            ..AutoscalerConfig::default()
        };
        let got = horizontal_decide(&trace, &slo, &cfg)
            .map_err(|e| e.to_string())?
            .opt_replicas()
            .unwrap();
        ensure(got == want, || {
            format!(
                "{current} replicas at {}: got {got}, want {want}",
                slo.name()
            )
        })?;
    }
    Ok("1 -> 2 at slo50, 3 -> 4 at slo85".into())
}

fn criterion_7_burstable_damping(reports: &[ExperimentReport]) -> Check {
    let mut compared = 0;
    for t3 in reports.iter().filter(|r| r.id.family == "t3") {
        let m5 = reports
            .iter()
            .find(|r| {
                r.id.family == "m5"
                    && r.id.size == t3.id.size
                    && r.id.fault == t3.id.fault
                    && r.id.slo == t3.id.slo
                    && r.id.policy == t3.id.policy
                    && r.id.seed == t3.id.seed
            })
            .ok_or_else(|| format!("no m5 twin for {}", t3.id))?;
        let (a, b) = (t3.result().unwrap(), m5.result().unwrap());
        for (ra, rb) in a.ratios.iter().zip(&b.ratios) {
            if let (Some(x), Some(y)) = (ra.ratio_pct, rb.ratio_pct) {
                ensure(x.abs() <= y.abs() + REAL_TOL, || {
                    format!("{} {}: t3 {x:.3}% vs m5 {y:.3}%", t3.id, ra.dimension)
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} t3/m5 ratio pairs, t3 never larger"))
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn criterion_8_determinism() -> Check {
    let exp = ScenarioConfig::default()
        .resolve()
        .map_err(|e| e.to_string())?;
    let samples = exp.slos[0].lookback_s / exp.workload.sample_interval_s;
    let start = Instant::now();
    let reports = analysis::run_matrix(&exp, 1);
    let elapsed = start.elapsed();
    ensure(reports.len() == 216, || {
        format!("{} scenarios", reports.len())
    })?;
    within(Duration::from_secs(10), elapsed, "default matrix")?;

    let formats = OutputFormats {
        csv: true,
        json: true,
        plots: true,
    };
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    analysis::write_outputs(&a, &exp, &reports, formats).map_err(|e| e.to_string())?;
    let again = analysis::run_matrix(&exp, 1);
    analysis::write_outputs(&b, &exp, &again, formats).map_err(|e| e.to_string())?;
    ensure(read_dir_bytes(&a) == read_dir_bytes(&b), || {
        "library reruns differ".into()
    })?;

    let bin = env!("CARGO_BIN_EXE_faultscale");
    let (c, d) = (tmp.path().join("c"), tmp.path().join("d"));
    for dir in [&c, &d] {
        let status = Command::new(bin)
            .args(["run", "--config", "default", "--jobs", "1", "--out"])
            .arg(dir)
            .env_remove("FAULTSCALE_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
    }
    ensure(read_dir_bytes(&c) == read_dir_bytes(&d), || {
        "CLI reruns differ".into()
    })?;
    Ok(format!(
        "216 scenarios, {samples} samples/channel per lookback, {elapsed:?}; reruns byte-identical"
    ))
}

fn criterion_9_mitigation() -> Check {
    let slo = SloConfig::slo85();
    let base = generate_baseline(&WorkloadProfile::default().with_seed(default_seed()))
        .map_err(|e| e.to_string())?;
    let faulty = apply_fault(
        &base,
        &FaultScenario::new(FaultKind::SoftwareProblem).with_seed(default_seed()),
    )
    .map_err(|e| e.to_string())?;
    let cpu = Channel::Resource(ResourceKind::Cpu);
    let net = Channel::Resource(ResourceKind::Network);
    let single = CompositeTrigger::new(TriggerMode::Any).with(cpu, 0.85);
    let composite = CompositeTrigger::new(TriggerMode::All)
        .with(cpu, 0.85)
        .with(net, 0.5);
    let lookback = Window::trailing(&faulty, slo.lookback_s).map_err(|e| e.to_string())?;
    ensure(
        single
            .fires(&faulty, &lookback)
            .map_err(|e| e.to_string())?,
        || "cpu-only trigger does not fire".into(),
    )?;
    ensure(
        !composite
            .fires(&faulty, &lookback)
            .map_err(|e| e.to_string())?,
        || "composite trigger fires".into(),
    )?;

    let decide = |gate| {
        let cfg = AutoscalerConfig {
            gate: Some(gate),
            ..AutoscalerConfig::default()
        };
        horizontal_decide(&faulty, &slo, &cfg).map(|d| d.opt_replicas().unwrap())
    };
    let naive = decide(single).map_err(|e| e.to_string())?;
    let gated = decide(composite).map_err(|e| e.to_string())?;
    let current = AutoscalerConfig::default().current_replicas;
    ensure(naive > current && gated == current, || {
        format!("cpu-only {naive} replicas, composite {gated}, current {current}")
    })?;
    Ok(format!(
        "cpu-only scales {current} -> {naive}, composite holds {gated}"
    ))
}

fn main() -> ExitCode {
    let reports = default_reports();
    let with_reports = |f: fn(&[ExperimentReport]) -> Check| -> Check {
        match &reports {
            Ok(r) => f(r),
            Err(e) => Err(e.clone()),
        }
    };
    let results: Vec<(&str, Check)> = vec![
        ("1 scaling-rule fidelity", criterion_1_scaling_rules()),
        ("2 grid-search oracle", criterion_2_grid_search()),
        (
            "3 saturation invariance",
            criterion_3_saturation_invariance(),
        ),
        (
            "4 sign pattern at slo85",
            with_reports(criterion_4_sign_pattern),
        ),
        (
            "5 threshold sensitivity",
            with_reports(criterion_5_threshold_sensitivity),
        ),
        ("6 replica doubling", criterion_6_doubling()),
        (
            "7 burstable damping",
            with_reports(criterion_7_burstable_damping),
        ),
        ("8 determinism and runtime", criterion_8_determinism()),
        ("9 composite-trigger mitigation", criterion_9_mitigation()),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
