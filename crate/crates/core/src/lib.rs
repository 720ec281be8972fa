//! Deterministic simulation of how fault-distorted utilization metrics steer
//! vertical and horizontal autoscaling decisions, and what that costs.
//!
//! The pipeline is: generate a baseline trace ([`workload`]), inject a fault
//! ([`faults`]), let both policies decide on the control and the faulty trace
//! ([`autoscaler`]), then compare decisions and monthly cost ([`analysis`]).

pub mod analysis;
pub mod autoscaler;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod faults;
pub mod metrics;
pub mod workload;

pub use analysis::{classify, error_ratio, run_matrix, Classification, ExperimentReport};
pub use autoscaler::{
    composite_trigger, horizontal_decide, horizontal_opt_replicas, vertical_decide,
    vertical_opt_spec, AutoscalerConfig, Policy, ScalingDecision, SloConfig, TriggerMode,
};
pub use catalog::{monthly_cost, InstanceCatalog, InstanceType, ResourceKind, ResourceVector};
pub use config::{Experiment, ScenarioConfig};
pub use error::{Error, Result};
pub use faults::{apply_fault, FaultKind, FaultParams, FaultScenario};
pub use metrics::{max_aggregate, Channel, MetricTrace, Window};
pub use workload::{generate_baseline, WorkloadProfile};
