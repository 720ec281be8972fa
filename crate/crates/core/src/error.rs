use thiserror::Error;

use crate::catalog::ResourceKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty catalog")]
    EmptyCatalog,

    #[error("catalog row {row}: {message}")]
    CatalogRow { row: usize, message: String },

    #[error("duplicate catalog entry {family}.{size}")]
    DuplicateInstance { family: String, size: String },

    #[error(
        "catalog family {family}: cost must strictly increase with size ({smaller} -> {larger})"
    )]
    NonMonotoneCost {
        family: String,
        smaller: String,
        larger: String,
    },

    #[error("demand unsatisfiable: no instance covers {}", fmt_kinds(.violated))]
    DemandUnsatisfiable { violated: Vec<ResourceKind> },

    #[error("invalid resource vector: {0}")]
    InvalidVector(String),

    #[error("utilization out of range at row {row}: {value}")]
    UtilizationOutOfRange { row: usize, value: f64 },

    #[error("trace row {row}: {message}")]
    TraceRow { row: usize, message: String },

    #[error("trace header missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("window [{start}, {end}) s lies outside trace [{trace_start}, {trace_end}) s")]
    WindowOutOfRange {
        start: f64,
        end: f64,
        trace_start: f64,
        trace_end: f64,
    },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid workload profile: {0}")]
    InvalidProfile(String),

    #[error("unknown fault kind `{0}` (valid kinds: syn, udp, vol, rtr, disk, app)")]
    UnknownFaultKind(String),

    #[error("invalid fault parameter `{name}` for {kind}: {message}")]
    InvalidFaultParam {
        kind: String,
        name: String,
        message: String,
    },

    #[error("invalid SLO: {0}")]
    InvalidSlo(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("error ratio undefined: normal-state value is zero")]
    UndefinedRatio,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_kinds(kinds: &[ResourceKind]) -> String {
    kinds
        .iter()
        .map(|k| k.name())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
