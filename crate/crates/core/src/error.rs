use crate::grid::ComponentRef;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed section at line {line}: {message}")]
    MalformedSection { line: usize, message: String },

    #[error("missing required section `{0}`")]
    MissingSection(&'static str),

    #[error("{kind} {id} references unknown bus {bus}")]
    InvalidBusRef {
        kind: &'static str,
        id: usize,
        bus: usize,
    },

    #[error("bus {0} has non-positive or inverted voltage bounds")]
    NonPositiveVoltageBounds(usize),

    #[error("duplicate bus id {0}")]
    DuplicateBusId(usize),

    #[error("bus {0} has negative active demand")]
    NegativeDemand(usize),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("unknown component {0}")]
    UnknownComponent(ComponentRef),

    #[error("indicator for {component} is {value}, not within tolerance of 0 or 1")]
    NonIntegralIndicator { component: ComponentRef, value: f64 },

    #[error("network has no energizable reference bus")]
    NoRefBus,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("{stage}: model is infeasible")]
    Infeasible { stage: &'static str },

    #[error("{stage}: model is unbounded")]
    Unbounded { stage: &'static str },

    #[error("{stage}: solver stopped at a limit without a feasible solution")]
    NoIncumbent { stage: &'static str },

    #[error("full load cannot be served even with every damaged component repaired")]
    MrspInfeasible,

    #[error("power flow did not converge (last mismatch {mismatch:.3e} pu)")]
    NonConvergence { mismatch: f64 },

    #[error("island has no slack generator")]
    NoSlack,

    #[error("plan violates an invariant: {0}")]
    InvalidPlan(String),

    #[error("plan does not match case: {0}")]
    PlanCaseMismatch(String),

    #[error("invalid report: {0}")]
    InvalidReport(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
