use thiserror::Error;

/// Errors shared across the simulator.
#[derive(Debug, Error)]
pub enum KpzError {
    #[error("time-ordered pair required: from.t = {from_t} must be < to.t = {to_t}")]
    TimeOrder { from_t: f64, to_t: f64 },

    #[error("point ({x}, {t}) outside backend box {descriptor}")]
    OutOfBox { x: f64, t: f64, descriptor: String },

    #[error("lattice endpoints not coordinatewise ordered: {0:?} !<= {1:?}")]
    LatticeOrder((i64, i64), (i64, i64)),

    #[error("lattice point {0:?} outside box")]
    OutOfLattice((i64, i64)),

    #[error("horizon {requested} exceeds box capacity {available}")]
    Horizon { requested: i64, available: i64 },

    #[error("box of {sites} sites exceeds memory budget of {budget} sites")]
    BoxTooLarge { sites: usize, budget: usize },

    #[error("unsupported backend for this operation: {0}")]
    UnsupportedBackend(String),

    #[error("weight function rejected by finiteness gate: {0}")]
    GateRejected(String),

    #[error("parametric tail without a declared growth exponent is undecidable")]
    UndecidableTail,

    #[error("truncation certificate failed: {0}")]
    CertificateFailure(String),

    #[error("argmax on grid boundary after widening; radius insufficient (x = {x}, t = {t})")]
    RadiusInsufficient { x: f64, t: f64 },

    #[error("no sign change of {what} inside sweep [{lo}, {hi}]")]
    SweepTooNarrow { what: String, lo: f64, hi: f64 },

    #[error("degenerate slice: {0}")]
    DegenerateSlice(String),

    #[error("color assignment ambiguous at ({x}, {t}): candidates {candidates:?}")]
    AmbiguousColor { x: f64, t: f64, candidates: Vec<f64> },

    #[error("coloring ambiguity fraction {frac:.4} exceeds allowed {allowed:.4}")]
    AmbiguityOverflow { frac: f64, allowed: f64 },

    #[error("extinction ordering unresolved: colors {0:?} vanish within one time slice; refine the time grid")]
    UnresolvedExtinctionOrder(Vec<f64>),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, KpzError>;
