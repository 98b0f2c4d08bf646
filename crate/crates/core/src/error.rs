use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is out of its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Two objects that must agree in shape (or discount) do not.
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    /// A constructed or loaded object violates one of its invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A transport plan was checked and found not to be optimal.
    #[error("transport plan is not optimal: plan cost {plan_cost} exceeds optimum {optimum}")]
    NonOptimalPlan { plan_cost: f64, optimum: f64 },
    /// The brute-force oracle was asked for an instance it refuses to enumerate.
    #[error("oracle refuses supports of size {rows}x{cols} (limit 4x4)")]
    OracleScope { rows: usize, cols: usize },
    /// The simplex solver failed to terminate; never expected on valid input.
    #[error("internal solver failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn incompatible(msg: impl Into<String>) -> Self {
        Error::Incompatible(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
