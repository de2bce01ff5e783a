use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the library.
///
/// Each variant carries a stable machine-readable code (see [`Error::code`]).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("positions are 1-based; index 0 is not a position of the expansion")]
    ZeroIndex,

    #[error("base q_{index} = {base} is smaller than 2")]
    BaseTooSmall { index: u64, base: u64 },

    #[error("invalid sequence spec: {0}")]
    SequenceSpec(String),

    #[error("n_r not found below bound: no n <= {bound} satisfies (q(n)^2+1)^{r} <= n")]
    ThresholdNotFound { r: u64, bound: u64 },

    #[error("occurrence counters for block length r={r} exceed {limit} distinct base windows")]
    CounterSpill { r: u64, limit: usize },

    #[error("{quantity} scan exceeded bound {bound}")]
    ScheduleScan { quantity: String, bound: u64 },

    #[error("modulus of divergence inconsistent with the base sequence: {0}")]
    ModulusMismatch(String),

    #[error("need digits through position {needed}, only {available} available")]
    InsufficientDigits { needed: u64, available: u64 },

    #[error("digit E_{position} = {digit} is not admissible for base q_{position} = {base}")]
    InadmissibleDigit { position: u64, digit: u64, base: u64 },

    #[error("base-{base} digit {position} still ambiguous after {consumed} extra Cantor digits")]
    Refinement { position: usize, base: u32, consumed: usize },

    #[error("refused: {0}")]
    Hypothesis(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Argument(_) => "argument",
            Self::ZeroIndex => "zero_index",
            Self::BaseTooSmall { .. } => "base_too_small",
            Self::SequenceSpec(_) => "sequence_spec",
            Self::ThresholdNotFound { .. } => "threshold_scan_bound",
            Self::CounterSpill { .. } => "counter_spill",
            Self::ScheduleScan { .. } => "schedule_scan_bound",
            Self::ModulusMismatch(_) => "modulus_mismatch",
            Self::InsufficientDigits { .. } => "insufficient_digits",
            Self::InadmissibleDigit { .. } => "inadmissible_digit",
            Self::Refinement { .. } => "refinement_cap",
            Self::Hypothesis(_) => "hypothesis",
        }
    }

    /// True for failures caused by a scan or refinement budget running out,
    /// as opposed to bad input.
    pub fn is_budget_exhausted(&self) -> bool {
        matches!(
            self,
            Self::ThresholdNotFound { .. }
                | Self::CounterSpill { .. }
                | Self::ScheduleScan { .. }
                | Self::Refinement { .. }
        )
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Self::Argument(msg.into())
    }
}
