//! Digit transforms `psi_{P,Q}` and the constructions built from them.

pub mod schedule;
pub mod ud;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::construction::{Ladder, XqDigits, DEFAULT_SCAN_BOUND};
use crate::digits::{DigitSource, FiniteDigits};
use crate::error::{Error, Result};
use crate::sequence::{BasicSequence, LogBase};

pub use schedule::{Bound, Level, ModDiv, RnqDnqDigits, Schedule};
pub use ud::{ud_source, UdKind, UdStream, UdValue};

/// `psi_{P,Q}`: digit `E_n` of a number declared against `P` becomes
/// `min(E_n, q_n - 1)` against `Q`.
pub struct Psi<S> {
    source: S,
    target: BasicSequence,
    position: u64,
}

impl<S: DigitSource> Psi<S> {
    pub fn new(source: S, target: BasicSequence) -> Self {
        Self { source, target, position: 0 }
    }

    pub fn into_inner(self) -> S {
        self.source
    }
}

impl<S: DigitSource> DigitSource for Psi<S> {
    fn basis(&self) -> &BasicSequence {
        &self.target
    }

    fn next_digit(&mut self) -> Result<u64> {
        self.position += 1;
        let d = self.source.next_digit()?;
        Ok(d.min(self.target.base(self.position) - 1))
    }
}

pub fn psi<S: DigitSource>(source: S, target: BasicSequence) -> Psi<S> {
    Psi::new(source, target)
}

/// `psi_{P,Q}` on a materialized prefix; `digits[0]` is `E_1`.
pub fn psi_digits(digits: &[u64], target: &BasicSequence) -> Vec<u64> {
    digits.iter().zip(1..).map(|(&d, n)| d.min(target.base(n) - 1)).collect()
}

/// `Psi_j = psi_{Q_{j-1},Q_j} o ... o psi_{Q_1,Q_2}` applied to a source
/// declared against `chain[0]`.
pub fn psi_chain(source: Box<dyn DigitSource>, chain: &[BasicSequence]) -> Result<Box<dyn DigitSource>> {
    if chain.len() < 2 {
        return Err(Error::arg("a chain needs at least two sequences"));
    }
    if source.basis() != &chain[0] {
        return Err(Error::arg(format!("source is declared against {}, chain starts at {}", source.basis(), chain[0])));
    }
    Ok(chain[1..].iter().fold(source, |s, q| Box::new(Psi::new(s, q.clone())) as Box<dyn DigitSource>))
}

/// A reproducible description of a digit sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum Target {
    /// The constructed normal number over `seq`.
    Xq {
        seq: BasicSequence,
    },
    /// A finite prefix followed by zeros.
    Finite {
        seq: BasicSequence,
        digits: Vec<u64>,
    },
    Psi {
        source: Box<Target>,
        to: BasicSequence,
    },
    /// The schedule-driven number over `seq`.
    Schedule {
        seq: BasicSequence,
        #[serde(default)]
        ud: UdKind,
        #[serde(default)]
        mod_div: ModDiv,
        #[serde(default)]
        log: LogBase,
    },
}

impl Target {
    pub fn basis(&self) -> &BasicSequence {
        match self {
            Self::Xq { seq } | Self::Finite { seq, .. } | Self::Schedule { seq, .. } => seq,
            Self::Psi { to, .. } => to,
        }
    }

    pub fn open(&self) -> Result<Box<dyn DigitSource>> {
        self.open_with(DEFAULT_SCAN_BOUND)
    }

    /// A fresh digit stream starting at position 1.
    pub fn open_with(&self, scan_bound: u64) -> Result<Box<dyn DigitSource>> {
        Ok(match self {
            Self::Xq { seq } => {
                Box::new(XqDigits::from_ladder(Arc::new(Ladder::with_scan_bound(seq.clone(), scan_bound))))
            }
            Self::Finite { seq, digits } => Box::new(FiniteDigits::new(seq.clone(), digits.clone())?),
            Self::Psi { source, to } => Box::new(Psi::new(source.open_with(scan_bound)?, to.clone())),
            Self::Schedule { seq, ud, mod_div, log } => {
                let schedule = Schedule::with_scan_bound(seq.clone(), mod_div.clone(), *log, scan_bound)?;
                Box::new(RnqDnqDigits::new(schedule, *ud))
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("targets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SequenceSpec(format!("bad target graph: {e}")))
    }
}

/// The constructions a CLI user can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Xq,
    NqNotDnq,
    RnqNotNq,
    RnqDnqNotNq,
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xq" => Ok(Self::Xq),
            "nq-not-dnq" => Ok(Self::NqNotDnq),
            "rnq-not-nq" => Ok(Self::RnqNotNq),
            "rnq-dnq-not-nq" => Ok(Self::RnqDnqNotNq),
            _ => Err(Error::arg(format!("unknown target '{s}' (expected xq|nq-not-dnq|rnq-not-nq|rnq-dnq-not-nq)"))),
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Xq => "xq",
            Self::NqNotDnq => "nq-not-dnq",
            Self::RnqNotNq => "rnq-not-nq",
            Self::RnqDnqNotNq => "rnq-dnq-not-nq",
        })
    }
}

/// Options that only some constructions read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub log: LogBase,
    pub ud: UdKind,
    pub mod_div: ModDiv,
}

fn require_unbounded(q: &BasicSequence, what: &str) -> Result<()> {
    if q.is_infinite_in_limit() {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("{what} needs a basic sequence that is infinite in the limit; {q} is not")))
    }
}

/// The graph for a construction over `q`.
pub fn graph(kind: TargetKind, q: &BasicSequence, opts: &BuildOptions) -> Result<Target> {
    Ok(match kind {
        TargetKind::Xq => Target::Xq { seq: q.clone() },
        TargetKind::NqNotDnq => {
            require_unbounded(q, "nq-not-dnq")?;
            let p = q.log_of(opts.log);
            let inner = Target::Psi { source: Box::new(Target::Xq { seq: q.clone() }), to: p };
            Target::Psi { source: Box::new(inner), to: q.clone() }
        }
        TargetKind::RnqNotNq => {
            require_unbounded(q, "rnq-not-nq")?;
            Target::Psi { source: Box::new(Target::Xq { seq: q.half_of() }), to: q.clone() }
        }
        TargetKind::RnqDnqNotNq => {
            require_unbounded(q, "rnq-dnq-not-nq")?;
            Target::Schedule { seq: q.clone(), ud: opts.ud, mod_div: opts.mod_div.clone(), log: opts.log }
        }
    })
}

/// `y = psi_{P,Q}(psi_{Q,P}(x_Q))` with `p_n = max(floor(log q_n), 2)`.
pub fn build_nq_not_dnq(q: &BasicSequence, log: LogBase) -> Result<Box<dyn DigitSource>> {
    graph(TargetKind::NqNotDnq, q, &BuildOptions { log, ..Default::default() })?.open()
}

/// The literal digit formula `max(E_n, floor(log q_n), 2)` applied to a
/// prefix of `x_Q`, kept for comparison with the composed transform. Values
/// are not reduced below `q_n`, so this is not a digit sequence in general.
pub fn nq_max_reading(q: &BasicSequence, xq: &[u64], log: LogBase) -> Vec<u64> {
    xq.iter().zip(1..).map(|(&e, n)| e.max(log.floor_log(q.base(n))).max(2)).collect()
}

/// `y = psi_{P,Q}(x_P)` with `p_n = max(floor(q_n / 2), 2)`.
pub fn build_rnq_not_nq(q: &BasicSequence) -> Result<Box<dyn DigitSource>> {
    graph(TargetKind::RnqNotNq, q, &BuildOptions::default())?.open()
}

pub fn build_rnq_dnq_not_nq(q: &BasicSequence, mod_div: ModDiv, ud: UdKind, log: LogBase) -> Result<RnqDnqDigits> {
    let schedule = Schedule::new(q.clone(), mod_div, log)?;
    Ok(RnqDnqDigits::new(schedule, ud))
}
