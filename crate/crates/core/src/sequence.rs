//! Basic sequences `Q = (q_n)` of integer bases `q_n >= 2`.
//!
//! Positions are 1-based everywhere: `q_1` is the first base.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::block::DigitBlock;
use crate::error::{Error, Result};
use crate::stats;

/// `ceil(e^k)` for `k = 0..=44`; `e^44 < 2^64 < e^45`.
const EXP_CEIL: [u64; 45] = [
    1,
    3,
    8,
    21,
    55,
    149,
    404,
    1097,
    2981,
    8104,
    22027,
    59875,
    162755,
    442414,
    1202605,
    3269018,
    8886111,
    24154953,
    65659970,
    178482301,
    485165196,
    1318815735,
    3584912847,
    9744803447,
    26489122130,
    72004899338,
    195729609429,
    532048240602,
    1446257064292,
    3931334297145,
    10686474581525,
    29048849665248,
    78962960182681,
    214643579785917,
    583461742527455,
    1586013452313431,
    4311231547115196,
    11719142372802612,
    31855931757113757,
    86593400423993747,
    235385266837019986,
    639843493530054950,
    1739274941520501048,
    4727839468229346562,
    12851600114359308276,
];

/// Logarithm base used by the derived sequences and schedule clauses.
///
/// All evaluations are exact integer comparisons; no floating point is
/// involved in deciding `floor(log x)` or `log x > t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    /// `floor(log x)` for `x >= 1`.
    pub fn floor_log(self, x: u64) -> u64 {
        assert!(x >= 1, "log of zero");
        match self {
            Self::Two => u64::from(x.ilog2()),
            // e^k is irrational for k >= 1, so e^k <= x iff ceil(e^k) <= x.
            Self::Natural => EXP_CEIL[1..].iter().take_while(|&&c| c <= x).count() as u64,
        }
    }

    /// `ceil(log x)` for `x >= 1`.
    pub fn ceil_log(self, x: u64) -> u64 {
        assert!(x >= 1, "log of zero");
        if x == 1 {
            return 0;
        }
        match self {
            Self::Two => u64::from(64 - (x - 1).leading_zeros()),
            // ln x is never an integer for integer x >= 2.
            Self::Natural => self.floor_log(x) + 1,
        }
    }

    /// Whether `log x > t`.
    pub fn log_exceeds(self, x: u64, t: u64) -> bool {
        match self.exceed_threshold(t) {
            Some(min) => x >= min,
            None => false,
        }
    }

    /// Smallest integer `x` with `log x > t`, if it fits in a `u64`.
    pub fn exceed_threshold(self, t: u64) -> Option<u64> {
        match self {
            Self::Two => {
                if t >= 64 {
                    None
                } else {
                    (1u64 << t).checked_add(1)
                }
            }
            Self::Natural => match t {
                0 => Some(2),
                _ => EXP_CEIL.get(t as usize).copied(),
            },
        }
    }

    pub fn ln(self, x: f64) -> f64 {
        match self {
            Self::Natural => x.ln(),
            Self::Two => x.log2(),
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" | "e" | "ln" => Ok(Self::Natural),
            "two" | "2" | "log2" => Ok(Self::Two),
            other => Err(Error::arg(format!("unknown log base '{other}' (expected natural|2)"))),
        }
    }
}

/// Named formula sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `q_n = max(2, floor(log2(n + 4)))`.
    Log,
    /// `q_n = max(2, floor(log2 log2(n + 4)))`.
    IteratedLog,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::Log => "log",
            Self::IteratedLog => "iterated-log",
        }
    }

    fn base(self, n: u64) -> u64 {
        let m = n.saturating_add(4);
        match self {
            Self::Log => u64::from(m.ilog2()).max(2),
            Self::IteratedLog => u64::from(m.ilog2().ilog2()).max(2),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Self::Log),
            "iterated-log" => Ok(Self::IteratedLog),
            other => Err(Error::SequenceSpec(format!("unknown preset '{other}' (expected log|iterated-log)"))),
        }
    }
}

/// How a finite table of bases continues past its end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    RepeatLast,
    Cycle,
}

/// The serialized description of a basic sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceKind {
    Constant {
        b: u64,
    },
    Periodic {
        bases: Vec<u64>,
    },
    Preset {
        name: Preset,
    },
    Table {
        bases: Vec<u64>,
        extend: Extension,
    },
    /// `p_n = max(floor(log q_n), 2)`.
    LogOf {
        of: Box<SequenceKind>,
        #[serde(default)]
        log: LogBase,
    },
    /// `p_n = max(floor(q_n / 2), 2)`.
    HalfOf {
        of: Box<SequenceKind>,
    },
    /// `p_i = floor(log i) + 2`.
    LogIndex {
        #[serde(default)]
        log: LogBase,
    },
}

/// Running maxima `q(n) = max_{i <= n} q_i`.
///
/// Every supported sequence either stabilizes its running maximum after a
/// finite prefix or is non-decreasing from some point on, so the cache only
/// holds that irregular prefix and queries are O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunningMax {
    prefix: Arc<[u64]>,
    tail: MaxTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MaxTail {
    /// `q(n)` is this value for every `n` past the prefix.
    Value(u64),
    /// The sequence itself is non-decreasing past the prefix, so `q(n) = q_n`.
    Monotone,
}

/// A validated basic sequence.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct BasicSequence {
    kind: SequenceKind,
    max: RunningMax,
}

impl PartialEq for BasicSequence {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for BasicSequence {}

impl Serialize for BasicSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.kind.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BasicSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let kind = SequenceKind::deserialize(d)?;
        Self::from_kind(kind).map_err(serde::de::Error::custom)
    }
}

fn check_bases(bases: &[u64]) -> Result<()> {
    if bases.is_empty() {
        return Err(Error::SequenceSpec("base list is empty".into()));
    }
    match bases.iter().position(|&b| b < 2) {
        Some(i) => Err(Error::BaseTooSmall { index: i as u64 + 1, base: bases[i] }),
        None => Ok(()),
    }
}

fn prefix_maxima(bases: &[u64]) -> Vec<u64> {
    bases
        .iter()
        .scan(0, |m, &b| {
            *m = (*m).max(b);
            Some(*m)
        })
        .collect()
}

fn kind_base(kind: &SequenceKind, n: u64) -> u64 {
    match kind {
        SequenceKind::Constant { b } => *b,
        SequenceKind::Periodic { bases } => bases[((n - 1) % bases.len() as u64) as usize],
        SequenceKind::Preset { name } => name.base(n),
        SequenceKind::Table { bases, extend } => {
            let len = bases.len() as u64;
            if n <= len {
                bases[(n - 1) as usize]
            } else {
                match extend {
                    Extension::RepeatLast => bases[bases.len() - 1],
                    Extension::Cycle => bases[((n - 1) % len) as usize],
                }
            }
        }
        SequenceKind::LogOf { of, log } => log_floor_map(*log, kind_base(of, n)),
        SequenceKind::HalfOf { of } => half_map(kind_base(of, n)),
        SequenceKind::LogIndex { log } => log.floor_log(n) + 2,
    }
}

fn log_floor_map(log: LogBase, q: u64) -> u64 {
    log.floor_log(q).max(2)
}

fn half_map(q: u64) -> u64 {
    (q / 2).max(2)
}

fn build_max(kind: &SequenceKind) -> RunningMax {
    match kind {
        SequenceKind::Constant { b } => RunningMax { prefix: Arc::from(vec![]), tail: MaxTail::Value(*b) },
        SequenceKind::Periodic { bases } | SequenceKind::Table { bases, .. } => {
            let prefix = prefix_maxima(bases);
            let top = *prefix.last().expect("validated non-empty");
            RunningMax { prefix: prefix.into(), tail: MaxTail::Value(top) }
        }
        SequenceKind::Preset { .. } | SequenceKind::LogIndex { .. } => {
            RunningMax { prefix: Arc::from(vec![]), tail: MaxTail::Monotone }
        }
        SequenceKind::LogOf { of, log } => map_max(&build_max(of), |q| log_floor_map(*log, q)),
        SequenceKind::HalfOf { of } => map_max(&build_max(of), half_map),
    }
}

// Both derived maps are non-decreasing functions of the base, so they commute
// with taking running maxima.
fn map_max(inner: &RunningMax, f: impl Fn(u64) -> u64) -> RunningMax {
    RunningMax {
        prefix: inner.prefix.iter().map(|&q| f(q)).collect(),
        tail: match inner.tail {
            MaxTail::Value(v) => MaxTail::Value(f(v)),
            MaxTail::Monotone => MaxTail::Monotone,
        },
    }
}

fn validate_kind(kind: &SequenceKind) -> Result<()> {
    match kind {
        SequenceKind::Constant { b } => check_bases(&[*b]),
        SequenceKind::Periodic { bases } | SequenceKind::Table { bases, .. } => check_bases(bases),
        SequenceKind::Preset { .. } | SequenceKind::LogIndex { .. } => Ok(()),
        SequenceKind::LogOf { of, .. } | SequenceKind::HalfOf { of } => validate_kind(of),
    }
}

impl BasicSequence {
    pub fn from_kind(kind: SequenceKind) -> Result<Self> {
        validate_kind(&kind)?;
        let max = build_max(&kind);
        Ok(Self { kind, max })
    }

    pub fn constant(b: u64) -> Result<Self> {
        Self::from_kind(SequenceKind::Constant { b })
    }

    pub fn periodic(bases: Vec<u64>) -> Result<Self> {
        Self::from_kind(SequenceKind::Periodic { bases })
    }

    pub fn preset(name: Preset) -> Self {
        Self::from_kind(SequenceKind::Preset { name }).expect("presets are valid")
    }

    pub fn table(bases: Vec<u64>, extend: Extension) -> Result<Self> {
        Self::from_kind(SequenceKind::Table { bases, extend })
    }

    /// `p_n = max(floor(log q_n), 2)`.
    pub fn log_of(&self, log: LogBase) -> Self {
        Self::from_kind(SequenceKind::LogOf { of: Box::new(self.kind.clone()), log })
            .expect("derived from a valid sequence")
    }

    /// `p_n = max(floor(q_n / 2), 2)`.
    pub fn half_of(&self) -> Self {
        Self::from_kind(SequenceKind::HalfOf { of: Box::new(self.kind.clone()) })
            .expect("derived from a valid sequence")
    }

    /// `p_i = floor(log i) + 2`.
    pub fn log_index(log: LogBase) -> Self {
        Self::from_kind(SequenceKind::LogIndex { log }).expect("always valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SequenceSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.kind).expect("sequence kinds always serialize")
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// `q_n`, with the position checked.
    pub fn base_at(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        Ok(self.base(n))
    }

    /// `q_n` for a position already known to be `>= 1`.
    ///
    /// # Panics
    ///
    /// Panics if `n == 0`.
    #[inline]
    pub fn base(&self, n: u64) -> u64 {
        assert!(n >= 1, "positions are 1-based");
        kind_base(&self.kind, n)
    }

    /// `q_m, ..., q_{m+len-1}`.
    pub fn bases(&self, start: u64, len: usize) -> Vec<u64> {
        (start..start + len as u64).map(|i| self.base(i)).collect()
    }

    /// `q(n) = max_{i <= n} q_i`, with the position checked.
    pub fn running_max(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        Ok(self.max_upto(n))
    }

    #[inline]
    pub(crate) fn max_upto(&self, n: u64) -> u64 {
        let prefix = &self.max.prefix;
        if n <= prefix.len() as u64 {
            return prefix[(n - 1) as usize];
        }
        match self.max.tail {
            MaxTail::Value(v) => v,
            MaxTail::Monotone => self.base(n),
        }
    }

    pub fn running_maxima(&self) -> &RunningMax {
        &self.max
    }

    /// `q_n -> infinity`, read off the sequence's definition.
    pub fn is_infinite_in_limit(&self) -> bool {
        fn go(kind: &SequenceKind) -> bool {
            match kind {
                SequenceKind::Constant { .. } | SequenceKind::Periodic { .. } | SequenceKind::Table { .. } => false,
                SequenceKind::Preset { .. } | SequenceKind::LogIndex { .. } => true,
                SequenceKind::LogOf { of, .. } | SequenceKind::HalfOf { of } => go(of),
            }
        }
        go(&self.kind)
    }

    /// Whether `q_n <= q_{n+1}` for every `n`.
    pub fn is_non_decreasing(&self) -> bool {
        fn go(kind: &SequenceKind) -> bool {
            match kind {
                SequenceKind::Constant { .. } | SequenceKind::Preset { .. } | SequenceKind::LogIndex { .. } => true,
                SequenceKind::Periodic { bases } => bases.iter().all(|&b| b == bases[0]),
                SequenceKind::Table { bases, extend } => {
                    let sorted = bases.windows(2).all(|w| w[0] <= w[1]);
                    match extend {
                        Extension::RepeatLast => sorted,
                        Extension::Cycle => bases.iter().all(|&b| b == bases[0]),
                    }
                }
                SequenceKind::LogOf { of, .. } | SequenceKind::HalfOf { of } => go(of),
            }
        }
        go(&self.kind)
    }

    /// `(start, period)` such that `q_{n+period} = q_n` for all `n >= start`,
    /// when the sequence is eventually periodic.
    pub fn eventual_period(&self) -> Option<(u64, u64)> {
        fn go(kind: &SequenceKind) -> Option<(u64, u64)> {
            match kind {
                SequenceKind::Constant { .. } => Some((1, 1)),
                SequenceKind::Periodic { bases } => Some((1, bases.len() as u64)),
                SequenceKind::Table { bases, extend: Extension::RepeatLast } => Some((bases.len() as u64, 1)),
                SequenceKind::Table { bases, extend: Extension::Cycle } => Some((1, bases.len() as u64)),
                SequenceKind::Preset { .. } | SequenceKind::LogIndex { .. } => None,
                SequenceKind::LogOf { of, .. } | SequenceKind::HalfOf { of } => go(of),
            }
        }
        go(&self.kind)
    }

    /// Whether block `B` is admissible at infinitely many positions.
    pub fn eventually_admissible(&self, block: &DigitBlock) -> bool {
        let k = block.len() as u64;
        match self.eventual_period() {
            Some((start, period)) => (start..start + period).any(|i| stats::admissible(self, block, i)),
            // Unbounded non-decreasing sequences eventually exceed every digit.
            None if self.is_infinite_in_limit() && self.is_non_decreasing() => true,
            None => {
                // Infinite-in-limit kinds are all non-decreasing; fall back to a
                // far-out probe for anything else.
                let far = 1u64 << 40;
                stats::admissible(self, block, far) || stats::admissible(self, block, far + k)
            }
        }
    }
}

impl fmt::Display for BasicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SequenceKind::Constant { b } => write!(f, "constant:{b}"),
            SequenceKind::Periodic { bases } => write!(f, "periodic:{}", join(bases)),
            SequenceKind::Preset { name } => write!(f, "preset:{}", name.name()),
            _ => f.write_str(&self.to_json()),
        }
    }
}

fn join(values: &[u64]) -> String {
    values.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| Error::SequenceSpec(format!("bad base '{t}': {e}"))))
        .collect()
}

/// Parses the inline spec language `constant:b | periodic:a,b,c |
/// preset:name | table:a,b,c[;cycle]`, or a JSON object.
impl FromStr for BasicSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Self::from_json(s);
        }
        let (head, rest) =
            s.split_once(':').ok_or_else(|| Error::SequenceSpec(format!("expected kind:value, got '{s}'")))?;
        match head {
            "constant" => {
                let b = rest.trim().parse().map_err(|e| Error::SequenceSpec(format!("bad base '{rest}': {e}")))?;
                Self::constant(b)
            }
            "periodic" => Self::periodic(parse_list(rest)?),
            "preset" => Ok(Self::preset(rest.trim().parse()?)),
            "table" => {
                let (list, ext) = match rest.split_once(';') {
                    Some((l, "cycle")) => (l, Extension::Cycle),
                    Some((l, "repeat-last")) => (l, Extension::RepeatLast),
                    Some((_, other)) => return Err(Error::SequenceSpec(format!("unknown extension '{other}'"))),
                    None => (rest, Extension::RepeatLast),
                };
                Self::table(parse_list(list)?, ext)
            }
            other => Err(Error::SequenceSpec(format!("unknown sequence kind '{other}'"))),
        }
    }
}

/// One row of the growth-condition diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: u64,
    /// `Q_n(B) / (n log q(n) / log n)`.
    pub ratio: f64,
}

/// Empirical trend of `Q_n(B) / (n log q(n) / log n)` over a checkpoint
/// ladder. Finite data cannot decide a limit; the verdict is heuristic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTrend {
    pub block: DigitBlock,
    pub rows: Vec<GrowthRow>,
    pub increasing: bool,
    pub label: &'static str,
}

/// Checks the growth condition on `Q_n(B)` at the given checkpoints.
///
/// `n = 1` is skipped since `log 1 = 0`.
pub fn diagnose_growth(seq: &BasicSequence, block: &DigitBlock, checkpoints: &[u64]) -> Result<GrowthTrend> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("checkpoints must be strictly increasing"));
    }
    let usable: Vec<u64> = checkpoints.iter().copied().filter(|&n| n >= 2).collect();
    let expected = stats::expected_counts(seq, block, &usable)?;
    let rows: Vec<GrowthRow> = usable
        .iter()
        .zip(&expected)
        .map(|(&n, q_n)| {
            let nf = n as f64;
            let scale = nf * (seq.max_upto(n) as f64).ln() / nf.ln();
            GrowthRow { n, ratio: crate::numeric::rational_to_f64(q_n) / scale }
        })
        .collect();
    let increasing = rows.len() >= 2 && rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    Ok(GrowthTrend { block: block.clone(), rows, increasing, label: "heuristic" })
}
