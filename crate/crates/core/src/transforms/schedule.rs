//! The `L_n` schedule and the digit stream it drives: a number that is
//! ratio-normal and distribution normal but not normal with respect to `Q`.
//!
//! Positions in `S = U_i {L_i, ..., L_i + i - 1}` carry the digits
//! `F_1 ... F_i` of a donor normal with respect to `p_i = floor(log i) + 2`;
//! every other position carries `max(floor(x_n q_n), ceil(log i(n)))` for a
//! uniformly distributed driver `(x_n)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::ud::{UdKind, UdStream};
use crate::block::DigitBlock;
use crate::construction::{block_from_index, product, Ladder, XqDigits, DEFAULT_SCAN_BOUND};
use crate::digits::DigitSource;
use crate::error::{Error, Result};
use crate::sequence::{BasicSequence, LogBase};
use crate::stats::{expected_count, weight};

/// Positions past a supplied modulus value that are checked against `Q`.
pub const MOD_DIV_SPOT_CHECK: u64 = 64;

/// Upper limit on the number of blocks an `upsilon` scan may quantify over.
const MAX_UPSILON_BLOCKS: usize = 1 << 20;

/// Source of `min{t : log q_j > n for all j >= t}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ModDiv {
    /// Found by search; valid because every supported unbounded sequence is
    /// non-decreasing.
    #[default]
    Auto,
    /// `values[n - 1]` for `n = 1, 2, ...`, spot-checked against `Q`.
    Table { values: Vec<u64> },
}

impl FromStr for ModDiv {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        let list = s
            .strip_prefix("table:")
            .ok_or_else(|| Error::arg(format!("bad mod-div '{s}' (expected auto|table:t1,t2,...)")))?;
        let values = list
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| Error::arg(format!("bad mod-div value '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if values.contains(&0) {
            return Err(Error::arg("mod-div values are positions and must be >= 1"));
        }
        Ok(Self::Table { values })
    }
}

impl fmt::Display for ModDiv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Table { values } => {
                let parts: Vec<_> = values.iter().map(u64::to_string).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

/// A scanned position, or the fact that it lies past the scan bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    At(u64),
    Beyond,
}

impl Bound {
    pub fn value(self) -> Option<u64> {
        match self {
            Self::At(v) => Some(v),
            Self::Beyond => None,
        }
    }

    fn plus(self, d: u64) -> Self {
        match self {
            Self::At(v) => v.checked_add(d).map_or(Self::Beyond, Self::At),
            Self::Beyond => Self::Beyond,
        }
    }
}

/// A number, or the string `"beyond"`.
impl Serialize for Bound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::At(v) => s.serialize_u64(*v),
            Self::Beyond => s.serialize_str("beyond"),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::At(v) => write!(f, "{v}"),
            Self::Beyond => f.write_str("beyond"),
        }
    }
}

/// One rung of the schedule with the clauses that produced `L_n`.
///
/// `nu` and `upsilon` are `None` when the modulus clause already places
/// `L_n` past the scan bound and they were not evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Level {
    pub n: u64,
    pub mod_div: Bound,
    pub nu: Option<Bound>,
    /// `upsilon[k - 1]` for `k = 1..=n`.
    pub upsilon: Option<Vec<Bound>>,
    pub start: Bound,
}

/// The schedule `L_0 = 0, L_1, L_2, ...` for a target `Q`.
#[derive(Debug, Clone)]
pub struct Schedule {
    q: BasicSequence,
    p: BasicSequence,
    log: LogBase,
    mod_div: ModDiv,
    scan_bound: u64,
    levels: Vec<Level>,
}

impl Schedule {
    pub fn new(q: BasicSequence, mod_div: ModDiv, log: LogBase) -> Result<Self> {
        Self::with_scan_bound(q, mod_div, log, DEFAULT_SCAN_BOUND)
    }

    /// Fails unless `Q` is infinite in the limit.
    pub fn with_scan_bound(q: BasicSequence, mod_div: ModDiv, log: LogBase, scan_bound: u64) -> Result<Self> {
        if !q.is_infinite_in_limit() {
            return Err(Error::Hypothesis(format!("{q} is not infinite in the limit, so no schedule exists")));
        }
        Ok(Self { q, p: BasicSequence::log_index(log), log, mod_div, scan_bound, levels: Vec::new() })
    }

    pub fn target(&self) -> &BasicSequence {
        &self.q
    }

    /// The donor's basic sequence `p_i = floor(log i) + 2`.
    pub fn donor(&self) -> &BasicSequence {
        &self.p
    }

    pub fn log_base(&self) -> LogBase {
        self.log
    }

    pub fn scan_bound(&self) -> u64 {
        self.scan_bound
    }

    /// Levels computed so far.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// `min{t : log q_j > n for all j >= t}`.
    pub fn mod_div(&self, n: u64) -> Result<Bound> {
        match &self.mod_div {
            ModDiv::Auto => {
                let Some(min) = self.log.exceed_threshold(n) else {
                    return Ok(Bound::Beyond);
                };
                if self.q.base(self.scan_bound) < min {
                    return Ok(Bound::Beyond);
                }
                let (mut lo, mut hi) = (1, self.scan_bound);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if self.q.base(mid) >= min {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                Ok(Bound::At(lo))
            }
            ModDiv::Table { values } => {
                let t = *values.get((n - 1) as usize).ok_or_else(|| {
                    Error::ModulusMismatch(format!("table has {} entries, n = {n} requested", values.len()))
                })?;
                if t > self.scan_bound {
                    return Ok(Bound::Beyond);
                }
                for j in t..t + MOD_DIV_SPOT_CHECK {
                    let q = self.q.base(j);
                    if !self.log.log_exceeds(q, n) {
                        return Err(Error::ModulusMismatch(format!("entry {n} = {t}, but log q_{j} = log {q} <= {n}")));
                    }
                }
                Ok(Bound::At(t))
            }
        }
    }

    /// `L_n`, computing earlier levels as needed; `L_0 = 0`.
    pub fn start(&mut self, n: u64) -> Result<Bound> {
        if n == 0 {
            return Ok(Bound::At(0));
        }
        Ok(self.level(n)?.start)
    }

    pub fn level(&mut self, n: u64) -> Result<&Level> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        while (self.levels.len() as u64) < n {
            let next = self.levels.len() as u64 + 1;
            let prev = match self.levels.last() {
                None => 0,
                Some(level) => level.start.value().ok_or_else(|| Error::ScheduleScan {
                    quantity: format!("L_{next} (L_{} is past the scan bound)", next - 1),
                    bound: self.scan_bound,
                })?,
            };
            let level = self.compute_level(next, prev)?;
            self.levels.push(level);
        }
        Ok(&self.levels[(n - 1) as usize])
    }

    fn compute_level(&self, n: u64, prev: u64) -> Result<Level> {
        let mod_div = self.mod_div(n)?;
        if mod_div == Bound::Beyond {
            return Ok(Level { n, mod_div, nu: None, upsilon: None, start: Bound::Beyond });
        }
        let nu = self.scan_nu(n, prev)?;
        let upsilon = (1..=n).map(|k| self.scan_upsilon(n, k)).collect::<Result<Vec<_>>>()?;
        let start = [mod_div, Bound::At(prev).plus(n * n), nu.plus(prev)]
            .into_iter()
            .chain(upsilon.iter().copied())
            .max()
            .expect("non-empty");
        Ok(Level { n, mod_div, nu: Some(nu), upsilon: Some(upsilon), start })
    }

    fn previous_start(&mut self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        self.start(n - 1)?
            .value()
            .ok_or_else(|| Error::ScheduleScan { quantity: format!("L_{}", n - 1), bound: self.scan_bound })
    }

    /// `(q_{L+1} ... q_{L+n})^n < q_{L+1} ... q_j` with `L = L_{n-1}`, the
    /// defining ratio of `nu_n` with both sides exponentiated.
    pub fn nu_holds(&mut self, n: u64, j: u64) -> Result<bool> {
        let prev = self.previous_start(n)?;
        Ok(nu_predicate(&self.q, n, prev, j))
    }

    /// `nu_n`, the first `j` at which [`nu_holds`](Self::nu_holds) turns true.
    pub fn nu(&mut self, n: u64) -> Result<u64> {
        let prev = self.previous_start(n)?;
        self.scan_nu(n, prev)?
            .value()
            .ok_or_else(|| Error::ScheduleScan { quantity: format!("nu_{n}"), bound: self.scan_bound })
    }

    fn scan_nu(&self, n: u64, prev: u64) -> Result<Bound> {
        let exponent = u32::try_from(n).map_err(|_| Error::arg("n too large"))?;
        let target = self.numerator(n, prev).pow(exponent);
        let mut den = BigUint::one();
        let mut j = prev;
        loop {
            j += 1;
            if j > self.scan_bound {
                return Ok(Bound::Beyond);
            }
            den *= self.q.base(j);
            if target < den {
                return Ok(Bound::At(j));
            }
        }
    }

    fn numerator(&self, n: u64, prev: u64) -> BigUint {
        (prev + 1..=prev + n).fold(BigUint::one(), |acc, p| acc * self.q.base(p))
    }

    /// Blocks of length `k` with `Q_n(B) > 0` that recur in `P`.
    pub fn upsilon_blocks(&self, n: u64, k: u64) -> Result<Vec<DigitBlock>> {
        if k == 0 || k > n {
            return Err(Error::arg(format!("upsilon needs 1 <= k <= n (got n = {n}, k = {k})")));
        }
        let mut found = BTreeSet::new();
        for i in 1..=n {
            let radices = self.q.bases(i, k as usize);
            let total = product(&radices).filter(|&t| t <= MAX_UPSILON_BLOCKS as u128).ok_or_else(|| {
                Error::ScheduleScan { quantity: format!("upsilon_{n},{k} blocks"), bound: MAX_UPSILON_BLOCKS as u64 }
            })?;
            for ordinal in 1..=total {
                found.insert(block_from_index(&radices, ordinal)?.digits().to_vec());
                if found.len() > MAX_UPSILON_BLOCKS {
                    return Err(Error::ScheduleScan {
                        quantity: format!("upsilon_{n},{k} blocks"),
                        bound: MAX_UPSILON_BLOCKS as u64,
                    });
                }
            }
        }
        let blocks: Vec<_> = found
            .into_iter()
            .map(DigitBlock::new)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|b| self.p.eventually_admissible(b))
            .collect();
        if blocks.is_empty() {
            return Err(Error::Hypothesis(format!("no block of length {k} is admissible in both sequences")));
        }
        Ok(blocks)
    }

    /// `n Q_n(B) < sum_{i=1}^{j} P_{i-k+1}(B)` for every block the scan
    /// quantifies over.
    pub fn upsilon_holds(&self, n: u64, k: u64, j: u64) -> Result<bool> {
        for block in self.upsilon_blocks(n, k)? {
            let threshold = self.upsilon_threshold(n, &block);
            let mut tail = PartialSums::new(&self.p, &block);
            for _ in 0..j {
                tail.advance();
            }
            if threshold >= tail.total {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `upsilon_{n,k}`: the largest per-block first position at which the
    /// predicate holds.
    pub fn upsilon(&self, n: u64, k: u64) -> Result<u64> {
        self.scan_upsilon(n, k)?
            .value()
            .ok_or_else(|| Error::ScheduleScan { quantity: format!("upsilon_{n},{k}"), bound: self.scan_bound })
    }

    fn upsilon_threshold(&self, n: u64, block: &DigitBlock) -> BigRational {
        expected_count(&self.q, block, n) * BigRational::from_integer(n.into())
    }

    fn scan_upsilon(&self, n: u64, k: u64) -> Result<Bound> {
        let mut worst = 0;
        for block in self.upsilon_blocks(n, k)? {
            let threshold = self.upsilon_threshold(n, &block);
            let mut tail = PartialSums::new(&self.p, &block);
            loop {
                if tail.j >= self.scan_bound {
                    return Ok(Bound::Beyond);
                }
                tail.advance();
                if threshold < tail.total {
                    break;
                }
            }
            worst = worst.max(tail.j);
        }
        Ok(Bound::At(worst))
    }

    /// `i(n) = max{j : L_j <= n}` for a position `n >= 1`.
    pub fn index_at(&mut self, position: u64) -> Result<u64> {
        if position == 0 {
            return Err(Error::ZeroIndex);
        }
        if position > self.scan_bound {
            return Err(Error::ScheduleScan { quantity: format!("i({position})"), bound: self.scan_bound });
        }
        let mut j = 0;
        while let Bound::At(next) = self.start(j + 1)? {
            if next > position {
                break;
            }
            j += 1;
        }
        Ok(j)
    }

    /// The offset of `position` inside its segment `{L_i, ..., L_i + i - 1}`,
    /// starting at 1, or `None` off `S`.
    pub fn segment_offset(&mut self, position: u64) -> Result<Option<u64>> {
        let i = self.index_at(position)?;
        if i == 0 {
            return Ok(None);
        }
        let start = self.start(i)?.value().expect("index_at only returns reached levels");
        let offset = position - start + 1;
        Ok((offset <= i).then_some(offset))
    }

    /// `|S ∩ [1, n]|`.
    pub fn s_count(&mut self, n: u64) -> Result<u64> {
        let top = self.index_at(n)?;
        let mut count = 0;
        for i in 1..=top {
            let start = self.start(i)?.value().expect("reached level");
            count += (start + i - 1).min(n) - start + 1;
        }
        Ok(count)
    }
}

fn nu_predicate(q: &BasicSequence, n: u64, prev: u64, j: u64) -> bool {
    if j <= prev {
        return false;
    }
    let num = (prev + 1..=prev + n).fold(BigUint::one(), |acc, p| acc * q.base(p));
    let den = (prev + 1..=j).fold(BigUint::one(), |acc, p| acc * q.base(p));
    num.pow(n as u32) < den
}

/// Running `P_m(B)` and `sum_{i <= j} P_{i-k+1}(B)` over `j`.
struct PartialSums<'a> {
    p: &'a BasicSequence,
    block: &'a DigitBlock,
    j: u64,
    count: BigRational,
    total: BigRational,
}

impl<'a> PartialSums<'a> {
    fn new(p: &'a BasicSequence, block: &'a DigitBlock) -> Self {
        Self { p, block, j: 0, count: BigRational::zero(), total: BigRational::zero() }
    }

    fn advance(&mut self) {
        self.j += 1;
        let k = self.block.len() as u64;
        if self.j >= k {
            let m = self.j + 1 - k;
            if let Some(w) = weight(self.p, self.block, m) {
                self.count += w;
            }
            self.total += &self.count;
        }
    }
}

/// Digits of the schedule-driven number, declared against `Q`.
pub struct RnqDnqDigits {
    schedule: Schedule,
    ud: UdStream,
    donor: XqDigits,
    donor_digits: Vec<u64>,
    position: u64,
    clamps: u64,
}

impl RnqDnqDigits {
    pub fn new(schedule: Schedule, ud: UdKind) -> Self {
        let ladder = Arc::new(Ladder::with_scan_bound(schedule.donor().clone(), schedule.scan_bound()));
        Self {
            donor: XqDigits::from_ladder(ladder),
            ud: UdStream::new(ud),
            schedule,
            donor_digits: Vec::new(),
            position: 0,
            clamps: 0,
        }
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn schedule_mut(&mut self) -> &mut Schedule {
        &mut self.schedule
    }

    /// Positions where a digit had to be clamped to `q_n - 1`.
    pub fn clamp_events(&self) -> u64 {
        self.clamps
    }

    fn donor_digit(&mut self, m: u64) -> Result<u64> {
        while (self.donor_digits.len() as u64) < m {
            let d = self.donor.next_digit()?;
            self.donor_digits.push(d);
        }
        Ok(self.donor_digits[(m - 1) as usize])
    }
}

impl DigitSource for RnqDnqDigits {
    fn basis(&self) -> &BasicSequence {
        self.schedule.target()
    }

    fn next_digit(&mut self) -> Result<u64> {
        let n = self.position + 1;
        let q = self.schedule.target().base(n);
        // the driver is indexed by position, so it advances on S as well
        let x = self.ud.next().expect("unbounded");
        let raw = match self.schedule.segment_offset(n)? {
            Some(offset) => self.donor_digit(offset)?,
            None => {
                let i = self.schedule.index_at(n)?;
                let floor_part = x.scaled_floor(q);
                let log_part = if i == 0 { 0 } else { self.schedule.log_base().ceil_log(i) };
                floor_part.max(log_part)
            }
        };
        let digit = if raw >= q {
            self.clamps += 1;
            log::warn!("digit {raw} at position {n} clamped to {} (q_n = {q})", q - 1);
            q - 1
        } else {
            raw
        };
        self.position = n;
        Ok(digit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Preset;

    fn log_schedule() -> Schedule {
        Schedule::new(BasicSequence::preset(Preset::Log), ModDiv::Auto, LogBase::Natural).unwrap()
    }

    #[test]
    fn refuses_bounded_targets() {
        let err = Schedule::new(BasicSequence::constant(2).unwrap(), ModDiv::Auto, LogBase::Natural).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
    }

    #[test]
    fn nu_over_constant_two() {
        let q = BasicSequence::constant(2).unwrap();
        // n = 1 from L_0 = 0: 2 < 2^j first at j = 2
        assert!(!nu_predicate(&q, 1, 0, 1));
        assert!(nu_predicate(&q, 1, 0, 2));
        // n = 2: 2^4 < 2^(j - L_1) first at j = L_1 + 5
        let l1 = 37;
        assert!(!nu_predicate(&q, 2, l1, l1 + 4));
        assert!(nu_predicate(&q, 2, l1, l1 + 5));
    }

    #[test]
    fn log_preset_levels() {
        let mut s = log_schedule();
        let l1 = s.level(1).unwrap().clone();
        assert_eq!(l1.mod_div, Bound::At(4));
        assert_eq!(l1.nu, Some(Bound::At(2)));
        assert_eq!(l1.upsilon, Some(vec![Bound::At(2)]));
        assert_eq!(l1.start, Bound::At(4));
        assert_eq!(s.nu(2).unwrap(), 9);
        assert_eq!(s.start(2).unwrap(), Bound::At(252));
        // log q_j > 3 needs q_j >= 21, i.e. j + 4 >= 2^21
        assert_eq!(s.start(3).unwrap(), Bound::At(2_097_148));
        assert_eq!(s.start(4).unwrap(), Bound::Beyond);
        assert!(s.start(5).is_err());
    }

    #[test]
    fn upsilon_examples() {
        let mut s = log_schedule();
        assert_eq!(s.upsilon(1, 1).unwrap(), 2);
        assert!(!s.upsilon_holds(1, 1, 1).unwrap());
        assert!(s.upsilon_holds(1, 1, 2).unwrap());
        assert!(s.upsilon(1, 2).is_err());
        assert!(s.nu_holds(2, 9).unwrap());
        assert!(!s.nu_holds(2, 8).unwrap());
    }

    #[test]
    fn mod_div_tables() {
        let q = BasicSequence::preset(Preset::Log);
        let mut s = Schedule::new(q.clone(), "table:4,252".parse().unwrap(), LogBase::Natural).unwrap();
        assert_eq!(s.start(2).unwrap(), Bound::At(252));
        assert!(matches!(s.level(3), Err(Error::ModulusMismatch(_))));

        let bad = Schedule::new(q, "table:3".parse().unwrap(), LogBase::Natural).unwrap();
        assert!(matches!(bad.mod_div(1), Err(Error::ModulusMismatch(_))));
        assert!("table:0".parse::<ModDiv>().is_err());
        assert_eq!("table:4,252".parse::<ModDiv>().unwrap().to_string(), "table:4,252");
    }

    #[test]
    fn index_and_segments() {
        let mut s = log_schedule();
        assert_eq!(s.index_at(3).unwrap(), 0);
        assert_eq!(s.index_at(4).unwrap(), 1);
        assert_eq!(s.index_at(252).unwrap(), 2);
        assert_eq!(s.segment_offset(4).unwrap(), Some(1));
        assert_eq!(s.segment_offset(5).unwrap(), None);
        assert_eq!(s.segment_offset(253).unwrap(), Some(2));
        assert_eq!(s.segment_offset(254).unwrap(), None);
        assert_eq!(s.s_count(100).unwrap(), 1);
        assert_eq!(s.s_count(1000).unwrap(), 3);
    }

    #[test]
    fn digits_respect_bases_and_segments() {
        let q = BasicSequence::preset(Preset::Log);
        let mut src = RnqDnqDigits::new(log_schedule(), UdKind::VanDerCorput);
        let digits = src.take_digits(2000).unwrap();
        assert_eq!(src.clamp_events(), 0);
        for (i, &d) in digits.iter().enumerate() {
            assert!(d < q.base(i as u64 + 1));
        }
        // donor x_P over p_i = floor(ln i) + 2 starts 0, 1
        assert_eq!(digits[3], 0);
        assert_eq!(&digits[251..253], &[0, 1]);
    }
}
