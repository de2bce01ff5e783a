//! The explicit normal number `x_Q`.
//!
//! Positions `N_r + 1 ..= N_{r+1}` are cut into consecutive windows of `r`
//! bases. Every time a window with bases `R` recurs, the digits written under
//! it advance to the next block `B < R` in lexicographic order, cycling after
//! `R_1 * ... * R_r` occurrences.
//!
//! Two independent routes produce the digits: [`XqDigits`] streams them with
//! occurrence counters, [`digit_at`] recomputes a single digit from scratch by
//! rescanning its region.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::block::DigitBlock;
use crate::digits::DigitSource;
use crate::error::{Error, Result};
use crate::sequence::BasicSequence;

pub const DEFAULT_SCAN_BOUND: u64 = 1_000_000_000;
pub const DEFAULT_COUNTER_LIMIT: usize = 10_000_000;

/// Cached ladder `n_r`, `N_r` for one basic sequence.
///
/// `n_r` is the smallest `n` with `(q(n)^2 + 1)^r <= n`; `N_1 = 0` and
/// `N_{r+1}` is the largest integer below `n_{r+1}` with `r | N_{r+1} - N_r`.
#[derive(Debug)]
pub struct Ladder {
    seq: BasicSequence,
    scan_bound: u64,
    rungs: RwLock<Rungs>,
}

#[derive(Debug, Default)]
struct Rungs {
    /// `thresholds[r - 1] = n_r`
    thresholds: Vec<u64>,
    /// `boundaries[r - 1] = N_r`
    boundaries: Vec<u64>,
}

/// `(c^2 + 1)^r`, or `None` past `u64::MAX`.
fn threshold_value(c: u64, r: u64) -> Option<u64> {
    let base = c.checked_mul(c)?.checked_add(1)?;
    base.checked_pow(u32::try_from(r).ok()?)
}

/// Smallest `n >= start` with `(q(n)^2 + 1)^r <= n`.
///
/// Jumps straight to the threshold value: if `T = (q(n)^2+1)^r > n` then no
/// `m` in `[n, T)` qualifies, because `q(m) >= q(n)` makes its own threshold
/// at least `T > m`.
fn scan_threshold(seq: &BasicSequence, r: u64, start: u64, bound: u64) -> Result<u64> {
    let mut n = start.max(1);
    loop {
        if n > bound {
            return Err(Error::ThresholdNotFound { r, bound });
        }
        match threshold_value(seq.max_upto(n), r) {
            Some(t) if t <= n => return Ok(n),
            Some(t) => n = t,
            None => return Err(Error::ThresholdNotFound { r, bound }),
        }
    }
}

impl Ladder {
    pub fn new(seq: BasicSequence) -> Self {
        Self::with_scan_bound(seq, DEFAULT_SCAN_BOUND)
    }

    pub fn with_scan_bound(seq: BasicSequence, scan_bound: u64) -> Self {
        Self { seq, scan_bound, rungs: RwLock::new(Rungs::default()) }
    }

    pub fn sequence(&self) -> &BasicSequence {
        &self.seq
    }

    pub fn scan_bound(&self) -> u64 {
        self.scan_bound
    }

    /// `n_r`.
    pub fn threshold(&self, r: u64) -> Result<u64> {
        if r == 0 {
            return Err(Error::arg("block length r must be >= 1"));
        }
        if let Some(&t) = self.rungs.read().unwrap().thresholds.get(r as usize - 1) {
            return Ok(t);
        }
        let mut rungs = self.rungs.write().unwrap();
        while (rungs.thresholds.len() as u64) < r {
            let next = rungs.thresholds.len() as u64 + 1;
            // n_{r+1} >= n_r: any n good for r+1 is good for r.
            let start = rungs.thresholds.last().copied().unwrap_or(1);
            let t = scan_threshold(&self.seq, next, start, self.scan_bound)?;
            rungs.thresholds.push(t);
        }
        Ok(rungs.thresholds[r as usize - 1])
    }

    /// `N_r`.
    pub fn boundary(&self, r: u64) -> Result<u64> {
        if r == 0 {
            return Err(Error::arg("block length r must be >= 1"));
        }
        if let Some(&b) = self.rungs.read().unwrap().boundaries.get(r as usize - 1) {
            return Ok(b);
        }
        // Thresholds first, so the write lock below never nests.
        self.threshold(r)?;
        let mut rungs = self.rungs.write().unwrap();
        if rungs.boundaries.is_empty() {
            rungs.boundaries.push(0);
        }
        while (rungs.boundaries.len() as u64) < r {
            let prev_r = rungs.boundaries.len() as u64;
            let prev = rungs.boundaries[prev_r as usize - 1];
            let below = rungs.thresholds[prev_r as usize] - 1;
            // n_{r+1} > N_r always holds, so `below >= prev`.
            rungs.boundaries.push(below - (below - prev) % prev_r);
        }
        Ok(rungs.boundaries[r as usize - 1])
    }

    /// The block length `r(n)`: the unique `r` with `N_r < n <= N_{r+1}`.
    pub fn block_len_at(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        {
            let rungs = self.rungs.read().unwrap();
            let b = &rungs.boundaries;
            if b.last().is_some_and(|&last| last >= n) {
                let idx = b.partition_point(|&v| v < n);
                return Ok(idx as u64);
            }
        }
        let mut r = 1;
        loop {
            if self.boundary(r + 1)? >= n {
                return Ok(r);
            }
            r += 1;
        }
    }

    /// The window `R_{j,r}` containing position `n`, with `n`'s 1-based offset
    /// inside it.
    pub fn window_at(&self, n: u64) -> Result<(BaseWindow, u64)> {
        let r = self.block_len_at(n)?;
        let region = self.boundary(r)?;
        let j = (n - region - 1) / r;
        let offset = (n - region - 1) % r + 1;
        Ok((self.window(r, j)?, offset))
    }

    /// `R_{j,r}`; fails if `j` is past the end of region `r`.
    pub fn window(&self, r: u64, j: u64) -> Result<BaseWindow> {
        let region = self.boundary(r)?;
        let end = self.boundary(r + 1)?;
        let start = region + j * r + 1;
        if start + r - 1 > end {
            return Err(Error::arg(format!("window j={j} is past the end of region r={r}")));
        }
        Ok(BaseWindow { r, j, start, bases: self.seq.bases(start, r as usize) })
    }

    /// Number of windows `(N_{r+1} - N_r) / r` in region `r`.
    pub fn windows_in_region(&self, r: u64) -> Result<u64> {
        Ok((self.boundary(r + 1)? - self.boundary(r)?) / r)
    }
}

/// A window `R_{j,r}` of `r` consecutive bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseWindow {
    pub r: u64,
    pub j: u64,
    /// Position of the first base, `N_r + j r + 1`.
    pub start: u64,
    pub bases: Vec<u64>,
}

impl BaseWindow {
    pub fn end(&self) -> u64 {
        self.start + self.r - 1
    }

    /// `R_1 * ... * R_r`, or `None` when it does not fit in 128 bits.
    pub fn product(&self) -> Option<u128> {
        product(&self.bases)
    }

    /// `R_i * ... * R_{i+k-1}` (1-based `i`).
    pub fn sub_product(&self, i: usize, k: usize) -> Option<u128> {
        product(self.bases.get(i - 1..i - 1 + k)?)
    }
}

pub(crate) fn product(values: &[u64]) -> Option<u128> {
    values.iter().try_fold(1u128, |acc, &v| acc.checked_mul(u128::from(v)))
}

fn check_radices(radices: &[u64]) -> Result<()> {
    if radices.is_empty() {
        return Err(Error::arg("radix block must be non-empty"));
    }
    if radices.contains(&0) {
        return Err(Error::arg("radices must be positive"));
    }
    Ok(())
}

/// Writes the mixed-radix expansion of `index` (most significant first).
fn expand_into(radices: &[u64], mut index: u128, out: &mut Vec<u64>) {
    out.clear();
    out.resize(radices.len(), 0);
    for (slot, &radix) in out.iter_mut().zip(radices).rev() {
        let radix = u128::from(radix);
        *slot = (index % radix) as u64;
        index /= radix;
    }
}

/// The `ordinal`-th block `B_i(R)` in lexicographic order among all blocks
/// `B < R` (1-based, so `B_1 = [0, ..., 0]`).
pub fn block_from_index(radices: &[u64], ordinal: u128) -> Result<DigitBlock> {
    check_radices(radices)?;
    let in_range = ordinal >= 1 && product(radices).is_none_or(|p| ordinal <= p);
    if !in_range {
        return Err(Error::arg(format!(
            "block ordinal {ordinal} outside 1..={}",
            product(radices).map_or("2^128+".into(), |p| p.to_string())
        )));
    }
    let mut out = Vec::new();
    expand_into(radices, ordinal - 1, &mut out);
    DigitBlock::new(out)
}

/// Inverse of [`block_from_index`].
pub fn index_from_block(radices: &[u64], block: &DigitBlock) -> Result<u128> {
    check_radices(radices)?;
    if !block.is_below(radices) {
        return Err(Error::arg(format!("block {block} is not below the bases {radices:?}")));
    }
    let value = block
        .digits()
        .iter()
        .zip(radices)
        .try_fold(0u128, |acc, (&d, &r)| acc.checked_mul(u128::from(r))?.checked_add(u128::from(d)))
        .ok_or_else(|| Error::arg("block ordinal does not fit in 128 bits"))?;
    Ok(value + 1)
}

/// 0-based lexicographic index of the block written under the
/// `occurrence`-th (1-based) copy of a window with the given product.
fn cyclic_index(occurrence: u64, product: Option<u128>) -> u128 {
    let i = u128::from(occurrence - 1);
    match product {
        Some(p) => i % p,
        None => i,
    }
}

/// Per-window-shape occurrence counts `J_{R,n}` for the current block length.
///
/// Windows of length `r` only occur inside region `r`, so counts for earlier
/// lengths are dropped when the stream moves on.
#[derive(Debug, Clone)]
pub struct OccurrenceCounters {
    r: u64,
    counts: HashMap<Box<[u64]>, u64>,
    limit: usize,
}

impl OccurrenceCounters {
    fn new(limit: usize) -> Self {
        Self { r: 1, counts: HashMap::new(), limit }
    }

    fn reset(&mut self, r: u64) {
        self.r = r;
        self.counts.clear();
    }

    fn bump(&mut self, bases: &[u64]) -> Result<u64> {
        if let Some(c) = self.counts.get_mut(bases) {
            *c += 1;
            return Ok(*c);
        }
        if self.counts.len() >= self.limit {
            return Err(Error::CounterSpill { r: self.r, limit: self.limit });
        }
        self.counts.insert(bases.into(), 1);
        Ok(1)
    }

    /// Block length of the windows currently counted.
    pub fn block_len(&self) -> u64 {
        self.r
    }

    /// Completed windows with exactly these bases seen so far.
    pub fn count(&self, bases: &[u64]) -> u64 {
        self.counts.get(bases).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

/// Streaming generator for the digits of `x_Q`.
#[derive(Debug)]
pub struct XqDigits {
    ladder: Arc<Ladder>,
    emitted: u64,
    r: u64,
    region_end: Option<u64>,
    pending: Vec<u64>,
    next: usize,
    counters: OccurrenceCounters,
}

impl XqDigits {
    pub fn new(seq: BasicSequence) -> Self {
        Self::from_ladder(Arc::new(Ladder::new(seq)))
    }

    pub fn from_ladder(ladder: Arc<Ladder>) -> Self {
        Self::with_counter_limit(ladder, DEFAULT_COUNTER_LIMIT)
    }

    pub fn with_counter_limit(ladder: Arc<Ladder>, limit: usize) -> Self {
        Self {
            ladder,
            emitted: 0,
            r: 1,
            region_end: None,
            pending: Vec::new(),
            next: 0,
            counters: OccurrenceCounters::new(limit),
        }
    }

    pub fn ladder(&self) -> &Arc<Ladder> {
        &self.ladder
    }

    /// Number of digits produced so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn counters(&self) -> &OccurrenceCounters {
        &self.counters
    }

    fn open_window(&mut self) -> Result<()> {
        loop {
            let end = match self.region_end {
                Some(e) => e,
                None => {
                    let e = self.ladder.boundary(self.r + 1)?;
                    self.region_end = Some(e);
                    e
                }
            };
            if self.emitted < end {
                break;
            }
            // Region exhausted (possibly empty): move to the next block length.
            self.r += 1;
            self.region_end = None;
            self.counters.reset(self.r);
        }
        let bases = self.ladder.sequence().bases(self.emitted + 1, self.r as usize);
        let occurrence = self.counters.bump(&bases)?;
        let index = cyclic_index(occurrence, product(&bases));
        expand_into(&bases, index, &mut self.pending);
        self.next = 0;
        Ok(())
    }
}

impl DigitSource for XqDigits {
    fn basis(&self) -> &BasicSequence {
        self.ladder.sequence()
    }

    fn next_digit(&mut self) -> Result<u64> {
        if self.next >= self.pending.len() {
            self.open_window()?;
        }
        let d = self.pending[self.next];
        self.next += 1;
        self.emitted += 1;
        Ok(d)
    }
}

/// First `count` digits of `x_Q`.
pub fn xq_digits(seq: &BasicSequence, count: usize) -> Result<Vec<u64>> {
    XqDigits::new(seq.clone()).take_digits(count)
}

/// The digit `E_n` of `x_Q`, computed without streaming state.
///
/// Counts earlier windows of the same shape by rescanning the region, so each
/// call is O(n). Intended as an independent check on [`XqDigits`], not for
/// bulk generation.
pub fn digit_at(ladder: &Ladder, n: u64) -> Result<u64> {
    let (window, offset) = ladder.window_at(n)?;
    let seq = ladder.sequence();
    let r = window.r;
    let region = window.start - window.j * r - 1;
    let earlier = (0..window.j)
        .filter(|&jj| {
            let s = region + jj * r + 1;
            window.bases.iter().enumerate().all(|(t, &b)| seq.base(s + t as u64) == b)
        })
        .count() as u64;
    let index = cyclic_index(earlier + 1, window.product());
    let mut digits = Vec::new();
    expand_into(&window.bases, index, &mut digits);
    Ok(digits[offset as usize - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Preset;

    fn two() -> BasicSequence {
        BasicSequence::constant(2).unwrap()
    }

    #[test]
    fn thresholds() {
        let l = Ladder::new(two());
        assert_eq!(l.threshold(1).unwrap(), 5);
        assert_eq!(l.threshold(3).unwrap(), 125);
        let alt = Ladder::new(BasicSequence::periodic(vec![2, 3]).unwrap());
        assert_eq!(alt.threshold(1).unwrap(), 10);
        assert_eq!(alt.threshold(2).unwrap(), 100);
        assert!(l.threshold(0).is_err());
    }

    #[test]
    fn threshold_scan_bound() {
        let l = Ladder::with_scan_bound(two(), 1000);
        assert_eq!(l.threshold(4).unwrap(), 625);
        assert_eq!(l.threshold(5), Err(Error::ThresholdNotFound { r: 5, bound: 1000 }));
    }

    #[test]
    fn boundaries() {
        let l = Ladder::new(two());
        assert_eq!(l.boundary(1).unwrap(), 0);
        assert_eq!(l.boundary(2).unwrap(), 24);
        assert_eq!(l.boundary(3).unwrap(), 124);
        assert_eq!(l.boundary(4).unwrap(), 622);
    }

    #[test]
    fn block_lengths() {
        let l = Ladder::new(two());
        assert_eq!(l.block_len_at(1).unwrap(), 1);
        assert_eq!(l.block_len_at(24).unwrap(), 1);
        assert_eq!(l.block_len_at(25).unwrap(), 2);
        assert_eq!(l.block_len_at(30).unwrap(), 2);
        assert_eq!(l.block_len_at(200).unwrap(), 3);
        assert_eq!(l.block_len_at(0), Err(Error::ZeroIndex));
        // answered from the cache after the ladder has grown
        assert_eq!(l.block_len_at(124).unwrap(), 2);
        assert_eq!(l.block_len_at(125).unwrap(), 3);
    }

    #[test]
    fn windows() {
        let l = Ladder::new(two());
        let (w, off) = l.window_at(25).unwrap();
        assert_eq!((w.r, w.j, w.start, w.bases.clone(), off), (2, 0, 25, vec![2, 2], 1));
        let (w2, off) = l.window_at(26).unwrap();
        assert_eq!((w2, off), (w, 2));
        let (w, off) = l.window_at(3).unwrap();
        assert_eq!((w.r, w.j, w.bases.clone(), off), (1, 2, vec![2], 1));
        assert_eq!(l.windows_in_region(2).unwrap(), 50);
        assert!(l.window(2, 50).is_err());
        let w = l.window(3, 0).unwrap();
        assert_eq!(w.product(), Some(8));
        assert_eq!(w.sub_product(2, 2), Some(4));
    }

    #[test]
    fn mixed_radix_examples() {
        let b = |v: Vec<u64>| DigitBlock::new(v).unwrap();
        assert_eq!(block_from_index(&[2, 2], 1).unwrap(), b(vec![0, 0]));
        assert_eq!(block_from_index(&[2, 2], 2).unwrap(), b(vec![0, 1]));
        assert_eq!(block_from_index(&[2, 3], 6).unwrap(), b(vec![1, 2]));
        assert!(block_from_index(&[2, 3], 7).is_err());
        assert!(block_from_index(&[2, 3], 0).is_err());
        assert_eq!(index_from_block(&[2, 2], &b(vec![1, 1])).unwrap(), 4);
        assert_eq!(index_from_block(&[2, 3], &b(vec![0, 0])).unwrap(), 1);
        assert_eq!(index_from_block(&[3, 2], &b(vec![2, 0])).unwrap(), 5);
        assert!(index_from_block(&[3, 2], &b(vec![2, 2])).is_err());
        assert!(index_from_block(&[3, 2], &b(vec![0])).is_err());
    }

    #[test]
    fn lexicographic_order_by_enumeration() {
        // all 6 blocks below [2,3], enumerated in lexicographic order
        let mut all = Vec::new();
        for a in 0..2 {
            for b in 0..3 {
                all.push(vec![a, b]);
            }
        }
        for (i, want) in all.into_iter().enumerate() {
            assert_eq!(block_from_index(&[2, 3], i as u128 + 1).unwrap().digits(), &want[..]);
        }
    }

    #[test]
    fn stream_examples() {
        let d = xq_digits(&two(), 32).unwrap();
        assert_eq!(&d[..6], &[0, 1, 0, 1, 0, 1]);
        assert_eq!(&d[24..32], &[0, 0, 0, 1, 1, 0, 1, 1]);
        let alt = xq_digits(&BasicSequence::periodic(vec![2, 3]).unwrap(), 2).unwrap();
        assert_eq!(alt, vec![0, 0]);
    }

    #[test]
    fn oracle_examples() {
        let l = Ladder::new(two());
        assert_eq!(digit_at(&l, 4).unwrap(), 1);
        assert_eq!(digit_at(&l, 27).unwrap(), 0);
        let alt = Ladder::new(BasicSequence::periodic(vec![2, 3]).unwrap());
        assert_eq!(digit_at(&alt, 2).unwrap(), 0);
        assert_eq!(digit_at(&l, 0), Err(Error::ZeroIndex));
    }

    #[test]
    fn stream_matches_oracle_on_presets() {
        for seq in [
            two(),
            BasicSequence::periodic(vec![2, 3, 2, 5]).unwrap(),
            BasicSequence::preset(Preset::IteratedLog),
            BasicSequence::preset(Preset::Log),
        ] {
            let digits = xq_digits(&seq, 3000).unwrap();
            let ladder = Ladder::new(seq.clone());
            for n in (1..=3000u64).step_by(7) {
                assert_eq!(digit_at(&ladder, n).unwrap(), digits[n as usize - 1], "{seq} at {n}");
            }
        }
    }

    #[test]
    fn counters_track_window_occurrences() {
        let mut s = XqDigits::new(two());
        s.take_digits(24 + 10).unwrap();
        assert_eq!(s.counters().block_len(), 2);
        assert_eq!(s.counters().count(&[2, 2]), 5);
        assert_eq!(s.counters().distinct(), 1);
    }

    #[test]
    fn counter_spill() {
        // the singleton windows [2] and [3] already need two counters
        let seq = BasicSequence::log_index(crate::sequence::LogBase::Two);
        let ladder = Arc::new(Ladder::new(seq));
        let mut s = XqDigits::with_counter_limit(ladder, 1);
        let err = s.take_digits(10_000).unwrap_err();
        assert!(matches!(err, Error::CounterSpill { limit: 1, .. }));
    }
}
