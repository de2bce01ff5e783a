//! Block statistics: admissibility `I_i(B)`, expected counts `Q_n(B)`,
//! observed counts `N_n^Q(B, x)`, their window-restricted variants, and
//! normality reports.
//!
//! An occurrence is counted at `n` when its start index is `<= n`, even if
//! it runs past `n`; digit buffers must therefore reach `n + |B| - 1`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::block::DigitBlock;
use crate::construction::Ladder;
use crate::error::{Error, Result};
use crate::numeric::{rational_to_f64, serde_rational};
use crate::sequence::BasicSequence;

/// `I_i(B)`: whether `B_j < q_{i+j-1}` for every `j`.
pub fn admissible(seq: &BasicSequence, block: &DigitBlock, i: u64) -> bool {
    assert!(i >= 1, "positions are 1-based");
    block.digits().iter().zip(i..).all(|(&d, p)| d < seq.base(p))
}

/// Product `q_i ... q_{i+k-1}` when `B` is admissible at `i`.
fn admissible_weight(seq: &BasicSequence, block: &DigitBlock, i: u64) -> Option<Denominator> {
    let mut acc = Denominator::Small(1);
    for (&d, p) in block.digits().iter().zip(i..) {
        let q = seq.base(p);
        if d >= q {
            return None;
        }
        acc = acc.times(q);
    }
    Some(acc)
}

/// `I_i(B) / (q_i ... q_{i+k-1})` as a rational, `None` when inadmissible.
pub(crate) fn weight(seq: &BasicSequence, block: &DigitBlock, i: u64) -> Option<BigRational> {
    admissible_weight(seq, block, i).map(|d| match d {
        Denominator::Small(v) => BigRational::new(BigInt::from(1), BigInt::from(v)),
        Denominator::Big(v) => BigRational::new(BigInt::from(1), v),
    })
}

#[derive(Debug, Clone)]
enum Denominator {
    Small(u128),
    Big(BigInt),
}

impl Denominator {
    fn times(self, q: u64) -> Self {
        match self {
            Self::Small(v) => match v.checked_mul(u128::from(q)) {
                Some(p) => Self::Small(p),
                None => Self::Big(BigInt::from(v) * q),
            },
            Self::Big(v) => Self::Big(v * q),
        }
    }
}

/// Exact sum of unit fractions, grouped by denominator so that gcd work is
/// paid once per distinct denominator rather than once per term.
#[derive(Debug, Default, Clone)]
pub(crate) struct UnitFractionSum {
    small: HashMap<u128, u64>,
    big: BigRational,
}

impl UnitFractionSum {
    fn add(&mut self, den: Denominator) {
        match den {
            Denominator::Small(d) => *self.small.entry(d).or_insert(0) += 1,
            Denominator::Big(d) => self.big += BigRational::new(BigInt::from(1), d),
        }
    }

    pub(crate) fn value(&self) -> BigRational {
        let mut total = self.big.clone();
        let mut dens: Vec<_> = self.small.iter().collect();
        dens.sort_unstable();
        for (&d, &c) in dens {
            total += BigRational::new(BigInt::from(c), BigInt::from(d));
        }
        total
    }
}

/// `Q_n(B) = sum_{i <= n} I_i(B) / (q_i ... q_{i+k-1})`, exactly.
pub fn expected_count(seq: &BasicSequence, block: &DigitBlock, n: u64) -> BigRational {
    let mut sum = UnitFractionSum::default();
    for i in 1..=n {
        if let Some(den) = admissible_weight(seq, block, i) {
            sum.add(den);
        }
    }
    sum.value()
}

/// `Q_n(B)` at each of an increasing list of checkpoints, in one pass.
pub fn expected_counts(seq: &BasicSequence, block: &DigitBlock, checkpoints: &[u64]) -> Result<Vec<BigRational>> {
    check_increasing(checkpoints)?;
    let mut sum = UnitFractionSum::default();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut i = 1;
    for &n in checkpoints {
        while i <= n {
            if let Some(den) = admissible_weight(seq, block, i) {
                sum.add(den);
            }
            i += 1;
        }
        out.push(sum.value());
    }
    Ok(out)
}

fn check_increasing(checkpoints: &[u64]) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("checkpoints must be strictly increasing"));
    }
    Ok(())
}

fn require_digits(digits: &[u64], n: u64, k: usize) -> Result<()> {
    let needed = n + k as u64 - 1;
    if (digits.len() as u64) < needed {
        return Err(Error::InsufficientDigits { needed, available: digits.len() as u64 });
    }
    Ok(())
}

/// `N_n^Q(B, x)`: occurrences of `B` starting at some `i <= n`.
///
/// `digits[0]` is `E_1`.
pub fn count_block(digits: &[u64], block: &DigitBlock, n: u64) -> Result<u64> {
    let k = block.len();
    if n == 0 {
        return Ok(0);
    }
    require_digits(digits, n, k)?;
    let pattern = block.digits();
    Ok(digits[..(n as usize + k - 1)].windows(k).filter(|w| *w == pattern).count() as u64)
}

/// Counts for many blocks at many checkpoints: `result[b][c]`.
pub fn count_blocks(digits: &[u64], blocks: &[DigitBlock], checkpoints: &[u64]) -> Result<Vec<Vec<u64>>> {
    check_increasing(checkpoints)?;
    let mut out = vec![Vec::with_capacity(checkpoints.len()); blocks.len()];
    let Some(&last) = checkpoints.last() else {
        return Ok(out);
    };
    let mut by_len: HashMap<usize, HashMap<&[u64], Vec<usize>>> = HashMap::new();
    for (idx, b) in blocks.iter().enumerate() {
        require_digits(digits, last, b.len())?;
        by_len.entry(b.len()).or_default().entry(b.digits()).or_default().push(idx);
    }
    for (k, table) in by_len {
        let mut counts = vec![0u64; blocks.len()];
        let mut start = 0usize;
        for &n in checkpoints {
            while (start as u64) < n {
                if let Some(ids) = table.get(&digits[start..start + k]) {
                    for &id in ids {
                        counts[id] += 1;
                    }
                }
                start += 1;
            }
            for ids in table.values() {
                for &id in ids {
                    out[id].push(counts[id]);
                }
            }
        }
    }
    Ok(out)
}

/// `Q_n*(B)` and `N_n^{Q*}(B, x)`: only start positions `i` whose span
/// `i ..= i+k-1` sits inside a single window `R_{j,r}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarredCounts {
    #[serde(with = "serde_rational")]
    pub expected: BigRational,
    pub observed: u64,
    /// Start positions `<= n` whose span crosses a window boundary.
    pub straddling: u64,
}

pub fn starred_variants(ladder: &Ladder, digits: &[u64], block: &DigitBlock, n: u64) -> Result<StarredCounts> {
    let k = block.len() as u64;
    require_digits(digits, n, block.len())?;
    let seq = ladder.sequence();
    let pattern = block.digits();
    let mut sum = UnitFractionSum::default();
    let mut observed = 0;
    let mut straddling = 0;
    let mut r = 1;
    let mut i = 1;
    while i <= n {
        let region = ladder.boundary(r)?;
        let end = ladder.boundary(r + 1)?;
        while i <= end.min(n) {
            let offset = (i - region - 1) % r + 1;
            if offset + k - 1 <= r {
                if let Some(den) = admissible_weight(seq, block, i) {
                    sum.add(den);
                }
                let s = (i - 1) as usize;
                if &digits[s..s + block.len()] == pattern {
                    observed += 1;
                }
            } else {
                straddling += 1;
            }
            i += 1;
        }
        r += 1;
    }
    Ok(StarredCounts { expected: sum.value(), observed, straddling })
}

/// Observed against expected count of one block at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointCount {
    pub n: u64,
    pub observed: u64,
    #[serde(with = "serde_rational")]
    pub expected: BigRational,
    /// `N_n / Q_n`, undefined when `Q_n(B) = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCountReport {
    pub block: DigitBlock,
    pub rows: Vec<CheckpointCount>,
    /// Whether `Q_n(B)` grew between every pair of consecutive checkpoints.
    /// Divergence of `Q_n(B)` cannot be decided from finite data; this is the
    /// measured growth only.
    pub expected_growing: bool,
}

/// `N_n(B_1) / N_n(B_2)` for two blocks of equal length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub first: DigitBlock,
    pub second: DigitBlock,
    pub n: u64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub blocks: Vec<BlockCountReport>,
    pub ratios: Vec<RatioRow>,
}

impl ConvergenceReport {
    pub fn block(&self, block: &DigitBlock) -> Option<&BlockCountReport> {
        self.blocks.iter().find(|b| &b.block == block)
    }
}

fn ratio_of(num: &BigRational, den: &BigRational) -> Option<f64> {
    if den.is_zero() {
        None
    } else {
        Some(rational_to_f64(&(num / den)))
    }
}

/// Measured `N_n/Q_n` per block and checkpoint, plus `N_n(B_1)/N_n(B_2)` for
/// every pair of listed blocks with equal length.
pub fn normality_report(
    seq: &BasicSequence,
    digits: &[u64],
    blocks: &[DigitBlock],
    checkpoints: &[u64],
) -> Result<ConvergenceReport> {
    let counts = count_blocks(digits, blocks, checkpoints)?;
    let expected: Vec<Vec<BigRational>> =
        blocks.par_iter().map(|b| expected_counts(seq, b, checkpoints)).collect::<Result<_>>()?;

    let reports = blocks
        .iter()
        .zip(counts.iter().zip(&expected))
        .map(|(b, (obs, exp))| {
            let rows = checkpoints
                .iter()
                .zip(obs.iter().zip(exp))
                .map(|(&n, (&o, e))| CheckpointCount {
                    n,
                    observed: o,
                    expected: e.clone(),
                    ratio: ratio_of(&BigRational::from_integer(o.into()), e),
                })
                .collect();
            BlockCountReport { block: b.clone(), rows, expected_growing: exp.windows(2).all(|w| w[1] > w[0]) }
        })
        .collect();

    let mut ratios = Vec::new();
    for a in 0..blocks.len() {
        for b in a + 1..blocks.len() {
            if blocks[a].len() != blocks[b].len() {
                continue;
            }
            for (c, &n) in checkpoints.iter().enumerate() {
                let (x, y) = (counts[a][c], counts[b][c]);
                ratios.push(RatioRow {
                    first: blocks[a].clone(),
                    second: blocks[b].clone(),
                    n,
                    ratio: (y != 0).then(|| x as f64 / y as f64),
                });
            }
        }
    }
    Ok(ConvergenceReport { blocks: reports, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::xq_digits;

    fn blk(v: &[u64]) -> DigitBlock {
        DigitBlock::new(v.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn two() -> BasicSequence {
        BasicSequence::constant(2).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        assert!(admissible(&two(), &blk(&[1]), 5));
        assert!(!admissible(&two(), &blk(&[2]), 1));
        let alt = BasicSequence::periodic(vec![2, 3]).unwrap();
        assert!(admissible(&alt, &blk(&[1, 2]), 1));
        assert!(!admissible(&alt, &blk(&[1, 2]), 2));
    }

    #[test]
    fn expected_examples() {
        assert_eq!(expected_count(&two(), &blk(&[0]), 4), rat(2, 1));
        assert_eq!(expected_count(&two(), &blk(&[0, 1]), 2), rat(1, 2));
        let alt = BasicSequence::periodic(vec![2, 3]).unwrap();
        // positional scan: only q_2 = q_4 = 3 admit the digit 2
        let oracle: BigRational = (1..=4u64).filter(|&i| alt.base(i) > 2).map(|i| rat(1, alt.base(i) as i64)).sum();
        assert_eq!(oracle, rat(2, 3));
        assert_eq!(expected_count(&alt, &blk(&[2]), 4), oracle);
    }

    #[test]
    fn expected_counts_match_single_evaluations() {
        let seq = BasicSequence::periodic(vec![2, 3, 5]).unwrap();
        let b = blk(&[1, 0]);
        let cps = [1, 7, 30, 31];
        let all = expected_counts(&seq, &b, &cps).unwrap();
        for (n, v) in cps.iter().zip(all) {
            assert_eq!(v, expected_count(&seq, &b, *n));
        }
        assert!(expected_counts(&seq, &b, &[5, 5]).is_err());
    }

    #[test]
    fn count_examples() {
        let d = [0, 1, 0, 1, 0, 1];
        assert_eq!(count_block(&d, &blk(&[0, 1]), 4).unwrap(), 2);
        assert_eq!(count_block(&d[..4], &blk(&[1, 1]), 3).unwrap(), 0);
        assert!(DigitBlock::new(vec![]).is_err());
        assert_eq!(count_block(&d, &blk(&[0, 1]), 6), Err(Error::InsufficientDigits { needed: 7, available: 6 }));
    }

    #[test]
    fn count_blocks_matches_count_block() {
        let d = xq_digits(&two(), 2000).unwrap();
        let blocks = vec![blk(&[0]), blk(&[1]), blk(&[0, 1]), blk(&[1, 1, 0]), blk(&[0, 1])];
        let cps = [10, 100, 1500];
        let all = count_blocks(&d, &blocks, &cps).unwrap();
        for (b, row) in blocks.iter().zip(&all) {
            for (&n, &c) in cps.iter().zip(row) {
                assert_eq!(c, count_block(&d, b, n).unwrap());
            }
        }
    }

    #[test]
    fn starred_examples() {
        let d = xq_digits(&two(), 200).unwrap();
        let ladder = Ladder::new(two());
        let s = starred_variants(&ladder, &d, &blk(&[0]), 24).unwrap();
        assert_eq!((s.expected.clone(), s.observed), (rat(12, 1), 12));
        let s = starred_variants(&ladder, &d, &blk(&[0, 1]), 24).unwrap();
        assert_eq!((s.expected.clone(), s.observed), (rat(0, 1), 0));
        let s = starred_variants(&ladder, &d, &blk(&[0, 1]), 124).unwrap();
        assert_eq!(s.expected, rat(50, 4));
        // brute force over the 50 windows of length 2 at positions 25..=124
        let by_windows = (0..50).filter(|j| d[24 + 2 * j] == 0 && d[25 + 2 * j] == 1).count() as u64;
        assert_eq!(s.observed, by_windows);
        assert_eq!(s.straddling, 24 + 50);
    }

    #[test]
    fn starred_bounds() {
        let d = xq_digits(&two(), 5000).unwrap();
        let ladder = Ladder::new(two());
        for b in [blk(&[0]), blk(&[1, 0]), blk(&[1, 1, 1])] {
            for n in [30, 700, 4000] {
                let s = starred_variants(&ladder, &d, &b, n).unwrap();
                let full = expected_count(&two(), &b, n);
                assert!(s.expected <= full);
                assert!(s.observed <= count_block(&d, &b, n).unwrap());
                let gap_bound = rat(s.straddling as i64, 1 << b.len());
                assert!(&full - &s.expected <= gap_bound);
            }
        }
    }

    #[test]
    fn report_examples() {
        let d = xq_digits(&two(), 100).unwrap();
        let r = normality_report(&two(), &d, &[blk(&[0]), blk(&[1])], &[24]).unwrap();
        for b in &r.blocks {
            assert_eq!(b.rows[0].ratio, Some(1.0));
        }
        assert_eq!(r.ratios.len(), 1);
        assert_eq!(r.ratios[0].ratio, Some(1.0));

        let zeros = vec![0u64; 100];
        let r = normality_report(&two(), &zeros, &[blk(&[1])], &[100]).unwrap();
        assert_eq!(r.blocks[0].rows[0].ratio, Some(0.0));

        let r = normality_report(&two(), &zeros, &[blk(&[5])], &[50]).unwrap();
        assert_eq!(r.blocks[0].rows[0].ratio, None);
    }

    #[test]
    fn report_at_larger_scale() {
        let d = xq_digits(&two(), 100_001).unwrap();
        let r = normality_report(&two(), &d, &[blk(&[0])], &[100_000]).unwrap();
        let ratio = r.blocks[0].rows[0].ratio.unwrap();
        assert!((0.98..=1.02).contains(&ratio), "{ratio}");
        assert!(r.blocks[0].expected_growing);
    }
}
