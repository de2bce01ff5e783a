//! Orbits `T_{Q,m}(x) = q_m ... q_1 x (mod 1)` and discrepancy of finite
//! point sets.
//!
//! For an infinite digit stream `T_{Q,m}(x) = sum_i E_{m+i} / (q_{m+1} ...
//! q_{m+i})` is never claimed exactly: orbit points are truncations with a
//! certified error bound.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::construction::Ladder;
use crate::error::{Error, Result};
use crate::numeric::{mod1_scale, prefix_value, rational_to_f64, serde_rational, ExactRational};
use crate::sequence::BasicSequence;

/// How many digits past `m` enter a truncated orbit point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Depth {
    /// `floor(sqrt(r(m)))`, with `r(0)` taken as 1.
    #[default]
    Root,
    Fixed(u32),
}

impl FromStr for Depth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "root" {
            return Ok(Self::Root);
        }
        let d = s
            .strip_prefix("fixed:")
            .and_then(|d| d.parse::<u32>().ok())
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::arg(format!("bad depth '{s}' (expected root|fixed:d, d >= 1)")))?;
        Ok(Self::Fixed(d))
    }
}

/// `floor(sqrt(y))`.
pub fn isqrt_depth(y: u64) -> u32 {
    y.isqrt() as u32
}

/// Number of digits used for the orbit point at `m`.
pub fn truncation_depth(ladder: &Ladder, m: u64, depth: Depth) -> Result<u32> {
    match depth {
        Depth::Fixed(d) => Ok(d),
        Depth::Root => {
            let r = if m == 0 { 1 } else { ladder.block_len_at(m)? };
            Ok(isqrt_depth(r).max(1))
        }
    }
}

/// A truncated orbit point `x_m` with `|x_m - T_{Q,m}(x)| <= error_bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitPoint {
    pub index: u64,
    pub depth: u32,
    #[serde(with = "serde_rational")]
    pub value: ExactRational,
    /// `1 / (q_{m+1} ... q_{m+depth})`.
    #[serde(with = "serde_rational")]
    pub error_bound: ExactRational,
}

impl OrbitPoint {
    pub fn value_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }
}

/// `sum_{i=1}^{depth} E_{m+i} / (q_{m+1} ... q_{m+i})`.
///
/// `digits[0]` is `E_1`.
pub fn orbit_at_depth(seq: &BasicSequence, digits: &[u64], m: u64, depth: u32) -> Result<OrbitPoint> {
    let needed = m + u64::from(depth);
    if (digits.len() as u64) < needed {
        return Err(Error::InsufficientDigits { needed, available: digits.len() as u64 });
    }
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    for p in m + 1..=needed {
        let q = seq.base(p);
        num = num * q + digits[(p - 1) as usize];
        den *= q;
    }
    let den = BigInt::from(den);
    Ok(OrbitPoint {
        index: m,
        depth,
        value: BigRational::new(num.into(), den.clone()),
        error_bound: BigRational::new(BigInt::one(), den),
    })
}

/// The truncated orbit point at `m` using the ladder's block length for the
/// default depth.
pub fn orbit_truncated(ladder: &Ladder, digits: &[u64], m: u64, depth: Depth) -> Result<OrbitPoint> {
    let d = truncation_depth(ladder, m, depth)?;
    orbit_at_depth(ladder.sequence(), digits, m, d)
}

/// Exact `T_{Q,m}(x)` when every digit past `prefix` is zero.
pub fn orbit_exact_finite(seq: &BasicSequence, prefix: &[u64], m: u64) -> Result<ExactRational> {
    let x = prefix_value(seq, prefix)?.lower;
    Ok(orbit_exact_rational(seq, &x, m))
}

/// Exact `T_{Q,m}(x)` for a rational `x`; `T_{Q,0}(x) = x mod 1`.
pub fn orbit_exact_rational(seq: &BasicSequence, x: &ExactRational, m: u64) -> ExactRational {
    mod1_scale(x, &seq.bases(1, m as usize))
}

/// A finite point set in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeq(Vec<f64>);

impl SampleSeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("discrepancy needs at least one point"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Error::arg(format!("sample value {v} outside [0, 1)")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_unstable_by(f64::total_cmp);
        v
    }
}

/// `D*_N = sup_a |#{x < a}/N - a|`, via the sorted-point formula
/// `max_i max(i/N - x_(i), x_(i) - (i-1)/N)`.
pub fn star_discrepancy(sample: &SampleSeq) -> f64 {
    let sorted = sample.sorted();
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max)
}

/// `D_N = sup_{a <= b} |#{a <= x < b}/N - (b - a)|`.
///
/// With `h(t) = #{x < t}/N - t`, the count over `[a, b)` deviates by
/// `h(b) - h(a)`. `h` falls with slope 1 between points and jumps up at
/// each one, so its extremes sit at the points (value `#{x < v}/N - v`),
/// just right of them (`#{x <= v}/N - v`, approached as a limit), and at the
/// ends `0` and `1`. Sweeping those candidates in order and tracking running
/// extremes gives the supremum in O(N log N).
pub fn extreme_discrepancy(sample: &SampleSeq) -> f64 {
    let sorted = sample.sorted();
    let n = sorted.len() as f64;
    let mut lo = 0.0f64; // h(0)
    let mut hi = 0.0f64;
    let mut best = 0.0f64;
    let mut visit = |h: f64| {
        best = best.max(h - lo).max(hi - h);
        lo = lo.min(h);
        hi = hi.max(h);
    };
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        visit(i as f64 / n - v);
        visit(j as f64 / n - v);
        i = j;
    }
    visit(0.0); // h(1): every point is below 1
    best
}

/// Discrepancy of the truncated orbit `(x_m)_{m < N}` at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub n: u64,
    pub d_star: f64,
    pub d_extreme: f64,
    /// Largest certified truncation error among the `N` points.
    pub max_eps: f64,
    #[serde(with = "serde_rational")]
    pub max_eps_exact: ExactRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub depth: Depth,
    pub rows: Vec<DiscrepancyRow>,
}

impl DistributionReport {
    pub fn star(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.d_star).collect()
    }
}

/// Orbit points `x_0, ..., x_{count-1}`.
pub fn orbit_points(ladder: &Ladder, digits: &[u64], count: u64, depth: Depth) -> Result<Vec<OrbitPoint>> {
    // warm the ladder cache before fanning out
    if count > 1 {
        ladder.block_len_at(count - 1)?;
    }
    (0..count).into_par_iter().map(|m| orbit_truncated(ladder, digits, m, depth)).collect()
}

/// Star and extreme discrepancy of `(x_m)_{m < N}` for each checkpoint `N`.
pub fn dn_report(ladder: &Ladder, digits: &[u64], checkpoints: &[u64], depth: Depth) -> Result<DistributionReport> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
        return Err(Error::arg("checkpoints must be positive and strictly increasing"));
    }
    let last = *checkpoints.last().expect("non-empty");
    let points = orbit_points(ladder, digits, last, depth)?;
    let values: Vec<f64> = points.iter().map(OrbitPoint::value_f64).collect();
    let rows = checkpoints
        .par_iter()
        .map(|&n| {
            let sample = SampleSeq::new(values[..n as usize].to_vec())?;
            let max_eps_exact = points[..n as usize].iter().map(|p| &p.error_bound).max().expect("n >= 1").clone();
            Ok(DiscrepancyRow {
                n,
                d_star: star_discrepancy(&sample),
                d_extreme: extreme_discrepancy(&sample),
                max_eps: rational_to_f64(&max_eps_exact),
                max_eps_exact,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistributionReport { depth, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::xq_digits;

    fn two() -> BasicSequence {
        BasicSequence::constant(2).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn sample(v: &[f64]) -> SampleSeq {
        SampleSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn truncated_examples() {
        let d = xq_digits(&two(), 300).unwrap();
        let p = orbit_at_depth(&two(), &d, 0, 1).unwrap();
        assert_eq!((p.value, p.error_bound), (rat(0, 1), rat(1, 2)));

        let ones = vec![1u64; 10];
        let p = orbit_at_depth(&two(), &ones, 3, 2).unwrap();
        assert_eq!((p.value, p.error_bound), (rat(3, 4), rat(1, 4)));

        let ladder = Ladder::new(two());
        let p = orbit_truncated(&ladder, &d, 200, Depth::Root).unwrap();
        assert_eq!(p.depth, 1);
        assert_eq!(p.value, rat(d[200] as i64, 2));
        assert_eq!(p.error_bound, rat(1, 2));

        assert!(matches!(orbit_at_depth(&two(), &d, 299, 2), Err(Error::InsufficientDigits { needed: 301, .. })));
    }

    #[test]
    fn exact_orbit_examples() {
        let third = rat(1, 3);
        assert_eq!(orbit_exact_rational(&two(), &third, 1), rat(2, 3));
        assert_eq!(orbit_exact_rational(&two(), &third, 2), rat(1, 3));
        assert_eq!(orbit_exact_rational(&two(), &third, 0), third);
        assert_eq!(orbit_exact_finite(&two(), &[1], 1).unwrap(), rat(0, 1));
    }

    #[test]
    fn truncation_agrees_with_exact_orbit_for_finite_expansions() {
        let seq = BasicSequence::periodic(vec![2, 3, 5]).unwrap();
        let prefix = [1, 2, 4, 1, 2, 3, 0, 2];
        let mut padded = prefix.to_vec();
        padded.resize(40, 0);
        for m in 0..8u64 {
            let exact = orbit_exact_finite(&seq, &prefix, m).unwrap();
            let p = orbit_at_depth(&seq, &padded, m, 30).unwrap();
            assert_eq!(p.value, exact, "m={m}");
        }
    }

    #[test]
    fn star_examples() {
        assert_eq!(star_discrepancy(&sample(&[0.5])), 0.5);
        assert_eq!(star_discrepancy(&sample(&[0.0, 0.5])), 0.5);
        let grid: Vec<f64> = (1..=10).map(|i| (i as f64 - 0.5) / 10.0).collect();
        assert!((star_discrepancy(&sample(&grid)) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn extreme_examples() {
        assert_eq!(extreme_discrepancy(&sample(&[0.0])), 1.0);
        assert_eq!(extreme_discrepancy(&sample(&[0.0, 0.5])), 0.5);
        assert_eq!(extreme_discrepancy(&sample(&[0.25, 0.25])), 1.0);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(SampleSeq::new(vec![]).is_err());
        assert!(SampleSeq::new(vec![1.0]).is_err());
        assert!(SampleSeq::new(vec![-0.1]).is_err());
        assert!(SampleSeq::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn depth_parsing() {
        assert_eq!("root".parse::<Depth>().unwrap(), Depth::Root);
        assert_eq!("fixed:12".parse::<Depth>().unwrap(), Depth::Fixed(12));
        assert!("fixed:0".parse::<Depth>().is_err());
        assert!("deep".parse::<Depth>().is_err());
    }

    #[test]
    fn root_depth_follows_block_length() {
        let ladder = Ladder::new(two());
        assert_eq!(truncation_depth(&ladder, 0, Depth::Root).unwrap(), 1);
        assert_eq!(truncation_depth(&ladder, 622, Depth::Root).unwrap(), 1);
        assert_eq!(truncation_depth(&ladder, 623, Depth::Root).unwrap(), 2);
        assert_eq!(truncation_depth(&ladder, 623, Depth::Fixed(7)).unwrap(), 7);
    }

    #[test]
    fn all_zero_digits_are_maximally_discrepant() {
        let ladder = Ladder::new(two());
        let zeros = vec![0u64; 200];
        let rep = dn_report(&ladder, &zeros, &[100], Depth::Root).unwrap();
        // every x_m = 0: D* = 1 exactly (the interval [0, 0+) holds all points)
        assert_eq!(rep.rows[0].d_star, 1.0);
        assert_eq!(rep.rows[0].d_extreme, 1.0);
        assert!(dn_report(&ladder, &zeros, &[10, 10], Depth::Root).is_err());
    }
}
