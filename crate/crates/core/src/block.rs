use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-empty finite block of digits `B = [B_1, ..., B_k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DigitBlock(Vec<u64>);

impl DigitBlock {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::arg("digit blocks must have length >= 1"));
        }
        Ok(Self(digits))
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Strict coordinatewise order `B < R`.
    pub fn is_below(&self, bases: &[u64]) -> bool {
        self.0.len() == bases.len() && self.0.iter().zip(bases).all(|(d, b)| d < b)
    }

    /// All blocks of length `k` with every digit below `radix`, in
    /// lexicographic order.
    pub fn all_of_length(k: usize, radix: u64) -> Vec<DigitBlock> {
        let mut out = Vec::new();
        let mut cur = vec![0u64; k];
        if k == 0 || radix == 0 {
            return out;
        }
        loop {
            out.push(DigitBlock(cur.clone()));
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < radix {
                    break;
                }
                cur[i] = 0;
            }
        }
    }
}

impl TryFrom<Vec<u64>> for DigitBlock {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DigitBlock> for Vec<u64> {
    fn from(b: DigitBlock) -> Self {
        b.0
    }
}

impl fmt::Display for DigitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("]")
    }
}

/// Parses `0,1,1` (brackets and spaces optional).
impl FromStr for DigitBlock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let digits = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u64>().map_err(|e| Error::arg(format!("bad digit '{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(digits)
    }
}
