//! Computable uniformly distributed drivers `(x_n)` in `[0, 1)`.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UdKind {
    /// Radical inverse of `n` in base 2.
    #[default]
    VanDerCorput,
    /// Reduced fractions in `[0, 1)` by denominator, then numerator:
    /// `0, 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...`.
    Farey,
}

impl FromStr for UdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vdc" | "van-der-corput" => Ok(Self::VanDerCorput),
            "farey" => Ok(Self::Farey),
            _ => Err(Error::arg(format!("unknown ud source '{s}' (expected vdc|farey)"))),
        }
    }
}

impl fmt::Display for UdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::VanDerCorput => "vdc",
            Self::Farey => "farey",
        })
    }
}

/// An exact value `num / den` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UdValue {
    pub num: u64,
    pub den: u64,
}

impl UdValue {
    /// `floor(x * q)`.
    pub fn scaled_floor(self, q: u64) -> u64 {
        (u128::from(self.num) * u128::from(q) / u128::from(self.den)) as u64
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn van_der_corput(n: u64) -> UdValue {
    let bits = 64 - n.leading_zeros();
    UdValue { num: n.reverse_bits() >> (64 - bits), den: 1 << bits }
}

/// `x_n` for `n >= 1`.
pub fn ud_source(kind: UdKind, n: u64) -> Result<UdValue> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    Ok(match kind {
        UdKind::VanDerCorput => van_der_corput(n),
        UdKind::Farey => UdStream::new(kind).nth((n - 1) as usize).expect("unbounded"),
    })
}

/// `x_1, x_2, ...` in order.
#[derive(Debug, Clone)]
pub struct UdStream {
    kind: UdKind,
    n: u64,
    num: u64,
    den: u64,
}

impl UdStream {
    pub fn new(kind: UdKind) -> Self {
        Self { kind, n: 0, num: 0, den: 1 }
    }
}

impl Iterator for UdStream {
    type Item = UdValue;

    fn next(&mut self) -> Option<UdValue> {
        self.n += 1;
        match self.kind {
            UdKind::VanDerCorput => Some(van_der_corput(self.n)),
            UdKind::Farey => {
                let out = UdValue { num: self.num, den: self.den };
                loop {
                    self.num += 1;
                    if self.num >= self.den {
                        self.den += 1;
                        self.num = 1;
                    }
                    if self.num.gcd(&self.den) == 1 {
                        break;
                    }
                }
                Some(out)
            }
        }
    }
}
