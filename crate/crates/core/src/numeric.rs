//! Exact values of Cantor series prefixes and proven base-`b` digits.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::digits::DigitSource;
use crate::error::{Error, Result};
use crate::sequence::BasicSequence;

/// Canonical reduced rational with positive denominator.
pub type ExactRational = BigRational;

pub const DEFAULT_REFINEMENT_CAP: usize = 64;

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `num/den` string form used in every report.
pub fn rational_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Serde adapter writing a rational as `"num/den"`.
pub mod serde_rational {
    use num_rational::BigRational;

    pub fn serialize<S: serde::Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::rational_string(x))
    }
}

/// Closed interval `[lower, upper]` known to contain a real number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertifiedInterval {
    #[serde(with = "serde_rational")]
    pub lower: ExactRational,
    #[serde(with = "serde_rational")]
    pub upper: ExactRational,
}

impl CertifiedInterval {
    pub fn width(&self) -> ExactRational {
        &self.upper - &self.lower
    }

    pub fn contains(&self, x: &ExactRational) -> bool {
        &self.lower <= x && x <= &self.upper
    }
}

/// Running `sum E_n / (q_1 ... q_n)` kept as `numerator / (q_1 ... q_m)`.
#[derive(Debug, Clone)]
struct PrefixAccumulator {
    numerator: BigUint,
    denominator: BigUint,
    len: u64,
}

impl PrefixAccumulator {
    fn new() -> Self {
        Self { numerator: BigUint::zero(), denominator: BigUint::one(), len: 0 }
    }

    fn push(&mut self, base: u64, digit: u64) -> Result<()> {
        let position = self.len + 1;
        if digit >= base {
            return Err(Error::InadmissibleDigit { position, digit, base });
        }
        self.numerator = &self.numerator * base + digit;
        self.denominator *= base;
        self.len = position;
        Ok(())
    }

    fn interval(&self) -> CertifiedInterval {
        let den = BigInt::from(self.denominator.clone());
        let lo = BigInt::from(self.numerator.clone());
        let hi = &lo + 1;
        CertifiedInterval { lower: BigRational::new(lo, den.clone()), upper: BigRational::new(hi, den) }
    }
}

/// Value of the digits `E_1 ... E_m` with the tail bound: every real whose
/// expansion starts with these digits lies within `1 / (q_1 ... q_m)` above
/// the prefix sum.
pub fn prefix_value(seq: &BasicSequence, digits: &[u64]) -> Result<CertifiedInterval> {
    let mut acc = PrefixAccumulator::new();
    for (i, &d) in digits.iter().enumerate() {
        acc.push(seq.base(i as u64 + 1), d)?;
    }
    Ok(acc.interval())
}

/// `x * f_1 * ... * f_n (mod 1)`.
pub fn mod1_scale(x: &ExactRational, factors: &[u64]) -> ExactRational {
    let scale: BigInt = factors.iter().fold(BigInt::one(), |acc, &f| acc * f);
    let scaled = x * BigRational::from_integer(scale);
    let frac = scaled.numer().mod_floor(scaled.denom());
    BigRational::new(frac, scaled.denom().clone())
}

/// Base-`b` digits of a real number, each proven by interval agreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvenDigits {
    pub base: u32,
    pub digits: Vec<u32>,
    /// Cantor digits consumed to certify them.
    pub consumed: u64,
    /// The enclosing interval after the last refinement.
    pub interval: CertifiedInterval,
}

impl ProvenDigits {
    /// Digits as text: `0-9a-z` for bases up to 36, comma-separated otherwise.
    pub fn render(&self) -> String {
        if self.base <= 36 {
            self.digits.iter().map(|&d| char::from_digit(d, self.base).expect("digit below base")).collect()
        } else {
            self.digits.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
        }
    }

    /// `0.d_1 d_2 ... d_count` in base `b` as an exact rational.
    pub fn as_rational(&self) -> ExactRational {
        let b = BigInt::from(self.base);
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for &d in &self.digits {
            num = num * &b + d;
            den *= &b;
        }
        BigRational::new(num, den)
    }
}

/// The first `count` base-`b` digits of the real number whose Cantor digits
/// `source` produces.
///
/// Cantor digits are pulled until the lower and upper ends of the enclosing
/// interval agree on the next base-`b` digit. If `cap` further Cantor digits
/// do not settle a position the value may sit exactly on a base-`b` boundary;
/// this is reported as an error rather than guessing.
pub fn to_base_b(source: &mut dyn DigitSource, base: u32, count: usize, cap: usize) -> Result<ProvenDigits> {
    if base < 2 {
        return Err(Error::arg("output base must be >= 2"));
    }
    if count == 0 {
        return Err(Error::arg("digit count must be >= 1"));
    }
    let seq = source.basis().clone();
    let mut acc = PrefixAccumulator::new();
    let mut scale = BigUint::one();
    let mut digits = Vec::with_capacity(count);
    for position in 1..=count {
        scale *= base;
        let mut extra = 0;
        loop {
            let lo = (&acc.numerator * &scale) / &acc.denominator;
            let hi = ((&acc.numerator + 1u32) * &scale) / &acc.denominator;
            if lo == hi {
                let d = (lo % base).to_u32().expect("remainder below base");
                digits.push(d);
                break;
            }
            if extra >= cap {
                return Err(Error::Refinement { position, base, consumed: extra });
            }
            let next = source.next_digit()?;
            acc.push(seq.base(acc.len + 1), next)?;
            extra += 1;
        }
    }
    Ok(ProvenDigits { base, digits, consumed: acc.len, interval: acc.interval() })
}
