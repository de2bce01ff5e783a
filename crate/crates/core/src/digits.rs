//! Digit streams `E_1, E_2, ...` declared against a basic sequence.

use crate::error::{Error, Result};
use crate::sequence::BasicSequence;

/// A sequential producer of Cantor digits.
///
/// Single consumer: each call to [`next_digit`](DigitSource::next_digit)
/// yields the digit at the next position, starting from position 1.
pub trait DigitSource: Send {
    /// The basic sequence the digits are declared against.
    fn basis(&self) -> &BasicSequence;

    fn next_digit(&mut self) -> Result<u64>;

    /// Collects the next `count` digits.
    fn take_digits(&mut self, count: usize) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.next_digit()?);
        }
        Ok(out)
    }
}

impl<S: DigitSource + ?Sized> DigitSource for Box<S> {
    fn basis(&self) -> &BasicSequence {
        (**self).basis()
    }

    fn next_digit(&mut self) -> Result<u64> {
        (**self).next_digit()
    }
}

/// A finite digit prefix followed by zeros.
#[derive(Debug, Clone)]
pub struct FiniteDigits {
    basis: BasicSequence,
    digits: Vec<u64>,
    pos: usize,
}

impl FiniteDigits {
    /// Fails if some digit is not below its base.
    pub fn new(basis: BasicSequence, digits: Vec<u64>) -> Result<Self> {
        check_admissible(&basis, &digits)?;
        Ok(Self { basis, digits, pos: 0 })
    }
}

impl DigitSource for FiniteDigits {
    fn basis(&self) -> &BasicSequence {
        &self.basis
    }

    fn next_digit(&mut self) -> Result<u64> {
        let d = self.digits.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        Ok(d)
    }
}

/// Checks `0 <= E_n < q_n` for every digit of a prefix.
pub fn check_admissible(basis: &BasicSequence, digits: &[u64]) -> Result<()> {
    for (i, &d) in digits.iter().enumerate() {
        let position = i as u64 + 1;
        let base = basis.base(position);
        if d >= base {
            return Err(Error::InadmissibleDigit { position, digit: d, base });
        }
    }
    Ok(())
}
