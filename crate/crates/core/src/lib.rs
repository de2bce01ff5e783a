//! Digit-by-digit construction of a computable number that is normal and
//! distribution normal with respect to a Cantor series basis `Q`, together
//! with the digit transforms that produce numbers with mixed normality
//! properties and the statistics used to check them at finite scale.
//!
//! ```
//! use qnormal_core::{xq_digits, BasicSequence};
//!
//! let q = BasicSequence::constant(2).unwrap();
//! assert_eq!(xq_digits(&q, 6).unwrap(), vec![0, 1, 0, 1, 0, 1]);
//! ```

pub mod block;
pub mod construction;
pub mod digits;
pub mod equidistribution;
pub mod error;
pub mod numeric;
pub mod sequence;
pub mod stats;
pub mod transforms;

pub use block::DigitBlock;
pub use construction::{digit_at, xq_digits, BaseWindow, Ladder, XqDigits};
pub use digits::{DigitSource, FiniteDigits};
pub use equidistribution::{dn_report, extreme_discrepancy, star_discrepancy, Depth, OrbitPoint, SampleSeq};
pub use error::{Error, Result};
pub use numeric::{to_base_b, CertifiedInterval, ExactRational, ProvenDigits};
pub use sequence::{BasicSequence, LogBase, Preset};
pub use transforms::{Target, TargetKind};
