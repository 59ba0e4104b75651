//! Numeric abstraction for schedule energy arithmetic.
//!
//! Scheduling only needs a field with a total-ish order: sums of products of
//! handover times and hover powers, plus the division in the flow score.
//! Running the same code over [`Rational64`] gives bit-exact optima, which the
//! oracle tests rely on; `f64` is the production scalar.

use std::fmt::Debug;
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, NumAssign, ToPrimitive};

/// Scalar used for durations, powers and energies.
pub trait Scalar:
    Copy + Debug + PartialOrd + Num + NumAssign + Sum + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts a count into the scalar domain.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    /// Converts a decimal value. Rationals take the best small-denominator
    /// approximation, which is exact for integers.
    fn from_decimal(v: f64) -> Option<Self> {
        if v.is_finite() {
            Self::from_f64(v)
        } else {
            None
        }
    }

    /// Lossy view as `f64` for reporting and file output.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Milliseconds to seconds, divided in the scalar domain so that
    /// rationals stay exact.
    fn from_millis(ms: f64) -> Option<Self> {
        Some(Self::from_decimal(ms)? / Self::from_count(1000))
    }

    /// Whether the value is finite (always true for rationals).
    fn is_finite_value(self) -> bool;

    /// Equality up to the representation's rounding: relative `1e-9` for
    /// `f64`, `1e-5` for `f32`, exact for rationals.
    fn close_to(self, other: Self) -> bool;
}

macro_rules! impl_float_scalar {
    ($f:ty, $eps:expr) => {
        impl Scalar for $f {
            fn is_finite_value(self) -> bool {
                self.is_finite()
            }

            fn close_to(self, other: Self) -> bool {
                let scale = self.abs().max(other.abs()).max(1.0);
                (self - other).abs() <= $eps * scale
            }
        }
    };
}

impl_float_scalar!(f32, 1e-5);
impl_float_scalar!(f64, 1e-9);

impl Scalar for Rational64 {
    fn is_finite_value(self) -> bool {
        true
    }

    fn close_to(self, other: Self) -> bool {
        self == other
    }
}
