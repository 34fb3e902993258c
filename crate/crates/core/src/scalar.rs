use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the crate: `f32` or `f64`.
///
/// Exact-oracle identities are asserted up to [`Scalar::exact_tolerance`],
/// which is tied to the precision of the type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Tolerance for identities that hold exactly in real arithmetic.
    fn exact_tolerance() -> Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Bit pattern of the value widened to `f64`; used as a hashing key.
    fn key_bits(self) -> u64 {
        let x = self.to_f64_lossy();
        // +0 and -0 must collide
        if x == 0.0 {
            0
        } else {
            x.to_bits()
        }
    }
}

impl Scalar for f64 {
    fn exact_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn exact_tolerance() -> Self {
        1e-5
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum<S: Scalar, I: IntoIterator<Item = S>>(iter: I) -> S {
    let mut sum = S::zero();
    let mut comp = S::zero();
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_zero_shares_key() {
        assert_eq!(0.0f64.key_bits(), (-0.0f64).key_bits());
        assert_ne!(1.0f64.key_bits(), (-1.0f64).key_bits());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs.iter().copied()), 2.0f64);
    }
}
