//! Integer images of rationals under a common denominator, used by the
//! enumeration-heavy searches so their inner loops avoid rational arithmetic.

use std::ops::{AddAssign, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

pub(crate) trait Acc: Clone + Ord + Zero + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self> {}
impl<T> Acc for T where T: Clone + Ord + Zero + for<'a> AddAssign<&'a T> + for<'a> SubAssign<&'a T> {}

/// Numerators of `values` over the lcm of their denominators.
pub(crate) fn common_scale(values: &[&Rational]) -> Vec<BigInt> {
    let lcm = values.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
    values.iter().map(|r| r.numer() * (&lcm / r.denom())).collect()
}

/// Narrows to `i128` when any sum of at most `terms` of the values fits.
pub(crate) fn narrow(values: &[BigInt], terms: usize) -> Option<Vec<i128>> {
    let limit = BigInt::from(i128::MAX / (terms as i128 + 2));
    values.iter().map(|x| if x.abs() < limit { x.to_i128() } else { None }).collect()
}
