use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};
use std::fmt::Debug;

/// Exact ordered field used by the simplex. Arithmetic is checked so that
/// fixed-width implementations can report overflow instead of wrapping.
pub trait Scalar: Clone + Ord + Debug + Send + Sync {
    fn from_int(v: i64) -> Self;
    fn add(&self, rhs: &Self) -> Option<Self>;
    fn sub(&self, rhs: &Self) -> Option<Self>;
    fn mul(&self, rhs: &Self) -> Option<Self>;
    fn div(&self, rhs: &Self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_integer(&self) -> bool;
    fn floor_int(&self) -> i64;
    fn ceil_int(&self) -> i64;
    fn to_f64(&self) -> f64;

    fn zero() -> Self {
        Self::from_int(0)
    }
}

pub type SmallRational = Ratio<i128>;

impl Scalar for SmallRational {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }
    fn add(&self, rhs: &Self) -> Option<Self> {
        if self.denom() == rhs.denom() && self.denom().is_one() {
            return self.numer().checked_add(rhs.numer()).map(Ratio::from_integer);
        }
        CheckedAdd::checked_add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Option<Self> {
        if self.denom() == rhs.denom() && self.denom().is_one() {
            return self.numer().checked_sub(rhs.numer()).map(Ratio::from_integer);
        }
        CheckedSub::checked_sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Option<Self> {
        if self.denom().is_one() && rhs.denom().is_one() {
            return self.numer().checked_mul(rhs.numer()).map(Ratio::from_integer);
        }
        CheckedMul::checked_mul(self, rhs)
    }
    fn div(&self, rhs: &Self) -> Option<Self> {
        if Zero::is_zero(rhs) {
            return None;
        }
        CheckedDiv::checked_div(self, rhs)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_integer(&self) -> bool {
        Ratio::is_integer(self)
    }
    fn floor_int(&self) -> i64 {
        Ratio::floor(self).to_integer() as i64
    }
    fn ceil_int(&self) -> i64 {
        Ratio::ceil(self).to_integer() as i64
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for BigRational {
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(BigInt::from(v))
    }
    fn add(&self, rhs: &Self) -> Option<Self> {
        Some(self + rhs)
    }
    fn sub(&self, rhs: &Self) -> Option<Self> {
        Some(self - rhs)
    }
    fn mul(&self, rhs: &Self) -> Option<Self> {
        Some(self * rhs)
    }
    fn div(&self, rhs: &Self) -> Option<Self> {
        if Zero::is_zero(rhs) {
            None
        } else {
            Some(self / rhs)
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_integer(&self) -> bool {
        Ratio::is_integer(self)
    }
    fn floor_int(&self) -> i64 {
        i64::try_from(Ratio::floor(self).to_integer()).expect("LP value fits in i64")
    }
    fn ceil_int(&self) -> i64 {
        i64::try_from(Ratio::ceil(self).to_integer()).expect("LP value fits in i64")
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Floating point with tolerance-aware sign tests. Only ever used to find
/// candidate solutions; anything derived from it is checked exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Float(pub f64);

const EPS: f64 = 1e-9;

impl Eq for Float {}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Float {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn finite(v: f64) -> Option<Float> {
    v.is_finite().then_some(Float(v))
}

impl Scalar for Float {
    fn from_int(v: i64) -> Self {
        Float(v as f64)
    }
    fn add(&self, rhs: &Self) -> Option<Self> {
        finite(self.0 + rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Option<Self> {
        finite(self.0 - rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Option<Self> {
        finite(self.0 * rhs.0)
    }
    fn div(&self, rhs: &Self) -> Option<Self> {
        if Scalar::is_zero(rhs) {
            return None;
        }
        finite(self.0 / rhs.0)
    }
    fn is_zero(&self) -> bool {
        self.0.abs() <= EPS
    }
    fn is_negative(&self) -> bool {
        self.0 < -EPS
    }
    fn is_positive(&self) -> bool {
        self.0 > EPS
    }
    fn is_integer(&self) -> bool {
        (self.0 - self.0.round()).abs() <= EPS
    }
    fn floor_int(&self) -> i64 {
        self.0.floor() as i64
    }
    fn ceil_int(&self) -> i64 {
        self.0.ceil() as i64
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_overflow_is_reported() {
        let big = SmallRational::from_integer(i128::MAX / 2 + 1);
        assert!(Scalar::add(&big, &big).is_none());
        assert!(Scalar::mul(&big, &SmallRational::from_integer(3)).is_none());
        assert!(Scalar::div(&big, &SmallRational::from_integer(0)).is_none());
    }

    #[test]
    fn rounding() {
        let x = SmallRational::new(39, 2);
        assert_eq!(x.floor_int(), 19);
        assert_eq!(x.ceil_int(), 20);
        let y = BigRational::new(BigInt::from(-39), BigInt::from(2));
        assert_eq!(y.floor_int(), -20);
        assert_eq!(y.ceil_int(), -19);
    }
}
