//! Floating-point scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Returns `Some(k)` when `value` is within a relative tolerance of `k * step`
/// for an integer `k`.
pub fn grid_index<T: Scalar>(value: T, step: T) -> Option<i64> {
    let ratio = value / step;
    let k = ratio.round();
    let tol = T::lit(1e-6).max(T::epsilon() * T::lit(64.0));
    if (ratio - k).abs() <= tol * T::one().max(k.abs()) {
        k.to_i64()
    } else {
        None
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_err<T: Scalar>(values: &[T]) -> (T, T) {
    let n = values.len();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    let nf = T::from_usize(n).unwrap();
    let mean = acc.value() / nf;
    if n < 2 {
        return (mean, T::nan());
    }
    let mut sq = CompensatedSum::new();
    for &v in values {
        let d = v - mean;
        sq.add(d * d);
    }
    let var = sq.value() / T::from_usize(n - 1).unwrap();
    (mean, (var / nf).sqrt())
}
