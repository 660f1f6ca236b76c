//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the chain machinery is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    /// Lossy conversion for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Widens a nominal `f64` tolerance so it stays meaningful at this precision.
    fn tol(base: f64) -> Self {
        let floor = 64.0 * Self::epsilon().as_f64();
        Self::lit(base.max(floor))
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Kahan-compensated sum.
pub(crate) fn ksum<F: Real>(values: impl IntoIterator<Item = F>) -> F {
    let mut sum = F::zero();
    let mut carry = F::zero();
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
