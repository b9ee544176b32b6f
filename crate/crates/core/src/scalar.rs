//! Scalar abstractions.
//!
//! Counting-based estimators (step functions, the product-limit fit) only need
//! ordered field arithmetic and are generic over [`Scalar`], which admits exact
//! rationals. Everything that touches a continuous distribution or a quadrature
//! rule needs transcendental functions and is generic over [`Real`].

use std::fmt::{Debug, Display};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

mod sealed {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
    impl Sealed for num_rational::BigRational {}
}

/// Ordered field element usable as the value type of empirical step functions.
pub trait Scalar: sealed::Sealed + Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// The integer `n` as a scalar.
    fn from_count(n: usize) -> Self;

    /// The ratio `num / den`, correctly rounded for floating-point scalars.
    fn from_ratio(num: &BigUint, den: &BigUint) -> Self;

    /// Lossy conversion used for diagnostics and ordering keys.
    fn to_f64_lossy(&self) -> f64;
}

impl Scalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }

    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        ratio_to_f64(num, den)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }

    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        BigRational::new_raw(BigInt::from(num.clone()), BigInt::from(den.clone()))
            .to_f32()
            .unwrap_or(f32::NAN)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_count(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Correctly rounded (round-half-even) `num / den` for nonnegative big integers.
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    use num_traits::Zero;
    if num.is_zero() {
        return 0.0;
    }
    // After scaling, the integer quotient has 54 or 55 significant bits.
    let shift = 54 - (num.bits() as i64 - den.bits() as i64);
    let (n, d) = if shift >= 0 {
        (num << (shift as u64), den.clone())
    } else {
        (num.clone(), den << ((-shift) as u64))
    };
    let mut sticky = !(&n % &d).is_zero();
    let mut q = (&n / &d).to_u64().expect("quotient fits in 64 bits");
    let mut exp = -shift;
    if q >= 1u64 << 54 {
        sticky |= q & 1 == 1;
        q >>= 1;
        exp += 1;
    }
    // 53 significand bits and one rounding bit.
    let round_bit = q & 1 == 1;
    let mut mant = q >> 1;
    exp += 1;
    if round_bit && (sticky || mant & 1 == 1) {
        mant += 1;
    }
    (mant as f64) * 2f64.powi(exp as i32)
}

/// Real scalar with transcendental functions: `f32` and `f64`.
pub trait Real: Scalar + Float + FromPrimitive + Display + Default {
    /// Literal conversion from an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl<T> Real for T where T: Scalar + Float + FromPrimitive + Display + Default {}
