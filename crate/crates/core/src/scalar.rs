//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The model is written once against [`Real`] and instantiated for `f32` and
//! `f64`. Random draws go through the trait as well so the distribution
//! bounds of `rand_distr` stay out of every generic signature.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp, StandardNormal};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Exponential draw parameterized by rate (mean `1 / rate`).
    fn sample_exp<R: Rng + ?Sized>(rng: &mut R, rate: Self) -> Self;

    fn sample_chi_squared<R: Rng + ?Sized>(rng: &mut R, dof: Self) -> Self;

    fn from_count(n: u64) -> Self {
        Self::lit(n as f64)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }

            #[inline]
            fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn sample_exp<R: Rng + ?Sized>(rng: &mut R, rate: Self) -> Self {
                Exp::new(rate)
                    .expect("exponential rate must be positive")
                    .sample(rng)
            }

            fn sample_chi_squared<R: Rng + ?Sized>(rng: &mut R, dof: Self) -> Self {
                ChiSquared::new(dof)
                    .expect("chi-squared degrees of freedom must be positive")
                    .sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Clamps `x` into `[lo, hi]`; NaN maps to `lo`.
#[inline]
pub fn clamp<F: Real>(x: F, lo: F, hi: F) -> F {
    if x.is_nan() || x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

#[inline]
pub fn clamp_unit<F: Real>(x: F) -> F {
    clamp(x, F::zero(), F::one())
}
