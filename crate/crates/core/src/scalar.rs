//! Floating-point abstraction the rest of the crate is generic over.
//!
//! All numeric machinery is written against [`Scalar`] so the same code runs
//! in `f64` (the default everywhere user-facing) or `f32`. The trait bundles
//! the `num-traits` capabilities we actually use plus the few things they do
//! not cover: uniform sampling and precision-appropriate validation
//! tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tolerance for validating exact-arithmetic inputs (unit norms,
    /// probability sums). Chosen so that values produced by this crate's own
    /// arithmetic always pass.
    fn norm_tol() -> Self;

    /// Looser tolerance for values that went through a decimal round trip
    /// (config files, JSON tables).
    fn file_tol() -> Self;

    /// Uniform draw in `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Conversion from an `f64` constant; panics only for non-finite input,
    /// which would be a bug at the call site.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant converts to Scalar")
    }

    /// Widening (or identity) conversion used at reporting boundaries.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $norm:expr, $file:expr) => {
        impl Scalar for $t {
            fn norm_tol() -> Self {
                $norm
            }
            fn file_tol() -> Self {
                $file
            }
            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.gen::<$t>()
            }
        }
    };
}

impl_scalar!(f32, 1e-6, 1e-4);
impl_scalar!(f64, 1e-12, 1e-9);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(0.25f64.as_f64(), 0.25);
    }

    #[test]
    fn tolerances_are_type_appropriate() {
        assert!((f32::norm_tol() as f64) > f64::norm_tol());
        assert!(f64::file_tol() > f64::norm_tol());
    }

    #[test]
    fn sample_unit_in_range() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = f64::sample_unit(&mut rng);
            assert!((0.0..1.0).contains(&x));
        }
    }
}
