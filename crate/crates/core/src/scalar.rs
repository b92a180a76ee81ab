use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the trajectory and fusion math is written against.
///
/// Implemented for `f32` and `f64`. Everything numeric in this crate is
/// generic over it; the crate root exports `f64` aliases for the common case.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync {
    /// Diagonal jitter added to kernel matrices before factorization.
    const JITTER: f64;

    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn neg_infinity() -> Self {
        Self::lit(f64::NEG_INFINITY)
    }

    #[inline]
    fn is_finite_real(self) -> bool {
        self.as_f64().is_finite()
    }

    #[inline]
    fn is_nan_real(self) -> bool {
        self.as_f64().is_nan()
    }
}

impl Real for f32 {
    // 1e-9 is below f32 resolution for unit-scale kernels.
    const JITTER: f64 = 1e-5;
}

impl Real for f64 {
    const JITTER: f64 = 1e-9;
}

/// Numerically stable `log(sum(exp(xs)))`. Returns `-inf` for an empty slice
/// or when every term is `-inf`.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs
        .iter()
        .copied()
        .filter(|x| !x.as_f64().is_nan())
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if !max.is_finite_real() {
        return max;
    }
    let sum = xs
        .iter()
        .filter(|x| !x.as_f64().is_nan())
        .fold(T::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}
