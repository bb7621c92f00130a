//! Scalar abstraction shared by every numerical module.
//!
//! Everything that only needs field operations and elementary functions is
//! written against [`Scalar`], so the same code runs in `f32`, `f64` and the
//! 40-digit [`num_bigfloat::BigFloat`]. Matrix code additionally needs
//! [`MatrixScalar`], which `BigFloat` does not provide.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar usable by the observable algebra, the quantization and the
/// dimension formulas.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Exact conversion of a (small) integer.
    fn int(k: i64) -> Self {
        Self::from_i64(k).expect("integer representable")
    }
}

impl<T> Scalar for T where T: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

/// Scalars that dense linear algebra can run on (`f32`, `f64`).
pub trait MatrixScalar: Scalar + nalgebra::RealField + Copy {}

impl<T> MatrixScalar for T where T: Scalar + nalgebra::RealField + Copy {}

/// `exp(2πi·k/m)` with the exponent reduced modulo `m` in integer arithmetic
/// before any rounding happens.
pub fn root_of_unity<T: Scalar>(k: i64, m: i64) -> Complex<T> {
    debug_assert!(m > 0);
    let r = k.rem_euclid(m);
    let angle = T::TAU() * T::int(r) / T::int(m);
    Complex::new(angle.cos(), angle.sin())
}

/// `exp(2πi·x)` for a real turn count `x`.
pub fn cis_turns<T: Scalar>(x: T) -> Complex<T> {
    let angle = T::TAU() * x;
    Complex::new(angle.cos(), angle.sin())
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<T: Scalar, I: IntoIterator<Item = T>>(terms: I) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry = carry + ((sum - t) + x);
        } else {
            carry = carry + ((x - t) + sum);
        }
        sum = t;
    }
    sum + carry
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_unity_reduces_exponent() {
        let a: Complex<f64> = root_of_unity(7, 4);
        let b: Complex<f64> = root_of_unity(3, 4);
        assert!((a - b).norm() < 1e-15);
        assert!((b - Complex::new(0.0, -1.0)).norm() < 1e-15);
        let c: Complex<f64> = root_of_unity(-1, 4);
        assert!((c - b).norm() < 1e-15);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: f64 = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }
}
