//! Scalar abstraction: every kernel is generic over the real type.

use num_complex::Complex;

/// Real scalar for all numerics: `f32` or `f64`.
///
/// `RealField` supplies the transcendental functions and drives nalgebra's
/// decompositions; `FromPrimitive`/`NumCast` cover conversions from literal
/// constants and integer counts.
pub trait Real:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::NumCast + Copy + Default
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cx<T> = Complex<T>;

/// Converts an `f64` constant into the working scalar.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite literals this crate feeds it.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

/// Converts an integer count into the working scalar.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Unit-modulus complex exponential `e^{j*phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Cx<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Modulus of a complex scalar (avoids the `Float` bound on
/// `Complex::norm`).
#[inline]
pub fn cx_abs<T: Real>(z: Cx<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// `log2(x)` for the working scalar.
#[inline]
pub fn log2<T: Real>(x: T) -> T {
    x.ln() / real::<T>(std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cis_is_unit_modulus() {
        let z = cis(1.234_f64);
        assert!((z.norm() - 1.0).abs() < 1e-15);
        let z32 = cis(1.234_f32);
        assert!((z32.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn log2_matches_std() {
        assert!((log2(8.0_f64) - 3.0).abs() < 1e-14);
    }
}
