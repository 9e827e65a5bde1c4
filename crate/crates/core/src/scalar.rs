//! Scalar abstraction shared by the geometry, pattern and synthesis code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the antenna math: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) type Vec3<T> = [T; 3];

#[inline]
pub(crate) fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Wraps an angle in degrees to `[-180, 180)`.
pub fn wrap_deg<T: Real>(x: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut r = x - full * ((x + half) / full).floor();
    if r >= half {
        r = r - full;
    }
    if r < -half {
        r = r + full;
    }
    r
}

/// Linear power ratio to dB.
#[inline]
pub fn to_db<T: Real>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

/// dB to linear power ratio.
#[inline]
pub fn from_db<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_deg(180.0_f64), -180.0);
        assert_eq!(wrap_deg(-180.0_f64), -180.0);
        assert_eq!(wrap_deg(540.0_f64), -180.0);
        assert_eq!(wrap_deg(-190.0_f64), 170.0);
        assert_eq!(wrap_deg(359.0_f64), -1.0);
        let r = wrap_deg(-180.0_f64 - 1e-15);
        assert!((-180.0..180.0).contains(&r));
    }

    #[test]
    fn db_round_trip() {
        assert!((to_db(from_db(5.3_f64)) - 5.3).abs() < 1e-12);
        assert_eq!(from_db(0.0_f32), 1.0);
    }
}
