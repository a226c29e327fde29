//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the analysis (`f32` or `f64`).
///
/// Tolerances throughout the crate are written as `f64` nominal values and
/// passed through [`Real::tol`], which never lets them drop below a small
/// multiple of the type's machine epsilon. For `f64` the nominal values are
/// used as-is.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + LowerExp + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64` for reporting and sampling.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }

    /// Nominal tolerance, floored at 64 ulps of one.
    fn tol(nominal: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(64.0);
        let t = Self::lit(nominal);
        if t > floor {
            t
        } else {
            floor
        }
    }

    fn is_finite_value(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}
