//! Working-precision abstraction.
//!
//! All kernels are generic over [`Scalar`] so a whole run can be carried
//! out in either double or single precision. Grid geometry is always
//! evaluated in `f64` and narrowed once per assembled entry.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::Float;

/// Floating-point type a solver run is carried out in.
pub trait Scalar:
    Float + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Name used in reports and for precision-dependent tolerances.
    const PRECISION_NAME: &'static str;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    const PRECISION_NAME: &'static str = "double";

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const PRECISION_NAME: &'static str = "single";

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}
