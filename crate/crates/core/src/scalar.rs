//! Floating-point abstraction shared by the deterministic numerics.
//!
//! Expression evaluation, drift/diffusion assembly, the RK4 integrator,
//! time series, the pseudo-inverse and the pathwise losses are written
//! against [`Scalar`] so they run in `f32` or `f64`. The stochastic
//! simulators and the optimizers work in `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable by the generic kernels: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or stored value.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    /// Widening conversion used when results cross into `f64`-only code.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert a slice of `f64` into the target scalar type.
pub fn cast_slice<T: Scalar>(values: &[f64]) -> Vec<T> {
    values.iter().map(|&v| T::lit(v)).collect()
}
