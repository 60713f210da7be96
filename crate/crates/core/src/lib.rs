//! Steady subsonic irrotational flow in infinitely long nozzles with an
//! interior obstacle, solved on the meridian plane by energy-minimizing
//! bilinear finite elements, plus a verification harness for the
//! incompressible limit and the far-field decay of the velocity field.
//!
//! The crate is generic over the floating-point scalar through [`Scalar`];
//! concrete `f64` aliases for the main entry types live at the crate root.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fem;
pub mod force;
pub mod gas;
pub mod geometry;
pub mod io;
pub mod runner;
pub mod solvers;

pub use error::{Error, Result};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numerics are generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::iter::Sum
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + std::fmt::LowerExp
        + std::iter::Sum
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Two-component meridian-plane vector helpers.
#[inline]
pub(crate) fn norm2<T: Scalar>(r: T, z: T) -> T {
    (r * r + z * z).sqrt()
}

pub type GasModel64 = gas::GasModel<f64>;
pub type NozzleProfile64 = geometry::NozzleProfile<f64>;
pub type MeridianMesh64 = geometry::MeridianMesh<f64>;
pub type ForceField64 = force::ForceField<f64>;
pub type FlowState64 = solvers::FlowState<f64>;
pub type SolverConfig64 = solvers::SolverConfig<f64>;
pub type RateFit64 = analysis::RateFit<f64>;
