//! Mixed equal-order finite elements for porous-media flow where the drag
//! coefficient depends on the local pressure.
//!
//! The model is a generalized Darcy system on a bounded domain:
//!
//! ```text
//!   A a(p) v + grad p = C r b      (momentum, non-dimensional groups A and C)
//!   div v = 0                      (continuity, plus optional point sources)
//!   v . n = vn   on the flux part of the boundary
//!   p = p0       on the pressure part of the boundary
//! ```
//!
//! with `a(p)` either constant, affine (`a0 (1 + beta p)`) or exponential
//! (`a0 exp(beta p)`, the Barus law). Velocity and pressure are discretized
//! with the same continuous linear space; stability comes from an augmented
//! weak form that subtracts half of the element-wise momentum residual
//! projected onto the test functions. The nonlinearity is resolved by a
//! fixed-point loop that freezes `a` at the previous pressure iterate.
//!
//! The crate is `no_std` (with `alloc`) so the solver core can be embedded;
//! file formats, the CLI and anything `std` live in the companion crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod analytic;
pub mod assembly;
pub mod benchmarks;
pub mod drag;
pub mod element;
pub mod error;
pub(crate) mod math;
pub mod mesh;
pub mod picard;
pub mod problem;
pub mod sparse;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
