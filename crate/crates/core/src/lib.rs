//! Simulation core for light-emitting RIS panels: optical localization,
//! sweep-based obstacle sensing, cascaded mmWave links and max-min
//! scheduling. `no_std` with `alloc`.

#![no_std]
// Float methods come from `num_traits::Float` (libm). When some crate in the
// graph links std, the inherent methods shadow them and the import reads as
// unused.
#![allow(unused_imports)]

extern crate alloc;

pub mod geometry;
pub mod localization;
pub mod mapping;
pub mod mmwave;
pub mod optical;
pub mod routing;
pub mod scenario;
pub mod stats;
pub mod sweep;

pub use geometry::{Aabb, Frame, Segment, Vec3};
