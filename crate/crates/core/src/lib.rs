//! Finite metric measure spaces, Hajłasz gradients, the classical test-function
//! constructions, and certified lower mass bounds extracted from measured
//! embedding constants.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, hashing and the
//! command-line driver live in the companion `hajlasz-lab` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constructions;
pub mod corpus;
pub mod embeddings;
pub mod extraction;
pub mod geometry;
pub mod hajlasz;
pub mod mmspace;

mod num;

pub use mmspace::{validate_space, Ball, MetricMeasureSpace, PointSet, RawSpace, SpaceError};
