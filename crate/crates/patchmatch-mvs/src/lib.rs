//! Multi-view stereo depth estimation on CPU.
//!
//! Given a set of calibrated images (COLMAP-style `cameras.txt` /
//! `images.txt` plus an `images/` folder), the library estimates one depth,
//! normal and cost map per view and fuses them into a single oriented point
//! cloud. The optimizer is a PatchMatch variant built from four pieces:
//!
//! - **Multi-scale sparse windows** — photometric consistency is measured on
//!   a fixed 36-point stencil whose footprint shrinks scale by scale, so
//!   low-texture regions are matched with a wide receptive field first and
//!   refined with a narrow one afterwards ([`cost::SparseWindow`]).
//! - **Distant-region checkerboard propagation** — plane hypotheses are
//!   sampled from eight regions placed well away from the pixel being
//!   updated, which propagates reliable hypotheses across texture gaps
//!   ([`engine::PropagationStencil`]).
//! - **Geometric consistency** — cross-view forward/backward reprojection
//!   error both augments the matching cost and gates which pixels may become
//!   planar-prior anchors ([`geometry::forward_backward_error`]).
//! - **Triangulated planar prior** — reliable anchors are Delaunay
//!   triangulated and the per-triangle planes supply prior depths that
//!   rectify the photometric cost in untextured areas ([`prior`]).
//!
//! The high-level entry point is [`pipeline::run_estimate`] followed by
//! [`fusion::fuse`]; the `mvs` binary wraps both. Each major capability also
//! has a runnable example under `examples/`.
//!
//! Everything is deterministic: per-pixel random streams are derived from
//! `(seed, pass, pixel)`, so results are bit-identical regardless of the
//! worker thread count.

pub mod cost;
pub mod engine;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod pipeline;
pub mod prior;
pub mod rng;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::PlaneHypothesis;
pub use scene::{CameraModel, GrayImage, Raster, Scene, View};
