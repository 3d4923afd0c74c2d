//! Sound per-tile error bounds for neural networks that estimate the state of
//! a modelled observation process.
//!
//! The state space is partitioned into tiles. For each tile the library
//! over-approximates the set of images the camera can produce
//! ([`tiling::bounding_box`]), propagates that box through the network with
//! a sound bound engine ([`bounds`]), and compares the output range with the
//! tile's ground truth ([`verifier`]). Empirical estimates ([`estimator`])
//! and reports ([`report`]) summarise how tight the bounds are.
//!
//! The road-scene camera lives in [`scene`]; weight files in [`network`];
//! the file-level pipeline behind the `tiler` binary in [`commands`].

pub mod bounds;
pub mod commands;
pub mod error;
pub mod estimator;
pub mod interval;
pub mod network;
pub mod pgm;
pub mod records;
pub mod report;
pub mod scene;
pub mod tiling;
pub mod verifier;

pub use bounds::{BoundMethod, InputBox, OutputIntervals};
pub use error::{Error, Result};
pub use interval::Interval;
pub use network::Network;
pub use scene::{render, CameraState, Image, SceneConfig};
pub use tiling::{bounding_box, make_grid, PixelBox, StateRegion, StateSpace};
pub use verifier::{LocalBound, Observation, RoadCamera, TileResult, TilerPlan};
