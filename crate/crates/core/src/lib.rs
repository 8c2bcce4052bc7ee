//! Visuo-tactile bio-inspired SLAM.
//!
//! Camera frames become 1D local view templates, whisker contacts and
//! deflections become tactile templates (a planar point feature histogram
//! plus a slope distribution array). Matched templates from either modality
//! inject energy into a shared 3D pose-cell attractor over (x, y, θ), which
//! also path-integrates odometry. A semi-metric experience map binds
//! pose-cell peaks to template ids, detects loop closures and relaxes the
//! resulting graph.
//!
//! The [`sim`] module provides a desk-scale 2D stand-in for a whiskered
//! robot (ray-cast camera, 24-whisker array with contact-arrested
//! protraction, scripted landmark orbits, noisy odometry) and
//! [`pipeline`] wires everything into a single per-cycle loop.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod expmap;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod plots;
pub mod posecell;
pub mod sim;
pub mod tactile;
pub mod visual;

pub use config::Config;
pub use error::{Error, Result};
pub use expmap::{Experience, ExperienceMap, Link, LoopClosureEvent, MapUpdate};
pub use geometry::{wrap_angle, Point2, Pose, Twist};
pub use metrics::{ate, Ate};
pub use pipeline::{compare, run, run_frames, ComparisonReport, Mode, RunConfig, RunReport};
pub use posecell::{PoseCellGrid, PoseCellParams, PoseEstimate};
pub use tactile::{TactileTemplate, WhiskCycleData};
pub use visual::{GrayImage, MatchResult, RgbImage, TemplateId, ViewTemplate};
