//! Geometry of proper losses on the probability simplex.
//!
//! Losses are stored as exact expression trees; every derivative that feeds
//! a curvature comes from second-order jets. Binary curvature, weights,
//! mixability constants and canonical links live in [`geom2`], multi-class
//! second fundamental forms and the mixability pencil in [`geomn`], and the
//! support-function view in [`convex`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod error;
pub mod geom2;
pub mod geomn;
pub mod lossdsl;
pub mod losses;
pub mod numerics;
pub mod simplex;

pub use error::{Error, Result};
pub use losses::Loss;
pub use simplex::{ChartPoint, Grid, SimplexPoint};
