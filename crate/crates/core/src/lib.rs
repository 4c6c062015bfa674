//! Numerical laboratory for p-centro-affine curvature flows of centrally
//! symmetric convex curves, represented through their support functions.

pub mod circle_field;
pub mod convex_body;
pub mod affine_frame;
pub mod error;
pub mod flow_engine;
pub mod lab_cli;
pub mod verifier;

pub use circle_field::{AngularGrid, PeriodicField};
pub use convex_body::{hausdorff_distance, mixed_volume, BodySummary, SupportBody};
pub use error::{Error, Result};
