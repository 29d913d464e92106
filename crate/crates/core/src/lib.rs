//! Body-dimension measurement on triangle meshes.
//!
//! Coordinates are meters with y up; the subject faces +z, so the right side
//! of the body is at negative x.

pub mod anthropometry;
pub mod dataset;
pub mod geometry;
pub mod mesh;
pub mod raster;
pub mod synth;
