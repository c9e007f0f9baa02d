//! File formats and image-derived inputs.

pub mod color;
pub mod orientation;
pub mod ppm;
pub mod tensor;
pub mod tvf;
