//! Iterated function systems of similarities, cylinders, the disjointified partition and the
//! self-similar measure.

mod exact;
mod file;
mod presets;
mod similarity;
mod system;

pub use exact::{ExactIfs, ExactMap};
pub use file::{parse_ifs_file, IfsFile, Number};
pub use presets::{preset, PRESET_NAMES};
pub use similarity::SimilarityMap;
pub use system::{similarity_dimension, AxisBox, CylinderInfo, IfsSystem, Word, TOL_GEOM};

#[cfg(test)]
mod tests;
