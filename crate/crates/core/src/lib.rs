//! Lattice constructions of Kakeya-type sets, large-scale dimension
//! estimates, and the experiment harness around them.

pub mod constructions;
pub mod dimension;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod numfmt;
pub mod scalars;

pub use constructions::{ChunkSet, Count, GrowthPolicy, Level, PointSet, SetKind, SetParams};
pub use geometry::{Box, ConeParams, Coord, LineParams, Tube, TubeParams};
pub use scalars::{LogRatio, LogScalar};
