//! Mass and counting dimension estimators, tube slices, the densest-box
//! search and parameter sweeps.

mod boxsearch;
mod sweep;
mod trace;

use thiserror::Error;

pub use boxsearch::{max_count_box, max_count_box_brute, BestBox};
pub use sweep::{
    good_parameter_density, literal_region_density, slope_region_density, sweep_slices, ParamKind, SweepRegion,
    SweepRow, SweepTable,
};
pub use trace::{
    counting_dim_trace, designated_boxes, limsup_estimate, mass_dim_trace, mass_scales, paper_mass_ratio, slice,
    slice_dim_trace, slice_mass_trace, BoxSchedule, DimensionTrace, LimsupEstimate, Mode, SetRef, SliceOutcome,
    TraceRecord, Trend,
};

use crate::constructions::ConstructionError;
use crate::geometry::GeometryError;
use crate::scalars::ScalarError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DimensionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty point set")]
    EmptySet,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

impl From<GeometryError> for DimensionError {
    fn from(e: GeometryError) -> Self {
        let GeometryError::InvalidParameter(m) = e;
        DimensionError::InvalidParameter(m)
    }
}
