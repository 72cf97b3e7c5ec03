//! Gradual visual-intensity experimentation engine.
//!
//! A decomposable interface object is served at per-element intensity
//! levels that follow flat, increasing, decreasing, or pulse schedules.
//! Exposure and response events aggregate into per-level statistics whose
//! derived factors feed time-series comparison (Minkowski, DTW, Pearson)
//! and saturation-point detection, which in turn feeds serving limits back
//! into the decision loop. A calibrated user simulator exercises the whole
//! pipeline end to end, and bundled reference fixtures pin the arithmetic.

pub mod error;
pub mod eventlog;
pub mod figures;
pub mod fixtures;
pub mod group;
pub mod metrics;
pub mod object;
pub mod replay;
pub mod report;
pub mod rounding;
pub mod saturation;
pub mod schedule;
pub mod series;
pub mod serving;
pub mod simulate;

pub use error::{Error, Result};
pub use group::Group;
pub use metrics::{EventKind, ExposureCounts, ExposureEvent, LevelStats};
pub use object::{ElementSpec, LevelVector, ObjectSpec};
pub use saturation::SaturationReport;
pub use schedule::{SchedulePolicy, ScheduleStep};
pub use series::ResponseSeries;
pub use serving::{DecisionRequest, DecisionResponse, ServingParams};
pub use simulate::{BehaviorModel, SimConfig};
