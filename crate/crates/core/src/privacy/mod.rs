//! Laplace noise, regional aggregation, mechanism calibration and checks.

pub mod aggregate;
pub mod dp_test;
pub mod laplace;
pub mod mechanism;
pub mod rng;
pub mod sensitivity;

pub use aggregate::{aggregate, AggregateVector, RegionPartition};
pub use dp_test::{dp_ratio_test, histogram_log_ratio, DpTestOptions, DpTestReport};
pub use laplace::{laplace_sample, Laplace};
pub use mechanism::{
    aggregation_scale, general_mechanism_scale, release_aggregates, MechanismConfig, MechanismMode, Release,
};
pub use sensitivity::{
    estimate_l1_sensitivity, AggregationQuery, LoadQuery, OperatingPointQuery, SensitivityEstimate,
};
