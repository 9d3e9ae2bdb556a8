//! Synthetic district: exogenous hourly data plus controllable batteries.

mod dataset;
mod district;

pub use dataset::{month_of_row, Dataset, SyntheticParams, HOURS_PER_YEAR};
pub use district::{
    Action, BatteryParams, DistrictEnv, DistrictState, EnvConfig, Observation, StepOutcome, EXOGENOUS_FEATURES,
};
