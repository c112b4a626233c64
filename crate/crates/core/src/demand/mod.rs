//! Demand model: distribution families, newsvendor cost, order quantities and
//! the variation / accuracy functionals used to classify instances.

mod family;
mod variation;

pub use family::{CostRates, DemandFamily, FamilyKind, MeanBounds, QuantitySpace, RateSchedule};
pub use variation::{demand_variation, demand_variation_dp, exponent_of, prediction_error, raw_exponent};
