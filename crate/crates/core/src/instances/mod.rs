//! Problem instances and their generators.

mod data;
mod holt_winters;
mod lower_bound;

use rand::Rng;
use serde::Serialize;

use crate::demand::{exponent_of, prediction_error, DemandFamily, QuantitySpace, RateSchedule};
use crate::error::{Error, Result};

pub use data::{
    fit_residual_family, load_predictions, load_timeseries, real_data_instance, split_train_test, write_series,
    RealDataOptions, TimeSeries,
};
pub use holt_winters::{
    gen_holt_winters_instance, holt_winters_forecast, synthetic_history, HoltWinters, HoltWintersParams,
    HoltWintersSetup,
};
pub use lower_bound::{gen_indistinguishable_pair, gen_lower_bound_cycles, LowerBoundCase, LowerBoundLayout};

/// What is known about how an instance was built.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InstanceMeta {
    pub label: String,
    /// Variation exponent `v` the instance was built for, if any.
    pub v_true: Option<f64>,
    /// Accuracy exponent `a` the instance was built for, if any.
    pub a_true: Option<f64>,
    /// Variation exponent measured on the pre-horizon history, if one exists.
    pub history_v: Option<f64>,
    /// Free-form flags, e.g. when a measured exponent saturated at one.
    pub notes: Vec<String>,
}

/// A full problem instance over horizon `T = means.len()`.
#[derive(Debug, Clone, Serialize)]
pub struct Instance {
    family: DemandFamily,
    means: Vec<f64>,
    rates: RateSchedule,
    space: QuantitySpace,
    predictions: Option<Vec<f64>>,
    /// Pre-drawn demands; when present they replace sampling from the family.
    realized: Option<Vec<f64>>,
    meta: InstanceMeta,
}

impl Instance {
    pub fn new(family: DemandFamily, means: Vec<f64>, rates: RateSchedule, space: QuantitySpace) -> Result<Self> {
        let inst =
            Instance { family, means, rates, space, predictions: None, realized: None, meta: InstanceMeta::default() };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_predictions(mut self, predictions: Vec<f64>) -> Result<Self> {
        self.predictions = Some(predictions);
        self.validate()?;
        Ok(self)
    }

    pub fn with_realized(mut self, demands: Vec<f64>) -> Result<Self> {
        self.realized = Some(demands);
        self.validate()?;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: InstanceMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Replace the predictions with `mu_t + offset`.
    pub fn with_prediction_offset(self, offset: f64) -> Result<Self> {
        let preds = self.means.iter().map(|m| m + offset).collect();
        self.with_predictions(preds)
    }

    /// Check lengths, bounds and finiteness.
    pub fn validate(&self) -> Result<()> {
        let t = self.means.len();
        if t == 0 {
            return Err(Error::domain("instance has an empty horizon"));
        }
        let bounds = self.family.bounds();
        if let Some((i, m)) = self.means.iter().enumerate().find(|(_, m)| !bounds.contains(**m)) {
            return Err(Error::domain(format!(
                "mean {m} at period {} outside [{}, {}]",
                i + 1,
                bounds.min,
                bounds.max
            )));
        }
        if let RateSchedule::PerPeriod(r) = &self.rates {
            if r.len() != t {
                return Err(Error::domain(format!("{} rate pairs for horizon {t}", r.len())));
            }
        }
        for (name, seq) in [("predictions", &self.predictions), ("realized demands", &self.realized)] {
            if let Some(s) = seq {
                if s.len() != t {
                    return Err(Error::domain(format!("{} {name} for horizon {t}", s.len())));
                }
                if s.iter().any(|x| !x.is_finite()) {
                    return Err(Error::domain(format!("{name} must be finite")));
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.means.len()
    }

    pub fn family(&self) -> &DemandFamily {
        &self.family
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn rates(&self) -> &RateSchedule {
        &self.rates
    }

    pub fn space(&self) -> &QuantitySpace {
        &self.space
    }

    pub fn predictions(&self) -> Option<&[f64]> {
        self.predictions.as_deref()
    }

    pub fn realized(&self) -> Option<&[f64]> {
        self.realized.as_deref()
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut InstanceMeta {
        &mut self.meta
    }

    /// Demand of zero-based period `t`: the pre-drawn value if any, else a draw.
    pub fn demand<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> f64 {
        match &self.realized {
            Some(d) => d[t],
            None => self.family.sample(self.means[t], rng),
        }
    }

    /// Measured `exponent_of(V_mu)` with squared increments.
    pub fn measured_v(&self) -> f64 {
        let v = crate::demand::demand_variation(&self.means, 2.0).expect("validated means");
        exponent_of(v, self.horizon())
    }

    /// Measured accuracy exponent, if the instance has predictions.
    pub fn measured_a(&self) -> Option<f64> {
        let p = self.predictions.as_ref()?;
        let err = prediction_error(p, &self.means).expect("validated lengths");
        Some(exponent_of(err, self.horizon()))
    }
}
