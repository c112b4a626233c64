use std::sync::Arc;

use super::{require_prediction, OrderPolicy, Setting};
use crate::demand::CostRates;
use crate::error::{Error, Result};

/// Treats each prediction as the true mean.
#[derive(Debug, Clone)]
pub struct PredictionPolicy {
    setting: Arc<Setting>,
}

impl PredictionPolicy {
    pub fn new(setting: Arc<Setting>) -> Self {
        Self { setting }
    }
}

impl OrderPolicy for PredictionPolicy {
    fn order(&mut self, t: usize, prediction: Option<f64>, rates: CostRates) -> Result<f64> {
        let a = require_prediction(prediction, t)?;
        self.setting.order_for(a, rates)
    }

    fn observe(&mut self, _demand: f64) {}
}

/// Orders the same quantity every period. Useful as a bandit arm or baseline.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    quantity: f64,
}

impl ConstantPolicy {
    pub fn new(setting: &Setting, quantity: f64) -> Result<Self> {
        if !setting.space().contains(quantity) {
            return Err(Error::domain(format!("constant order {quantity} is not in the quantity space")));
        }
        Ok(Self { quantity })
    }
}

impl OrderPolicy for ConstantPolicy {
    fn order(&mut self, _t: usize, _prediction: Option<f64>, _rates: CostRates) -> Result<f64> {
        Ok(self.quantity)
    }

    fn observe(&mut self, _demand: f64) {}
}
