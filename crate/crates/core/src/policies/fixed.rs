use std::sync::Arc;

use super::{check_exponent, check_horizon, window_length, DemandHistory, OrderPolicy, Setting};
use crate::demand::CostRates;
use crate::error::Result;

/// Averages the last `n = ceil(kappa T^((1 - v) / 2))` demands and orders
/// optimally against that estimate.
#[derive(Debug, Clone)]
pub struct FixedWindowPolicy {
    setting: Arc<Setting>,
    window: usize,
    history: DemandHistory,
}

impl FixedWindowPolicy {
    pub fn new(setting: Arc<Setting>, v: f64, kappa: f64, horizon: usize) -> Result<Self> {
        check_exponent("variation parameter v", v)?;
        check_horizon(horizon)?;
        if !(kappa > 0.0) {
            return Err(crate::Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self::with_window(setting, window_length(kappa, horizon, v)))
    }

    pub fn with_window(setting: Arc<Setting>, window: usize) -> Self {
        Self { setting, window: window.max(1), history: DemandHistory::new() }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Unclamped window mean, once `n` demands have been seen.
    pub fn raw_estimate(&self) -> Option<f64> {
        self.history.window_mean(self.window)
    }

    /// Clamped window mean, once `n` demands have been seen.
    pub fn estimate(&self) -> Option<f64> {
        self.raw_estimate().map(|m| self.setting.bounds().clamp(m))
    }
}

impl OrderPolicy for FixedWindowPolicy {
    fn order(&mut self, _t: usize, _prediction: Option<f64>, rates: CostRates) -> Result<f64> {
        match self.estimate() {
            Some(mu) => self.setting.order_for(mu, rates),
            None => self.setting.warm_up_order(rates),
        }
    }

    fn observe(&mut self, demand: f64) {
        self.history.push(demand);
    }
}
