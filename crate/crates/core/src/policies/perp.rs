use std::sync::Arc;

use super::{
    check_exponent, check_horizon, require_prediction, window_length, FixedWindowPolicy, OrderPolicy, PolicyEvent,
    Setting, ThresholdConstants,
};
use crate::demand::CostRates;
use crate::error::Result;

/// Follows the predictions until their cumulative disagreement with the
/// fixed-window estimate crosses `(gamma sqrt(ln T) + sqrt(kappa) + 1) T^((3+v)/4)`,
/// then hands over to the fixed-window policy for good.
///
/// The disagreement compares the raw prediction with the raw window mean.
/// No switch happens at or before period `min_follow`.
#[derive(Debug, Clone)]
pub struct PerpPolicy {
    setting: Arc<Setting>,
    fixed: FixedWindowPolicy,
    threshold: f64,
    min_follow: usize,
    disagreement: f64,
    switched_at: Option<usize>,
    events: Vec<PolicyEvent>,
}

impl PerpPolicy {
    pub fn new(
        setting: Arc<Setting>,
        v: f64,
        consts: ThresholdConstants,
        horizon: usize,
        min_follow: usize,
    ) -> Result<Self> {
        check_exponent("variation parameter v", v)?;
        check_horizon(horizon)?;
        let window = window_length(consts.kappa, horizon, v);
        let threshold = perp_threshold(consts, horizon, v);
        Ok(Self {
            fixed: FixedWindowPolicy::with_window(setting.clone(), window),
            setting,
            threshold,
            min_follow,
            disagreement: 0.0,
            switched_at: None,
            events: Vec::new(),
        })
    }

    pub fn window(&self) -> usize {
        self.fixed.window()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn switched_at(&self) -> Option<usize> {
        self.switched_at
    }

    pub fn disagreement(&self) -> f64 {
        self.disagreement
    }
}

/// Switching threshold `(gamma sqrt(ln T) + sqrt(kappa) + 1) T^((3 + v)/4)`.
pub(crate) fn perp_threshold(consts: ThresholdConstants, horizon: usize, v: f64) -> f64 {
    let t = horizon as f64;
    (consts.gamma * t.ln().sqrt() + consts.kappa.sqrt() + 1.0) * t.powf((3.0 + v) / 4.0)
}

impl OrderPolicy for PerpPolicy {
    fn order(&mut self, t: usize, prediction: Option<f64>, rates: CostRates) -> Result<f64> {
        if self.switched_at.is_some() {
            return self.fixed.order(t, prediction, rates);
        }
        let a = require_prediction(prediction, t)?;
        if let Some(window_mean) = self.fixed.raw_estimate() {
            self.disagreement += (a - window_mean).abs();
            if self.disagreement >= self.threshold && t > self.min_follow {
                self.switched_at = Some(t);
                self.events.push(PolicyEvent::Switch { t });
                return self.fixed.order(t, prediction, rates);
            }
        }
        self.setting.order_for(a, rates)
    }

    fn observe(&mut self, demand: f64) {
        self.fixed.observe(demand);
    }

    fn take_events(&mut self) -> Vec<PolicyEvent> {
        std::mem::take(&mut self.events)
    }
}
