//! Online ordering policies.
//!
//! Every policy is a two-phase step engine: [`OrderPolicy::order`] is called
//! with the information available before period `t`'s demand is revealed
//! (the prediction `a_t` and the period's cost rates), then
//! [`OrderPolicy::observe`] delivers the realized demand `d_t`.

mod exp3;
mod fixed;
mod history;
mod perp;
mod prediction;
mod shrinking;
mod spec;

use std::sync::Arc;

use serde::Serialize;

use crate::demand::{CostRates, DemandFamily, MeanBounds, QuantitySpace};
use crate::error::{Error, Result};

pub use exp3::{exp3_mixing, Exp3Policy};
pub use fixed::FixedWindowPolicy;
pub use history::{rolling_mean_estimate, DemandHistory};
pub use perp::PerpPolicy;
pub use prediction::{ConstantPolicy, PredictionPolicy};
pub use shrinking::{CandidateGrid, ShrinkingWindowPolicy};
pub use spec::{divide_into_cases, BuildEnv, PolicySpec};

/// Hoeffding-type constant `rho = 1 / (144 e)` used in the threshold conditions.
pub const HOEFFDING_RHO: f64 = 1.0 / (144.0 * std::f64::consts::E);

/// Something the policy decided that is worth keeping in the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum PolicyEvent {
    /// The shrinking-window policy moved to candidate `index` (1-based).
    IndexIncrement { t: usize, index: usize },
    /// PERP abandoned the predictions for the fixed window.
    Switch { t: usize },
    /// Exp3 drew `arm` (0 or 1) with probability `prob`.
    ArmDraw { t: usize, arm: usize, prob: f64 },
}

pub trait OrderPolicy: Send {
    /// Order quantity for period `t` (1-based).
    fn order(&mut self, t: usize, prediction: Option<f64>, rates: CostRates) -> Result<f64>;

    /// Realized demand of the period just ordered for.
    fn observe(&mut self, demand: f64);

    /// Drain the events logged since the last call.
    fn take_events(&mut self) -> Vec<PolicyEvent> {
        Vec::new()
    }
}

/// The map from an estimated mean to an order quantity, shared by all policies
/// of an episode.
#[derive(Debug, Clone)]
pub struct Setting {
    family: DemandFamily,
    space: QuantitySpace,
}

impl Setting {
    pub fn new(family: DemandFamily, space: QuantitySpace) -> Arc<Self> {
        Arc::new(Self { family, space })
    }

    pub fn family(&self) -> &DemandFamily {
        &self.family
    }

    pub fn space(&self) -> &QuantitySpace {
        &self.space
    }

    pub fn bounds(&self) -> MeanBounds {
        self.family.bounds()
    }

    /// `argmin_q C(mu_hat, q)` after rounding `mu_hat` into the mean bounds.
    pub fn order_for(&self, mu_hat: f64, rates: CostRates) -> Result<f64> {
        if mu_hat.is_nan() {
            return Err(Error::domain("mean estimate is NaN"));
        }
        self.family.optimal_quantity(self.bounds().clamp(mu_hat), rates, &self.space)
    }

    /// Order used before a windowed policy has enough history.
    pub fn warm_up_order(&self, rates: CostRates) -> Result<f64> {
        self.order_for(self.bounds().midpoint(), rates)
    }
}

/// `kappa`, `gamma` and the sub-Gaussian norm `delta` entering the change
/// thresholds of the shrinking-window policy and PERP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdConstants {
    pub kappa: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl ThresholdConstants {
    pub fn new(kappa: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::domain(format!("kappa must be positive, got {kappa}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("gamma must be nonnegative, got {gamma}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("delta must be nonnegative, got {delta}")));
        }
        Ok(Self { kappa, gamma, delta })
    }

    /// `kappa = gamma = 1`, the setting used in the experiments.
    pub fn experiment(delta: f64) -> Self {
        Self { kappa: 1.0, gamma: 1.0, delta }
    }

    /// Smallest `gamma` with `rho kappa gamma^2 / delta^2 >= bound`.
    fn smallest_gamma(kappa: f64, delta: f64, bound: f64) -> f64 {
        delta * (bound / (HOEFFDING_RHO * kappa)).sqrt()
    }

    /// Constants for the shrinking-window policy: `rho kappa gamma^2 / delta^2 >= 5/2`.
    pub fn theory_shrinking(kappa: f64, delta: f64) -> Result<Self> {
        Self::new(kappa, Self::smallest_gamma(kappa, delta, 2.5), delta)
    }

    /// Constants for PERP: `rho kappa gamma^2 / delta^2 >= 2`.
    pub fn theory_perp(kappa: f64, delta: f64) -> Result<Self> {
        Self::new(kappa, Self::smallest_gamma(kappa, delta, 2.0), delta)
    }

    fn ratio(&self) -> f64 {
        if self.delta == 0.0 {
            return f64::INFINITY;
        }
        HOEFFDING_RHO * self.kappa * self.gamma * self.gamma / (self.delta * self.delta)
    }

    pub fn satisfies_shrinking(&self) -> bool {
        self.ratio() >= 2.5 * (1.0 - 1e-12)
    }

    pub fn satisfies_perp(&self) -> bool {
        self.ratio() >= 2.0 * (1.0 - 1e-12)
    }
}

/// Window length `ceil(kappa T^((1 - v) / 2))`, at least one.
pub fn window_length(kappa: f64, horizon: usize, v: f64) -> usize {
    let n = (kappa * (horizon as f64).powf((1.0 - v) / 2.0)).ceil();
    (n as usize).max(1)
}

pub(crate) fn check_exponent(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

pub(crate) fn check_horizon(horizon: usize) -> Result<()> {
    if horizon < 2 {
        return Err(Error::domain(format!("horizon must be at least 2, got {horizon}")));
    }
    Ok(())
}

pub(crate) fn require_prediction(prediction: Option<f64>, t: usize) -> Result<f64> {
    match prediction {
        Some(a) if a.is_finite() => Ok(a),
        Some(a) => Err(Error::domain(format!("prediction for period {t} is not finite: {a}"))),
        None => Err(Error::Incompatible(format!("policy needs a prediction for period {t}"))),
    }
}
