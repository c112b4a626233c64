use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    check_exponent, ConstantPolicy, Exp3Policy, FixedWindowPolicy, OrderPolicy, PerpPolicy, PredictionPolicy, Setting,
    ShrinkingWindowPolicy, ThresholdConstants,
};
use crate::demand::RateSchedule;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Everything a policy constructor may depend on besides its own parameters.
pub struct BuildEnv<'a> {
    pub setting: Arc<Setting>,
    pub rates: &'a RateSchedule,
    pub horizon: usize,
    pub has_predictions: bool,
    /// Seed of the episode; randomized policies derive their own stream from it.
    pub seed: u64,
}

impl BuildEnv<'_> {
    /// Per-period cost bound over means in bounds and any quantity a policy can
    /// emit: the space's maximum, or the largest unconstrained optimum.
    pub fn default_c_max(&self) -> Result<f64> {
        let rates = self.rates.max_rates();
        let q_max = match self.setting.space().max_quantity() {
            Some(q) => q,
            None => self.setting.order_for(self.setting.bounds().max, rates)?,
        };
        Ok(self.setting.family().cost_upper_bound(rates, q_max))
    }

    fn delta(&self) -> f64 {
        self.setting.family().subgaussian_norm()
    }
}

/// Declarative description of a policy; `gamma: None` selects the smallest
/// value meeting the policy's threshold condition for the family's `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    FixedWindow {
        v: f64,
        #[serde(default = "one")]
        kappa: f64,
    },
    ShrinkingWindow {
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default)]
        gamma: Option<f64>,
    },
    Prediction,
    Perp {
        v: f64,
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        min_follow: usize,
    },
    Exp3 {
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        c_max: Option<f64>,
    },
    DivideIntoCases {
        a: f64,
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        c_max: Option<f64>,
    },
    Constant {
        quantity: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl PolicySpec {
    pub fn requires_predictions(&self) -> bool {
        match self {
            PolicySpec::FixedWindow { .. } | PolicySpec::ShrinkingWindow { .. } | PolicySpec::Constant { .. } => false,
            PolicySpec::Prediction | PolicySpec::Perp { .. } | PolicySpec::Exp3 { .. } => true,
            PolicySpec::DivideIntoCases { .. } => true,
        }
    }

    pub fn build(&self, env: &BuildEnv) -> Result<Box<dyn OrderPolicy>> {
        if self.requires_predictions() && !env.has_predictions {
            return Err(Error::Incompatible(format!("{} needs a prediction sequence", self.label())));
        }
        let setting = env.setting.clone();
        Ok(match *self {
            PolicySpec::FixedWindow { v, kappa } => Box::new(FixedWindowPolicy::new(setting, v, kappa, env.horizon)?),
            PolicySpec::ShrinkingWindow { kappa, gamma } => Box::new(shrinking(env, kappa, gamma)?),
            PolicySpec::Prediction => Box::new(PredictionPolicy::new(setting)),
            PolicySpec::Perp { v, kappa, gamma, min_follow } => {
                let consts = match gamma {
                    Some(g) => ThresholdConstants::new(kappa, g, env.delta())?,
                    None => ThresholdConstants::theory_perp(kappa, env.delta())?,
                };
                Box::new(PerpPolicy::new(setting, v, consts, env.horizon, min_follow)?)
            }
            PolicySpec::Exp3 { kappa, gamma, c_max } => exp3(env, kappa, gamma, c_max)?,
            PolicySpec::DivideIntoCases { a, kappa, gamma, c_max } => {
                divide_into_cases(a, || exp3(env, kappa, gamma, c_max), setting)?
            }
            PolicySpec::Constant { quantity } => Box::new(ConstantPolicy::new(&setting, quantity)?),
        })
    }

    /// Short kebab-case kind name.
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::FixedWindow { .. } => "fixed-window",
            PolicySpec::ShrinkingWindow { .. } => "shrinking-window",
            PolicySpec::Prediction => "prediction",
            PolicySpec::Perp { .. } => "perp",
            PolicySpec::Exp3 { .. } => "exp3",
            PolicySpec::DivideIntoCases { .. } => "divide-into-cases",
            PolicySpec::Constant { .. } => "constant",
        }
    }
}

fn shrinking(env: &BuildEnv, kappa: f64, gamma: Option<f64>) -> Result<ShrinkingWindowPolicy> {
    let consts = match gamma {
        Some(g) => ThresholdConstants::new(kappa, g, env.delta())?,
        None => ThresholdConstants::theory_shrinking(kappa, env.delta())?,
    };
    ShrinkingWindowPolicy::new(env.setting.clone(), consts, env.horizon)
}

fn exp3(env: &BuildEnv, kappa: f64, gamma: Option<f64>, c_max: Option<f64>) -> Result<Box<dyn OrderPolicy>> {
    let c_max = match c_max {
        Some(c) => c,
        None => env.default_c_max()?,
    };
    let first = Box::new(shrinking(env, kappa, gamma)?);
    let second = Box::new(PredictionPolicy::new(env.setting.clone()));
    let rng = stream(env.seed, Stream::Policy);
    Ok(Box::new(Exp3Policy::new(first, second, c_max, env.horizon, rng)?))
}

/// The prediction policy when `a <= 1/2`, otherwise the result of `exp3`.
pub fn divide_into_cases<F>(a: f64, exp3: F, setting: Arc<Setting>) -> Result<Box<dyn OrderPolicy>>
where
    F: FnOnce() -> Result<Box<dyn OrderPolicy>>,
{
    check_exponent("accuracy parameter a", a)?;
    if a <= 0.5 {
        Ok(Box::new(PredictionPolicy::new(setting)))
    } else {
        exp3()
    }
}
