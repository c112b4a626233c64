use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Instance, InstanceMeta};
use crate::demand::{
    demand_variation, exponent_of, prediction_error, CostRates, DemandFamily, MeanBounds, QuantitySpace, RateSchedule,
};
use crate::error::{Error, Result};

/// Smoothing factors and season length of multiplicative Holt-Winters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltWintersParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub season: usize,
}

impl HoltWintersParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, season: usize) -> Result<Self> {
        let p = Self { alpha, beta, gamma, season };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::domain(format!("Holt-Winters {name} must lie in [0, 1], got {x}")));
            }
        }
        if self.season == 0 {
            return Err(Error::domain("Holt-Winters season length must be at least 1"));
        }
        Ok(())
    }
}

/// Level, trend and seasonal state after consuming a series.
///
/// Initialization uses the first season: level `x_0`, trend the mean
/// consecutive difference over the season, seasonal factors `x_i` over the
/// season mean. Each later observation updates
///
/// ```text
/// s_t = alpha x_t / c_{t-L} + (1 - alpha)(s_{t-1} + b_{t-1})
/// b_t = beta (s_t - s_{t-1}) + (1 - beta) b_{t-1}
/// c_t = gamma x_t / s_t + (1 - gamma) c_{t-L}
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct HoltWinters {
    params: HoltWintersParams,
    level: f64,
    trend: f64,
    seasonals: Vec<f64>,
    /// Index of the last consumed observation.
    last: usize,
}

impl HoltWinters {
    pub fn fit(history: &[f64], params: HoltWintersParams) -> Result<Self> {
        params.validate()?;
        let l = params.season;
        if history.len() < l {
            return Err(Error::domain(format!(
                "Holt-Winters needs at least one season ({l}) of history, got {}",
                history.len()
            )));
        }
        if let Some(x) = history.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::domain(format!("Holt-Winters history must be positive, got {x}")));
        }
        let season_mean = history[..l].iter().sum::<f64>() / l as f64;
        let trend = if l > 1 { (history[l - 1] - history[0]) / (l - 1) as f64 } else { 0.0 };
        let mut hw = HoltWinters {
            params,
            level: history[0],
            trend,
            seasonals: history[..l].iter().map(|x| x / season_mean).collect(),
            last: 0,
        };
        for &x in &history[1..] {
            hw.update(x);
        }
        Ok(hw)
    }

    /// Consume the next observation.
    pub fn update(&mut self, x: f64) {
        let HoltWintersParams { alpha, beta, gamma, season } = self.params;
        let t = self.last + 1;
        let slot = t % season;
        let prev = self.level;
        self.level = alpha * x / self.seasonals[slot] + (1.0 - alpha) * (prev + self.trend);
        self.trend = beta * (self.level - prev) + (1.0 - beta) * self.trend;
        self.seasonals[slot] = gamma * x / self.level + (1.0 - gamma) * self.seasonals[slot];
        self.last = t;
    }

    /// Forecast `m >= 1` steps past the last observation.
    pub fn forecast(&self, m: usize) -> f64 {
        let slot = (self.last + m) % self.params.season;
        (self.level + m as f64 * self.trend) * self.seasonals[slot]
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn trend(&self) -> f64 {
        self.trend
    }
}

/// Forecasts `1..=m` steps past the end of `history`.
pub fn holt_winters_forecast(history: &[f64], params: HoltWintersParams, m: usize) -> Result<Vec<f64>> {
    let hw = HoltWinters::fit(history, params)?;
    Ok((1..=m).map(|k| hw.forecast(k)).collect())
}

/// `len` i.i.d. draws uniform on `[lo, hi]`.
pub fn synthetic_history<R: Rng + ?Sized>(rng: &mut R, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Knobs of the synthetic Holt-Winters instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltWintersSetup {
    pub horizon: usize,
    /// Variance of the Gaussian noise added to each generated mean.
    pub noise_variance: f64,
    /// Truncation multiplier of the Poisson demand.
    pub poisson_k: f64,
    /// Generated means are floored here so every Poisson mean stays positive.
    pub mean_floor: f64,
}

impl Default for HoltWintersSetup {
    fn default() -> Self {
        Self { horizon: 365, noise_variance: 5.0, poisson_k: 10.0, mean_floor: 1.0 }
    }
}

/// Synthetic instance: means are the Holt-Winters forecast path of `params`
/// fitted on `history`, plus independent Gaussian noise and floored at
/// `setup.mean_floor`; predictions are the forecasts of a model with `pred_params`.
///
/// The family is a truncated Poisson over `[min mean, max mean]` with unit
/// cost rates. `meta.v_true` and `meta.a_true` hold the measured exponents.
pub fn gen_holt_winters_instance<R: Rng + ?Sized>(
    history: &[f64],
    params: HoltWintersParams,
    pred_params: HoltWintersParams,
    setup: HoltWintersSetup,
    rng: &mut R,
) -> Result<Instance> {
    if setup.horizon == 0 {
        return Err(Error::domain("horizon must be positive"));
    }
    if !(setup.noise_variance >= 0.0) || !(setup.mean_floor > 0.0) {
        return Err(Error::domain("noise variance must be >= 0 and the mean floor > 0"));
    }
    let noise = Normal::new(0.0, setup.noise_variance.sqrt()).map_err(|e| Error::domain(e.to_string()))?;
    let means: Vec<f64> = holt_winters_forecast(history, params, setup.horizon)?
        .into_iter()
        .map(|f| (f + noise.sample(rng)).max(setup.mean_floor))
        .collect();
    let predictions = holt_winters_forecast(history, pred_params, setup.horizon)?;

    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let family = DemandFamily::truncated_poisson(setup.poisson_k, MeanBounds::new(lo, hi)?)?;
    let t = setup.horizon;
    let mut notes = Vec::new();
    let v_raw = demand_variation(&means, 2.0)?;
    let a_raw = prediction_error(&predictions, &means)?;
    if v_raw > t as f64 {
        notes.push("variation exponent saturated at 1".to_string());
    }
    if a_raw > t as f64 {
        notes.push("accuracy exponent saturated at 1".to_string());
    }
    let meta = InstanceMeta {
        label: "holt-winters".into(),
        v_true: Some(exponent_of(v_raw, t)),
        a_true: Some(exponent_of(a_raw, t)),
        history_v: Some(exponent_of(demand_variation(history, 2.0)?, t)),
        notes,
    };
    Ok(Instance::new(family, means, RateSchedule::Constant(CostRates::unit()), QuantitySpace::NonnegativeReals)?
        .with_predictions(predictions)?
        .with_meta(meta))
}
