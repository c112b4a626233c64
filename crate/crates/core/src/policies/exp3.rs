use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{OrderPolicy, PolicyEvent};
use crate::demand::CostRates;
use crate::error::{Error, Result};

/// Exploration rate `min(1, sqrt(2 ln 2 / ((e - 1) C_max T)))`.
pub fn exp3_mixing(c_max: f64, horizon: usize) -> f64 {
    let denom = (std::f64::consts::E - 1.0) * c_max * horizon as f64;
    (2.0 * std::f64::consts::LN_2 / denom).sqrt().min(1.0)
}

struct Pending {
    arm: usize,
    quantity: f64,
    prob: f64,
    rates: CostRates,
}

/// Exponential weights over two base policies.
///
/// Both bases are stepped every period so their estimators see the full demand
/// stream; only the drawn arm's quantity is ordered and only its weight moves,
/// by `exp(-gamma * cost / (2 p))`.
pub struct Exp3Policy {
    arms: [Box<dyn OrderPolicy>; 2],
    weights: [f64; 2],
    gamma: f64,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    events: Vec<PolicyEvent>,
}

impl Exp3Policy {
    pub fn new(
        first: Box<dyn OrderPolicy>,
        second: Box<dyn OrderPolicy>,
        c_max: f64,
        horizon: usize,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if !(c_max > 0.0) || !c_max.is_finite() {
            return Err(Error::domain(format!("C_max must be positive and finite, got {c_max}")));
        }
        if horizon == 0 {
            return Err(Error::domain("horizon must be positive"));
        }
        Ok(Self {
            arms: [first, second],
            weights: [1.0, 1.0],
            gamma: exp3_mixing(c_max, horizon),
            rng,
            pending: None,
            events: Vec::new(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> [f64; 2] {
        self.weights
    }

    /// Current arm probabilities.
    pub fn probabilities(&self) -> [f64; 2] {
        let total = self.weights[0] + self.weights[1];
        let g = self.gamma;
        [(1.0 - g) * self.weights[0] / total + g / 2.0, (1.0 - g) * self.weights[1] / total + g / 2.0]
    }
}

impl OrderPolicy for Exp3Policy {
    fn order(&mut self, t: usize, prediction: Option<f64>, rates: CostRates) -> Result<f64> {
        let q0 = self.arms[0].order(t, prediction, rates)?;
        let q1 = self.arms[1].order(t, prediction, rates)?;
        let p = self.probabilities();
        let arm = if self.rng.gen::<f64>() < p[0] { 0 } else { 1 };
        let quantity = if arm == 0 { q0 } else { q1 };
        self.events.push(PolicyEvent::ArmDraw { t, arm, prob: p[arm] });
        self.pending = Some(Pending { arm, quantity, prob: p[arm], rates });
        Ok(quantity)
    }

    fn observe(&mut self, demand: f64) {
        for arm in &mut self.arms {
            arm.observe(demand);
        }
        if let Some(Pending { arm, quantity, prob, rates }) = self.pending.take() {
            let loss = rates.realized_cost(demand, quantity) / prob;
            self.weights[arm] *= (-self.gamma * loss / 2.0).exp();
            // only the ratio matters; rescale so neither weight underflows
            let top = self.weights[0].max(self.weights[1]);
            if top > 0.0 {
                self.weights[0] /= top;
                self.weights[1] /= top;
            } else {
                self.weights = [1.0, 1.0];
            }
        }
    }

    fn take_events(&mut self) -> Vec<PolicyEvent> {
        let mut out = std::mem::take(&mut self.events);
        for arm in &mut self.arms {
            out.extend(arm.take_events());
        }
        out
    }
}
