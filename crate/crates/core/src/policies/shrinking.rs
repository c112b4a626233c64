use std::sync::Arc;

use super::{check_horizon, window_length, DemandHistory, OrderPolicy, PolicyEvent, Setting, ThresholdConstants};
use crate::demand::CostRates;
use crate::error::{Error, Result};

/// Candidate variation exponents `v_j = (1 + 1/ln T)^(j-1) / ln T` up to the
/// first one at or above one, with their windows `n_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    pub exponents: Vec<f64>,
    pub windows: Vec<usize>,
    pub kappa: f64,
}

impl CandidateGrid {
    pub fn new(horizon: usize, kappa: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let ln_t = (horizon as f64).ln();
        let step = 1.0 + 1.0 / ln_t;
        let mut exponents = Vec::new();
        let mut v = 1.0 / ln_t;
        loop {
            exponents.push(v);
            if v >= 1.0 {
                break;
            }
            v *= step;
        }
        let windows = exponents.iter().map(|&v| window_length(kappa, horizon, v.min(1.0))).collect();
        Ok(Self { exponents, windows, kappa })
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
}

/// Runs the fixed-window estimate of the smallest candidate exponent not yet
/// ruled out, moving to the next candidate when the cumulative disagreement
/// with a larger one crosses its threshold.
#[derive(Debug, Clone)]
pub struct ShrinkingWindowPolicy {
    setting: Arc<Setting>,
    grid: CandidateGrid,
    thresholds: Vec<f64>,
    warm_up: usize,
    index: usize,
    pinned: bool,
    trigger: usize,
    sums: Vec<f64>,
    estimates: Vec<f64>,
    history: DemandHistory,
    events: Vec<PolicyEvent>,
}

impl ShrinkingWindowPolicy {
    pub fn new(setting: Arc<Setting>, consts: ThresholdConstants, horizon: usize) -> Result<Self> {
        let grid = CandidateGrid::new(horizon, consts.kappa)?;
        let t = horizon as f64;
        let warm_up = t.powf(0.75).ceil() as usize;
        if warm_up < grid.windows[0] {
            return Err(Error::domain(format!(
                "horizon {horizon} too short: warm-up {warm_up} is below the largest window {}",
                grid.windows[0]
            )));
        }
        let scale = 2.0 * (consts.gamma * t.ln().sqrt() + consts.kappa.sqrt());
        let thresholds = grid.exponents.iter().map(|v| scale * t.powf((3.0 + v) / 4.0)).collect();
        let k = grid.len();
        Ok(Self {
            setting,
            grid,
            thresholds,
            warm_up,
            index: 0,
            pinned: false,
            trigger: warm_up + 1,
            sums: vec![0.0; k],
            estimates: vec![0.0; k],
            history: DemandHistory::new(),
            events: Vec::new(),
        })
    }

    pub fn grid(&self) -> &CandidateGrid {
        &self.grid
    }

    pub fn warm_up(&self) -> usize {
        self.warm_up
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Current candidate index, 1-based.
    pub fn current_index(&self) -> usize {
        self.index + 1
    }

    /// Period at which the running sums last restarted.
    pub fn trigger_period(&self) -> usize {
        self.trigger
    }

    /// Running disagreement sums against each candidate (zero for `j <= i`).
    pub fn running_sums(&self) -> &[f64] {
        &self.sums
    }

    /// Freeze the current candidate at `index` (1-based) and disable increments.
    pub fn pin_index(&mut self, index: usize) -> Result<()> {
        if index == 0 || index > self.grid.len() {
            return Err(Error::domain(format!("index {index} outside 1..={}", self.grid.len())));
        }
        self.index = index - 1;
        self.pinned = true;
        Ok(())
    }

    fn refresh_estimates(&mut self) {
        let bounds = self.setting.bounds();
        for (est, &n) in self.estimates.iter_mut().zip(&self.grid.windows) {
            *est = self.history.window_mean(n).map_or(0.0, |m| bounds.clamp(m));
        }
    }

    fn restart_sums(&mut self) {
        let i = self.index;
        for j in 0..self.sums.len() {
            self.sums[j] = if j > i { (self.estimates[i] - self.estimates[j]).abs() } else { 0.0 };
        }
    }
}

impl OrderPolicy for ShrinkingWindowPolicy {
    fn order(&mut self, t: usize, _prediction: Option<f64>, rates: CostRates) -> Result<f64> {
        if self.history.len() < self.warm_up {
            return self.setting.warm_up_order(rates);
        }
        self.refresh_estimates();
        if !self.pinned {
            let i = self.index;
            let mut fired = false;
            for j in i + 1..self.sums.len() {
                self.sums[j] += (self.estimates[i] - self.estimates[j]).abs();
                if self.sums[j] >= self.thresholds[j] {
                    fired = true;
                }
            }
            if fired {
                self.index += 1;
                self.trigger = t;
                self.restart_sums();
                self.events.push(PolicyEvent::IndexIncrement { t, index: self.index + 1 });
            }
        }
        self.setting.order_for(self.estimates[self.index], rates)
    }

    fn observe(&mut self, demand: f64) {
        self.history.push(demand);
    }

    fn take_events(&mut self) -> Vec<PolicyEvent> {
        std::mem::take(&mut self.events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{DemandFamily, MeanBounds, QuantitySpace};

    #[test]
    fn grid_at_4096() {
        let g = CandidateGrid::new(4096, 1.0).unwrap();
        let ln_t = 4096f64.ln();
        assert!((g.exponents[0] - 1.0 / ln_t).abs() < 1e-15);
        assert!((g.exponents[0] - 0.120).abs() < 1e-3);
        let k = g.len();
        assert!(g.exponents[k - 2] < 1.0 && g.exponents[k - 1] >= 1.0);
        assert!(g.windows.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(g.windows[k - 1], 1);
        for w in g.exponents.windows(2) {
            assert!((w[1] / w[0] - (1.0 + 1.0 / ln_t)).abs() < 1e-12);
        }
    }

    #[test]
    fn warm_up_and_restart() {
        let fam = DemandFamily::normal(1.0, MeanBounds::new(0.0, 100.0).unwrap()).unwrap();
        let s = Setting::new(fam, QuantitySpace::NonnegativeReals);
        let consts = ThresholdConstants::new(1.0, 0.0, 1.0).unwrap();
        let mut p = ShrinkingWindowPolicy::new(s, consts, 256).unwrap();
        assert_eq!(p.warm_up(), 64);
        let r = CostRates::unit();
        let mut t = 1;
        while t <= 64 {
            assert_eq!(p.order(t, None, r).unwrap(), 50.0);
            p.observe(0.0);
            t += 1;
        }
        // a jump to 100 makes short windows disagree sharply with long ones
        let mut fired_at = None;
        while t <= 256 {
            p.order(t, None, r).unwrap();
            if fired_at.is_none() && p.current_index() > 1 {
                fired_at = Some(t);
                assert_eq!(p.trigger_period(), t);
                let i = p.current_index() - 1;
                for (j, s) in p.running_sums().iter().enumerate() {
                    if j <= i {
                        assert_eq!(*s, 0.0);
                    }
                }
            }
            p.observe(100.0);
            t += 1;
        }
        assert!(fired_at.is_some());
        let events = p.take_events();
        assert!(!events.is_empty());
        for (k, e) in events.iter().enumerate() {
            assert!(matches!(e, PolicyEvent::IndexIncrement { index, .. } if *index == k + 2));
        }
    }

    #[test]
    fn rejects_oversized_windows() {
        let fam = DemandFamily::point_mass(MeanBounds::new(0.0, 1.0).unwrap()).unwrap();
        let s = Setting::new(fam, QuantitySpace::NonnegativeReals);
        let consts = ThresholdConstants::new(50.0, 1.0, 0.0).unwrap();
        assert!(ShrinkingWindowPolicy::new(s, consts, 100).is_err());
    }
}
