use crate::demand::MeanBounds;
use crate::error::{Error, Result};

/// Mean of the last `n` demands in `history`, rounded into `bounds`.
pub fn rolling_mean_estimate(history: &[f64], n: usize, bounds: MeanBounds) -> Result<f64> {
    if n == 0 || history.len() < n {
        return Err(Error::domain(format!("window of {n} needs at least {n} observations, have {}", history.len())));
    }
    let tail = &history[history.len() - n..];
    Ok(bounds.clamp(tail.iter().sum::<f64>() / n as f64))
}

/// Realized demands with prefix sums, so any trailing window mean costs O(1).
#[derive(Debug, Clone)]
pub struct DemandHistory {
    prefix: Vec<f64>,
}

impl Default for DemandHistory {
    fn default() -> Self {
        Self::new()
    }
}

impl DemandHistory {
    pub fn new() -> Self {
        Self { prefix: vec![0.0] }
    }

    pub fn push(&mut self, demand: f64) {
        let last = *self.prefix.last().expect("prefix starts with zero");
        self.prefix.push(last + demand);
    }

    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unclamped mean of the last `n` observations, `None` if fewer exist.
    pub fn window_mean(&self, n: usize) -> Option<f64> {
        let len = self.len();
        if n == 0 || len < n {
            return None;
        }
        Some((self.prefix[len] - self.prefix[len - n]) / n as f64)
    }
}
