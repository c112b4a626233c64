use rand::Rng;
use serde::Serialize;

use super::{Instance, InstanceMeta};
use crate::demand::{CostRates, DemandFamily, MeanBounds, QuantitySpace, RateSchedule};
use crate::error::{Error, Result};

/// Which prediction scheme the cycle construction used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LowerBoundCase {
    /// `a >= (3 + v)/4`: every prediction is an independent coin flip.
    Uninformative,
    /// `a < (3 + v)/4`: coin flips for the first periods of each cycle, exact afterwards.
    Prefix,
}

/// Arithmetic of the cycle construction for given `(v, a, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundLayout {
    pub cycle_len: usize,
    pub cycles: usize,
    /// Distance of each cycle's Bernoulli mean from one half.
    pub offset: f64,
    pub case: LowerBoundCase,
    /// Coin-flip predictions per cycle in the prefix case (the full cycle otherwise).
    pub noisy_prefix: usize,
}

impl LowerBoundLayout {
    pub fn new(v: f64, a: f64, horizon: usize) -> Result<Self> {
        for (name, x) in [("v", v), ("a", a)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {x}")));
            }
        }
        if horizon < 2 {
            return Err(Error::domain(format!("horizon must be at least 2, got {horizon}")));
        }
        let t = horizon as f64;
        let cycle_len = t.powf((1.0 - v) / 2.0).round().max(1.0) as usize;
        if cycle_len > horizon {
            return Err(Error::domain("cycle length exceeds the horizon"));
        }
        let cycles = horizon.div_ceil(cycle_len);
        let offset = t.powf((v - 1.0) / 4.0) / 20f64.sqrt();
        let (case, noisy_prefix) = if a >= (3.0 + v) / 4.0 {
            (LowerBoundCase::Uninformative, cycle_len)
        } else {
            // floor keeps the prediction error within T^a / sqrt(5); the small
            // slack absorbs powf rounding on exact powers
            let m = (t.powf(a - (1.0 + 3.0 * v) / 4.0) + 1e-9).floor() as usize;
            (LowerBoundCase::Prefix, m.min(cycle_len))
        };
        Ok(Self { cycle_len, cycles, offset, case, noisy_prefix })
    }
}

/// Bernoulli instance whose mean flips between `1/2 +- T^((v-1)/4)/sqrt(20)`
/// independently per cycle of length `round(T^((1-v)/2))`, with predictions
/// that are useless on a controlled share of periods.
///
/// Unit rates, nonnegative quantities. The last cycle may be short.
pub fn gen_lower_bound_cycles<R: Rng + ?Sized>(v: f64, a: f64, horizon: usize, rng: &mut R) -> Result<Instance> {
    let layout = LowerBoundLayout::new(v, a, horizon)?;
    let hi = 0.5 + layout.offset;
    let lo = 0.5 - layout.offset;
    let coin = |rng: &mut R| if rng.gen::<bool>() { hi } else { lo };
    let mut means = Vec::with_capacity(horizon);
    let mut preds = Vec::with_capacity(horizon);
    for _ in 0..layout.cycles {
        let p = coin(rng);
        for k in 0..layout.cycle_len {
            if means.len() == horizon {
                break;
            }
            means.push(p);
            preds.push(if k < layout.noisy_prefix { coin(rng) } else { p });
        }
    }
    let family = DemandFamily::bernoulli(MeanBounds::new(0.0, 1.0)?)?;
    let meta = InstanceMeta {
        label: format!("lower-bound v={v} a={a}"),
        v_true: Some(v),
        a_true: Some(a),
        ..Default::default()
    };
    Ok(Instance::new(family, means, RateSchedule::Constant(CostRates::unit()), QuantitySpace::NonnegativeReals)?
        .with_predictions(preds)?
        .with_meta(meta))
}

/// Two instances whose prediction and demand streams have the same law.
///
/// The first has uniform demand on `(0, 2)` around the constant mean one and
/// predicts the realized demand; the second has deterministic demand equal to
/// an i.i.d. uniform mean on `(0, 2)` and predicts that mean.
pub fn gen_indistinguishable_pair<R: Rng + ?Sized>(horizon: usize, rng: &mut R) -> Result<(Instance, Instance)> {
    if horizon == 0 {
        return Err(Error::domain("horizon must be positive"));
    }
    let bounds = MeanBounds::new(0.0, 2.0)?;
    let rates = RateSchedule::Constant(CostRates::unit());

    let uniform = DemandFamily::uniform(1.0, bounds)?;
    let demands: Vec<f64> = (0..horizon).map(|_| uniform.sample(1.0, rng)).collect();
    let first = Instance::new(uniform, vec![1.0; horizon], rates.clone(), QuantitySpace::NonnegativeReals)?
        .with_predictions(demands.clone())?
        .with_realized(demands)?
        .with_meta(InstanceMeta {
            label: "pair uniform".into(),
            v_true: Some(0.0),
            a_true: Some(1.0),
            ..Default::default()
        });

    let means: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.0..2.0)).collect();
    let second =
        Instance::new(DemandFamily::point_mass(bounds)?, means.clone(), rates, QuantitySpace::NonnegativeReals)?
            .with_predictions(means)?
            .with_meta(InstanceMeta {
                label: "pair point-mass".into(),
                v_true: Some(1.0),
                a_true: Some(0.0),
                ..Default::default()
            });
    Ok((first, second))
}
