//! Episode execution and regret accounting.

mod stats;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::policies::{BuildEnv, OrderPolicy, PolicyEvent, PolicySpec, Setting};
use crate::rng::{stream, Stream};

pub use stats::{fit_regret_slope, mean_and_stderr, spearman};

/// One period of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub t: usize,
    pub quantity: f64,
    pub demand: f64,
    pub expected_cost: f64,
    pub clairvoyant_cost: f64,
    pub realized_cost: f64,
    pub cumulative_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<PeriodRecord>,
    pub events: Vec<PolicyEvent>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn quantities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.quantity).collect()
    }

    pub fn total_expected_cost(&self) -> f64 {
        self.records.iter().map(|r| r.expected_cost).sum()
    }

    pub fn total_realized_cost(&self) -> f64 {
        self.records.iter().map(|r| r.realized_cost).sum()
    }
}

/// `sum_t (C_t(mu_t, q_t) - C_t(mu_t, q_t*))`.
pub fn total_regret(traj: &Trajectory) -> f64 {
    traj.records.last().map_or(0.0, |r| r.cumulative_regret)
}

/// `(cost_perp - min(pure, nopred)) / |pure - nopred|`; zero denominator is undefined.
pub fn gap(cost_perp: f64, cost_pure: f64, cost_nopred: f64) -> Result<f64> {
    let denom = (cost_pure - cost_nopred).abs();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::UndefinedGap);
    }
    Ok((cost_perp - cost_pure.min(cost_nopred)) / denom)
}

/// Per-period optimal quantities and clairvoyant costs of an instance.
pub struct Clairvoyant {
    pub quantities: Vec<f64>,
    pub costs: Vec<f64>,
}

impl Clairvoyant {
    pub fn new(instance: &Instance) -> Result<Self> {
        let fam = instance.family();
        let mut quantities = Vec::with_capacity(instance.horizon());
        let mut costs = Vec::with_capacity(instance.horizon());
        for (t, &mu) in instance.means().iter().enumerate() {
            let rates = instance.rates().at(t);
            let q = fam.optimal_quantity(mu, rates, instance.space())?;
            costs.push(fam.expected_cost(mu, rates, q)?);
            quantities.push(q);
        }
        Ok(Self { quantities, costs })
    }
}

/// Build `spec` for `instance` with the episode seed.
pub fn build_policy(instance: &Instance, spec: &PolicySpec, seed: u64) -> Result<Box<dyn OrderPolicy>> {
    let env = BuildEnv {
        setting: Setting::new(instance.family().clone(), instance.space().clone()),
        rates: instance.rates(),
        horizon: instance.horizon(),
        has_predictions: instance.predictions().is_some(),
        seed,
    };
    spec.build(&env)
}

/// Run `policy` through `instance`, drawing demand from the seed's demand stream.
pub fn run_policy(instance: &Instance, policy: &mut dyn OrderPolicy, seed: u64) -> Result<Trajectory> {
    let clair = Clairvoyant::new(instance)?;
    run_with_clairvoyant(instance, policy, seed, &clair)
}

pub fn run_with_clairvoyant(
    instance: &Instance,
    policy: &mut dyn OrderPolicy,
    seed: u64,
    clair: &Clairvoyant,
) -> Result<Trajectory> {
    let mut demand_rng = stream(seed, Stream::Demand);
    let fam = instance.family();
    let preds = instance.predictions();
    let mut records = Vec::with_capacity(instance.horizon());
    let mut events = Vec::new();
    let mut cumulative = 0.0;
    for (idx, &mu) in instance.means().iter().enumerate() {
        let t = idx + 1;
        let rates = instance.rates().at(idx);
        let q = policy.order(t, preds.map(|p| p[idx]), rates)?;
        if !instance.space().contains(q) {
            return Err(Error::domain(format!("policy ordered {q} outside the quantity space at period {t}")));
        }
        let demand = instance.demand(idx, &mut demand_rng);
        policy.observe(demand);
        events.extend(policy.take_events());
        let expected = fam.expected_cost(mu, rates, q)?;
        let excess = expected - clair.costs[idx];
        if excess < -1e-9 * (1.0 + clair.costs[idx].abs()) {
            return Err(Error::domain(format!(
                "period {t}: cost {expected} beats the clairvoyant {}",
                clair.costs[idx]
            )));
        }
        // what remains below zero is rounding
        cumulative += excess.max(0.0);
        records.push(PeriodRecord {
            t,
            quantity: q,
            demand,
            expected_cost: expected,
            clairvoyant_cost: clair.costs[idx],
            realized_cost: rates.realized_cost(demand, q),
            cumulative_regret: cumulative,
        });
    }
    Ok(Trajectory { records, events })
}

/// Build and run one episode.
pub fn run_episode(instance: &Instance, spec: &PolicySpec, seed: u64) -> Result<Trajectory> {
    let mut policy = build_policy(instance, spec, seed)?;
    run_policy(instance, policy.as_mut(), seed)
}

/// Summary of one policy over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationReport {
    pub seeds: Vec<u64>,
    pub regrets: Vec<f64>,
    pub expected_costs: Vec<f64>,
    pub realized_costs: Vec<f64>,
    pub mean_regret: f64,
    pub stderr_regret: f64,
}

impl ReplicationReport {
    pub fn from_trajectories(seeds: Vec<u64>, trajs: &[Trajectory]) -> Self {
        let regrets: Vec<f64> = trajs.iter().map(total_regret).collect();
        let (mean_regret, stderr_regret) = mean_and_stderr(&regrets);
        Self {
            seeds,
            expected_costs: trajs.iter().map(Trajectory::total_expected_cost).collect(),
            realized_costs: trajs.iter().map(Trajectory::total_realized_cost).collect(),
            regrets,
            mean_regret,
            stderr_regret,
        }
    }

    pub fn mean_expected_cost(&self) -> f64 {
        mean_and_stderr(&self.expected_costs).0
    }

    pub fn mean_realized_cost(&self) -> f64 {
        mean_and_stderr(&self.realized_costs).0
    }
}

/// Run `spec` on `instance` once per seed, in parallel; results are in seed order.
pub fn replicate(instance: &Instance, spec: &PolicySpec, seeds: &[u64]) -> Result<ReplicationReport> {
    let clair = Clairvoyant::new(instance)?;
    let trajs = seeds
        .par_iter()
        .map(|&seed| {
            let mut policy = build_policy(instance, spec, seed)?;
            run_with_clairvoyant(instance, policy.as_mut(), seed, &clair)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationReport::from_trajectories(seeds.to_vec(), &trajs))
}

/// Serial counterpart of [`replicate`].
pub fn replicate_serial(instance: &Instance, spec: &PolicySpec, seeds: &[u64]) -> Result<ReplicationReport> {
    let trajs = seeds.iter().map(|&s| run_episode(instance, spec, s)).collect::<Result<Vec<_>>>()?;
    Ok(ReplicationReport::from_trajectories(seeds.to_vec(), &trajs))
}
