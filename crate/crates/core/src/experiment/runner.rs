use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{
    resolve_policy, BatchMode, CostBasis, ExperimentConfig, Generator, HoltWintersBatch, ParamSource, CONFIG_FORMAT,
};
use super::report::{CellReport, GapSummary, PolicyInfo, PolicyResult, Provenance, Report, SlopeFit};
use crate::demand::{demand_variation, prediction_error, raw_exponent};
use crate::error::{Error, Result};
use crate::instances::{
    gen_holt_winters_instance, gen_indistinguishable_pair, gen_lower_bound_cycles, load_predictions, load_timeseries,
    real_data_instance, synthetic_history, HoltWintersParams, HoltWintersSetup, Instance, RealDataOptions,
};
use crate::policies::{PolicyEvent, PolicySpec};
use crate::rng::{replication_seed, stream, Stream};
use crate::sim::{build_policy, gap, mean_and_stderr, run_with_clairvoyant, total_regret, Clairvoyant};

/// Where a cell's instance comes from.
enum Source {
    /// Rebuilt from each replication seed.
    PerSeed(Generator),
    Fixed(Arc<Instance>),
}

struct Cell {
    entry: usize,
    index: Option<usize>,
    horizon: usize,
    source: Source,
}

impl Cell {
    fn instance(&self, seed: u64) -> Result<Arc<Instance>> {
        match &self.source {
            Source::Fixed(inst) => Ok(inst.clone()),
            Source::PerSeed(g) => {
                let mut rng = stream(seed, Stream::Instance);
                let inst = match *g {
                    Generator::LowerBound { v, a, prediction_offset } => {
                        let inst = gen_lower_bound_cycles(v, a, self.horizon, &mut rng)?;
                        match prediction_offset {
                            Some(o) => inst.with_prediction_offset(o)?,
                            None => inst,
                        }
                    }
                    Generator::Pair { member } => {
                        let (one, two) = gen_indistinguishable_pair(self.horizon, &mut rng)?;
                        if member == 1 {
                            one
                        } else {
                            two
                        }
                    }
                    _ => unreachable!("only seeded generators are rebuilt per seed"),
                };
                Ok(Arc::new(inst))
            }
        }
    }
}

/// Per-seed outcome of one policy.
struct Outcome {
    regret: f64,
    expected: f64,
    realized: f64,
    switch: Option<usize>,
}

/// Per-seed measurements of the instance a cell ran on.
struct Measures {
    measured_v: f64,
    measured_a: Option<f64>,
    raw_v: f64,
    raw_a: Option<f64>,
}

/// Run every (instance, horizon, policy, seed) combination of `cfg`.
///
/// `config_text` is hashed into the provenance block; pass the file contents
/// the config was parsed from.
pub fn run_experiment(cfg: &ExperimentConfig, config_text: &str) -> Result<Report> {
    cfg.validate()?;
    let seeds = cfg.seeds();
    let cells = plan_cells(cfg)?;

    let tasks: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..seeds.len()).map(move |s| (c, s))).collect();
    let results = tasks.par_iter().map(|&(c, s)| run_task(cfg, &cells[c], seeds[s])).collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let chunk = &results[c * seeds.len()..(c + 1) * seeds.len()];
        reports.push(summarize_cell(cfg, cell, &seeds, chunk)?);
    }

    let gap_summary = cfg.gap.as_ref().map(|g| fill_gaps(cfg, g.cost, [&g.perp, &g.pure, &g.nopred], &mut reports));
    let slopes = match &cfg.slope {
        Some(s) => fit_slopes(cfg, &s.policies, &reports)?,
        None => Vec::new(),
    };

    let policies = (0..cfg.policies.len())
        .map(|i| PolicyInfo {
            name: cfg.policy_name(i).to_string(),
            kind: cfg.policies[i].get("kind").and_then(|k| k.as_str()).unwrap_or("").to_string(),
        })
        .collect();
    Ok(Report {
        provenance: Provenance {
            format: CONFIG_FORMAT.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            master_seed: cfg.master_seed,
            seeds,
        },
        name: cfg.name.clone(),
        policies,
        cells: reports,
        gap: gap_summary,
        slopes,
    })
}

fn plan_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for (e, entry) in cfg.instances.iter().enumerate() {
        match &entry.generator {
            g @ (Generator::LowerBound { .. } | Generator::Pair { .. }) => {
                for &horizon in &cfg.horizons {
                    cells.push(Cell { entry: e, index: None, horizon, source: Source::PerSeed(g.clone()) });
                }
            }
            Generator::HoltWinters(batch) => {
                for &horizon in &cfg.horizons {
                    let base = replication_seed(cfg.master_seed, (1u64 << 32) | e as u64);
                    let batch_cells = holt_winters_batch(batch, horizon, base)
                        .map_err(|err| Error::config(format!("instances[{e}]"), err.to_string()))?;
                    for (k, inst) in batch_cells.into_iter().enumerate() {
                        cells.push(Cell { entry: e, index: Some(k), horizon, source: Source::Fixed(Arc::new(inst)) });
                    }
                }
            }
            Generator::Csv { series, predictions, test_len, season, bound_factor } => {
                let series = load_timeseries(cfg.base_dir.join(series))?;
                let preds = load_predictions(cfg.base_dir.join(predictions))?;
                let opts = RealDataOptions {
                    test_len: *test_len,
                    season: *season,
                    bound_factor: *bound_factor,
                    ..Default::default()
                };
                let mut inst = real_data_instance(&series, &preds, opts)?;
                inst.meta_mut().label = entry.name.clone();
                let horizon = inst.horizon();
                cells.push(Cell { entry: e, index: None, horizon, source: Source::Fixed(Arc::new(inst)) });
            }
        }
    }
    Ok(cells)
}

fn sample_params<R: Rng + ?Sized>(rng: &mut R, batch: &HoltWintersBatch) -> HoltWintersParams {
    let [lo, hi] = batch.sample_range;
    let mut u = || if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let (alpha, beta, gamma) = (u(), u(), u());
    let season = *batch.seasons.choose(rng).expect("validated non-empty");
    HoltWintersParams { alpha, beta, gamma, season }
}

/// Each smoothing factor and the season length moved up or down by `rel`.
fn perturb<R: Rng + ?Sized>(rng: &mut R, p: HoltWintersParams, rel: f64, max_season: usize) -> HoltWintersParams {
    let mut sign = || if rng.gen::<bool>() { 1.0 + rel } else { 1.0 - rel };
    let alpha = (p.alpha * sign()).min(1.0);
    let beta = (p.beta * sign()).min(1.0);
    let gamma = (p.gamma * sign()).min(1.0);
    let season = ((p.season as f64 * sign()).round() as usize).clamp(1, max_season);
    HoltWintersParams { alpha, beta, gamma, season }
}

fn holt_winters_batch(batch: &HoltWintersBatch, horizon: usize, base: u64) -> Result<Vec<Instance>> {
    let [hlo, hhi] = batch.history_range;
    let history =
        synthetic_history(&mut stream(replication_seed(base, 0), Stream::Instance), batch.history_len, hlo, hhi);
    let noise_seed = replication_seed(base, 1);
    let mut param_rng = stream(replication_seed(base, 2), Stream::Instance);
    let setup = HoltWintersSetup {
        horizon,
        noise_variance: batch.noise_variance,
        poisson_k: batch.poisson_k,
        mean_floor: batch.mean_floor,
    };
    let mut out = Vec::with_capacity(batch.count);
    for k in 0..batch.count {
        let (params, pred_params, mut noise_rng) = match batch.mode {
            // same noise stream for every instance: one demand process
            BatchMode::FixedV => {
                (batch.params, sample_params(&mut param_rng, batch), stream(noise_seed, Stream::Instance))
            }
            BatchMode::FixedA => {
                let p = sample_params(&mut param_rng, batch);
                let q = perturb(&mut param_rng, p, batch.perturbation, batch.history_len);
                (p, q, stream(replication_seed(noise_seed, k as u64), Stream::Instance))
            }
        };
        let mut inst = gen_holt_winters_instance(&history, params, pred_params, setup, &mut noise_rng)?;
        let meta = inst.meta_mut();
        meta.label = format!(
            "demand ({}, {}, {}, {}) predictions ({}, {}, {}, {})",
            params.alpha,
            params.beta,
            params.gamma,
            params.season,
            pred_params.alpha,
            pred_params.beta,
            pred_params.gamma,
            pred_params.season
        );
        meta.notes.push("history exponent measured on realized demands".to_string());
        out.push(inst);
    }
    Ok(out)
}

fn lookup(inst: &Instance, src: ParamSource, key: &str) -> Result<f64> {
    let meta = inst.meta();
    let value = match (src, key) {
        (ParamSource::Instance, "v") => meta.v_true.unwrap_or_else(|| inst.measured_v()),
        (ParamSource::Instance, _) => match meta.a_true {
            Some(a) => a,
            None => inst.measured_a().ok_or_else(|| Error::domain("instance has no predictions"))?,
        },
        (ParamSource::Measured, "v") => inst.measured_v(),
        (ParamSource::Measured, _) => inst.measured_a().ok_or_else(|| Error::domain("instance has no predictions"))?,
        (ParamSource::History, "v") => {
            meta.history_v.ok_or_else(|| Error::domain("instance has no pre-horizon history"))?
        }
        (ParamSource::History, _) => return Err(Error::domain("\"history\" only applies to v")),
    };
    Ok(value)
}

fn resolve_for(cfg: &ExperimentConfig, idx: usize, inst: &Instance) -> Result<PolicySpec> {
    resolve_policy(&cfg.policies[idx], &format!("policies[{idx}]"), |key, src| lookup(inst, src, key))
}

fn run_task(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<(Measures, Vec<Outcome>)> {
    let inst = cell.instance(seed)?;
    let clair = Clairvoyant::new(&inst)?;
    let t = inst.horizon();
    let v_raw = demand_variation(inst.means(), 2.0)?;
    let a_raw = match inst.predictions() {
        Some(p) => Some(prediction_error(p, inst.means())?),
        None => None,
    };
    let measures = Measures {
        measured_v: inst.measured_v(),
        measured_a: inst.measured_a(),
        raw_v: raw_exponent(v_raw, t),
        raw_a: a_raw.map(|a| raw_exponent(a, t)),
    };
    let mut outcomes = Vec::with_capacity(cfg.policies.len());
    for p in 0..cfg.policies.len() {
        let spec = resolve_for(cfg, p, &inst)?;
        let mut policy = build_policy(&inst, &spec, seed)?;
        let traj = run_with_clairvoyant(&inst, policy.as_mut(), seed, &clair)?;
        let switch = traj.events.iter().find_map(|e| match e {
            PolicyEvent::Switch { t } => Some(*t),
            _ => None,
        });
        outcomes.push(Outcome {
            regret: total_regret(&traj),
            expected: traj.total_expected_cost(),
            realized: traj.total_realized_cost(),
            switch,
        });
    }
    Ok((measures, outcomes))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    mean_and_stderr(&v).0
}

fn summarize_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    seeds: &[u64],
    chunk: &[(Measures, Vec<Outcome>)],
) -> Result<CellReport> {
    let first = cell.instance(seeds[0])?;
    let meta = first.meta().clone();
    let opt_mean = |f: &dyn Fn(&Measures) -> Option<f64>| -> Option<f64> {
        let xs: Option<Vec<f64>> = chunk.iter().map(|(m, _)| f(m)).collect();
        xs.map(|v| mean(v.into_iter()))
    };
    let results = (0..cfg.policies.len())
        .map(|p| {
            let regrets: Vec<f64> = chunk.iter().map(|(_, o)| o[p].regret).collect();
            let expected_costs: Vec<f64> = chunk.iter().map(|(_, o)| o[p].expected).collect();
            let realized_costs: Vec<f64> = chunk.iter().map(|(_, o)| o[p].realized).collect();
            let switches = cfg.policies[p].get("kind").and_then(|k| k.as_str()) == Some("perp");
            let switch_periods: Vec<Option<usize>> = chunk.iter().map(|(_, o)| o[p].switch).collect();
            let (mean_regret, stderr_regret) = mean_and_stderr(&regrets);
            PolicyResult {
                policy: cfg.policy_name(p).to_string(),
                mean_regret,
                stderr_regret,
                mean_expected_cost: mean(expected_costs.iter().copied()),
                mean_realized_cost: mean(realized_costs.iter().copied()),
                regrets,
                expected_costs,
                realized_costs,
                switch_periods: switches.then_some(switch_periods),
            }
        })
        .collect();
    Ok(CellReport {
        instance: cfg.instances[cell.entry].name.clone(),
        index: cell.index,
        horizon: cell.horizon,
        label: meta.label,
        v_true: meta.v_true,
        a_true: meta.a_true,
        history_v: meta.history_v,
        measured_v: mean(chunk.iter().map(|(m, _)| m.measured_v)),
        measured_a: opt_mean(&|m| m.measured_a),
        raw_v: mean(chunk.iter().map(|(m, _)| m.raw_v)),
        raw_a: opt_mean(&|m| m.raw_a),
        notes: meta.notes,
        results,
        gap: None,
        log_cost_ratio: None,
    })
}

fn policy_index(cfg: &ExperimentConfig, name: &str) -> usize {
    (0..cfg.policies.len()).find(|&i| cfg.policy_name(i) == name).expect("validated policy name")
}

fn fill_gaps(cfg: &ExperimentConfig, basis: CostBasis, names: [&String; 3], cells: &mut [CellReport]) -> GapSummary {
    let [ip, iu, in_] = names.map(|n| policy_index(cfg, n));
    let cost = |r: &PolicyResult| match basis {
        CostBasis::Realized => r.mean_realized_cost,
        CostBasis::Expected => r.mean_expected_cost,
    };
    let mut defined = Vec::new();
    let mut undefined = 0;
    for cell in cells.iter_mut() {
        let (perp, pure, nopred) = (cost(&cell.results[ip]), cost(&cell.results[iu]), cost(&cell.results[in_]));
        if pure > 0.0 && nopred > 0.0 {
            cell.log_cost_ratio = Some((pure / nopred).ln());
        }
        match gap(perp, pure, nopred) {
            Ok(g) => {
                cell.gap = Some(g);
                defined.push(g);
            }
            Err(_) => undefined += 1,
        }
    }
    let mut sorted = defined.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match sorted.len() {
        0 => None,
        n if n % 2 == 1 => Some(sorted[n / 2]),
        n => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    };
    GapSummary {
        perp: names[0].clone(),
        pure: names[1].clone(),
        nopred: names[2].clone(),
        cost: basis,
        defined: defined.len(),
        undefined,
        mean: if defined.is_empty() { None } else { Some(mean(defined.iter().copied())) },
        median,
        share_below_half: if defined.is_empty() {
            None
        } else {
            Some(defined.iter().filter(|&&g| g < 0.5).count() as f64 / defined.len() as f64)
        },
    }
}

fn fit_slopes(cfg: &ExperimentConfig, names: &[String], cells: &[CellReport]) -> Result<Vec<SlopeFit>> {
    let mut fits = Vec::new();
    for entry in &cfg.instances {
        if matches!(entry.generator, Generator::Csv { .. } | Generator::HoltWinters(_)) {
            continue;
        }
        for name in names {
            let p = policy_index(cfg, name);
            let rows: Vec<&CellReport> = cells.iter().filter(|c| c.instance == entry.name).collect();
            let horizons: Vec<usize> = rows.iter().map(|c| c.horizon).collect();
            let mean_regrets: Vec<f64> = rows.iter().map(|c| c.results[p].mean_regret).collect();
            let slope = crate::sim::fit_regret_slope(&horizons, &mean_regrets).ok();
            fits.push(SlopeFit { instance: entry.name.clone(), policy: name.clone(), horizons, mean_regrets, slope });
        }
    }
    Ok(fits)
}
