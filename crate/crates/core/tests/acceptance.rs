//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use common::brute_force;
use newsvendor::demand::{
    demand_variation, demand_variation_dp, prediction_error, CostRates, DemandFamily, MeanBounds, QuantitySpace,
    RateSchedule,
};
use newsvendor::experiment::{preset, run_experiment, CellReport, Report};
use newsvendor::instances::{gen_indistinguishable_pair, gen_lower_bound_cycles, Instance};
use newsvendor::policies::{ConstantPolicy, Exp3Policy, PolicySpec, Setting};
use newsvendor::rng::{replication_seed, stream, Stream};
use newsvendor::sim::{gap, replicate, run_episode, run_policy, spearman, total_regret};

const MASTER: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run_preset(name: &str) -> Report {
    let (cfg, text) = preset(name).unwrap();
    run_experiment(&cfg, text).unwrap()
}

fn c1_exact_values() -> Outcome {
    let ramp = demand_variation(&[1.0, 2.0, 3.0, 4.0, 5.0], 2.0).unwrap();
    let zig = demand_variation(&[1.0, 0.0, 1.0, 0.0, 1.0], 2.0).unwrap();
    let fam = DemandFamily::uniform(1.0, MeanBounds::new(0.0, 2.0).unwrap()).unwrap();
    let unit = CostRates::unit();
    let half = fam.expected_cost(1.0, unit, 1.0).unwrap();
    let curve = (0..=40).all(|k| {
        let q = k as f64 / 20.0;
        (fam.expected_cost(1.0, unit, q).unwrap() - (q * q + (2.0 - q) * (2.0 - q)) / 4.0).abs() <= 1e-12
    });
    let g = gap(14454.0, 14454.0, 28303.0).unwrap();
    let checks = [
        ("V(ramp)=16", (ramp - 16.0).abs() <= 1e-12),
        ("V(zigzag)=5", (zig - 5.0).abs() <= 1e-12),
        ("uniform C(1)=1/2", (half - 0.5).abs() <= 1e-12),
        ("uniform cost curve", curve),
        ("GAP upper store=0", g.abs() <= 1e-12),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(failed.is_empty(), format!("V(ramp)={ramp}, V(zigzag)={zig}, C(1)={half}, GAP={g}; failed: {failed:?}"))
}

fn c2_oracles() -> Outcome {
    let mut rng = stream(MASTER, Stream::Instance);
    let thetas = [0.5, 1.0, 1.5, 2.0, 3.0];
    // integer sequences are summed exactly; on real values the fast path and
    // the DP may add tied partitions in different orders
    let mut int_mismatch = 0;
    let mut real_mismatch = 0;
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = rng.gen_range(1..=200);
        let integer = i % 2 == 1;
        let seq: Vec<f64> = if integer {
            (0..n).map(|_| rng.gen_range(0..6) as f64).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
        };
        let theta = thetas[i % thetas.len()];
        let fast = demand_variation(&seq, theta).unwrap();
        let dp = demand_variation_dp(&seq, theta).unwrap();
        let rel = (fast - dp).abs() / dp.abs().max(1.0);
        worst = worst.max(rel);
        if integer && fast != dp {
            int_mismatch += 1;
        }
        if !integer && rel > 1e-12 {
            real_mismatch += 1;
        }
    }
    let mut brute_mismatch = 0;
    for i in 0..1000 {
        let n = rng.gen_range(1..=12);
        let seq: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let theta = thetas[i % thetas.len()];
        let dp = demand_variation_dp(&seq, theta).unwrap();
        let bf = brute_force(&seq, theta);
        // summation order differs from the DP's, so allow rounding
        if (dp - bf).abs() > 1e-12 * (1.0 + bf.abs()) {
            brute_mismatch += 1;
        }
    }
    outcome(
        int_mismatch == 0 && real_mismatch == 0 && brute_mismatch == 0,
        format!(
            "fast vs dp: {int_mismatch} integer / {real_mismatch} real mismatches of 1000 (max rel diff {worst:.1e}), dp vs brute: {brute_mismatch}/1000"
        ),
    )
}

fn c3_construction() -> Outcome {
    let t = 65536usize;
    let tf = t as f64;
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst_v: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    let mut deterministic = true;
    for &v in &grid {
        for &a in &grid {
            let seed = replication_seed(MASTER, 3);
            let inst = gen_lower_bound_cycles(v, a, t, &mut stream(seed, Stream::Instance)).unwrap();
            let again = gen_lower_bound_cycles(v, a, t, &mut stream(seed, Stream::Instance)).unwrap();
            deterministic &= inst.means() == again.means() && inst.predictions() == again.predictions();
            let var = demand_variation(inst.means(), 2.0).unwrap();
            let err = prediction_error(inst.predictions().unwrap(), inst.means()).unwrap();
            worst_v = worst_v.max(var / (tf.powf(v) / 5.0));
            worst_a = worst_a.max(err / (tf.powf(a) / 5f64.sqrt()));
        }
    }
    outcome(
        worst_v <= 1.0 + 1e-9 && worst_a <= 1.0 + 1e-9 && deterministic,
        format!("max V/budget {worst_v:.4}, max error/budget {worst_a:.4}, deterministic {deterministic}"),
    )
}

fn c4_slopes(report: &Report) -> Outcome {
    let mut pass = !report.slopes.is_empty();
    let mut parts = Vec::new();
    for fit in &report.slopes {
        let v = report.cells.iter().find(|c| c.instance == fit.instance).and_then(|c| c.v_true).unwrap();
        let target = (3.0 + v) / 4.0;
        let ok = fit.slope.is_some_and(|s| (s - target).abs() <= 0.10);
        pass &= ok;
        parts.push(format!("v={v}: slope {:.4} target {target:.4}", fit.slope.unwrap_or(f64::NAN)));
    }
    outcome(pass, parts.join("; "))
}

fn c5_prediction_bound() -> Outcome {
    let mut rng = stream(MASTER, Stream::Instance);
    let bounds = MeanBounds::new(0.0, 1.0).unwrap();
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for i in 0..100 {
        let t = 500;
        let means: Vec<f64> = (0..t).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let noise = rng.gen_range(0.0..0.5);
        let preds: Vec<f64> = means.iter().map(|m| (m + rng.gen_range(-noise..=noise)).clamp(0.0, 1.0)).collect();
        let inst = Instance::new(
            DemandFamily::bernoulli(bounds).unwrap(),
            means.clone(),
            RateSchedule::Constant(CostRates::unit()),
            QuantitySpace::NonnegativeReals,
        )
        .unwrap()
        .with_predictions(preds.clone())
        .unwrap();
        let regret = total_regret(&run_episode(&inst, &PolicySpec::Prediction, replication_seed(MASTER, i)).unwrap());
        let bound = 2.0 * prediction_error(&preds, &means).unwrap();
        if regret > bound + 1e-9 {
            violations += 1;
        }
        if bound > 0.0 {
            tightest = tightest.max(regret / bound);
        }
    }
    outcome(violations == 0, format!("violations {violations}/100, max regret/bound {tightest:.4}"))
}

fn c6_perp(report: &Report) -> Outcome {
    // (i) exact predictions: PERP follows them throughout
    let inst = gen_lower_bound_cycles(0.0, 0.0, 4096, &mut stream(MASTER, Stream::Instance)).unwrap();
    let perp = PolicySpec::Perp { v: 0.0, kappa: 1.0, gamma: Some(1.0), min_follow: 0 };
    let mut identical = true;
    let mut zero = true;
    for i in 0..10 {
        let seed = replication_seed(MASTER, i);
        let a = run_episode(&inst, &perp, seed).unwrap();
        let b = run_episode(&inst, &PolicySpec::Prediction, seed).unwrap();
        identical &= a.records == b.records;
        zero &= total_regret(&a) == 0.0;
    }
    // (ii) constant-offset predictions
    let offset = report.cells.iter().find(|c| c.instance == "offset").unwrap();
    let perp_r = offset.result("perp").unwrap().mean_regret;
    let fixed_r = offset.result("no-pred").unwrap().mean_regret;
    let ratio = perp_r / fixed_r;
    // (iii) GAP across both regimes
    let g = report.gap.as_ref().and_then(|g| g.mean).unwrap_or(f64::NAN);
    outcome(
        identical && zero && ratio <= 1.2 && g < 0.5,
        format!(
            "(i) identical {identical}, zero regret {zero}; (ii) PERP/fixed regret {ratio:.4}; (iii) mean GAP {g:.4}"
        ),
    )
}

fn c7_exp3() -> Outcome {
    let t = 10_000;
    let bounds = MeanBounds::new(0.0, 1.0).unwrap();
    let inst = Instance::new(
        DemandFamily::point_mass(bounds).unwrap(),
        vec![0.0; t],
        RateSchedule::Constant(CostRates::unit()),
        QuantitySpace::NonnegativeReals,
    )
    .unwrap();
    let setting = Setting::new(inst.family().clone(), QuantitySpace::NonnegativeReals);
    let mut excess = 0.0;
    for i in 0..100 {
        let seed = replication_seed(MASTER, i);
        // ordering 0 against zero demand costs nothing, ordering 1 costs h = 1
        let free = Box::new(ConstantPolicy::new(&setting, 0.0).unwrap());
        let paid = Box::new(ConstantPolicy::new(&setting, 1.0).unwrap());
        let mut policy = Exp3Policy::new(paid, free, 1.0, t, stream(seed, Stream::Policy)).unwrap();
        excess += run_policy(&inst, &mut policy, seed).unwrap().total_realized_cost();
    }
    let mean = excess / 100.0;
    let bound = 2.0 * (2.0 * std::f64::consts::LN_2 * (std::f64::consts::E - 1.0) * t as f64).sqrt();
    outcome(mean <= bound, format!("mean excess {mean:.2}, bound {bound:.2}"))
}

fn c8_pair() -> Outcome {
    let t = 2048;
    let specs = [
        PolicySpec::FixedWindow { v: 0.0, kappa: 1.0 },
        PolicySpec::ShrinkingWindow { kappa: 1.0, gamma: None },
        PolicySpec::Prediction,
        PolicySpec::Perp { v: 0.0, kappa: 1.0, gamma: Some(1.0), min_follow: 0 },
        PolicySpec::Exp3 { kappa: 1.0, gamma: None, c_max: None },
        PolicySpec::DivideIntoCases { a: 1.0, kappa: 1.0, gamma: None, c_max: None },
        PolicySpec::Constant { quantity: 1.0 },
    ];
    let seeds: Vec<u64> = (0..50).map(|i| replication_seed(MASTER, i)).collect();
    let (first, second) = gen_indistinguishable_pair(t, &mut stream(MASTER, Stream::Instance)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in &specs {
        let sum = replicate(&first, spec, &seeds).unwrap().mean_regret
            + replicate(&second, spec, &seeds).unwrap().mean_regret;
        pass &= sum >= 0.9 * t as f64;
        parts.push(format!("{} {:.3}T", spec.label(), sum / t as f64));
    }
    outcome(pass, format!("pair regret sums: {}; need >= 0.9T", parts.join(", ")))
}

/// Share of cells where PERP is within half the baseline spread of the better baseline.
fn perp_share(cells: &[CellReport]) -> f64 {
    let ok = cells
        .iter()
        .filter(|c| {
            let cost = |p: &str| c.result(p).unwrap().mean_expected_cost;
            let (pure, nopred) = (cost("pure-pred"), cost("no-pred"));
            cost("perp") <= pure.min(nopred) + 0.5 * (pure - nopred).abs()
        })
        .count();
    ok as f64 / cells.len() as f64
}

fn c9_synthetic(fixed_v: &Report, fixed_a: &Report) -> Outcome {
    let col = |r: &Report, f: &dyn Fn(&CellReport) -> f64| r.cells.iter().map(f).collect::<Vec<f64>>();
    let rho_a = spearman(
        &col(fixed_v, &|c| c.raw_a.unwrap()),
        &col(fixed_v, &|c| c.result("pure-pred").unwrap().mean_expected_cost),
    )
    .unwrap();
    let rho_v =
        spearman(&col(fixed_a, &|c| c.raw_v), &col(fixed_a, &|c| c.result("no-pred").unwrap().mean_expected_cost))
            .unwrap();
    let share_v = perp_share(&fixed_v.cells);
    let share_a = perp_share(&fixed_a.cells);
    outcome(
        fixed_v.cells.len() == 200 && rho_a >= 0.8 && rho_v >= 0.5 && share_v >= 0.7 && share_a >= 0.7,
        format!(
            "spearman(a, pure cost) {rho_a:.3}; spearman(v, no-pred cost) {rho_v:.3}; PERP within half spread {:.1}% (fixed-v), {:.1}% (fixed-a)",
            100.0 * share_v,
            100.0 * share_a
        ),
    )
}

fn c10_determinism(first: &[(&str, String)]) -> Outcome {
    let mut differing = Vec::new();
    for (name, json) in first {
        if run_preset(name).to_json().unwrap() != *json {
            differing.push(*name);
        }
    }
    outcome(differing.is_empty(), format!("reran {} presets, differing: {differing:?}", first.len()))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, title: &str, started: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict} [{:.1}s] {title}: {}", started.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failures += 1;
        }
    };

    let s = Instant::now();
    report(1, "exact values", s, c1_exact_values());
    let s = Instant::now();
    report(2, "variation oracles", s, c2_oracles());
    let s = Instant::now();
    report(3, "lower-bound construction", s, c3_construction());
    let s = Instant::now();
    let slope = run_preset("lower-bound-slope");
    report(4, "fixed-window regret slope", s, c4_slopes(&slope));
    let s = Instant::now();
    report(5, "prediction policy bound", s, c5_prediction_bound());
    let s = Instant::now();
    let robust = run_preset("perp-robustness");
    report(6, "PERP robustness", s, c6_perp(&robust));
    let s = Instant::now();
    report(7, "Exp3 excess", s, c7_exp3());
    let s = Instant::now();
    report(8, "indistinguishable pair", s, c8_pair());
    let s = Instant::now();
    let fixed_v = run_preset("synthetic-fixed-v");
    let fixed_a = run_preset("synthetic-fixed-a");
    report(9, "synthetic experiment shape", s, c9_synthetic(&fixed_v, &fixed_a));
    let s = Instant::now();
    let first = [("perp-robustness", robust.to_json().unwrap()), ("synthetic-fixed-a", fixed_a.to_json().unwrap())];
    report(10, "determinism", s, c10_determinism(&first));

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
