use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use newsvendor::demand::{demand_variation, exponent_of};
use newsvendor::experiment::{preset, run_experiment, ExperimentConfig, Report, PRESETS};
use newsvendor::instances::{
    gen_lower_bound_cycles, holt_winters_forecast, load_timeseries, write_series, HoltWintersParams, TimeSeries,
};
use newsvendor::rng::{stream, Stream};
use newsvendor::sim::gap;
use newsvendor::{Error, Result};

#[derive(Parser)]
#[command(name = "newsvendor", version, about = "Newsvendor ordering policies and regret experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write report.json plus plot-data CSVs.
    Run(RunArgs),
    /// Print the demand variation of a `t,value` series and its exponent.
    Variation {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        theta: f64,
    },
    /// GAP from three total costs (perp, pure-pred, no-pred) or from a report.
    Gap {
        #[arg(long, conflicts_with = "costs")]
        report: Option<PathBuf>,
        #[arg(num_args = 3, value_names = ["PERP", "PURE", "NOPRED"], allow_negative_numbers = true)]
        costs: Vec<f64>,
    },
    /// Write a Bernoulli cycle instance as means.csv and predictions.csv.
    Lowerbound {
        #[arg(long)]
        v: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit Holt-Winters on a `t,value` history and write m-step forecasts.
    HwForecast {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 7)]
        season: usize,
        #[arg(long)]
        steps: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in experiment presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
    /// Replace the config's master seed (seeds derived from `replications` follow it).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(args) => cmd_run(args),
        Command::Variation { input, theta } => {
            let s = load_timeseries(&input)?;
            let v = demand_variation(&s.values, theta)?;
            println!("T = {}", s.len());
            println!("V = {v}");
            println!("exponent = {}", exponent_of(v, s.len()));
            Ok(())
        }
        Command::Gap { report, costs } => match report {
            Some(path) => gap_from_report(&path),
            None => {
                print_gap(gap(costs[0], costs[1], costs[2]));
                Ok(())
            }
        },
        Command::Lowerbound { v, a, horizon, seed, out } => {
            let inst = gen_lower_bound_cycles(v, a, horizon, &mut stream(seed, Stream::Instance))?;
            std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            write_series(out.join("means.csv"), "value", &TimeSeries::from_values(inst.means().to_vec()))?;
            let preds = inst.predictions().expect("generator emits predictions").to_vec();
            write_series(out.join("predictions.csv"), "prediction", &TimeSeries::from_values(preds))?;
            println!("wrote {} and {}", out.join("means.csv").display(), out.join("predictions.csv").display());
            Ok(())
        }
        Command::HwForecast { input, alpha, beta, gamma, season, steps, out } => {
            let s = load_timeseries(&input)?;
            let params = HoltWintersParams::new(alpha, beta, gamma, season)?;
            let f = TimeSeries::from_values(holt_winters_forecast(&s.values, params, steps)?);
            match out {
                Some(path) => write_series(path, "prediction", &f),
                None => {
                    println!("t,prediction");
                    for (t, x) in f.values.iter().enumerate() {
                        println!("{},{x}", t + 1);
                    }
                    Ok(())
                }
            }
        }
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config { field: "--threads".into(), msg: e.to_string() })?;
    }
    let (mut cfg, text) = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) => {
            let (cfg, text) = preset(name)?;
            (cfg, text.to_string())
        }
        (None, None) => unreachable!("clap requires one of --config / --preset"),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let report = run_experiment(&cfg, &text)?;
    let written = report.write_to(&args.out)?;
    summarize(&report);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn summarize(report: &Report) {
    println!("{}: {} cells, {} seeds", report.name, report.cells.len(), report.provenance.seeds.len());
    if let Some(g) = &report.gap {
        let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "GAP ({:?} costs): mean {} median {} over {} cells, {} undefined",
            g.cost,
            fmt(g.mean),
            fmt(g.median),
            g.defined,
            g.undefined
        );
    }
    for s in &report.slopes {
        let slope = s.slope.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!("slope {} / {}: {slope}", s.instance, s.policy);
    }
}

fn print_gap(g: Result<f64>) {
    match g {
        Ok(v) => println!("{v}"),
        Err(Error::UndefinedGap) => println!("undefined"),
        Err(e) => println!("error: {e}"),
    }
}

fn gap_from_report(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let report = Report::from_json(&text)?;
    let g = report
        .gap
        .as_ref()
        .ok_or_else(|| Error::Config { field: "gap".into(), msg: "report has no GAP section".into() })?;
    for c in &report.cells {
        let label = match c.index {
            Some(i) => format!("{}[{i}] T={}", c.instance, c.horizon),
            None => format!("{} T={}", c.instance, c.horizon),
        };
        match c.gap {
            Some(v) => println!("{label}: {v}"),
            None => println!("{label}: undefined"),
        }
    }
    if let Some(m) = g.mean {
        println!("mean: {m}");
    }
    println!("undefined: {}", g.undefined);
    Ok(())
}
