use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{HoltWintersParams, HoltWintersSetup};
use crate::policies::PolicySpec;
use crate::rng::replication_seed;

/// Version tag every config must carry; echoed into report provenance.
pub const CONFIG_FORMAT: &str = "newsvendor-experiment/1";

/// Parsed experiment file.
///
/// ```toml
/// format = "newsvendor-experiment/1"
/// name = "demo"
/// master_seed = 7
/// replications = 4          # or: seeds = [1, 2, 3]
/// horizons = [1024, 4096]
///
/// [[instances]]
/// name = "cycles"
/// generator = "lower-bound"
/// v = 0.0
/// a = 1.0
///
/// [[policies]]
/// name = "fixed"
/// kind = "fixed-window"
/// v = "instance"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format: String,
    pub name: String,
    pub master_seed: u64,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub horizons: Vec<usize>,
    pub instances: Vec<InstanceEntry>,
    pub policies: Vec<toml::Table>,
    #[serde(default)]
    pub gap: Option<GapSpec>,
    #[serde(default)]
    pub slope: Option<SlopeSpec>,
    /// Directory that relative CSV paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub name: String,
    #[serde(flatten)]
    pub generator: Generator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Generator {
    /// Bernoulli cycle construction, regenerated per seed and horizon.
    LowerBound {
        v: f64,
        a: f64,
        /// Replace the predictions with `mu_t + offset`.
        #[serde(default)]
        prediction_offset: Option<f64>,
    },
    /// One member (1 or 2) of the indistinguishable pair.
    Pair { member: u8 },
    /// Batch of synthetic Holt-Winters instances sharing one history.
    HoltWinters(HoltWintersBatch),
    /// Recorded series plus forecasts.
    Csv {
        series: PathBuf,
        predictions: PathBuf,
        #[serde(default = "default_test_len")]
        test_len: usize,
        #[serde(default = "default_season")]
        season: usize,
        #[serde(default = "default_bound_factor")]
        bound_factor: f64,
    },
}

fn default_test_len() -> usize {
    300
}
fn default_season() -> usize {
    7
}
fn default_bound_factor() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// One demand process, prediction parameters sampled per instance.
    FixedV,
    /// Demand parameters sampled per instance, predictions from perturbed copies.
    FixedA,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoltWintersBatch {
    pub mode: BatchMode,
    pub count: usize,
    /// Demand parameters in fixed-v mode.
    #[serde(default = "default_hw_params")]
    pub params: HoltWintersParams,
    #[serde(default = "default_sample_range")]
    pub sample_range: [f64; 2],
    #[serde(default = "default_seasons")]
    pub seasons: Vec<usize>,
    /// Relative perturbation of the prediction parameters in fixed-a mode.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    #[serde(default = "default_history_len")]
    pub history_len: usize,
    #[serde(default = "default_history_range")]
    pub history_range: [f64; 2],
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
    #[serde(default = "default_poisson_k")]
    pub poisson_k: f64,
    #[serde(default = "default_mean_floor")]
    pub mean_floor: f64,
}

fn default_hw_params() -> HoltWintersParams {
    HoltWintersParams { alpha: 0.5, beta: 0.5, gamma: 0.5, season: 30 }
}
fn default_sample_range() -> [f64; 2] {
    [0.2, 0.8]
}
fn default_seasons() -> Vec<usize> {
    vec![10, 20, 30]
}
fn default_perturbation() -> f64 {
    0.1
}
fn default_history_len() -> usize {
    30
}
fn default_history_range() -> [f64; 2] {
    [80.0, 120.0]
}
fn default_noise_variance() -> f64 {
    HoltWintersSetup::default().noise_variance
}
fn default_poisson_k() -> f64 {
    HoltWintersSetup::default().poisson_k
}
fn default_mean_floor() -> f64 {
    HoltWintersSetup::default().mean_floor
}

/// Which cost total enters the GAP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostBasis {
    #[default]
    Realized,
    Expected,
}

/// Names of the three policies compared by the GAP.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSpec {
    pub perp: String,
    pub pure: String,
    pub nopred: String,
    #[serde(default)]
    pub cost: CostBasis,
}

/// Policies whose mean regret is fitted against the horizon on a log-log scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeSpec {
    pub policies: Vec<String>,
}

/// How a policy parameter given as a string is filled in per instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSource {
    /// The exponent the instance was built for, else the measured one.
    Instance,
    /// The exponent measured on the instance itself.
    Measured,
    /// The variation exponent of the pre-horizon history.
    History,
}

impl ParamSource {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "instance" => Some(Self::Instance),
            "measured" => Some(Self::Measured),
            "history" => Some(Self::History),
            _ => None,
        }
    }
}

/// Parameters that may be given as a [`ParamSource`] instead of a number.
const RESOLVED_KEYS: [&str; 2] = ["v", "a"];

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "<root>".to_string(), |s| locate(text, s.start));
            Error::config(field, e.message().to_string())
        })?;
        cfg.base_dir = PathBuf::from(".");
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, text))
    }

    /// Replication seeds: the explicit list, or `replications` seeds derived from the master seed.
    pub fn seeds(&self) -> Vec<u64> {
        match (&self.seeds, self.replications) {
            (Some(s), _) => s.clone(),
            (None, Some(n)) => (0..n as u64).map(|i| replication_seed(self.master_seed, i)).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn policy_name(&self, idx: usize) -> &str {
        self.policies[idx].get("name").and_then(|v| v.as_str()).unwrap_or("")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CONFIG_FORMAT {
            return Err(Error::config("format", format!("expected \"{CONFIG_FORMAT}\", got \"{}\"", self.format)));
        }
        match (&self.seeds, self.replications) {
            (Some(_), Some(_)) => {
                return Err(Error::config("seeds", "give either `seeds` or `replications`, not both"))
            }
            (None, None) => return Err(Error::config("seeds", "no seeds: set `seeds` or `replications`")),
            _ => {}
        }
        if self.seeds().is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let needs_horizons = self.instances.iter().any(|e| !matches!(e.generator, Generator::Csv { .. }));
        if needs_horizons && self.horizons.is_empty() {
            return Err(Error::config("horizons", "at least one horizon is required"));
        }
        for (i, &t) in self.horizons.iter().enumerate() {
            if t < 2 {
                return Err(Error::config(format!("horizons[{i}]"), format!("horizon must be at least 2, got {t}")));
            }
        }
        if self.instances.is_empty() {
            return Err(Error::config("instances", "at least one instance is required"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, entry) in self.instances.iter().enumerate() {
            if !names.insert(entry.name.as_str()) {
                return Err(Error::config(format!("instances[{i}].name"), format!("duplicate name `{}`", entry.name)));
            }
            validate_generator(&entry.generator, &format!("instances[{i}]"))?;
        }
        if self.policies.is_empty() {
            return Err(Error::config("policies", "at least one policy is required"));
        }
        let mut pnames = std::collections::BTreeSet::new();
        for (i, table) in self.policies.iter().enumerate() {
            let path = format!("policies[{i}]");
            let name = match table.get("name") {
                Some(toml::Value::String(s)) if !s.is_empty() => s.as_str(),
                Some(_) => return Err(Error::config(format!("{path}.name"), "must be a non-empty string")),
                None => return Err(Error::config(format!("{path}.name"), "missing")),
            };
            if !pnames.insert(name) {
                return Err(Error::config(format!("{path}.name"), format!("duplicate name `{name}`")));
            }
            // any stand-in value checks the remaining fields
            resolve_policy(table, &path, |_, _| Ok(0.5))?;
        }
        if let Some(g) = &self.gap {
            for (field, name) in [("perp", &g.perp), ("pure", &g.pure), ("nopred", &g.nopred)] {
                if !pnames.contains(name.as_str()) {
                    return Err(Error::config(format!("gap.{field}"), format!("unknown policy `{name}`")));
                }
            }
        }
        if let Some(s) = &self.slope {
            for (i, name) in s.policies.iter().enumerate() {
                if !pnames.contains(name.as_str()) {
                    return Err(Error::config(format!("slope.policies[{i}]"), format!("unknown policy `{name}`")));
                }
            }
            if self.horizons.len() < 3 {
                return Err(Error::config("horizons", "slope fits need at least three horizons"));
            }
        }
        Ok(())
    }
}

fn validate_generator(g: &Generator, path: &str) -> Result<()> {
    let unit = |field: &str, x: f64| {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::config(format!("{path}.{field}"), format!("must lie in [0, 1], got {x}")))
        }
    };
    match g {
        Generator::LowerBound { v, a, prediction_offset } => {
            unit("v", *v)?;
            unit("a", *a)?;
            if prediction_offset.is_some_and(|o| !o.is_finite()) {
                return Err(Error::config(format!("{path}.prediction_offset"), "must be finite"));
            }
        }
        Generator::Pair { member } => {
            if !matches!(member, 1 | 2) {
                return Err(Error::config(format!("{path}.member"), format!("must be 1 or 2, got {member}")));
            }
        }
        Generator::HoltWinters(b) => {
            if b.count == 0 {
                return Err(Error::config(format!("{path}.count"), "must be positive"));
            }
            b.params.validate().map_err(|e| Error::config(format!("{path}.params"), e.to_string()))?;
            let [lo, hi] = b.sample_range;
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::config(format!("{path}.sample_range"), "need 0 <= lo <= hi <= 1"));
            }
            if b.seasons.is_empty() || b.seasons.iter().any(|&l| l == 0 || l > b.history_len) {
                return Err(Error::config(
                    format!("{path}.seasons"),
                    "need at least one season, each in 1..=history_len",
                ));
            }
            if b.params.season > b.history_len {
                return Err(Error::config(format!("{path}.params.season"), "longer than the history"));
            }
            if !(0.0..1.0).contains(&b.perturbation) {
                return Err(Error::config(format!("{path}.perturbation"), "must lie in [0, 1)"));
            }
            let [hlo, hhi] = b.history_range;
            if !(0.0 < hlo && hlo <= hhi) {
                return Err(Error::config(format!("{path}.history_range"), "need 0 < lo <= hi"));
            }
        }
        Generator::Csv { test_len, season, bound_factor, .. } => {
            if *test_len == 0 {
                return Err(Error::config(format!("{path}.test_len"), "must be positive"));
            }
            if *season == 0 {
                return Err(Error::config(format!("{path}.season"), "must be positive"));
            }
            if !(*bound_factor >= 1.0) {
                return Err(Error::config(format!("{path}.bound_factor"), "must be at least 1"));
            }
        }
    }
    Ok(())
}

/// Turn a `[[policies]]` table into a [`PolicySpec`], filling string-valued
/// exponents through `lookup(key, source)`.
pub(crate) fn resolve_policy<F>(table: &toml::Table, path: &str, mut lookup: F) -> Result<PolicySpec>
where
    F: FnMut(&str, ParamSource) -> Result<f64>,
{
    let mut t = table.clone();
    t.remove("name");
    for key in RESOLVED_KEYS {
        let Some(toml::Value::String(s)) = t.get(key) else { continue };
        let src = ParamSource::parse(s).ok_or_else(|| {
            Error::config(
                format!("{path}.{key}"),
                format!("expected a number, \"instance\", \"measured\" or \"history\", got \"{s}\""),
            )
        })?;
        let x = lookup(key, src).map_err(|e| Error::config(format!("{path}.{key}"), e.to_string()))?;
        t.insert(key.to_string(), toml::Value::Float(x));
    }
    for (k, v) in t.iter_mut() {
        // integers are accepted wherever a float is expected
        if let (true, toml::Value::Integer(i)) = (FLOAT_KEYS.contains(&k.as_str()), &*v) {
            *v = toml::Value::Float(*i as f64);
        }
    }
    toml::Value::Table(t).try_into().map_err(|e: toml::de::Error| Error::config(path, e.message().to_string()))
}

const FLOAT_KEYS: [&str; 6] = ["v", "a", "kappa", "gamma", "c_max", "quantity"];

/// Dotted-ish location of a byte offset: the nearest preceding table header.
fn locate(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line = before.lines().count().max(1);
    let header = before.lines().rev().find(|l| l.trim_start().starts_with('[')).map(str::trim);
    match header {
        Some(h) => format!("{h} (line {line})"),
        None => format!("line {line}"),
    }
}
