use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HoltWinters, HoltWintersParams, Instance, InstanceMeta};
use crate::demand::{demand_variation, exponent_of, CostRates, DemandFamily, MeanBounds, QuantitySpace, RateSchedule};
use crate::error::{Error, Result};

/// An ordered series of `(index, value)` rows; indices are kept verbatim.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub index: Vec<String>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        let index = (1..=values.len()).map(|t| t.to_string()).collect();
        Self { index, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn load_column(path: &Path, column: &str) -> Result<TimeSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: u64, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != column {
        return Err(parse_err(
            1,
            format!("expected header `t,{column}`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = TimeSeries::default();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let t = record.get(0).unwrap_or("");
        let raw = record.get(1).unwrap_or("");
        if t.is_empty() {
            return Err(parse_err(line, "missing index".into()));
        }
        if raw.is_empty() {
            return Err(parse_err(line, format!("missing {column} for t={t}")));
        }
        let value: f64 = raw.parse().map_err(|_| parse_err(line, format!("cannot parse {column} `{raw}`")))?;
        if !value.is_finite() {
            return Err(parse_err(line, format!("{column} `{raw}` is not finite")));
        }
        out.index.push(t.to_string());
        out.values.push(value);
    }
    Ok(out)
}

/// Read a `t,value` CSV.
pub fn load_timeseries(path: impl AsRef<Path>) -> Result<TimeSeries> {
    load_column(path.as_ref(), "value")
}

/// Read a `t,prediction` CSV.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<TimeSeries> {
    load_column(path.as_ref(), "prediction")
}

/// Write `series` as a two-column CSV with header `t,<column>`.
pub fn write_series(path: impl AsRef<Path>, column: &str, series: &TimeSeries) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut body = format!("t,{column}\n");
    for (t, v) in series.index.iter().zip(&series.values) {
        body.push_str(&format!("{t},{v}\n"));
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Split off the last `test_len` rows.
pub fn split_train_test(series: &TimeSeries, test_len: usize) -> Result<(TimeSeries, TimeSeries)> {
    if test_len == 0 || test_len >= series.len() {
        return Err(Error::domain(format!(
            "test length {test_len} must be positive and below the series length {}",
            series.len()
        )));
    }
    let cut = series.len() - test_len;
    let part = |r: std::ops::Range<usize>| TimeSeries {
        index: series.index[r.clone()].to_vec(),
        values: series.values[r].to_vec(),
    };
    Ok((part(0..cut), part(cut..series.len())))
}

/// Empirical family `mu + r` with `r` uniform over the training residuals
/// `d_s - mu_hat_s`.
pub fn fit_residual_family(train: &[f64], train_preds: &[f64], bounds: MeanBounds) -> Result<DemandFamily> {
    if train.len() != train_preds.len() {
        return Err(Error::domain(format!(
            "{} training demands but {} training predictions",
            train.len(),
            train_preds.len()
        )));
    }
    if train.is_empty() {
        return Err(Error::domain("no training data for residuals"));
    }
    let residuals = train.iter().zip(train_preds).map(|(d, p)| d - p).collect();
    DemandFamily::shifted_noise(residuals, bounds)
}

/// How a real series becomes an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealDataOptions {
    pub test_len: usize,
    /// Used for in-sample residuals when predictions cover only the test window.
    pub season: usize,
    pub rates: CostRates,
    /// Upper mean bound as a multiple of the training maximum.
    pub bound_factor: f64,
}

impl Default for RealDataOptions {
    fn default() -> Self {
        Self { test_len: 300, season: 7, rates: CostRates::unit(), bound_factor: 2.0 }
    }
}

/// Instance over the last `test_len` periods of `series`.
///
/// Demands are the recorded values. Predictions may cover the whole series
/// (the training part then supplies the residuals) or only the test window,
/// in which case one-step Holt-Winters fits on the training part supply them.
/// The unknown true means are proxied by the predictions clamped into
/// `[0, bound_factor * max(train)]`.
pub fn real_data_instance(series: &TimeSeries, predictions: &TimeSeries, opts: RealDataOptions) -> Result<Instance> {
    let (train, test) = split_train_test(series, opts.test_len)?;
    let top = train.values.iter().copied().fold(0.0f64, f64::max) * opts.bound_factor;
    let bounds = MeanBounds::new(0.0, top.max(f64::MIN_POSITIVE))?;
    let (train_preds, test_preds) = if predictions.len() == series.len() {
        let (a, b) = split_train_test(predictions, opts.test_len)?;
        (a.values, b.values)
    } else if predictions.len() == opts.test_len {
        let params = HoltWintersParams::new(0.5, 0.5, 0.5, opts.season)?;
        (one_step_fits(&train.values, params)?, predictions.values.clone())
    } else {
        return Err(Error::domain(format!(
            "{} predictions fit neither the series ({}) nor the test window ({})",
            predictions.len(),
            series.len(),
            opts.test_len
        )));
    };
    let train_tail = &train.values[train.len() - train_preds.len()..];
    let family = fit_residual_family(train_tail, &train_preds, bounds)?;
    let means = test_preds.iter().map(|p| bounds.clamp(*p)).collect();
    let history_v = exponent_of(demand_variation(&train.values, 2.0)?, opts.test_len);
    let meta = InstanceMeta {
        label: "real-data".into(),
        history_v: Some(history_v),
        notes: vec!["history exponent measured on realized demands".into()],
        ..Default::default()
    };
    Ok(Instance::new(family, means, RateSchedule::Constant(opts.rates), QuantitySpace::NonnegativeReals)?
        .with_predictions(test_preds)?
        .with_realized(test.values)?
        .with_meta(meta))
}

/// In-sample one-step forecasts for every observation after the first season.
fn one_step_fits(train: &[f64], params: HoltWintersParams) -> Result<Vec<f64>> {
    let l = params.season;
    if train.len() <= l {
        return Err(Error::domain("training window shorter than one season plus one"));
    }
    let mut hw = HoltWinters::fit(&train[..l], params)?;
    let mut fits = Vec::with_capacity(train.len() - l);
    for &x in &train[l..] {
        fits.push(hw.forecast(1));
        if !(x > 0.0) {
            return Err(Error::domain(
                "in-sample Holt-Winters residuals need positive demands; supply full-length predictions",
            ));
        }
        hw.update(x);
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "t,value\n1,3.5\n2,1\n3,2\n");
        let s = load_timeseries(&p).unwrap();
        assert_eq!(s.values, vec![3.5, 1.0, 2.0]);
        assert_eq!(s.index, vec!["1", "2", "3"]);
        let p = write(&dir, "d.csv", "t,value\n2015-01-01,3\n2015-01-02,4\n");
        assert_eq!(load_timeseries(&p).unwrap().index[1], "2015-01-02");
    }

    #[test]
    fn parse_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "t,value\n1,3\n2,\n3,4\n");
        match load_timeseries(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let p = write(&dir, "h.csv", "t,prediction\n1,3\n");
        assert!(matches!(load_timeseries(&p), Err(Error::Parse { line: 1, .. })));
        let p = write(&dir, "x.csv", "t,value\n1,abc\n");
        assert!(matches!(load_timeseries(&p), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn split_lengths() {
        let s = TimeSeries::from_values((0..781).map(f64::from).collect());
        let (a, b) = split_train_test(&s, 300).unwrap();
        assert_eq!((a.len(), b.len()), (481, 300));
        assert_eq!(b.values[0], 481.0);
        assert!(split_train_test(&s, 781).is_err());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = TimeSeries::from_values(vec![0.1, 1e-17, 12345.678, -3.0]);
        let p = dir.path().join("rt.csv");
        write_series(&p, "value", &s).unwrap();
        assert_eq!(load_timeseries(&p).unwrap(), s);
    }

    #[test]
    fn residual_family() {
        let b = MeanBounds::new(0.0, 10.0).unwrap();
        let fam = fit_residual_family(&[3.0, 5.0], &[3.0, 5.0], b).unwrap();
        assert_eq!(fam.expected_cost(4.0, CostRates::unit(), 4.0).unwrap(), 0.0);
        assert!(fit_residual_family(&[1.0], &[1.0, 2.0], b).is_err());
    }

    #[test]
    fn real_instance_from_full_predictions() {
        let vals: Vec<f64> = (0..40).map(|i| 10.0 + (i % 5) as f64).collect();
        let series = TimeSeries::from_values(vals.clone());
        let preds = TimeSeries::from_values(vals.iter().map(|v| v + 1.0).collect());
        let opts = RealDataOptions { test_len: 10, ..Default::default() };
        let inst = real_data_instance(&series, &preds, opts).unwrap();
        assert_eq!(inst.horizon(), 10);
        assert_eq!(inst.realized().unwrap(), &vals[30..]);
        // every residual is -1, so the optimal order undoes the bias
        let q = inst.family().optimal_quantity(inst.means()[0], CostRates::unit(), inst.space()).unwrap();
        assert_eq!(q, vals[30]);
    }

    #[test]
    fn real_instance_from_test_window_predictions() {
        let vals: Vec<f64> = (0..60).map(|i| 10.0 + (i % 7) as f64).collect();
        let series = TimeSeries::from_values(vals);
        let preds = TimeSeries::from_values(vec![12.0; 20]);
        let opts = RealDataOptions { test_len: 20, season: 7, ..Default::default() };
        let inst = real_data_instance(&series, &preds, opts).unwrap();
        assert_eq!(inst.horizon(), 20);
        let bad = TimeSeries::from_values(vec![1.0; 7]);
        assert!(real_data_instance(&series, &bad, opts).is_err());
    }
}
