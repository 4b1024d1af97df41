//! Named estimate checks: per-sample ratio records, summary statistics,
//! log-log exponent fits and pass/fail against thresholds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluated sample: `ratio = lhs / rhs` at a location and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub location: String,
    pub scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Record {
    pub fn new(location: impl Into<String>, scale: f64, lhs: f64, rhs: f64) -> Self {
        Self {
            location: location.into(),
            scale,
            lhs,
            rhs,
            ratio: lhs / rhs,
        }
    }
}

/// Least-squares fit `value ≈ constant · scale^exponent`; `residual` is the
/// largest absolute deviation in log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub constant: f64,
    pub residual: f64,
}

/// Ordinary least squares on `(ln scale, ln value)`.
pub fn exponent_fit(pairs: &[(f64, f64)]) -> Result<Fit> {
    if let Some(&(s, v)) = pairs.iter().find(|&&(s, v)| !(s > 0.0 && v > 0.0) || !s.is_finite() || !v.is_finite()) {
        return Err(Error::DegenerateFit(format!("nonpositive or non-finite pair ({s}, {v})")));
    }
    let mut scales: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if scales.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} distinct scales, need 3", scales.len())));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        exponent,
        constant: intercept.exp(),
        residual,
    })
}

/// Slope of `ln value` against `ln scale` with a separate intercept per
/// group (a fixed-effects fit): the common exponent of a family of curves
/// that differ by multiplicative constants. `constant` is the geometric
/// mean of the group constants.
pub fn grouped_exponent_fit(groups: &[Vec<(f64, f64)>]) -> Result<Fit> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut distinct = Vec::new();
    let mut centered = Vec::new();
    for g in groups.iter().filter(|g| g.len() >= 2) {
        if g.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0) || !s.is_finite() || !v.is_finite()) {
            return Err(Error::DegenerateFit("nonpositive or non-finite pair".into()));
        }
        let n = g.len() as f64;
        let mx = g.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let my = g.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        for &(s, v) in g {
            sxx += (s.ln() - mx).powi(2);
            sxy += (s.ln() - mx) * (v.ln() - my);
            distinct.push(s);
        }
        centered.push((mx, my, g));
    }
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if distinct.len() < 3 || !(sxx > 0.0) {
        return Err(Error::DegenerateFit(format!("{} distinct scales, need 3", distinct.len())));
    }
    let exponent = sxy / sxx;
    let mut residual: f64 = 0.0;
    let mut log_const = 0.0;
    for (mx, my, g) in &centered {
        let intercept = my - exponent * mx;
        log_const += intercept;
        for &(s, v) in g.iter() {
            residual = residual.max((v.ln() - intercept - exponent * s.ln()).abs());
        }
    }
    Ok(Fit {
        exponent,
        constant: (log_const / centered.len() as f64).exp(),
        residual,
    })
}

/// A named estimate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    #[serde(rename = "samples")]
    pub records: Vec<Record>,
    pub min: f64,
    pub max: f64,
    /// `max / min` over the ratio records.
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<Fit>,
    /// Additional named statistics (per-scale maxima, derived constants…).
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub stats: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub thresholds: BTreeMap<String, f64>,
    pub pass: Option<bool>,
}

impl Report {
    pub fn from_records(name: impl Into<String>, records: Vec<Record>) -> Self {
        let (min, max) = records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
        let (min, max) = if records.is_empty() { (f64::NAN, f64::NAN) } else { (min, max) };
        Self {
            name: name.into(),
            records,
            min,
            max,
            ratio: max / min,
            fit: None,
            stats: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            pass: None,
        }
    }

    pub fn with_fit(mut self, fit: Fit) -> Self {
        self.fit = Some(fit);
        self
    }

    pub fn with_stat(mut self, key: impl Into<String>, value: f64) -> Self {
        self.stats.insert(key.into(), value);
        self
    }

    /// Records a threshold and folds the comparison into `pass`.
    pub fn check(mut self, key: impl Into<String>, threshold: f64, ok: bool) -> Self {
        self.thresholds.insert(key.into(), threshold);
        self.pass = Some(self.pass.unwrap_or(true) && ok);
        self
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.get(key).copied()
    }

    /// Summary statistics recomputed from the records.
    pub fn recomputed(&self) -> (f64, f64) {
        let r = Self::from_records(self.name.clone(), self.records.clone());
        (r.min, r.max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per record, RFC-4180 quoting, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("report,location,scale,lhs,rhs,ratio\r\n");
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\r\n",
                csv_field(&self.name),
                csv_field(&r.location),
                r.scale,
                r.lhs,
                r.rhs,
                r.ratio
            );
        }
        out
    }

    /// A copy without per-sample records, for manifests.
    pub fn summary(&self) -> Self {
        Self {
            records: Vec::new(),
            ..self.clone()
        }
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Relative change `|b − a| / a` of a statistic between two refinements.
pub fn relative_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

/// `max / min` over a family of statistics (level-stability spread).
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_law_fit() {
        let pairs: Vec<(f64, f64)> = (1..8).map(|k| (2f64.powi(k), 3.0 * 2f64.powi(k).powf(-1.5))).collect();
        let fit = exponent_fit(&pairs).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-12);
        assert!((fit.constant - 3.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn noisy_power_law_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pairs: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let s = 1.2f64.powi(k);
                (s, s.powf(0.737) * (1.0 + 0.1 * (2.0 * rng.random::<f64>() - 1.0)))
            })
            .collect();
        let fit = exponent_fit(&pairs).unwrap();
        assert!((fit.exponent - 0.737).abs() < 0.05);
    }

    #[test]
    fn degenerate_fits_rejected() {
        assert!(exponent_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(exponent_fit(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(exponent_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0)]).is_err());
    }

    #[test]
    fn grouped_fit_ignores_group_constants() {
        let groups: Vec<Vec<(f64, f64)>> = (1..5)
            .map(|g| (1..6).map(|k| (k as f64, g as f64 * 10.0 * (k as f64).powf(2.0))).collect())
            .collect();
        let fit = grouped_exponent_fit(&groups).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn report_summary_and_csv() {
        let r = Report::from_records(
            "demo",
            vec![Record::new("a,b", 1.0, 2.0, 1.0), Record::new("c", 2.0, 1.0, 2.0)],
        )
        .check("max", 3.0, true);
        assert_eq!((r.min, r.max, r.ratio), (0.5, 2.0, 4.0));
        assert_eq!(r.recomputed(), (0.5, 2.0));
        assert_eq!(r.pass, Some(true));
        let csv = r.to_csv();
        assert!(csv.contains("\"a,b\""));
        assert!(csv.contains("2.0000000000000000e0"));
        let json = r.to_json().unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
