//! Summary statistics over trials.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::table::{IterRow, LambdaRow, Table};
use crate::error::{Error, Result};

/// Mean and sample standard deviation of `log10` of the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogStats {
    pub mu: f64,
    pub sigma: f64,
    /// Only one sample: `sigma` is 0 by convention rather than undefined.
    pub single_sample: bool,
}

pub fn log_stats(samples: &[f64]) -> Result<LogStats> {
    if samples.is_empty() {
        return Err(Error::EmptyTable);
    }
    if let Some(&bad) = samples.iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::NonPositiveSample(bad));
    }
    let logs: Vec<f64> = samples.iter().map(|v| v.log10()).collect();
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    if logs.len() == 1 {
        return Ok(LogStats {
            mu,
            sigma: 0.0,
            single_sample: true,
        });
    }
    let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / (n - 1.0);
    Ok(LogStats {
        mu,
        sigma: var.sqrt(),
        single_sample: false,
    })
}

/// Linearly interpolated quantile of sorted data (the common "type 7"
/// definition).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution of relative errors over trials. Failed (NaN) cells are
/// counted separately and excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub n: usize,
    pub failed: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Undefined when some error is exactly zero.
    pub log10_mean: Option<f64>,
    pub log10_std: Option<f64>,
}

pub fn summarize(samples: &[f64]) -> Result<StatSummary> {
    let mut finite: Vec<f64> = samples.iter().copied().filter(|v| !v.is_nan()).collect();
    if finite.is_empty() {
        return Err(Error::EmptyTable);
    }
    finite.sort_by(f64::total_cmp);
    let logs = log_stats(&finite).ok();
    Ok(StatSummary {
        n: finite.len(),
        failed: samples.len() - finite.len(),
        median: quantile_sorted(&finite, 0.5),
        q1: quantile_sorted(&finite, 0.25),
        q3: quantile_sorted(&finite, 0.75),
        log10_mean: logs.map(|l| l.mu),
        log10_std: logs.map(|l| l.sigma),
    })
}

/// Statistic used to rank tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BestBy {
    #[default]
    Median,
    /// Mean of `log10` errors; exact zeros are floored at the smallest
    /// positive double.
    LogMean,
}

impl FromStr for BestBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(BestBy::Median),
            "log-mean" => Ok(BestBy::LogMean),
            other => Err(Error::InvalidParameter(format!("unknown statistic {other:?}"))),
        }
    }
}

impl fmt::Display for BestBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BestBy::Median => "median",
            BestBy::LogMean => "log-mean",
        })
    }
}

fn score(samples: &[f64], by: BestBy) -> Option<f64> {
    let finite: Vec<f64> = samples.iter().copied().filter(|v| !v.is_nan()).collect();
    if finite.is_empty() {
        return None;
    }
    match by {
        BestBy::Median => summarize(&finite).ok().map(|s| s.median),
        BestBy::LogMean => {
            let floored: Vec<f64> = finite.iter().map(|v| v.max(f64::MIN_POSITIVE)).collect();
            log_stats(&floored).ok().map(|l| l.mu)
        }
    }
}

/// Groups values by key, keeping keys in order of first appearance.
fn group<K: Eq + std::hash::Hash + Copy>(items: impl Iterator<Item = (K, f64)>) -> Vec<(K, Vec<f64>)> {
    let mut index: HashMap<K, usize> = HashMap::new();
    let mut out: Vec<(K, Vec<f64>)> = Vec::new();
    for (k, v) in items {
        let pos = *index.entry(k).or_insert_with(|| {
            out.push((k, Vec::new()));
            out.len() - 1
        });
        out[pos].1.push(v);
    }
    out
}

/// Grid value with the smallest error statistic for one level; the lowest
/// such value on exact ties.
pub fn best_lambda(rows: &[LambdaRow], level_id: usize, by: BestBy) -> Result<f64> {
    let groups = group(
        rows.iter()
            .filter(|r| r.level_id == level_id)
            .map(|r| (r.lambda.to_bits(), r.rel_error)),
    );
    let mut best: Option<(f64, f64)> = None;
    for (bits, samples) in groups {
        let lambda = f64::from_bits(bits);
        let Some(value) = score(&samples, by) else { continue };
        let better = match best {
            None => true,
            Some((bl, bv)) => value < bv || (value == bv && lambda < bl),
        };
        if better {
            best = Some((lambda, value));
        }
    }
    best.map(|(l, _)| l).ok_or(Error::EmptyTable)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSummary {
    pub level_id: usize,
    pub level_desc: String,
    pub lambda: f64,
    pub stats: StatSummary,
}

pub fn lambda_summaries(rows: &[LambdaRow]) -> Result<Vec<LambdaSummary>> {
    let groups = group(rows.iter().map(|r| ((r.level_id, r.lambda.to_bits()), r.rel_error)));
    groups
        .into_iter()
        .map(|((level_id, bits), samples)| {
            let desc = rows
                .iter()
                .find(|r| r.level_id == level_id)
                .map(|r| r.level_desc.clone())
                .unwrap_or_default();
            Ok(LambdaSummary {
                level_id,
                level_desc: desc,
                lambda: f64::from_bits(bits),
                stats: summarize(&samples)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterSummary {
    pub lambda: f64,
    pub k: usize,
    pub stats: StatSummary,
}

pub fn iter_summaries(rows: &[IterRow]) -> Result<Vec<IterSummary>> {
    let groups = group(rows.iter().map(|r| ((r.lambda.to_bits(), r.k), r.rel_error)));
    groups
        .into_iter()
        .map(|((bits, k), samples)| {
            Ok(IterSummary {
                lambda: f64::from_bits(bits),
                k,
                stats: summarize(&samples)?,
            })
        })
        .collect()
}

const STAT_COLUMNS: [&str; 7] = ["n", "failed", "median", "q1", "q3", "log10_mean", "log10_std"];

fn stat_fields(s: &StatSummary) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        s.n.to_string(),
        s.failed.to_string(),
        s.median.to_string(),
        s.q1.to_string(),
        s.q3.to_string(),
        opt(s.log10_mean),
        opt(s.log10_std),
    ]
}

/// Per-cell summary table; log-domain columns are empty when undefined.
pub fn summary_csv(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = |rec: Vec<String>| w.write_record(&rec).map_err(|e| Error::MalformedTable(e.to_string()));
    match table {
        Table::Lambda(rows) => {
            let mut head = vec!["level_id".to_string(), "level_desc".into(), "lambda".into()];
            head.extend(STAT_COLUMNS.iter().map(|c| c.to_string()));
            write(head)?;
            for s in lambda_summaries(rows)? {
                let mut rec = vec![s.level_id.to_string(), s.level_desc.clone(), s.lambda.to_string()];
                rec.extend(stat_fields(&s.stats));
                write(rec)?;
            }
        }
        Table::Iter(rows) => {
            let mut head = vec!["lambda".to_string(), "k".into()];
            head.extend(STAT_COLUMNS.iter().map(|c| c.to_string()));
            write(head)?;
            for s in iter_summaries(rows)? {
                let mut rec = vec![s.lambda.to_string(), s.k.to_string()];
                rec.extend(stat_fields(&s.stats));
                write(rec)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::MalformedTable(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::MalformedTable(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_stats_examples() {
        let s = log_stats(&[10.0, 10.0, 10.0]).unwrap();
        assert_eq!((s.mu, s.sigma), (1.0, 0.0));
        let s = log_stats(&[1.0, 100.0]).unwrap();
        assert_eq!(s.mu, 1.0);
        assert!((s.sigma - 2f64.sqrt()).abs() < 1e-15);
        let s = log_stats(&[5.0]).unwrap();
        assert!(s.single_sample && s.sigma == 0.0);
        assert!(matches!(log_stats(&[1.0, 0.0]), Err(Error::NonPositiveSample(_))));
        assert!(matches!(log_stats(&[]), Err(Error::EmptyTable)));
    }

    proptest! {
        // two-pass textbook formula on the logs
        #[test]
        fn log_stats_match_reference(logs in prop::collection::vec(-6.0..3.0f64, 2..40)) {
            let samples: Vec<f64> = logs.iter().map(|l| 10f64.powf(*l)).collect();
            let s = log_stats(&samples).unwrap();
            let back: Vec<f64> = samples.iter().map(|v| v.log10()).collect();
            let n = back.len() as f64;
            let mean = back.iter().sum::<f64>() / n;
            let var = back.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((s.mu - mean).abs() < 1e-12);
            prop_assert!((s.sigma - var.sqrt()).abs() < 1e-12);
            prop_assert!(s.sigma >= 0.0);
        }

        #[test]
        fn quartiles_are_ordered(xs in prop::collection::vec(1e-8..1.0f64, 1..50)) {
            let s = summarize(&xs).unwrap();
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0, f64::NAN]).unwrap();
        assert_eq!(s.n, 4);
        assert_eq!(s.failed, 1);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        let z = summarize(&[0.0, 1.0]).unwrap();
        assert!(z.log10_mean.is_none());
    }

    fn row(level: usize, lambda: f64, trial: usize, err: f64) -> LambdaRow {
        LambdaRow {
            level_id: level,
            level_desc: format!("level {level}"),
            lambda,
            trial,
            rel_error: err,
            status: "ok".into(),
        }
    }

    #[test]
    fn best_lambda_cases() {
        assert_eq!(best_lambda(&[row(0, 0.3, 0, 1.0)], 0, BestBy::Median).unwrap(), 0.3);
        let increasing: Vec<LambdaRow> = (1..=5)
            .flat_map(|i| (0..3).map(move |t| row(0, i as f64 * 0.1, t, i as f64 + t as f64)))
            .collect();
        assert_eq!(best_lambda(&increasing, 0, BestBy::Median).unwrap(), 0.1);
        assert_eq!(best_lambda(&increasing, 0, BestBy::LogMean).unwrap(), 0.1);
        let tie = vec![row(0, 2.0, 0, 1.0), row(0, 1.0, 0, 1.0)];
        assert_eq!(best_lambda(&tie, 0, BestBy::Median).unwrap(), 1.0);
        assert!(matches!(best_lambda(&tie, 1, BestBy::Median), Err(Error::EmptyTable)));
    }

    #[test]
    fn summaries_group_in_order() {
        let rows = vec![
            row(0, 0.1, 0, 1.0),
            row(0, 0.1, 1, 3.0),
            row(0, 0.2, 0, 2.0),
            row(1, 0.1, 0, 5.0),
        ];
        let s = lambda_summaries(&rows).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].lambda, s[0].stats.median), (0.1, 2.0));
        assert_eq!(s[2].level_id, 1);
        let text = summary_csv(&Table::Lambda(rows)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "level_id,level_desc,lambda,n,failed,median,q1,q3,log10_mean,log10_std");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,level 0,0.1,2,0,2,1.5,2.5,"));
    }
}
