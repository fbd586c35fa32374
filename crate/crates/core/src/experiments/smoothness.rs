//! Error-landscape smoothness: how similar the data-fit losses of
//! neighbouring expressions are under a given metric.
//!
//! For a focal expression `i` with neighbours `n_1, .., n_N` (closest first),
//! `A[i][j] = |l_i - l_{n_j}|`. Each row is turned into prefix statistics
//! `B[i][j] = aggr1(A[i][..=j])`, and the curve is `c[j] = aggr2(B[..][j])`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::fitting::{fit_constants, fitted_outputs, Dataset, FitBudget, FitResult};
use crate::metrics::{distance_matrix, BedConfig, DistanceMatrix, Metric, MetricError, MetricId};
use crate::sampling::{derive_seed, derive_stream};

/// Row statistic applied to growing prefixes of neighbour loss gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggr1 {
    Max,
    Mean,
    Median,
}

/// Column statistic applied across focal expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggr2 {
    Mean,
    Median,
}

impl Aggr1 {
    pub const ALL: [Aggr1; 3] = [Aggr1::Max, Aggr1::Mean, Aggr1::Median];

    pub fn name(self) -> &'static str {
        match self {
            Aggr1::Max => "max",
            Aggr1::Mean => "mean",
            Aggr1::Median => "median",
        }
    }
}

impl Aggr2 {
    pub const ALL: [Aggr2; 2] = [Aggr2::Mean, Aggr2::Median];

    pub fn name(self) -> &'static str {
        match self {
            Aggr2::Mean => "mean",
            Aggr2::Median => "median",
        }
    }
}

impl fmt::Display for Aggr1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Aggr2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggr1 {
    type Err = String;

    fn from_str(s: &str) -> Result<Aggr1, String> {
        Aggr1::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown row aggregation {s:?} (expected max, mean or median)"))
    }
}

impl FromStr for Aggr2 {
    type Err = String;

    fn from_str(s: &str) -> Result<Aggr2, String> {
        Aggr2::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown column aggregation {s:?} (expected mean or median)"))
    }
}

/// Median of a sorted slice; the mean of the two middle values for even length.
fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_median(&v)
}

/// Indices of the `n` nearest expressions to each row, self excluded, ties
/// broken by ascending index.
pub fn neighbor_table(dm: &DistanceMatrix, n: usize) -> Vec<Vec<usize>> {
    let m = dm.size();
    assert!(n < m, "cannot take {n} neighbours out of {m} expressions");
    (0..m)
        .into_par_iter()
        .map(|i| {
            let row = dm.row(i);
            let mut others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            others.truncate(n);
            others
        })
        .collect()
}

/// True when a loss marks a failed fit.
pub fn is_sentinel(loss: f64, penalty: f64) -> bool {
    !loss.is_finite() || loss >= penalty
}

/// Loss gaps of one focal row; a failed neighbour contributes `penalty`.
pub fn loss_gaps(losses: &[f64], focal: usize, neighbors: &[usize], penalty: f64) -> Vec<f64> {
    neighbors
        .iter()
        .map(|&j| {
            if is_sentinel(losses[j], penalty) {
                penalty
            } else {
                (losses[focal] - losses[j]).abs()
            }
        })
        .collect()
}

/// `out[j] = aggr(gaps[..=j])`.
pub fn prefix_aggregate(gaps: &[f64], aggr: Aggr1) -> Vec<f64> {
    let mut out = Vec::with_capacity(gaps.len());
    match aggr {
        Aggr1::Max => {
            let mut best = f64::NEG_INFINITY;
            for &g in gaps {
                best = best.max(g);
                out.push(best);
            }
        }
        Aggr1::Mean => {
            let mut sum = 0.0;
            for (k, &g) in gaps.iter().enumerate() {
                sum += g;
                out.push(sum / (k + 1) as f64);
            }
        }
        Aggr1::Median => {
            let mut sorted: Vec<f64> = Vec::with_capacity(gaps.len());
            for &g in gaps {
                let at = sorted.partition_point(|v| *v <= g);
                sorted.insert(at, g);
                out.push(sorted_median(&sorted));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub values: Vec<f64>,
    /// Focal rows skipped because their own loss is a sentinel.
    pub excluded: usize,
}

pub fn smoothness_curve(
    losses: &[f64],
    neighbors: &[Vec<usize>],
    aggr1: Aggr1,
    aggr2: Aggr2,
    penalty: f64,
) -> Curve {
    assert_eq!(losses.len(), neighbors.len(), "one neighbour row per loss");
    let width = neighbors.first().map_or(0, Vec::len);
    let rows: Vec<Vec<f64>> = (0..losses.len())
        .into_par_iter()
        .filter(|&i| !is_sentinel(losses[i], penalty))
        .map(|i| prefix_aggregate(&loss_gaps(losses, i, &neighbors[i], penalty), aggr1))
        .collect();
    let excluded = losses.len() - rows.len();
    let values = (0..width)
        .map(|j| {
            if rows.is_empty() {
                return f64::NAN;
            }
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            match aggr2 {
                Aggr2::Mean => column.iter().sum::<f64>() / column.len() as f64,
                Aggr2::Median => median(&column),
            }
        })
        .collect();
    Curve { values, excluded }
}

#[derive(Debug, Error)]
pub enum SmoothnessError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid smoothness configuration: {0}")]
    Config(String),
    #[error("expression {expr} needs {needed} variables but the dataset has {available}")]
    Dimensions {
        expr: String,
        needed: usize,
        available: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConfig {
    pub metrics: Vec<MetricId>,
    pub neighbors: usize,
    pub repeats: usize,
    pub aggregations: Vec<(Aggr1, Aggr2)>,
    pub fit: FitBudget,
    /// Template for the behaviour-aware metric; its seed is replaced per repeat.
    pub bed: BedConfig,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCurves {
    pub metric: MetricId,
    pub aggr1: Aggr1,
    pub aggr2: Aggr2,
    pub runs: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Population variance across repeats.
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub losses: Vec<f64>,
    pub excluded: usize,
    pub curves: Vec<SmoothnessCurves>,
}

impl SmoothnessReport {
    pub fn find(&self, metric: MetricId, aggr1: Aggr1, aggr2: Aggr2) -> Option<&SmoothnessCurves> {
        self.curves
            .iter()
            .find(|c| c.metric == metric && c.aggr1 == aggr1 && c.aggr2 == aggr2)
    }

    /// CSV with columns `neighbor_index,metric,aggr1,aggr2,mean,variance`;
    /// neighbour indices start at 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "neighbor_index,metric,aggr1,aggr2,mean,variance")?;
        for c in &self.curves {
            for (j, (m, v)) in c.mean.iter().zip(&c.variance).enumerate() {
                writeln!(out, "{},{},{},{},{},{}", j + 1, c.metric, c.aggr1, c.aggr2, m, v)?;
            }
        }
        Ok(())
    }
}

/// Fits every expression once, each with its own stream.
pub fn fit_corpus(corpus: &[Expr], data: &Dataset, budget: &FitBudget, seed: u64) -> Vec<FitResult> {
    corpus
        .par_iter()
        .map(|e| {
            let mut rng = derive_stream(seed, format!("fit/{}", e.to_canonical_string()));
            fit_constants(e, data, budget, &mut rng)
        })
        .collect()
}

/// Fitted outputs on the dataset rows, `None` for failed fits.
pub fn optimal_outputs(
    corpus: &[Expr],
    data: &Dataset,
    fits: &[FitResult],
    penalty: f64,
) -> Vec<Option<Vec<f64>>> {
    corpus
        .iter()
        .zip(fits)
        .map(|(e, f)| if f.failed(penalty) { None } else { fitted_outputs(e, data, f) })
        .collect()
}

fn mean_and_variance(runs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let width = runs.first().map_or(0, Vec::len);
    let r = runs.len() as f64;
    (0..width)
        .map(|j| {
            // shifting by the first run keeps identical runs exactly at zero variance
            let base = runs[0][j];
            let mean = base + runs.iter().map(|run| run[j] - base).sum::<f64>() / r;
            let var = runs.iter().map(|run| (run[j] - mean).powi(2)).sum::<f64>() / r;
            (mean, var)
        })
        .unzip()
}

pub fn smoothness_study(
    corpus: &[Expr],
    data: &Dataset,
    cfg: &SmoothnessConfig,
) -> Result<SmoothnessReport, SmoothnessError> {
    if cfg.repeats == 0 {
        return Err(SmoothnessError::Config("repeats must be at least 1".into()));
    }
    if cfg.neighbors == 0 || cfg.neighbors >= corpus.len() {
        return Err(SmoothnessError::Config(format!(
            "neighbours must lie in 1..{} for {} expressions",
            corpus.len(),
            corpus.len()
        )));
    }
    if cfg.metrics.is_empty() || cfg.aggregations.is_empty() {
        return Err(SmoothnessError::Config("need at least one metric and one aggregation".into()));
    }
    for e in corpus {
        let needed = e.required_dimensions();
        if needed > data.dims() {
            return Err(SmoothnessError::Dimensions {
                expr: e.to_canonical_string(),
                needed,
                available: data.dims(),
            });
        }
    }

    let penalty = cfg.fit.penalty;
    let fits = fit_corpus(corpus, data, &cfg.fit, cfg.master_seed);
    let losses: Vec<f64> = fits.iter().map(|f| f.rmse).collect();
    let excluded = losses.iter().filter(|l| is_sentinel(**l, penalty)).count();

    let mut curves = Vec::new();
    for &metric in &cfg.metrics {
        let tables: Vec<Vec<Vec<usize>>> = if metric.is_deterministic() {
            let dm = match metric {
                MetricId::Optimal => {
                    let outputs = optimal_outputs(corpus, data, &fits, penalty);
                    distance_matrix(corpus, &Metric::Optimal { outputs: &outputs, penalty })?
                }
                MetricId::Edit => distance_matrix(corpus, &Metric::Edit)?,
                MetricId::TreeEdit => distance_matrix(corpus, &Metric::TreeEdit)?,
                MetricId::Bed => unreachable!("bed is seeded"),
            };
            let table = neighbor_table(&dm, cfg.neighbors);
            vec![table; cfg.repeats]
        } else {
            (0..cfg.repeats)
                .map(|r| {
                    let bed = BedConfig {
                        master_seed: derive_seed(cfg.master_seed, format!("bed/{r}")),
                        ..cfg.bed.clone()
                    };
                    let dm = distance_matrix(corpus, &Metric::Bed(&bed))?;
                    Ok(neighbor_table(&dm, cfg.neighbors))
                })
                .collect::<Result<_, MetricError>>()?
        };
        for &(aggr1, aggr2) in &cfg.aggregations {
            let runs: Vec<Vec<f64>> = tables
                .iter()
                .map(|t| smoothness_curve(&losses, t, aggr1, aggr2, penalty).values)
                .collect();
            let (mean, variance) = mean_and_variance(&runs);
            curves.push(SmoothnessCurves {
                metric,
                aggr1,
                aggr2,
                runs,
                mean,
                variance,
            });
        }
    }
    Ok(SmoothnessReport {
        losses,
        excluded,
        curves,
    })
}
