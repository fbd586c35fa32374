//! Pairwise expression distances and distance-matrix assembly.

pub mod bed;
pub mod edit;
pub mod tree_edit;
pub mod wasserstein;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;

pub use bed::{bed, outputs_at, BedConfig, BedProfile};
pub use edit::edit_distance;
pub use tree_edit::tree_edit_distance;
pub use wasserstein::{w1, EmpiricalDist, DEFAULT_PENALTY};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("invalid metric configuration: {0}")]
    Config(String),
    #[error("expression {expr} needs {needed} variable dimensions but the domain has {available}")]
    Dimensions {
        expr: String,
        needed: usize,
        available: usize,
    },
    #[error("optimal metric needs {expected} output vectors, got {got}")]
    OutputCount { expected: usize, got: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricId {
    Bed,
    Edit,
    TreeEdit,
    Optimal,
}

impl MetricId {
    pub const ALL: [MetricId; 4] = [
        MetricId::Edit,
        MetricId::TreeEdit,
        MetricId::Bed,
        MetricId::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Bed => "bed",
            MetricId::Edit => "edit",
            MetricId::TreeEdit => "tree-edit",
            MetricId::Optimal => "optimal",
        }
    }

    /// Deterministic metrics do not depend on any seed.
    pub fn is_deterministic(self) -> bool {
        !matches!(self, MetricId::Bed)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<MetricId, String> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?} (expected bed, edit, tree-edit or optimal)"))
    }
}

/// Root mean squared difference of two equal-length output vectors.
pub fn output_rmse_distance(yu: &[f64], yv: &[f64]) -> f64 {
    assert_eq!(yu.len(), yv.len(), "output vectors differ in length");
    assert!(!yu.is_empty(), "output vectors are empty");
    let sum: f64 = yu.iter().zip(yv).map(|(a, b)| (a - b) * (a - b)).sum();
    (sum / yu.len() as f64).sqrt()
}

/// A metric together with everything it needs.
#[derive(Debug, Clone, Copy)]
pub enum Metric<'a> {
    Bed(&'a BedConfig),
    Edit,
    TreeEdit,
    /// RMSE between fitted outputs; `None` marks an expression whose outputs
    /// are invalid on the dataset, which sits at `penalty` from every other.
    Optimal {
        outputs: &'a [Option<Vec<f64>>],
        penalty: f64,
    },
}

impl Metric<'_> {
    pub fn id(&self) -> MetricId {
        match self {
            Metric::Bed(_) => MetricId::Bed,
            Metric::Edit => MetricId::Edit,
            Metric::TreeEdit => MetricId::TreeEdit,
            Metric::Optimal { .. } => MetricId::Optimal,
        }
    }

    fn fingerprint(&self) -> String {
        match self {
            Metric::Bed(cfg) => format!(
                "bed:vars={:?}:consts={:?}:vs={}:cs={}:penalty={}:seed={}:cap={}",
                cfg.var_box.intervals(),
                cfg.const_interval,
                cfg.num_var_samples,
                cfg.num_const_samples,
                cfg.penalty,
                cfg.master_seed,
                cfg.magnitude_cap
            ),
            Metric::Edit => "edit".into(),
            Metric::TreeEdit => "tree-edit".into(),
            Metric::Optimal { penalty, .. } => format!("optimal:penalty={penalty}"),
        }
    }
}

/// A symmetric matrix of pairwise distances, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    entries: Vec<f64>,
    pub metric: MetricId,
    pub fingerprint: String,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// Builds a matrix from full rows; used for tests and external data.
    pub fn from_rows(rows: Vec<Vec<f64>>, metric: MetricId) -> DistanceMatrix {
        let size = rows.len();
        assert!(rows.iter().all(|r| r.len() == size), "matrix must be square");
        DistanceMatrix {
            size,
            entries: rows.concat(),
            metric,
            fingerprint: String::from("external"),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// CSV: a header of canonical expression strings, then one row of
    /// decimal values per expression.
    pub fn write_csv<W: Write>(&self, corpus: &[Expr], mut out: W) -> io::Result<()> {
        assert_eq!(corpus.len(), self.size);
        let header: Vec<String> = corpus.iter().map(Expr::to_canonical_string).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.size {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, MetricError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| MetricError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Fills the upper triangle with `pair(i, j)` in parallel and mirrors it.
fn assemble(size: usize, pair: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let upper: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|i| (i + 1..size).map(|j| pair(i, j)).collect())
        .collect();
    let mut entries = vec![0.0; size * size];
    for (i, row) in upper.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            entries[i * size + j] = d;
            entries[j * size + i] = d;
        }
    }
    entries
}

/// Pairwise distances over a corpus. Entries are independent, so the result
/// does not depend on the number of workers.
pub fn distance_matrix(corpus: &[Expr], metric: &Metric<'_>) -> Result<DistanceMatrix, MetricError> {
    let size = corpus.len();
    let entries = match metric {
        Metric::Bed(cfg) => {
            let profiles = bed::profiles(corpus, cfg)?;
            let penalty = cfg.penalty;
            assemble(size, |i, j| bed::bed_from_profiles(&profiles[i], &profiles[j], penalty))
        }
        Metric::Edit => {
            let tokens: Vec<_> = corpus.iter().map(edit::canonical_tokens).collect();
            assemble(size, |i, j| edit::levenshtein(&tokens[i], &tokens[j]) as f64)
        }
        Metric::TreeEdit => {
            let trees: Vec<_> = corpus.iter().map(tree_edit::expr_tree).collect();
            assemble(size, |i, j| tree_edit::tree_distance(&trees[i], &trees[j]) as f64)
        }
        Metric::Optimal { outputs, penalty } => {
            if outputs.len() != size {
                return Err(MetricError::OutputCount {
                    expected: size,
                    got: outputs.len(),
                });
            }
            assemble(size, |i, j| match (&outputs[i], &outputs[j]) {
                (Some(a), Some(b)) => output_rmse_distance(a, b),
                _ => *penalty,
            })
        }
    };
    Ok(DistanceMatrix {
        size,
        entries,
        metric: metric.id(),
        fingerprint: metric.fingerprint(),
    })
}
