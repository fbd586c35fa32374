//! Rank consistency of the behaviour-aware distance under resampling.
//!
//! For each sampling configuration, several distance matrices are built with
//! fresh seeds. Each row is turned into a ranking of the other expressions,
//! and the Spearman correlation between rankings of the same row is averaged
//! over every pair of matrices and every row.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spearman::{average_ranks, spearman_rho};
use crate::expr::Expr;
use crate::metrics::{distance_matrix, BedConfig, DistanceMatrix, Metric, MetricError};
use crate::sampling::{derive_seed, derive_stream};

/// Average ranks of row `i` over every other expression.
pub fn row_ranking(dm: &DistanceMatrix, i: usize) -> Vec<f64> {
    let others: Vec<f64> = dm
        .row(i)
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, d)| *d)
        .collect();
    average_ranks(&others)
}

fn rankings(dm: &DistanceMatrix) -> Vec<Vec<f64>> {
    (0..dm.size()).into_par_iter().map(|i| row_ranking(dm, i)).collect()
}

fn matrix_pairs(count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .flat_map(|a| (a + 1..count).map(move |b| (a, b)))
        .collect()
}

/// Mean Spearman correlation over all matrix pairs and rows.
pub fn mean_rank_correlation(matrices: &[DistanceMatrix]) -> f64 {
    let ranked: Vec<Vec<Vec<f64>>> = matrices.iter().map(rankings).collect();
    mean_over_pairs(&ranked, |_, a, b| spearman_rho(a, b))
}

/// The same average when the second ranking of every compared pair is
/// shuffled, repeated `shuffles` times.
pub fn shuffled_baseline(matrices: &[DistanceMatrix], shuffles: usize, seed: u64) -> f64 {
    let ranked: Vec<Vec<Vec<f64>>> = matrices.iter().map(rankings).collect();
    let per_round: Vec<f64> = (0..shuffles)
        .into_par_iter()
        .map(|round| {
            mean_over_pairs(&ranked, |key, a, b| {
                let mut rng = derive_stream(seed, format!("shuffle/{round}/{key}"));
                let mut shuffled = b.to_vec();
                shuffled.shuffle(&mut rng);
                spearman_rho(a, &shuffled)
            })
        })
        .collect();
    per_round.iter().sum::<f64>() / per_round.len().max(1) as f64
}

fn mean_over_pairs(ranked: &[Vec<Vec<f64>>], rho: impl Fn(String, &[f64], &[f64]) -> f64 + Sync) -> f64 {
    let pairs = matrix_pairs(ranked.len());
    if pairs.is_empty() {
        return f64::NAN;
    }
    let rows = ranked[0].len();
    let sums: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            (0..rows)
                .map(|i| rho(format!("{a}/{b}/{i}"), &ranked[a][i], &ranked[b][i]))
                .sum::<f64>()
        })
        .collect();
    sums.iter().sum::<f64>() / (pairs.len() * rows) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    /// Pairs of (variable samples, constant samples).
    pub grid: Vec<(usize, usize)>,
    pub repeats: usize,
    pub master_seed: u64,
    /// Template for everything but the sample counts and the seed.
    pub bed: BedConfig,
    pub shuffles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCell {
    pub num_var_samples: usize,
    pub num_const_samples: usize,
    pub mean_rho: f64,
    pub baseline_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub cells: Vec<ConsistencyCell>,
    pub repeats: usize,
    pub corpus_size: usize,
    pub corpus_fingerprint: String,
}

/// Hex digest of the canonical strings of a corpus.
pub fn corpus_fingerprint(corpus: &[Expr]) -> String {
    let joined: Vec<String> = corpus.iter().map(Expr::to_canonical_string).collect();
    format!("{:016x}", derive_seed(0, joined.join("\n")))
}

/// Seed of repeat `r` in grid cell `(vs, cs)`.
pub fn repeat_seed(master_seed: u64, vs: usize, cs: usize, r: usize) -> u64 {
    derive_seed(master_seed, format!("consistency/{vs}x{cs}/{r}"))
}

pub fn consistency_experiment(
    corpus: &[Expr],
    cfg: &ConsistencyConfig,
) -> Result<ConsistencyReport, MetricError> {
    if corpus.len() < 3 {
        return Err(MetricError::Config("consistency needs at least 3 expressions".into()));
    }
    if cfg.repeats < 2 {
        return Err(MetricError::Config("consistency needs at least 2 repeats".into()));
    }
    let mut cells = Vec::with_capacity(cfg.grid.len());
    for &(vs, cs) in &cfg.grid {
        let matrices = (0..cfg.repeats)
            .map(|r| {
                let bed = BedConfig {
                    num_var_samples: vs,
                    num_const_samples: cs,
                    master_seed: repeat_seed(cfg.master_seed, vs, cs, r),
                    ..cfg.bed.clone()
                };
                distance_matrix(corpus, &Metric::Bed(&bed))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let baseline_seed = derive_seed(cfg.master_seed, format!("baseline/{vs}x{cs}"));
        cells.push(ConsistencyCell {
            num_var_samples: vs,
            num_const_samples: cs,
            mean_rho: mean_rank_correlation(&matrices),
            baseline_rho: shuffled_baseline(&matrices, cfg.shuffles, baseline_seed),
        });
    }
    Ok(ConsistencyReport {
        cells,
        repeats: cfg.repeats,
        corpus_size: corpus.len(),
        corpus_fingerprint: corpus_fingerprint(corpus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricId;

    fn matrix(rows: Vec<Vec<f64>>) -> DistanceMatrix {
        DistanceMatrix::from_rows(rows, MetricId::Bed)
    }

    fn random_matrix(m: usize, seed: u64) -> DistanceMatrix {
        use rand::Rng;
        let mut rng = derive_stream(seed, "m");
        let mut rows = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let d: f64 = rng.gen();
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        matrix(rows)
    }

    #[test]
    fn identical_matrices_correlate_perfectly() {
        let m = random_matrix(12, 1);
        assert_eq!(mean_rank_correlation(&[m.clone(), m.clone(), m]), 1.0);
    }

    #[test]
    fn ranking_excludes_self() {
        let m = matrix(vec![
            vec![0.0, 3.0, 1.0, 2.0],
            vec![3.0, 0.0, 5.0, 5.0],
            vec![1.0, 5.0, 0.0, 4.0],
            vec![2.0, 5.0, 4.0, 0.0],
        ]);
        assert_eq!(row_ranking(&m, 0), vec![3.0, 1.0, 2.0]);
        assert_eq!(row_ranking(&m, 1), vec![1.0, 2.5, 2.5]);
    }

    #[test]
    fn monotone_transform_keeps_rankings() {
        let m = random_matrix(15, 2);
        let rows: Vec<Vec<f64>> = (0..15).map(|i| m.row(i).iter().map(|d| (3.0 * d).exp() + 7.0).collect()).collect();
        let t = matrix(rows);
        assert_eq!(mean_rank_correlation(&[m, t]), 1.0);
    }

    #[test]
    fn shuffled_baseline_is_near_zero() {
        let mats: Vec<DistanceMatrix> = (0..4).map(|_| random_matrix(60, 3)).collect();
        let b = shuffled_baseline(&mats, 20, 9);
        assert!(b.abs() < 0.05, "baseline {b}");
        assert_eq!(b, shuffled_baseline(&mats, 20, 9));
    }

    #[test]
    fn experiment_runs_on_small_corpus() {
        let corpus: Vec<Expr> = ["x1", "C*x1", "x1+x2", "sin(C*x2)", "x2/C", "exp(x1/5)"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let cfg = ConsistencyConfig {
            grid: vec![(8, 4), (32, 8)],
            repeats: 3,
            master_seed: 5,
            bed: BedConfig::with_dims(2),
            shuffles: 10,
        };
        let a = consistency_experiment(&corpus, &cfg).unwrap();
        let b = consistency_experiment(&corpus, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 2);
        for c in &a.cells {
            assert!((-1.0..=1.0).contains(&c.mean_rho));
            assert!(c.mean_rho > 0.5, "{c:?}");
        }
        assert!(consistency_experiment(&corpus[..2], &cfg).is_err());
    }
}
