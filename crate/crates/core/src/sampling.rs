//! Latin hypercube designs and tag-keyed deterministic random streams.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha12Rng;

/// A stream keyed by `(master_seed, tag)`. The pair is hashed with SHA-256,
/// so distinct tags give unrelated streams and equal pairs give equal ones.
pub fn derive_stream(master_seed: u64, tag: impl AsRef<[u8]>) -> Stream {
    Stream::from_seed(derive_seed_bytes(master_seed, tag.as_ref()))
}

/// A 64-bit seed derived the same way as [`derive_stream`].
pub fn derive_seed(master_seed: u64, tag: impl AsRef<[u8]>) -> u64 {
    let bytes = derive_seed_bytes(master_seed, tag.as_ref());
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

fn derive_seed_bytes(master_seed: u64, tag: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"bedkit-stream\0");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag);
    let digest = hasher.finalize();
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("interval {index} is empty or not finite: [{low}, {high}]")]
    BadInterval { index: usize, low: f64, high: f64 },
}

/// An axis-aligned box; every interval has `low < high`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    intervals: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<DomainBox, BoxError> {
        for (index, &(low, high)) in intervals.iter().enumerate() {
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(BoxError::BadInterval { index, low, high });
            }
        }
        Ok(DomainBox { intervals })
    }

    /// The same interval repeated over `dims` dimensions.
    pub fn uniform(dims: usize, low: f64, high: f64) -> Result<DomainBox, BoxError> {
        DomainBox::new(vec![(low, high); dims])
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dims()
            && point
                .iter()
                .zip(&self.intervals)
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }
}

/// `n` points in a box, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDesign {
    n: usize,
    dims: usize,
    values: Vec<f64>,
}

impl SampleDesign {
    /// The design of one empty row, used for constant-free expressions.
    pub fn single_empty_row() -> SampleDesign {
        SampleDesign {
            n: 1,
            dims: 0,
            values: Vec::new(),
        }
    }

    /// Builds a design from explicit rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> SampleDesign {
        let dims = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dims), "ragged design rows");
        SampleDesign {
            n: rows.len(),
            dims,
            values: rows.concat(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn column(&self, d: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.values[i * self.dims + d])
    }
}

/// Latin hypercube sample of `n` points: in every dimension each of the `n`
/// equal-width strata receives exactly one point, placed uniformly inside it.
/// Strata are matched to points by an independent permutation per dimension.
pub fn lhs<R: Rng + ?Sized>(n: usize, domain: &DomainBox, rng: &mut R) -> SampleDesign {
    assert!(n >= 1, "a design needs at least one point");
    let dims = domain.dims();
    let mut values = vec![0.0; n * dims];
    let mut strata: Vec<usize> = (0..n).collect();
    for (d, &(low, high)) in domain.intervals().iter().enumerate() {
        strata.shuffle(rng);
        let width = high - low;
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = rng.gen();
            let t = (s as f64 + u) / n as f64;
            let lo = low + width * (s as f64 / n as f64);
            let hi = low + width * ((s + 1) as f64 / n as f64);
            // rounding must not push a point across a stratum edge
            values[i * dims + d] = (low + width * t).clamp(lo, hi);
        }
    }
    SampleDesign { n, dims, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_strata() {
        let domain = DomainBox::uniform(1, 0.0, 1.0).unwrap();
        let design = lhs(4, &domain, &mut derive_stream(3, "t"));
        let mut col: Vec<f64> = design.column(0).collect();
        col.sort_by(f64::total_cmp);
        for (k, v) in col.iter().enumerate() {
            assert!(*v >= k as f64 * 0.25 && *v < (k + 1) as f64 * 0.25, "{col:?}");
        }
    }

    #[test]
    fn single_point_inside() {
        let domain = DomainBox::uniform(1, 2.0, 6.0).unwrap();
        let design = lhs(1, &domain, &mut derive_stream(0, "t"));
        assert_eq!(design.len(), 1);
        assert!(domain.contains(design.row(0)));
    }

    #[test]
    fn same_seed_same_design() {
        let domain = DomainBox::new(vec![(1.0, 5.0), (-1.0, 0.0)]).unwrap();
        let a = lhs(16, &domain, &mut derive_stream(11, "vars"));
        let b = lhs(16, &domain, &mut derive_stream(11, "vars"));
        let c = lhs(16, &domain, &mut derive_stream(12, "vars"));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn distinct_tags_distinct_streams() {
        let a: Vec<u64> = (0..4).map({
            let mut s = derive_stream(5, "vars");
            move |_| s.gen()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut s = derive_stream(5, "consts/x+C");
            move |_| s.gen()
        }).collect();
        let a2: Vec<u64> = (0..4).map({
            let mut s = derive_stream(5, "vars");
            move |_| s.gen()
        }).collect();
        assert_ne!(a, b);
        assert_eq!(a, a2);
        assert_ne!(derive_seed(5, "a"), derive_seed(5, "b"));
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(DomainBox::new(vec![(1.0, 1.0)]).is_err());
        assert!(DomainBox::new(vec![(0.0, f64::INFINITY)]).is_err());
        assert_eq!(DomainBox::new(vec![(0.0, 2.0), (1.0, 4.0)]).unwrap().volume(), 6.0);
    }

    #[test]
    fn stratification_holds_at_many_sizes() {
        let domain = DomainBox::new(vec![(-3.0, 7.0), (0.2, 5.0), (0.0, 1e-3)]).unwrap();
        for n in [2, 3, 7, 64, 100, 1000, 10_000] {
            let design = lhs(n, &domain, &mut derive_stream(n as u64, "strata"));
            for (d, &(low, high)) in domain.intervals().iter().enumerate() {
                let mut col: Vec<f64> = design.column(d).collect();
                col.sort_by(f64::total_cmp);
                let width = high - low;
                for (k, v) in col.iter().enumerate() {
                    let lo = low + width * (k as f64 / n as f64);
                    let hi = low + width * ((k + 1) as f64 / n as f64);
                    assert!(*v >= lo && *v <= hi, "n={n} dim={d} k={k} v={v}");
                }
            }
        }
    }

    #[test]
    fn marginal_means_converge() {
        let (a, b) = (0.2, 5.0);
        let domain = DomainBox::uniform(2, a, b).unwrap();
        for n in [16, 256, 4096] {
            let design = lhs(n, &domain, &mut derive_stream(99, format!("mean/{n}")));
            let bound = 3.0 / (n as f64).sqrt() * (b - a) / 12f64.sqrt();
            for d in 0..2 {
                let mean = design.column(d).sum::<f64>() / n as f64;
                assert!((mean - (a + b) / 2.0).abs() <= bound, "n={n} mean={mean}");
            }
        }
    }
}
