//! Empirical output distributions and their 1-Wasserstein distance.

/// Default distance between an empty and a nonempty distribution.
pub const DEFAULT_PENALTY: f64 = 1e20;

/// A sorted multiset of finite values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalDist {
    values: Vec<f64>,
}

impl EmpiricalDist {
    /// Sorts the values; non-finite entries are discarded.
    pub fn from_values(mut values: Vec<f64>) -> EmpiricalDist {
        values.retain(|v| v.is_finite());
        values.sort_by(f64::total_cmp);
        EmpiricalDist { values }
    }

    pub fn empty() -> EmpiricalDist {
        EmpiricalDist::default()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of values `<= y`.
    pub fn cdf(&self, y: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let count = self.values.partition_point(|v| *v <= y);
        count as f64 / self.values.len() as f64
    }
}

/// 1-Wasserstein distance between two empirical distributions: the area
/// between their CDFs, summed over the gaps of the merged sample,
/// `sum_k (y[k+1] - y[k]) * |F_u(y[k]) - F_v(y[k])|`.
///
/// Two empty distributions are at distance 0; an empty and a nonempty one are
/// at distance `penalty`.
pub fn w1(du: &EmpiricalDist, dv: &EmpiricalDist, penalty: f64) -> f64 {
    let (u, v) = (du.values(), dv.values());
    match (u.is_empty(), v.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return penalty,
        _ => {}
    }
    let (nu, nv) = (u.len() as i128, v.len() as i128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    let mut current = f64::NAN;
    while i < u.len() || j < v.len() {
        // consume the next smallest value of the merged sample
        let take_u = j >= v.len() || (i < u.len() && u[i] <= v[j]);
        if take_u {
            current = u[i];
            i += 1;
        } else {
            current = v[j];
            j += 1;
        }
        let next = match (u.get(i), v.get(j)) {
            (Some(a), Some(b)) => a.min(*b),
            (Some(a), None) => *a,
            (None, Some(b)) => *b,
            (None, None) => break,
        };
        // |i/nu - j/nv| scaled by nu*nv keeps the CDF gap exact
        let gap = (i as i128 * nv - j as i128 * nu).unsigned_abs();
        if gap != 0 {
            total += (next - current) * gap as f64;
        }
    }
    debug_assert!(current.is_finite());
    total / (nu * nv) as f64
}
