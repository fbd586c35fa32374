/// Ranks `1..=n` with tied values sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of two rank sequences. A sequence without variance
/// has no defined correlation; 0 is returned.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "rankings differ in length");
    assert!(a.len() >= 2, "need at least two ranked items");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman correlation of two raw value sequences.
pub fn spearman_of_values(a: &[f64], b: &[f64]) -> f64 {
    spearman_rho(&average_ranks(a), &average_ranks(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spearman_rho(&r, &r), 1.0);
        let rev: Vec<f64> = r.iter().rev().copied().collect();
        assert_eq!(spearman_rho(&r, &rev), -1.0);
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_take_mean_rank() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn zero_variance_is_zero() {
        assert_eq!(spearman_rho(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn matches_classic_formula_without_ties() {
        // 1 - 6 sum d^2 / (n (n^2 - 1)) holds exactly when there are no ties
        let a = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0];
        let b = [2.0, 7.0, 1.0, 8.0, 2.5, 8.5, 0.0, 4.0];
        let (ra, rb) = (average_ranks(&a), average_ranks(&b));
        let n = a.len() as f64;
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
        let classic = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        assert!((spearman_of_values(&a, &b) - classic).abs() < 1e-12);
    }
}
