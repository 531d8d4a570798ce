//! Largest-remainder (Hamilton) apportionment.

/// Splits `total` units across `weights` proportionally. Floors are assigned
/// first; leftover units go to the largest fractional remainders, ties to the
/// lower index. The result always sums to `total` when any weight is positive.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_ten_split_of_four() {
        // quotas 3.0 and 1.0
        assert_eq!(largest_remainder(4, &[30.0, 10.0]), vec![3, 1]);
    }

    #[test]
    fn remainders_decide() {
        // quotas 2.5, 1.25, 1.25 -> floors 2,1,1 + one leftover to index 0
        assert_eq!(largest_remainder(5, &[2.0, 1.0, 1.0]), vec![3, 1, 1]);
        // equal remainders: lower index wins
        assert_eq!(largest_remainder(1, &[1.0, 1.0]), vec![1, 0]);
    }

    #[test]
    fn sums_to_total() {
        for total in 0..50 {
            let c = largest_remainder(total, &[0.8, 0.1, 0.1]);
            assert_eq!(c.iter().sum::<usize>(), total);
        }
    }
}
