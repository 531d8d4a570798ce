use serde::{Deserialize, Serialize};

use super::EvalError;

pub const GRID_POINTS: usize = 512;
/// The grid extends this many bandwidths beyond [0, 1] on each side.
pub const GRID_MARGIN: f64 = 5.0;
/// Smallest bandwidth used; keeps every kernel resolved by the grid.
pub const MIN_BANDWIDTH: f64 = 2.5e-3;
pub const PEAK_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    pub n_samples: usize,
    pub peak_count: usize,
}

impl KdeCurve {
    pub fn trapezoid_integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule `0.9 * min(sd, IQR / 1.349) * n^(-1/5)`, floored at
/// [`MIN_BANDWIDTH`] (which also covers zero dispersion).
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(MIN_BANDWIDTH)
}

/// Gaussian kernel density of scores in [0, 1] on a fixed grid spanning
/// `[-5h, 1 + 5h]`.
pub fn kde(scores: &[f64]) -> Result<KdeCurve, EvalError> {
    if scores.len() < 2 {
        return Err(EvalError::TooFewSamples(scores.len()));
    }
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(EvalError::ScoreOutOfRange(bad));
    }
    let h = silverman_bandwidth(scores);
    let lo = -GRID_MARGIN * h;
    let hi = 1.0 + GRID_MARGIN * h;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let norm = 1.0 / (scores.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            scores
                .iter()
                .map(|&s| {
                    let u = (x - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    let mut curve = KdeCurve {
        grid,
        density,
        bandwidth: h,
        n_samples: scores.len(),
        peak_count: 0,
    };
    curve.peak_count = count_peaks(&curve);
    Ok(curve)
}

/// Interior grid points strictly above both neighbours and at least
/// [`PEAK_FRACTION`] of the maximum density.
pub fn count_peaks(curve: &KdeCurve) -> usize {
    let d = &curve.density;
    let max = d.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    (1..d.len().saturating_sub(1))
        .filter(|&i| d[i] > d[i - 1] && d[i] > d[i + 1] && d[i] >= PEAK_FRACTION * max)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curve_of(density: Vec<f64>) -> KdeCurve {
        KdeCurve {
            grid: (0..density.len()).map(|i| i as f64).collect(),
            density,
            bandwidth: 1.0,
            n_samples: 2,
            peak_count: 0,
        }
    }

    #[test]
    fn two_tight_clusters_give_two_peaks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scores: Vec<f64> = (0..1000)
            .map(|i| {
                let c = if i < 500 { 0.05 } else { 0.95 };
                (c + rng.gen_range(-0.01..0.01f64)).clamp(0.0, 1.0)
            })
            .collect();
        let k = kde(&scores).unwrap();
        assert_eq!(k.peak_count, 2);
        assert!((k.trapezoid_integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn uniform_samples_are_flat_in_the_middle() {
        let scores: Vec<f64> = (0..10_000).map(|i| i as f64 / 9_999.0).collect();
        let k = kde(&scores).unwrap();
        let mid: Vec<f64> = k
            .grid
            .iter()
            .zip(&k.density)
            .filter(|(x, _)| (0.2..=0.8).contains(*x))
            .map(|(_, d)| *d)
            .collect();
        let (lo, hi) = mid.iter().fold((f64::MAX, f64::MIN), |(a, b), &d| (a.min(d), b.max(d)));
        assert!((hi - lo) / hi < 0.1, "{lo} {hi}");
    }

    #[test]
    fn degenerate_and_boundary_inputs_integrate_to_one() {
        for scores in [vec![0.0; 50], vec![1.0; 3], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.0, 0.0, 0.0, 1e-9]] {
            let k = kde(&scores).unwrap();
            assert!((k.trapezoid_integral() - 1.0).abs() < 1e-3, "{scores:?}: {}", k.trapezoid_integral());
            assert_eq!(k.grid.len(), GRID_POINTS);
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(kde(&[0.3]), Err(EvalError::TooFewSamples(1))));
        assert!(matches!(kde(&[0.3, 1.2]), Err(EvalError::ScoreOutOfRange(_))));
        assert!(matches!(kde(&[0.3, f64::NAN]), Err(EvalError::ScoreOutOfRange(_))));
    }

    #[test]
    fn peak_counting_rules() {
        assert_eq!(count_peaks(&curve_of(vec![1.0, 2.0, 3.0, 4.0])), 0);
        assert_eq!(count_peaks(&curve_of(vec![1.0; 6])), 0);
        assert_eq!(count_peaks(&curve_of(vec![0.0, 10.0, 0.0, 0.4, 0.0, 5.0, 0.0])), 2);
        assert_eq!(count_peaks(&curve_of(vec![0.0, 10.0, 0.0, 0.6, 0.0])), 2);
    }

    #[test]
    fn bandwidth_hand_check() {
        // sd = sqrt(5/3) ≈ 1.291, IQR = 1.5 -> IQR/1.349 ≈ 1.112
        let s = [1.0, 2.0, 3.0, 4.0];
        let expected = 0.9 * (1.5 / 1.349) * 4f64.powf(-0.2);
        assert!((silverman_bandwidth(&s) - expected).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn any_valid_input_integrates_to_one(
            scores in proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], 2..300)
        ) {
            let k = kde(&scores).unwrap();
            prop_assert!(k.density.iter().all(|d| *d >= 0.0));
            prop_assert!((k.trapezoid_integral() - 1.0).abs() < 1e-3, "integral {}", k.trapezoid_integral());
            prop_assert_eq!(&k, &kde(&scores).unwrap());
        }
    }
}
