//! Small statistics helpers: means and bootstrap standard errors.

use rand::Rng;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Resamples `categories` with replacement and returns counts per category.
pub fn resample_counts<R: Rng + ?Sized>(categories: &[usize], n_categories: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n_categories];
    if categories.is_empty() {
        return counts;
    }
    for _ in 0..categories.len() {
        counts[categories[rng.random_range(0..categories.len())]] += 1;
    }
    counts
}

/// Standard deviation of `statistic` over `reps` bootstrap replicates. The
/// statistic receives per-item multiplicities of a resample.
pub fn bootstrap<R, F>(n_items: usize, reps: usize, rng: &mut R, mut statistic: F) -> f64
where
    R: Rng + ?Sized,
    F: FnMut(&[u32]) -> f64,
{
    let idx: Vec<usize> = (0..n_items).collect();
    let values: Vec<f64> = (0..reps).map(|_| statistic(&resample_counts(&idx, n_items, rng))).collect();
    std_dev(&values)
}

/// Bootstrap standard error of the sample mean.
pub fn bootstrap_stderr<R: Rng + ?Sized>(values: &[f64], reps: usize, rng: &mut R) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    bootstrap(values.len(), reps, rng, |counts| {
        counts.iter().zip(values).map(|(&c, v)| c as f64 * v).sum::<f64>() / n
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_error() {
        let mut rng = crate::rng::stream_rng(0, 0);
        assert_eq!(bootstrap_stderr(&[2.0; 50], 100, &mut rng), 0.0);
    }

    #[test]
    fn stderr_scale() {
        let mut rng = crate::rng::stream_rng(1, 0);
        let v: Vec<f64> = (0..4000).map(|i| (i % 2) as f64).collect();
        let se = bootstrap_stderr(&v, 300, &mut rng);
        // σ/√n = 0.5/√4000 ≈ 0.0079
        assert!((se - 0.0079).abs() < 0.0015, "{se}");
    }
}
