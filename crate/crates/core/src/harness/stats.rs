use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 1000;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Median by sorting a copy; NaN for an empty slice.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci<R: Rng + ?Sized>(samples: &[f64], level: f64, resamples: usize, rng: &mut R) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs level in (0, 1) and resamples > 0, got {level} and {resamples}"
        )));
    }
    let k = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..k).map(|_| samples[rng.random_range(0..k)]).sum::<f64>() / k as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    Ok((quantile(&means, alpha), quantile(&means, 1.0 - alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(bootstrap_ci(&[2.5; 10], 0.95, 200, &mut rng).unwrap(), (2.5, 2.5));
    }

    #[test]
    fn too_few() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(bootstrap_ci(&[1.0], 0.95, 10, &mut rng), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(sd(&[1.0]), 0.0);
    }
}
