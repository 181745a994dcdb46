//! Random draws shared by both emission models.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal};

use crate::error::{Error, Result};

/// Upper bound on rejected draws in [`sample_positive_normal`].
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// Realizes a Bernoulli trial with probability `rate_per_step` at every grid
/// step and returns the steps that fired, in ascending order.
///
/// The trials are not simulated one by one: the gap between successive
/// successes of independent Bernoulli(p) trials is geometric, so the process
/// is generated by skipping ahead with geometric draws. The resulting event
/// law is identical to the per-step simulation.
pub fn sample_event_steps<R: Rng + ?Sized>(
    rate_per_step: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&rate_per_step) {
        return Err(Error::InvalidParameter(format!(
            "event rate per step must lie in [0, 1), got {rate_per_step}"
        )));
    }
    if rate_per_step == 0.0 || n_samples == 0 {
        return Ok(Vec::new());
    }
    let gaps = Geometric::new(rate_per_step)
        .map_err(|e| Error::InvalidParameter(format!("event rate {rate_per_step}: {e}")))?;

    let expected = (rate_per_step * n_samples as f64).ceil() as usize;
    let mut steps = Vec::with_capacity(expected + expected / 4 + 4);
    let limit = n_samples as u64;
    // Position of the next trial to run.
    let mut next = 0u64;
    loop {
        let event = next.saturating_add(gaps.sample(rng));
        if event >= limit {
            break;
        }
        steps.push(event as usize);
        next = event + 1;
    }
    Ok(steps)
}

/// Normal(mean, sigma) restricted to positive values by resampling.
pub fn sample_positive_normal<R: Rng + ?Sized>(mean: f64, sigma: f64, rng: &mut R) -> Result<f64> {
    if !(mean > 0.0 && mean.is_finite()) || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "positive normal needs mean > 0 and sigma >= 0, got mean {mean}, sigma {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, sigma)
        .map_err(|e| Error::InvalidParameter(format!("normal({mean}, {sigma}): {e}")))?;
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if x > 0.0 {
            return Ok(x);
        }
    }
    Err(Error::RejectionLimit {
        mean,
        sigma,
        rejections: MAX_REJECTIONS,
    })
}

/// Phase uniform on [0, 2π).
pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * std::f64::consts::TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_emitter_rng;

    #[test]
    fn zero_rate_is_empty() {
        let mut rng = derive_emitter_rng(1, 0);
        assert!(sample_event_steps(0.0, 1_000_000, &mut rng)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn rejects_rate_out_of_range() {
        let mut rng = derive_emitter_rng(1, 0);
        assert!(sample_event_steps(1.0, 10, &mut rng).is_err());
        assert!(sample_event_steps(-0.1, 10, &mut rng).is_err());
    }

    #[test]
    fn steps_are_strictly_increasing_and_in_range() {
        let mut rng = derive_emitter_rng(9, 3);
        let steps = sample_event_steps(0.3, 5_000, &mut rng).unwrap();
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
        assert!(steps.iter().all(|&s| s < 5_000));
    }

    #[test]
    fn caption_rate_gives_about_a_hundred_events() {
        let mut rng = derive_emitter_rng(42, 0);
        let count = sample_event_steps(1e-4, 1_000_000, &mut rng).unwrap().len();
        assert!((70..=130).contains(&count), "count {count}");
    }

    #[test]
    fn high_rate_matches_per_step_bernoulli_frequency() {
        // p = 0.5 over many steps: fraction of steps that fire ~ 0.5.
        let mut rng = derive_emitter_rng(5, 5);
        let n = 200_000;
        let count = sample_event_steps(0.5, n, &mut rng).unwrap().len() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((count - 0.5 * n as f64).abs() < 4.0 * sd);
    }

    #[test]
    fn degenerate_normal_returns_mean() {
        let mut rng = derive_emitter_rng(0, 0);
        assert_eq!(sample_positive_normal(2.0, 0.0, &mut rng).unwrap(), 2.0);
    }

    #[test]
    fn positive_normal_moments() {
        let mut rng = derive_emitter_rng(11, 0);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_positive_normal(2.0, 0.2, &mut rng).unwrap())
            .collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 2.0).abs() < 0.006, "mean {mean}");
        assert!((var.sqrt() - 0.2).abs() < 0.01, "sd {}", var.sqrt());
    }

    #[test]
    fn positive_normal_is_positive() {
        let mut rng = derive_emitter_rng(12, 0);
        for _ in 0..10_000 {
            assert!(sample_positive_normal(100.0, 10.0, &mut rng).unwrap() > 0.0);
        }
        // Wide spread relative to the mean still only yields positive values.
        for _ in 0..10_000 {
            assert!(sample_positive_normal(1.0, 3.0, &mut rng).unwrap() > 0.0);
        }
    }

    #[test]
    fn phase_in_range() {
        let mut rng = derive_emitter_rng(14, 0);
        for _ in 0..10_000 {
            let p = sample_phase(&mut rng);
            assert!((0.0..std::f64::consts::TAU).contains(&p));
        }
    }
}
