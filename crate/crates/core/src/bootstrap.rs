//! Bootstrap bias reduction and the RB / RMSE summaries.

use crate::distribution::Sample;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sum::Accumulator;

/// Resamples whose fit fails are redrawn this many times before the
/// replicate is dropped.
pub const RETRY_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// 2 theta-hat - mean of the successful replicates
    pub corrected: Vec<f64>,
    pub original: Vec<f64>,
    /// replicates that contributed to the mean
    pub replicates: usize,
    /// replicates dropped after exhausting the retry cap
    pub excluded: usize,
    /// failed resample fits, including the ones later redrawn
    pub failed_fits: usize,
}

/// theta* = 2 theta-hat - (1/B) sum_b theta-hat^(b) over resamples of the
/// observations with replacement.
pub fn bootstrap_bias_reduce<F>(
    sample: &Sample,
    mut estimator: F,
    replications: usize,
    rng: &mut RngStream,
) -> Result<BootstrapResult>
where
    F: FnMut(&Sample) -> Result<Vec<f64>>,
{
    let values = sample.values();
    let mut buffer = Vec::with_capacity(values.len());
    bootstrap_indexed(
        values.len(),
        |idx| {
            buffer.clear();
            buffer.extend(idx.iter().map(|&i| values[i]));
            let resample = Sample::new(std::mem::take(&mut buffer))?;
            let out = estimator(&resample);
            buffer = resample.into_values();
            out
        },
        replications,
        rng,
    )
}

/// Bootstrap over index lists: `estimator(&[0, 1, ..., n-1])` is the
/// original fit and each replicate sees n indices drawn with replacement.
pub fn bootstrap_indexed<F>(
    n: usize,
    mut estimator: F,
    replications: usize,
    rng: &mut RngStream,
) -> Result<BootstrapResult>
where
    F: FnMut(&[usize]) -> Result<Vec<f64>>,
{
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if replications == 0 {
        return Err(Error::InvalidConfig("bootstrap needs B >= 1".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let original = estimator(&idx)?;
    let mut sums: Vec<Accumulator> = vec![Accumulator::new(); original.len()];
    let mut replicates = 0;
    let mut excluded = 0;
    let mut failed_fits = 0;
    for _ in 0..replications {
        let mut accepted = None;
        for _ in 0..=RETRY_CAP {
            for slot in idx.iter_mut() {
                *slot = rng.below(n);
            }
            match estimator(&idx) {
                Ok(theta) if theta.len() == original.len() && theta.iter().all(|t| t.is_finite()) => {
                    accepted = Some(theta);
                    break;
                }
                _ => failed_fits += 1,
            }
        }
        match accepted {
            Some(theta) => {
                replicates += 1;
                for (acc, t) in sums.iter_mut().zip(theta) {
                    acc.add(t);
                }
            }
            None => excluded += 1,
        }
    }
    if replicates == 0 {
        return Err(Error::BootstrapDegenerate { attempts: failed_fits });
    }
    let corrected = original
        .iter()
        .zip(&sums)
        .map(|(t, acc)| 2.0 * t - acc.mean())
        .collect();
    Ok(BootstrapResult {
        corrected,
        original,
        replicates,
        excluded,
        failed_fits,
    })
}

/// RB = |mean(estimates) - theta| / |theta|.
pub fn relative_bias(estimates: &[f64], theta: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptySample);
    }
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::domain("relative_bias", format!("theta = {theta}")));
    }
    let mean = estimates.iter().copied().collect::<Accumulator>().mean();
    Ok(((mean - theta) / theta).abs())
}

/// RMSE = sqrt(mean((estimate - theta)^2)).
pub fn rmse(estimates: &[f64], theta: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptySample);
    }
    let mse = estimates
        .iter()
        .map(|e| (e - theta) * (e - theta))
        .collect::<Accumulator>()
        .mean();
    Ok(mse.sqrt())
}
