//! Detector-level statistics: error bookkeeping for repeated readings,
//! counting detectors, a bistable pointer and spin ensembles.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum_core::{eigendecompose, q_expectation, DensityOperator, HermitianOperator};
use crate::rng::substream;

/// Half a unit in the last digit of a 3-digit display reading `x.yz`.
pub const DISPLAY_TOLERANCE: f64 = 0.0005;
/// Largest expected bucket count accepted by [`bucket_count`].
pub const MAX_EXPECTED_COUNT: f64 = 1e9;
/// Double-well paths leaving `|x| <= DIVERGENCE_LIMIT` are reported as
/// unstable.
pub const DIVERGENCE_LIMIT: f64 = 10.0;
/// The stability condition on `dt` is checked over `|x| <= STABILITY_RANGE`.
pub const STABILITY_RANGE: f64 = 1.5;

/// Distinct displayed values with their multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    values: Vec<f64>,
    counts: Vec<u64>,
}

impl MeasurementRecord {
    pub fn new(values: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if values.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: counts.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("values", "must be strictly ascending"));
        }
        if counts.contains(&0) {
            return Err(invalid("counts", "must be at least 1"));
        }
        Ok(Self { values, counts })
    }

    /// Groups raw readings by exact value.
    pub fn from_observations(observations: &[f64]) -> Result<Self> {
        let mut sorted = observations.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for x in sorted {
            if values.last() == Some(&x) {
                *counts.last_mut().unwrap() += 1;
            } else {
                values.push(x);
                counts.push(1);
            }
        }
        Self::new(values, counts)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    /// `std / sqrt(N)`.
    pub std_error: f64,
}

fn moments(record: &MeasurementRecord) -> (f64, f64, f64) {
    let n = record.total() as f64;
    let mean = record
        .values
        .iter()
        .zip(&record.counts)
        .map(|(v, &c)| v * c as f64)
        .sum::<f64>()
        / n;
    let ss = record
        .values
        .iter()
        .zip(&record.counts)
        .map(|(v, &c)| c as f64 * (v - mean) * (v - mean))
        .sum::<f64>();
    (n, mean, ss)
}

/// Count-weighted mean and population (divide by `N`) standard deviation.
pub fn summarize(record: &MeasurementRecord) -> Summary {
    let (n, mean, ss) = moments(record);
    let std = (ss / n).sqrt();
    Summary {
        mean,
        std,
        std_error: std / n.sqrt(),
    }
}

/// As [`summarize`] but with the `N - 1` divisor.
pub fn summarize_sample(record: &MeasurementRecord) -> Result<Summary> {
    let (n, mean, ss) = moments(record);
    if n < 2.0 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: n as usize,
        });
    }
    let std = (ss / (n - 1.0)).sqrt();
    Ok(Summary {
        mean,
        std,
        std_error: std / n.sqrt(),
    })
}

/// The same readings split two ways: deviation from the q-expectation, and
/// deviation from the nearest eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLedger {
    pub observations: Vec<f64>,
    pub thermal_true_value: f64,
    pub thermal_errors: Vec<f64>,
    pub born_eigenvalues: Vec<f64>,
    pub born_errors: Vec<f64>,
}

impl ErrorLedger {
    pub fn mean_thermal_error(&self) -> f64 {
        mean(&self.thermal_errors)
    }

    pub fn mean_born_error(&self) -> f64 {
        mean(&self.born_errors)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn dual_error_ledger(
    observations: &[f64],
    rho: &DensityOperator,
    a: &HermitianOperator,
) -> Result<ErrorLedger> {
    let truth = q_expectation(rho, a)?;
    let eig = eigendecompose(a)?.values;
    let thermal_errors = observations.iter().map(|x| (x - truth).abs()).collect();
    let born_errors = observations
        .iter()
        .map(|x| {
            eig.iter()
                .map(|l| (x - l).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ErrorLedger {
        observations: observations.to_vec(),
        thermal_true_value: truth,
        thermal_errors,
        born_eigenvalues: eig,
        born_errors,
    })
}

/// `(p E₁ + (1-p) E₂, sqrt(p(1-p)) |E₁ - E₂|)`.
pub fn two_level_energy_truth(p: f64, e1: f64, e2: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", "must lie in [0, 1]"));
    }
    Ok((
        p * e1 + (1.0 - p) * e2,
        (p * (1.0 - p)).sqrt() * (e1 - e2).abs(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketReading {
    pub count: u64,
    /// Lattice spacing of the estimate, `bucket_size / T`.
    pub resolution: f64,
}

impl BucketReading {
    /// `count · bucket_size / T`.
    pub fn rate_estimate(&self) -> f64 {
        self.count as f64 * self.resolution
    }
}

/// Number of whole buckets filled by a Poisson flow of rate `flow_rate`
/// over `duration`.
pub fn bucket_count(
    flow_rate: f64,
    duration: f64,
    bucket_size: f64,
    seed: u64,
) -> Result<BucketReading> {
    for (name, v) in [
        ("flow_rate", flow_rate),
        ("duration", duration),
        ("bucket_size", bucket_size),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    let expected = flow_rate * duration / bucket_size;
    if expected > MAX_EXPECTED_COUNT {
        return Err(Error::CountOverflow { expected });
    }
    let poisson = Poisson::new(expected).map_err(|e| invalid("flow_rate", e.to_string()))?;
    let count = poisson.sample(&mut substream(seed, 0)) as u64;
    Ok(BucketReading {
        count,
        resolution: bucket_size / duration,
    })
}

/// Overdamped Langevin dynamics in `W(x) = a (x² - 1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleWellParams {
    pub barrier: f64,
    pub noise_temperature: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl DoubleWellParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.barrier > 0.0 && self.barrier.is_finite()) {
            return Err(invalid("barrier", "must be positive"));
        }
        if !(self.noise_temperature >= 0.0 && self.noise_temperature.is_finite()) {
            return Err(invalid("noise_temperature", "must be nonnegative"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        let slope = self.dt * self.max_drift_slope();
        if !(slope < 0.5) {
            return Err(invalid(
                "dt",
                format!("dt times the largest drift slope is {slope}, needs to be below 0.5"),
            ));
        }
        Ok(())
    }

    /// `max |W''(x)|` over `|x| <= STABILITY_RANGE`.
    pub fn max_drift_slope(&self) -> f64 {
        let r = STABILITY_RANGE;
        self.barrier * (12.0 * r * r - 4.0).abs().max(4.0)
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.barrier * (x * x - 1.0).powi(2)
    }

    pub fn force(&self, x: f64) -> f64 {
        -4.0 * self.barrier * x * (x * x - 1.0)
    }
}

/// Euler-Maruyama path of `dx = -W'(x) dt + sqrt(2θ) dB`; `n_steps + 1`
/// samples starting with `x0`.
pub fn double_well_pointer(params: &DoubleWellParams, x0: f64, seed: u64) -> Result<Vec<f64>> {
    double_well_path(params, x0, 0, seed, 0)
}

fn double_well_path(
    params: &DoubleWellParams,
    x0: f64,
    burn_in: usize,
    seed: u64,
    index: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    if !x0.is_finite() || x0.abs() > DIVERGENCE_LIMIT {
        return Err(invalid(
            "x0",
            "must be finite and within the divergence limit",
        ));
    }
    let mut rng = substream(seed, index);
    let kick = (2.0 * params.noise_temperature * params.dt).sqrt();
    let mut x = x0;
    let step = |x: f64, i: usize, rng: &mut crate::rng::SimRng| -> Result<f64> {
        let noise: f64 = rng.sample(StandardNormal);
        let next = x + params.force(x) * params.dt + kick * noise;
        if !(next.abs() <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step: i });
        }
        Ok(next)
    };
    for i in 0..burn_in {
        x = step(x, i, &mut rng)?;
    }
    let mut path = Vec::with_capacity(params.n_steps + 1);
    path.push(x);
    for i in 0..params.n_steps {
        x = step(x, burn_in + i, &mut rng)?;
        path.push(x);
    }
    Ok(path)
}

/// `n_paths` independent paths from `x0` on substreams of `seed`, each
/// recording `n_steps` samples after `burn_in` unrecorded steps.
pub fn double_well_ensemble(
    params: &DoubleWellParams,
    x0: f64,
    n_paths: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be at least 1"));
    }
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut path = double_well_path(params, x0, burn_in, seed, i)?;
            // drop the starting point so every path contributes n_steps samples
            path.remove(0);
            Ok(path)
        })
        .collect()
}

/// Fractions of samples with `x < -w`, `|x| <= w` and `x > w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub left: f64,
    pub middle: f64,
    pub right: f64,
}

pub fn occupancy<'a>(samples: impl IntoIterator<Item = &'a f64>, half_width: f64) -> Occupancy {
    let (mut l, mut m, mut r, mut n) = (0u64, 0u64, 0u64, 0u64);
    for &x in samples {
        n += 1;
        if x < -half_width {
            l += 1;
        } else if x > half_width {
            r += 1;
        } else {
            m += 1;
        }
    }
    let n = n.max(1) as f64;
    Occupancy {
        left: l as f64 / n,
        middle: m as f64 / n,
        right: r as f64 / n,
    }
}

/// Occupancy predicted by the stationary density `e^{-W/θ}`, by Simpson
/// quadrature out to where the weight is below `e^{-50}`.
pub fn boltzmann_occupancy(params: &DoubleWellParams, half_width: f64) -> Result<Occupancy> {
    let (a, theta) = (params.barrier, params.noise_temperature);
    if !(a > 0.0 && theta > 0.0) {
        return Err(invalid(
            "noise_temperature",
            "must be positive for a stationary density",
        ));
    }
    if !(half_width >= 0.0) {
        return Err(invalid("half_width", "must be nonnegative"));
    }
    let reach = (1.0 + (50.0 * theta / a).sqrt()).sqrt().max(1.5);
    let w = |x: f64| (-params.potential(x) / theta).exp();
    let simpson = |lo: f64, hi: f64| {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut s = w(lo) + w(hi);
        for i in 1..n {
            s += w(lo + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let hw = half_width.min(reach);
    let side = simpson(hw, reach);
    let middle = simpson(-hw, hw);
    let z = 2.0 * side + middle;
    Ok(Occupancy {
        left: side / z,
        middle: middle / z,
        right: side / z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsembleResult {
    pub n: u64,
    pub outcomes: Vec<i8>,
    pub mean: f64,
    /// `sqrt(1 - s²) / sqrt(N)`.
    pub std_of_mean: f64,
}

impl SpinEnsembleResult {
    /// `|s_i - s̄|` for the predicted mean `s_mean`.
    pub fn thermal_errors(&self, s_mean: f64) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|&s| (s as f64 - s_mean).abs())
            .collect()
    }
}

/// `N` outcomes `±1` with `P(+1) = (1 + s_mean)/2`.
pub fn stern_gerlach_ensemble(s_mean: f64, n: u64, seed: u64) -> Result<SpinEnsembleResult> {
    stern_gerlach_replicate(s_mean, n, seed, 0)
}

fn stern_gerlach_replicate(
    s_mean: f64,
    n: u64,
    seed: u64,
    index: u64,
) -> Result<SpinEnsembleResult> {
    if !(-1.0..=1.0).contains(&s_mean) {
        return Err(invalid("s_mean", "must lie in [-1, 1]"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let p_up = (1.0 + s_mean) / 2.0;
    let mut rng = substream(seed, index);
    let outcomes: Vec<i8> = (0..n)
        .map(|_| if rng.random::<f64>() < p_up { 1 } else { -1 })
        .collect();
    let mean = sg_pointer_tally(&outcomes)?;
    Ok(SpinEnsembleResult {
        n,
        outcomes,
        mean,
        std_of_mean: (1.0 - s_mean * s_mean).sqrt() / (n as f64).sqrt(),
    })
}

/// Means of `replicates` independent ensembles, replicate `r` drawing from
/// stream `r` of `seed`.
pub fn stern_gerlach_replicates(
    s_mean: f64,
    n: u64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| stern_gerlach_replicate(s_mean, n, seed, r).map(|e| e.mean))
        .collect()
}

/// Combined pointer: left deposits count `-1`, right deposits `+1`.
pub fn sg_pointer_tally(outcomes: &[i8]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if outcomes.iter().any(|&s| s != 1 && s != -1) {
        return Err(invalid("outcomes", "must be +1 or -1"));
    }
    let sum: i64 = outcomes.iter().map(|&s| s as i64).sum();
    Ok(sum as f64 / outcomes.len() as f64)
}
