//! Small statistics helpers shared by the Monte Carlo engines.

use statrs::distribution::{Binomial, DiscreteCDF};

/// Exact central binomial interval `[lo, hi]` for `n` trials at success
/// probability `p`: `P(X < lo) <= (1-coverage)/2` and
/// `P(X > hi) <= (1-coverage)/2`.
pub fn binomial_interval(n: u64, p: f64, coverage: f64) -> (u64, u64) {
    let tail = (1.0 - coverage) / 2.0;
    let dist = Binomial::new(p.clamp(0.0, 1.0), n).expect("valid binomial");
    // lo: largest k with P(X <= k - 1) <= tail
    let mut lo = 0;
    while lo < n && dist.cdf(lo) <= tail {
        lo += 1;
    }
    // hi: smallest k with P(X > k) <= tail
    let mut hi = n;
    while hi > 0 && dist.sf(hi - 1) <= tail {
        hi -= 1;
    }
    (lo, hi)
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1).
/// Returns `(D, p_value)` using the asymptotic Kolmogorov distribution with
/// Stephens' small-sample correction.
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Least-squares line `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
