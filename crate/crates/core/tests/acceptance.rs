//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thermalsim::born_emergence::*;
use thermalsim::detectors::*;
use thermalsim::ehrenfest::*;
use thermalsim::experiments::{resolve, run_config, ConfigSources, Experiment};
use thermalsim::quantum_core::{
    eigendecompose, q_expectation, uncertainty, DensityOperator, HermitianOperator,
};
use thermalsim::rng::substream;
use thermalsim::spectral_probe::*;
use thermalsim::stats::{binomial_interval, linear_fit, mean_std};
use thermalsim::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform(n: usize, t_end: f64) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

fn born_frequencies() -> Outcome {
    let model = EnvironmentTrajectoryModel::default();
    let n = 10_000;
    let mut worst = String::new();
    let mut ok = true;
    for (k, &p) in [0.0f64, 0.1, 0.2, 0.5, 0.8, 1.0].iter().enumerate() {
        for (j, coherence) in [0.0, 0.9].into_iter().enumerate() {
            let alpha = Complex64::new(coherence * (p * (1.0 - p)).sqrt(), 0.0);
            let q = validate_qubit(p, alpha).map_err(|e| e.to_string())?;
            let tally = born_statistics(&q, &model, n, 1.0, 1000 + (2 * k + j) as u64)
                .map_err(|e| e.to_string())?;
            let (lo, hi) = binomial_interval(n, p, 0.997);
            let inside = (lo..=hi).contains(&tally.n_plus);
            if !inside {
                ok = false;
                worst = format!(
                    "p={p} alpha={} n_plus={} not in [{lo},{hi}]",
                    alpha.re, tally.n_plus
                );
            }
        }
    }
    ensure(
        ok,
        if ok {
            "12 cells inside the 99.7% binomial interval".into()
        } else {
            worst
        },
    )
}

fn small_universe() -> Outcome {
    let mut rng = substream(77, 0);
    let mut r = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let u = SmallUniverse::random(8, r.random_range(0.1..1.5), 1.0, &mut rng)
            .map_err(|e| e.to_string())?;
        let h = u.hamiltonian().matrix().clone();
        for _ in 0..5 {
            let t = r.random_range(0.0..30.0);
            let p = r.random_range(0.0..1.0);
            let alpha = Complex64::from_polar(
                r.random_range(0.0..1.0) * (p * (1.0f64 - p)).sqrt(),
                r.random_range(0.0..2.0 * PI),
            );
            let q = validate_qubit(p, alpha).map_err(|e| e.to_string())?;
            // full-universe value with an independent Padé exponential
            let w = (&h * Complex64::new(0.0, -t / u.hbar())).exp();
            let rho0 = q.density().matrix().kronecker(u.rho_env().matrix());
            let rho_t = &w * rho0 * w.adjoint();
            let direct = (rho_t * u.pointer_observable().matrix()).trace().re;
            let xs = reduced_pointer_matrix(&u, t).map_err(|e| e.to_string())?;
            let reduced = q_expectation(&q.density(), &xs).map_err(|e| e.to_string())?;
            worst = worst.max((direct - reduced).abs());
        }
    }
    ensure(
        worst <= 1e-9,
        format!("max deviation {worst:.2e} over 100 (universe, time) pairs"),
    )
}

fn spectral_recovery() -> Outcome {
    let levels = vec![0.0, 1.0, 2.5];
    let rho = thermalsim::quantum_core::PureState::normalized(nalgebra::DVector::from_element(
        3,
        Complex64::new(1.0, 0.0),
    ))
    .map_err(|e| e.to_string())?
    .density();
    let a = HermitianOperator::from_real(DMatrix::from_fn(
        3,
        3,
        |j, k| if j == k { 0.0 } else { 1.0 },
    ))
    .map_err(|e| e.to_string())?;
    let sys = DiscreteSpectrumSystem::new(levels, rho, a, 1.0).map_err(|e| e.to_string())?;
    let osc = OscillatorParams::new(1.0, 0.02).map_err(|e| e.to_string())?;
    let force = force_decomposition(&sys);
    let grid = frequency_grid(0.1, 3.5, 0.002).map_err(|e| e.to_string())?;
    let scan = mean_energy_scan(&force, &osc, &grid).map_err(|e| e.to_string())?;
    let peaks = recover_spectrum(&scan, 1.0);
    let expected = [1.0, 1.5, 2.5];
    if peaks.len() != 3
        || peaks
            .iter()
            .zip(expected)
            .any(|(p, e)| (p - e).abs() > 0.01)
    {
        return Err(format!("peaks {peaks:?}"));
    }

    // Integrate m q'' + c q' + m w^2 q = F(t) from rest with RK4, let the
    // transient die out, then average (q - <q>)^2 over whole beat periods.
    let f = |t: f64| force.eval(t).re;
    let mut worst = 0.0f64;
    for w in [0.5, 0.9, 1.0, 1.2, 1.5, 1.8, 2.2, 2.5, 3.0, 3.4] {
        let dt = 0.005;
        let rhs = |t: f64, q: f64, v: f64| (v, (f(t) - 0.02 * v - w * w * q) / 1.0);
        let (mut q, mut v, mut t) = (0.0, 0.0, 0.0);
        let step = |q: &mut f64, v: &mut f64, t: &mut f64| {
            let (k1q, k1v) = rhs(*t, *q, *v);
            let (k2q, k2v) = rhs(*t + dt / 2.0, *q + dt / 2.0 * k1q, *v + dt / 2.0 * k1v);
            let (k3q, k3v) = rhs(*t + dt / 2.0, *q + dt / 2.0 * k2q, *v + dt / 2.0 * k2v);
            let (k4q, k4v) = rhs(*t + dt, *q + dt * k3q, *v + dt * k3v);
            *q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            *v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            *t += dt;
        };
        // damping time 2m/c = 100; 1500 time units leaves e^-15 of the transient
        for _ in 0..300_000 {
            step(&mut q, &mut v, &mut t);
        }
        // the smallest mode spacing is 0.5; 25 beat periods of 4 pi
        let n = (25.0 * 4.0 * PI / dt).round() as usize;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            samples.push(q);
            step(&mut q, &mut v, &mut t);
        }
        let (_, sd) = mean_std(&samples);
        let analytic = mean_energy_scan(&force, &osc, &[w])
            .map_err(|e| e.to_string())?
            .response()[0];
        worst = worst.max((sd * sd - analytic).abs() / analytic);
    }
    ensure(
        worst <= 0.02,
        format!("peaks {peaks:.5?}; time-average vs scan worst relative gap {worst:.2e}"),
    )
}

fn approximation_lemma() -> Outcome {
    let sys = GridSystem::from_fn(32, -2.0, 2.0, 1.0, 1.0, |_| 0.0).map_err(|e| e.to_string())?;
    let q = build_operators(&sys).position;
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000 {
        let tf = common::random_function(&mut r, 2.0);
        let f: Vec<f64> = sys.points().iter().map(|&x| (tf.f)(x)).collect();
        let rho = if i % 2 == 0 {
            common::random_density(&mut r, 32)
        } else {
            common::random_local_density(&mut r, 32)
        };
        let (lhs, rhs) = approximation_bound_check(&rho, &q, &f, tf.second_derivative_bound)
            .map_err(|e| e.to_string())?;
        worst = worst.max(lhs - rhs);
    }
    ensure(
        worst <= 1e-9,
        format!("max (lhs - rhs) = {worst:.2e} over 1000 pairs"),
    )
}

fn ehrenfest_classicality() -> Outcome {
    let sys = GridSystem::from_fn(1200, -5.0, 5.0, 1.0, 1.0, |x| 0.5 * x * x)
        .map_err(|e| e.to_string())?;
    let q0 = 0.5;
    let psi = gaussian_packet(&sys, q0, 0.0, FRAC_1_SQRT_2).map_err(|e| e.to_string())?;
    let t = uniform(2000, 20.0 * PI);
    let tr = quantum_expectation_trajectory(&sys, &psi, &t).map_err(|e| e.to_string())?;
    let harmonic = t
        .iter()
        .zip(&tr.q_mean)
        .map(|(ti, qm)| (qm - q0 * ti.cos()).abs())
        .fold(0.0, f64::max);
    if harmonic > 1e-3 * q0 {
        return Err(format!("harmonic deviation {harmonic:.2e}"));
    }

    let quartic = GridSystem::from_fn(1000, -1.0, 1.6, 1.0, 0.01, |x| x.powi(4))
        .map_err(|e| e.to_string())?;
    let prop = GridPropagator::new(&quartic).map_err(|e| e.to_string())?;
    let t = uniform(200, 1.0);
    let c = 24.0 * 1.6;
    let mut residuals: Vec<Vec<f64>> = Vec::new();
    let mut excess = f64::NEG_INFINITY;
    for width in [0.2, 0.14, 0.1] {
        let psi = gaussian_packet(&quartic, 0.5, 0.0, width).map_err(|e| e.to_string())?;
        let tr = prop.trajectory(&psi, &t).map_err(|e| e.to_string())?;
        if tr.boundary_contact {
            return Err(format!("width {width} reached the boundary"));
        }
        let dev = classicality_deviation(&tr, &quartic, c).map_err(|e| e.to_string())?;
        excess = excess.max(dev.worst_excess());
        residuals.push(dev.residual);
    }
    let shrinks = residuals
        .windows(2)
        .all(|w| w[1].iter().zip(&w[0]).all(|(new, old)| new < old));
    ensure(
        excess <= 1e-3 && shrinks,
        format!("harmonic deviation {harmonic:.2e}; quartic worst excess {excess:.2e}; monotone shrink {shrinks}"),
    )
}

fn worked_numbers() -> Outcome {
    let record =
        MeasurementRecord::new(vec![6.57, 6.58], vec![20, 80]).map_err(|e| e.to_string())?;
    let s = summarize(&record);
    let x =
        HermitianOperator::from_real(DMatrix::from_row_slice(2, 2, &[6.578, 0.004, 0.004, 6.572]))
            .map_err(|e| e.to_string())?;
    let eig = eigendecompose(&x).map_err(|e| e.to_string())?;
    let mut worst_truth = 0.0f64;
    let mut r = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let p: f64 = r.random_range(0.0..=1.0);
        let (e1, e2): (f64, f64) = (r.random_range(-10.0..10.0), r.random_range(-10.0..10.0));
        let (m, sd) = two_level_energy_truth(p, e1, e2).map_err(|e| e.to_string())?;
        let rho = DensityOperator::diagonal(&[p, 1.0 - p]).map_err(|e| e.to_string())?;
        let h = HermitianOperator::diagonal(&[e1, e2]);
        let m_ref = q_expectation(&rho, &h).map_err(|e| e.to_string())?;
        let sd_ref = uncertainty(&rho, &h).map_err(|e| e.to_string())?;
        worst_truth = worst_truth.max((m - m_ref).abs()).max((sd - sd_ref).abs());
    }
    let errs = [
        (s.mean - 6.578).abs(),
        (s.std - 0.004).abs(),
        (eig.values[0] - 6.570).abs(),
        (eig.values[1] - 6.580).abs(),
        worst_truth,
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    ensure(
        worst <= 1e-12,
        format!(
            "mean {} std {} eigenvalues {:?}; worst error {worst:.1e}",
            s.mean, s.std, eig.values
        ),
    )
}

fn stern_gerlach() -> Outcome {
    let sizes = [100u64, 1000, 10_000];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let means =
            stern_gerlach_replicates(0.0, n, 200, 500 + k as u64).map_err(|e| e.to_string())?;
        x.push((n as f64).ln());
        y.push(mean_std(&means).1.ln());
    }
    let (slope, _) = linear_fit(&x, &y);
    let single = stern_gerlach_ensemble(0.0, 1000, 9).map_err(|e| e.to_string())?;
    let all_one = single.thermal_errors(0.0).iter().all(|&e| e == 1.0);
    ensure(
        (slope + 0.5).abs() <= 0.05 && all_one,
        format!("slope {slope:.4}; unit thermal errors at zero mean {all_one}"),
    )
}

fn bucket_quantization() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (lambda, t) in [(10.0, 1.0), (100.0, 100.0)] {
        let bucket = 1.0;
        let mut rates = Vec::new();
        for seed in 0..1000 {
            let r = bucket_count(lambda, t, bucket, seed).map_err(|e| e.to_string())?;
            let est = r.rate_estimate();
            if est != r.count as f64 * (bucket / t) {
                ok = false;
            }
            rates.push(est);
        }
        let (m, _) = mean_std(&rates);
        let rel = (m - lambda).abs() / lambda;
        let tol = 3.0 / (lambda * t).sqrt();
        ok &= rel <= tol;
        detail.push(format!(
            "lambda*T={}: relative error {rel:.2e} (tol {tol:.2e})",
            lambda * t
        ));
    }
    ensure(ok, format!("lattice exact; {}", detail.join("; ")))
}

fn double_well() -> Outcome {
    let params = DoubleWellParams {
        barrier: 1.0,
        noise_temperature: 0.05,
        dt: 0.02,
        n_steps: 1000,
    };
    let paths = double_well_ensemble(&params, 0.0, 1000, 500, 21).map_err(|e| e.to_string())?;
    let observed = occupancy(paths.iter().flatten(), 0.3);
    let predicted = boltzmann_occupancy(&params, 0.3).map_err(|e| e.to_string())?;
    let ok = (observed.left - predicted.left).abs() <= 0.1
        && (observed.right - predicted.right).abs() <= 0.1
        && observed.middle < 0.05;
    ensure(
        ok,
        format!(
            "observed ({:.3}, {:.3}, {:.3}) vs Boltzmann ({:.3}, {:.3}, {:.3})",
            observed.left,
            observed.middle,
            observed.right,
            predicted.left,
            predicted.middle,
            predicted.right
        ),
    )
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().display().to_string();
            let mut bytes = std::fs::read(&p).unwrap();
            if rel == "manifest.json" {
                // wall time is the one field that legitimately varies
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v["wall_time"] = json!(0.0);
                let paths = v["artifact_paths"].as_array().unwrap().len();
                v["artifact_paths"] = json!(paths);
                v["config_echo"]["output_dir"] = json!("");
                bytes = serde_json::to_vec(&v).unwrap();
            }
            out.push((rel, bytes));
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for e in Experiment::ALL {
        let mut trees = Vec::new();
        for pass in 0..2 {
            let doc = json!({"experiment": e.name(), "seed": 2024});
            let sources = ConfigSources {
                output_dir: Some(tmp.path().join(format!("{}-{pass}", e.name()))),
                ..Default::default()
            };
            let config = resolve(doc, &sources).map_err(|e| e.to_string())?;
            run_config(&config, true).map_err(|e| e.to_string())?;
            trees.push(read_tree(sources.output_dir.as_ref().unwrap()));
        }
        if trees[0] != trees[1] {
            return Err(format!("{} artifacts differ between runs", e.name()));
        }
        files += trees[0].len();
    }
    ensure(
        true,
        format!("8 experiments, {files} artifacts identical on rerun"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("born emergence frequencies", born_frequencies),
        ("small-universe consistency", small_universe),
        ("spectral recovery", spectral_recovery),
        ("approximation lemma", approximation_lemma),
        ("ehrenfest classicality", ehrenfest_classicality),
        ("worked detector numbers", worked_numbers),
        ("stern-gerlach scaling", stern_gerlach),
        ("bucket quantization", bucket_quantization),
        ("double-well bistability", double_well),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
