//! Emergence of outcome statistics for a qubit coupled to a pointer.
//!
//! Two sources feed the same pointer formula: a stochastic model for the
//! reduced pointer entries `(x̂_t, ŷ_t, ẑ_t)`, and an exact small universe
//! whose reduced pointer matrix is computed from a coupled unitary.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum_core::{
    eigendecompose, tensor, trace_product, unitary, unitary_from, CMatrix, DensityOperator,
    HermitianOperator, Tolerances,
};
use crate::rng::{substream, SimRng};
use crate::stats::ks_uniform;

/// Slack allowed on `|α| ≤ sqrt(p(1-p))`.
pub const ALPHA_TOL: f64 = 1e-12;
/// Noise draws are clamped to this many standard deviations.
pub const NOISE_CLAMP: f64 = 3.0;
/// Largest tolerated fraction of rejected steps per realization.
pub const MAX_REJECTED_FRACTION: f64 = 0.01;
/// Undecided fraction above which a tally carries a warning.
pub const UNDECIDED_WARNING: f64 = 0.05;

/// Reduced qubit state `[[p, conj α], [α, 1 - p]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    p: f64,
    alpha: Complex64,
}

pub fn validate_qubit(p: f64, alpha: Complex64) -> Result<QubitState> {
    if !(0.0..=1.0).contains(&p) {
        let margin = if p < 0.0 { -p } else { p - 1.0 };
        return Err(Error::InvalidQubit {
            margin: if margin.is_nan() {
                f64::INFINITY
            } else {
                margin
            },
        });
    }
    let excess = alpha.norm() - (p * (1.0 - p)).sqrt();
    if !(excess <= ALPHA_TOL) {
        return Err(Error::InvalidQubit {
            margin: if excess.is_nan() {
                f64::INFINITY
            } else {
                excess
            },
        });
    }
    Ok(QubitState { p, alpha })
}

impl QubitState {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn density(&self) -> DensityOperator {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(self.p, 0.0),
                self.alpha.conj(),
                self.alpha,
                Complex64::new(1.0 - self.p, 0.0),
            ],
        );
        DensityOperator::from_matrix_with(
            m,
            &Tolerances {
                psd: 1e-10_f64.max(2.0 * ALPHA_TOL),
                ..Tolerances::DEFAULT
            },
        )
        .expect("validated qubit is a density operator")
    }
}

/// Generator for `x̂_t = u g t (1 + η e^{-γt} ξ₁)`,
/// `ŷ_t = -(1-u) g t (1 + η e^{-γt} ξ₂)`, `ẑ_t = ζ e^{-γt} (ξ₃ + i ξ₄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentTrajectoryModel {
    pub growth_rate: f64,
    pub noise_scale: f64,
    pub noise_decay: f64,
    pub coherence_scale: f64,
    pub horizon: f64,
    pub n_steps: usize,
}

impl Default for EnvironmentTrajectoryModel {
    /// Fast growth against slowly decaying noise: `γT = 20`, so at the
    /// horizon `û` equals `u` to about 1e-9 and the coherence term is
    /// negligible against a unit threshold.
    fn default() -> Self {
        Self {
            growth_rate: 1e6,
            noise_scale: 0.2,
            noise_decay: 0.2,
            coherence_scale: 1.0,
            horizon: 100.0,
            n_steps: 100,
        }
    }
}

impl EnvironmentTrajectoryModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("growth_rate", self.growth_rate),
            ("noise_decay", self.noise_decay),
            ("horizon", self.horizon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        for (name, v) in [
            ("noise_scale", self.noise_scale),
            ("coherence_scale", self.coherence_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be nonnegative"));
            }
        }
        if self.n_steps < 2 {
            return Err(invalid("n_steps", "must be at least 2"));
        }
        Ok(())
    }

    /// `t_i = T i / n` for `i = 1..=n`.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_steps as f64;
        (1..=self.n_steps)
            .map(|i| self.horizon * i as f64 / n)
            .collect()
    }
}

/// Time series of the reduced pointer entries `x̂ = X₁₁`, `ŷ = X₂₂`,
/// `ẑ = X₂₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentTrajectory {
    pub times: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub z_hat: Vec<Complex64>,
}

impl EnvironmentTrajectory {
    /// Reads the entries off a sequence of 2×2 pointer matrices.
    pub fn from_pointer_matrices(times: Vec<f64>, matrices: &[HermitianOperator]) -> Result<Self> {
        if matrices.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: matrices.len(),
            });
        }
        let mut out = Self {
            times,
            x_hat: Vec::with_capacity(matrices.len()),
            y_hat: Vec::with_capacity(matrices.len()),
            z_hat: Vec::with_capacity(matrices.len()),
        };
        for m in matrices {
            if m.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: m.dim(),
                });
            }
            let a = m.matrix();
            out.x_hat.push(a[(0, 0)].re);
            out.y_hat.push(a[(1, 1)].re);
            out.z_hat.push(a[(1, 0)]);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// One realization of the stochastic model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSample {
    pub u: f64,
    pub trajectory: EnvironmentTrajectory,
    pub rejected: usize,
}

pub fn sample_environment(
    model: &EnvironmentTrajectoryModel,
    seed: u64,
) -> Result<EnvironmentSample> {
    sample_environment_with(model, &mut substream(seed, 0))
}

fn clamped_normal(rng: &mut SimRng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
        .clamp(-NOISE_CLAMP, NOISE_CLAMP)
}

/// Complex noise with modulus at most [`NOISE_CLAMP`].
fn clamped_complex_normal(rng: &mut SimRng) -> Complex64 {
    let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let r = z.norm();
    if r > NOISE_CLAMP {
        z * (NOISE_CLAMP / r)
    } else {
        z
    }
}

pub fn sample_environment_with(
    model: &EnvironmentTrajectoryModel,
    rng: &mut SimRng,
) -> Result<EnvironmentSample> {
    model.validate()?;
    let u: f64 = rng.sample(Open01);
    let times = model.times();
    let max_rejected = (MAX_REJECTED_FRACTION * model.n_steps as f64).floor() as usize;
    let mut rejected = 0;
    let mut traj = EnvironmentTrajectory {
        times: times.clone(),
        x_hat: Vec::with_capacity(times.len()),
        y_hat: Vec::with_capacity(times.len()),
        z_hat: Vec::with_capacity(times.len()),
    };
    for &t in &times {
        let decay = (-model.noise_decay * t).exp();
        let drift = model.growth_rate * t;
        loop {
            let x = u * drift * (1.0 + model.noise_scale * decay * clamped_normal(rng));
            let y = -(1.0 - u) * drift * (1.0 + model.noise_scale * decay * clamped_normal(rng));
            let z = clamped_complex_normal(rng) * (model.coherence_scale * decay);
            if x > 0.0 && y < 0.0 {
                traj.x_hat.push(x);
                traj.y_hat.push(y);
                traj.z_hat.push(z);
                break;
            }
            rejected += 1;
            if rejected > max_rejected {
                return Err(Error::TooManyRejections {
                    rejected,
                    steps: model.n_steps,
                });
            }
        }
    }
    Ok(EnvironmentSample {
        u,
        trajectory: traj,
        rejected,
    })
}

/// `X̄ = p x̂ + (1-p) ŷ + 2 Re(α conj ẑ)`, the trace of the qubit state
/// against the pointer matrix `[[x̂, conj ẑ], [ẑ, ŷ]]`.
pub fn pointer_expectation(qubit: &QubitState, x_hat: f64, y_hat: f64, z_hat: Complex64) -> f64 {
    qubit.p * x_hat + (1.0 - qubit.p) * y_hat + 2.0 * (qubit.alpha * z_hat.conj()).re
}

/// The same value written as `x̂ (1 - (1-p)/û + 2 Re(α conj v̂))` with
/// `û = x̂/(x̂ - ŷ)` and `v̂ = ẑ/x̂`.
pub fn pointer_expectation_factored(
    qubit: &QubitState,
    x_hat: f64,
    y_hat: f64,
    z_hat: Complex64,
) -> f64 {
    let u = x_hat / (x_hat - y_hat);
    let v = z_hat / x_hat;
    x_hat * (1.0 - (1.0 - qubit.p) / u + 2.0 * (qubit.alpha * v.conj()).re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerTrajectory {
    pub times: Vec<f64>,
    pub xbar: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub v_hat: Vec<Complex64>,
}

impl PointerTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn pointer_trajectory(qubit: &QubitState, env: &EnvironmentTrajectory) -> PointerTrajectory {
    let n = env.len();
    let mut out = PointerTrajectory {
        times: env.times.clone(),
        xbar: Vec::with_capacity(n),
        u_hat: Vec::with_capacity(n),
        v_hat: Vec::with_capacity(n),
    };
    for i in 0..n {
        let (x, y, z) = (env.x_hat[i], env.y_hat[i], env.z_hat[i]);
        out.xbar.push(pointer_expectation(qubit, x, y, z));
        out.u_hat.push(x / (x - y));
        out.v_hat.push(z / x);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
    Undecided,
}

/// Sign of `X̄` at the last recorded time, beyond `threshold`.
pub fn classify_outcome(traj: &PointerTrajectory, threshold: f64) -> Result<Outcome> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold", "must be positive"));
    }
    let last = *traj
        .xbar
        .last()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    Ok(if last > threshold {
        Outcome::Plus
    } else if last < -threshold {
        Outcome::Minus
    } else {
        Outcome::Undecided
    })
}

/// Counts over many runs, with the final `û` and pointer entries kept for
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeTally {
    pub n_plus: u64,
    pub n_minus: u64,
    pub n_undecided: u64,
    pub n_total: u64,
    pub final_u_hat: Vec<f64>,
    pub final_xbar: Vec<f64>,
    /// Sums of `x̂`, `ŷ`, `ẑ` at the horizon, for the mean pointer matrix.
    pub sum_x_hat: f64,
    pub sum_y_hat: f64,
    pub sum_z_hat: Complex64,
    pub rejected_steps: u64,
}

impl OutcomeTally {
    fn single(
        outcome: Outcome,
        traj: &PointerTrajectory,
        env: &EnvironmentTrajectory,
        rejected: usize,
    ) -> Self {
        let last = env.len() - 1;
        Self {
            n_plus: (outcome == Outcome::Plus) as u64,
            n_minus: (outcome == Outcome::Minus) as u64,
            n_undecided: (outcome == Outcome::Undecided) as u64,
            n_total: 1,
            final_u_hat: vec![traj.u_hat[last]],
            final_xbar: vec![traj.xbar[last]],
            sum_x_hat: env.x_hat[last],
            sum_y_hat: env.y_hat[last],
            sum_z_hat: env.z_hat[last],
            rejected_steps: rejected as u64,
        }
    }

    /// Concatenating merge; counts add, diagnostics append in order.
    pub fn merge(mut self, other: Self) -> Self {
        self.n_plus += other.n_plus;
        self.n_minus += other.n_minus;
        self.n_undecided += other.n_undecided;
        self.n_total += other.n_total;
        self.final_u_hat.extend(other.final_u_hat);
        self.final_xbar.extend(other.final_xbar);
        self.sum_x_hat += other.sum_x_hat;
        self.sum_y_hat += other.sum_y_hat;
        self.sum_z_hat += other.sum_z_hat;
        self.rejected_steps += other.rejected_steps;
        self
    }

    pub fn plus_fraction(&self) -> f64 {
        self.n_plus as f64 / self.n_total as f64
    }

    pub fn undecided_fraction(&self) -> f64 {
        self.n_undecided as f64 / self.n_total as f64
    }

    pub fn warning(&self) -> Option<String> {
        (self.undecided_fraction() > UNDECIDED_WARNING).then(|| {
            format!(
                "{} of {} runs undecided at the horizon; raise the horizon or lower the threshold",
                self.n_undecided, self.n_total
            )
        })
    }

    /// Kolmogorov-Smirnov distance and p-value of the final `û` against
    /// Uniform(0, 1).
    pub fn u_uniformity(&self) -> (f64, f64) {
        ks_uniform(&self.final_u_hat)
    }

    /// Empirical mean of the pointer matrix at the horizon, as
    /// `(x, y, z)`.
    pub fn mean_pointer(&self) -> (f64, f64, Complex64) {
        let n = self.n_total as f64;
        (self.sum_x_hat / n, self.sum_y_hat / n, self.sum_z_hat / n)
    }
}

/// One realization: sample, evaluate the pointer and classify.
pub fn born_run(
    qubit: &QubitState,
    model: &EnvironmentTrajectoryModel,
    threshold: f64,
    seed: u64,
    run_index: u64,
) -> Result<(Outcome, PointerTrajectory, EnvironmentSample)> {
    let sample = sample_environment_with(model, &mut substream(seed, run_index))?;
    let traj = pointer_trajectory(qubit, &sample.trajectory);
    let outcome = classify_outcome(&traj, threshold)?;
    Ok((outcome, traj, sample))
}

/// `n_runs` independent realizations, run `i` drawing from stream `i` of
/// `seed`.
pub fn born_statistics(
    qubit: &QubitState,
    model: &EnvironmentTrajectoryModel,
    n_runs: u64,
    threshold: f64,
    seed: u64,
) -> Result<OutcomeTally> {
    if n_runs == 0 {
        return Err(invalid("n_runs", "must be at least 1"));
    }
    model.validate()?;
    if !(threshold > 0.0) {
        return Err(invalid("threshold", "must be positive"));
    }
    let tallies = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let (outcome, traj, sample) = born_run(qubit, model, threshold, seed, i)?;
            Ok(OutcomeTally::single(
                outcome,
                &traj,
                &sample.trajectory,
                sample.rejected,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tallies
        .into_iter()
        .fold(OutcomeTally::default(), OutcomeTally::merge))
}

/// Qubit ⊗ environment with a pointer observable acting on the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallUniverse {
    dim_env: usize,
    hamiltonian: HermitianOperator,
    rho_env: DensityOperator,
    x_env: HermitianOperator,
    hbar: f64,
}

impl SmallUniverse {
    pub fn new(
        dim_env: usize,
        hamiltonian: HermitianOperator,
        rho_env: DensityOperator,
        x_env: HermitianOperator,
        hbar: f64,
    ) -> Result<Self> {
        if dim_env < 2 {
            return Err(invalid("dim_env", "must be at least 2"));
        }
        if hamiltonian.dim() != 2 * dim_env {
            return Err(Error::DimensionMismatch {
                expected: 2 * dim_env,
                found: hamiltonian.dim(),
            });
        }
        for found in [rho_env.dim(), x_env.dim()] {
            if found != dim_env {
                return Err(Error::DimensionMismatch {
                    expected: dim_env,
                    found,
                });
            }
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self {
            dim_env,
            hamiltonian,
            rho_env,
            x_env,
            hbar,
        })
    }

    /// `H = H_S ⊗ 1 + 1 ⊗ H_E + coupling · V` with `H_S`, `H_E`, `V` drawn
    /// from the Gaussian unitary ensemble, a random mixed environment state
    /// and a random pointer observable.
    pub fn random(dim_env: usize, coupling: f64, hbar: f64, rng: &mut SimRng) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(invalid("coupling", "must be finite"));
        }
        if dim_env < 2 {
            return Err(invalid("dim_env", "must be at least 2"));
        }
        let hs = gue(2, rng);
        let he = gue(dim_env, rng);
        let v = gue(2 * dim_env, rng);
        let h = tensor(&hs, &HermitianOperator::identity(dim_env))
            .combine(1.0, &tensor(&HermitianOperator::identity(2), &he), 1.0)?
            .combine(1.0, &v, coupling)?;
        let g = ginibre(dim_env, dim_env, rng);
        let m = &g * g.adjoint();
        let tr = m.trace();
        let rho_env = DensityOperator::from_matrix(m / tr)?;
        let x_env = gue(dim_env, rng);
        Self::new(dim_env, h, rho_env, x_env, hbar)
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn rho_env(&self) -> &DensityOperator {
        &self.rho_env
    }

    pub fn x_env(&self) -> &HermitianOperator {
        &self.x_env
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `ρ^S ⊗ ρ^E` for a qubit state.
    pub fn initial_state(&self, qubit: &DensityOperator) -> Result<DensityOperator> {
        if qubit.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: qubit.dim(),
            });
        }
        let m = qubit.matrix().kronecker(self.rho_env.matrix());
        Ok(DensityOperator::from_matrix_unchecked(m))
    }

    /// `1 ⊗ X^E`.
    pub fn pointer_observable(&self) -> HermitianOperator {
        tensor(&HermitianOperator::identity(2), &self.x_env)
    }
}

fn ginibre(rows: usize, cols: usize, rng: &mut SimRng) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn gue(dim: usize, rng: &mut SimRng) -> HermitianOperator {
    let g = ginibre(dim, dim, rng);
    let h = (&g + g.adjoint()) * Complex64::new(0.5 / (dim as f64).sqrt(), 0.0);
    HermitianOperator::from_matrix(h).expect("symmetrized matrix is Hermitian")
}

fn pointer_matrix_from(universe: &SmallUniverse, u: &CMatrix) -> Result<HermitianOperator> {
    let d = universe.dim_env;
    let rho = universe.rho_env.matrix();
    let x = universe.x_env.matrix();
    let mut xs = CMatrix::zeros(2, 2);
    for j in 0..2 {
        for k in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..2 {
                let u_lj = u.view((l * d, j * d), (d, d));
                let u_lk = u.view((l * d, k * d), (d, d));
                let inner = u_lj.adjoint() * x * u_lk;
                acc += trace_product(rho, &inner);
            }
            xs[(j, k)] = acc;
        }
    }
    HermitianOperator::from_matrix_with(
        xs,
        &Tolerances {
            hermitian: 1e-10,
            ..Tolerances::DEFAULT
        },
    )
}

/// `X^S(t)_jk = Σ_ℓ Tr[ρ^E U_ℓj(t)† X^E U_ℓk(t)]` where `U_ℓk` are the
/// environment blocks of `exp(-itH/ħ)`.
pub fn reduced_pointer_matrix(universe: &SmallUniverse, t: f64) -> Result<HermitianOperator> {
    let u = unitary(&universe.hamiltonian, t, universe.hbar)?;
    pointer_matrix_from(universe, &u)
}

/// `(x̂, ŷ, ẑ)` of the reduced pointer matrix at every time of `t_grid`.
pub fn small_universe_diagnostics(
    universe: &SmallUniverse,
    t_grid: &[f64],
) -> Result<EnvironmentTrajectory> {
    let eig = eigendecompose(&universe.hamiltonian)?;
    let matrices = t_grid
        .iter()
        .map(|&t| {
            let u = unitary_from(&eig.values, &eig.vectors, t, universe.hbar);
            pointer_matrix_from(universe, &u)
        })
        .collect::<Result<Vec<_>>>()?;
    EnvironmentTrajectory::from_pointer_matrices(t_grid.to_vec(), &matrices)
}
