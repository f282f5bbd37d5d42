use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GridSystem;
use crate::error::{invalid, Error, Result};
use crate::quantum_core::{eigen::eigh_real, PureState};

/// Probability within this many points of a wall that counts as contact.
const WALL_POINTS: usize = 5;
const WALL_MASS: f64 = 1e-6;
/// Modes are dropped from the expansion only while their accumulated weight
/// stays below this.
const DROPPED_WEIGHT: f64 = 1e-20;
/// Times reconstructed per batch.
const CHUNK: usize = 256;

/// q-expectation record of a grid evolution.
///
/// `p_mean` is `<P>` for the central-difference momentum (the one for which
/// `m d<Q>/dt = <P>` is exact). `sigma_p` is evaluated with the spectral
/// (FFT) momentum, which resolves `p²` of a well-sampled packet exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTrajectory {
    pub times: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub sigma_q: Vec<f64>,
    pub sigma_p: Vec<f64>,
    /// Largest `|‖ψ(t)‖ - 1|`.
    pub norm_error: f64,
    /// Packet mass came within five points of a wall.
    pub boundary_contact: bool,
    /// Max over interior times of `|Δ<q>/Δt - <p>/m|`, relative to
    /// `max |<p>|/m`. `None` with fewer than three samples.
    pub ehrenfest_error: Option<f64>,
}

impl ExpectationTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Smallest `σ_q σ_p` along the trajectory.
    pub fn min_uncertainty_product(&self) -> f64 {
        self.sigma_q
            .iter()
            .zip(&self.sigma_p)
            .map(|(a, b)| a * b)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Spectral propagator for a grid system; diagonalizes `H` once and reuses
/// the eigenbasis for any number of initial states.
pub struct GridPropagator {
    sys: GridSystem,
    energies: Vec<f64>,
    modes: DMatrix<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridPropagator")
            .field("n_points", &self.sys.n_points)
            .finish()
    }
}

impl GridPropagator {
    pub fn new(sys: &GridSystem) -> Result<Self> {
        let (energies, modes) = eigh_real(&sys.hamiltonian_real())?;
        let fft = FftPlanner::new().plan_fft_forward(sys.n_points);
        Ok(Self {
            sys: sys.clone(),
            energies,
            modes,
            fft,
        })
    }

    pub fn system(&self) -> &GridSystem {
        &self.sys
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Expansion coefficients of `psi`, restricted to the modes that carry
    /// weight.
    fn expand(&self, psi: &PureState) -> (Vec<usize>, Vec<Complex64>) {
        let v = psi.amplitudes();
        let n = self.sys.n_points;
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let col = self.modes.column(k);
                (0..n).map(|j| v[j] * col[j]).sum()
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| coeffs[a].norm_sqr().total_cmp(&coeffs[b].norm_sqr()));
        let mut dropped = 0.0;
        let mut cut = 0;
        for &k in &order {
            dropped += coeffs[k].norm_sqr();
            if dropped > DROPPED_WEIGHT {
                break;
            }
            cut += 1;
        }
        let mut keep: Vec<usize> = order[cut..].to_vec();
        keep.sort_unstable();
        let c = keep.iter().map(|&k| coeffs[k]).collect();
        (keep, c)
    }

    fn reconstruct(&self, keep: &[usize], coeffs: &[Complex64], t: f64) -> DVector<Complex64> {
        let n = self.sys.n_points;
        let mut out = DVector::zeros(n);
        for (&k, &ck) in keep.iter().zip(coeffs) {
            let a = ck * Complex64::from_polar(1.0, -self.energies[k] * t / self.sys.hbar);
            let col = self.modes.column(k);
            for j in 0..n {
                out[j] += a * col[j];
            }
        }
        out
    }

    /// Columns are `ψ(t)` for each `t` in `times`, computed as two real
    /// matrix products `V·Re(C)` and `V·Im(C)`.
    fn reconstruct_many(
        &self,
        keep: &[usize],
        coeffs: &[Complex64],
        times: &[f64],
    ) -> DMatrix<Complex64> {
        let kk = keep.len();
        let mut re = DMatrix::<f64>::zeros(kk, times.len());
        let mut im = DMatrix::<f64>::zeros(kk, times.len());
        for (col, &t) in times.iter().enumerate() {
            for (row, (&k, &ck)) in keep.iter().zip(coeffs).enumerate() {
                let a = ck * Complex64::from_polar(1.0, -self.energies[k] * t / self.sys.hbar);
                re[(row, col)] = a.re;
                im[(row, col)] = a.im;
            }
        }
        let basis = self.modes.select_columns(keep);
        let (sr, si) = (&basis * re, &basis * im);
        DMatrix::from_fn(sr.nrows(), sr.ncols(), |j, k| {
            Complex64::new(sr[(j, k)], si[(j, k)])
        })
    }

    /// `ψ(t)` for the initial state `psi0`.
    pub fn state_at(&self, psi0: &PureState, t: f64) -> Result<PureState> {
        self.check_state(psi0)?;
        let (keep, c) = self.expand(psi0);
        Ok(PureState::from_vector_unchecked(
            self.reconstruct(&keep, &c, t),
        ))
    }

    fn check_state(&self, psi0: &PureState) -> Result<()> {
        if psi0.dim() != self.sys.n_points {
            return Err(Error::DimensionMismatch {
                expected: self.sys.n_points,
                found: psi0.dim(),
            });
        }
        Ok(())
    }

    pub fn trajectory(&self, psi0: &PureState, t_grid: &[f64]) -> Result<ExpectationTrajectory> {
        self.check_state(psi0)?;
        check_time_grid(t_grid)?;
        let (keep, c) = self.expand(psi0);
        let sys = &self.sys;
        let n = sys.n_points;
        let h = sys.spacing();
        let x = sys.points();
        let ks = wavenumbers(n, h);

        let mut traj = ExpectationTrajectory {
            times: t_grid.to_vec(),
            q_mean: Vec::with_capacity(t_grid.len()),
            p_mean: Vec::with_capacity(t_grid.len()),
            sigma_q: Vec::with_capacity(t_grid.len()),
            sigma_p: Vec::with_capacity(t_grid.len()),
            norm_error: 0.0,
            boundary_contact: false,
            ehrenfest_error: None,
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for chunk in t_grid.chunks(CHUNK) {
            let states = self.reconstruct_many(&keep, &c, chunk);
            for col in 0..chunk.len() {
                let psi = states.column(col);
                let dens: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
                let norm2: f64 = dens.iter().sum();
                traj.norm_error = traj.norm_error.max((norm2.sqrt() - 1.0).abs());
                let wall: f64 = dens[..WALL_POINTS].iter().sum::<f64>()
                    + dens[n - WALL_POINTS..].iter().sum::<f64>();
                if wall > WALL_MASS {
                    traj.boundary_contact = true;
                }

                let q1: f64 = dens.iter().zip(&x).map(|(d, x)| d * x).sum::<f64>() / norm2;
                let q2: f64 = dens.iter().zip(&x).map(|(d, x)| d * x * x).sum::<f64>() / norm2;

                // central-difference momentum, ψ = 0 beyond the walls
                let mut pc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let right = if j + 1 < n {
                        psi[j + 1]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    let left = if j > 0 {
                        psi[j - 1]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    pc += psi[j].conj() * (right - left);
                }
                let p_central = (pc * Complex64::new(0.0, -sys.hbar / (2.0 * h))).re / norm2;

                for (b, z) in buf.iter_mut().zip(psi.iter()) {
                    *b = *z;
                }
                self.fft.process(&mut buf);
                let (mut w, mut k1, mut k2) = (0.0, 0.0, 0.0);
                for (z, &k) in buf.iter().zip(&ks) {
                    let a = z.norm_sqr();
                    w += a;
                    k1 += a * k;
                    k2 += a * k * k;
                }
                let (k1, k2) = (k1 / w, k2 / w);

                traj.q_mean.push(q1);
                traj.p_mean.push(p_central);
                traj.sigma_q.push((q2 - q1 * q1).max(0.0).sqrt());
                traj.sigma_p.push(sys.hbar * (k2 - k1 * k1).max(0.0).sqrt());
            }
        }
        traj.ehrenfest_error = ehrenfest_error(&traj, sys.mass);
        Ok(traj)
    }
}

/// FFT wavenumbers for `n` samples at spacing `h`.
fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|m| {
            if 2 * m < n {
                m as f64 * dk
            } else {
                (m as f64 - n as f64) * dk
            }
        })
        .collect()
}

fn ehrenfest_error(traj: &ExpectationTrajectory, mass: f64) -> Option<f64> {
    let n = traj.len();
    if n < 3 {
        return None;
    }
    let scale = traj.p_mean.iter().fold(0.0f64, |a, p| a.max(p.abs())) / mass;
    let scale = scale.max(f64::MIN_POSITIVE);
    let worst = (1..n - 1)
        .map(|i| {
            let t = &traj.times;
            let dq = (traj.q_mean[i + 1] - traj.q_mean[i - 1]) / (t[i + 1] - t[i - 1]);
            (dq - traj.p_mean[i] / mass).abs()
        })
        .fold(0.0f64, f64::max);
    Some(worst / scale)
}

pub(crate) fn check_time_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("t_grid", "must be strictly ascending"));
    }
    Ok(())
}

/// Exact eigenbasis evolution of `psi0` on the grid, recording `<q>`, `<p>`,
/// `σ_q` and `σ_p` at each time of `t_grid` (ascending, starting at 0).
pub fn quantum_expectation_trajectory(
    sys: &GridSystem,
    psi0: &PureState,
    t_grid: &[f64],
) -> Result<ExpectationTrajectory> {
    if t_grid.first().is_some_and(|&t| t != 0.0) {
        return Err(invalid("t_grid", "must start at 0"));
    }
    GridPropagator::new(sys)?.trajectory(psi0, t_grid)
}
