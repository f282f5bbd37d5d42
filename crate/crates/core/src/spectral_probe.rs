//! Resonance spectroscopy of a discrete-spectrum system through a forced,
//! damped oscillator driven by the system's q-expectation signal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum_core::{DensityOperator, HermitianOperator};

/// Frequencies closer than this are treated as one mode.
pub const GROUPING_TOL: f64 = 1e-9;
/// Modes with smaller amplitude are dropped from a decomposition.
pub const AMPLITUDE_FLOOR: f64 = 1e-14;

/// Levels `E_k` with a state and an observable, both written in the energy
/// eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrumSystem {
    levels: Vec<f64>,
    rho: DensityOperator,
    observable: HermitianOperator,
    hbar: f64,
}

impl DiscreteSpectrumSystem {
    pub fn new(
        levels: Vec<f64>,
        rho: DensityOperator,
        observable: HermitianOperator,
        hbar: f64,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("levels", "must not be empty"));
        }
        if levels.iter().any(|e| !e.is_finite()) {
            return Err(invalid("levels", "must be finite"));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("levels", "must be strictly ascending"));
        }
        for found in [rho.dim(), observable.dim()] {
            if found != levels.len() {
                return Err(Error::DimensionMismatch {
                    expected: levels.len(),
                    found,
                });
            }
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(Self {
            levels,
            rho,
            observable,
            hbar,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    /// The diagonal Hamiltonian `Σ E_k |k><k|`.
    pub fn hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::diagonal(&self.levels)
    }

    /// Same system with the observable multiplied by `s`.
    pub fn with_scaled_observable(&self, s: f64) -> Self {
        Self {
            observable: self.observable.scale(s),
            ..self.clone()
        }
    }
}

/// `Ω[k][j] = (E_k - E_j)/ħ`.
pub fn rydberg_ritz_frequencies(levels: &[f64], hbar: f64) -> Result<DMatrix<f64>> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(invalid("hbar", "must be positive"));
    }
    let n = levels.len();
    Ok(DMatrix::from_fn(n, n, |k, j| {
        (levels[k] - levels[j]) / hbar
    }))
}

/// Distinct positive entries of a frequency matrix, ascending, merged within
/// [`GROUPING_TOL`].
pub fn positive_frequencies(omega: &DMatrix<f64>) -> Vec<f64> {
    let mut w: Vec<f64> = omega
        .iter()
        .copied()
        .filter(|&x| x > GROUPING_TOL)
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup_by(|b, a| *b - *a <= GROUPING_TOL);
    w
}

/// `<A(t)> = Σ_jk ρ_jk A_kj e^{iω_kj t}`.
pub fn heisenberg_signal(sys: &DiscreteSpectrumSystem, t: f64) -> f64 {
    let rho = sys.rho.matrix();
    let a = sys.observable.matrix();
    let n = sys.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            let w = (sys.levels[k] - sys.levels[j]) / sys.hbar;
            acc += rho[(j, k)] * a[(k, j)] * Complex64::from_polar(1.0, w * t);
        }
    }
    acc.re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceMode {
    pub omega: f64,
    pub amplitude: Complex64,
}

/// `F(t) = Σ_l F_l e^{iω_l t}` with modes sorted by frequency.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceSignal {
    modes: Vec<ForceMode>,
}

impl ForceSignal {
    pub fn new(mut modes: Vec<ForceMode>) -> Result<Self> {
        if modes.iter().any(|m| {
            !m.omega.is_finite() || !m.amplitude.re.is_finite() || !m.amplitude.im.is_finite()
        }) {
            return Err(invalid("modes", "must be finite"));
        }
        modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        if modes.windows(2).any(|w| w[1].omega == w[0].omega) {
            return Err(invalid("modes", "frequencies must be distinct"));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[ForceMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Complex value of the superposition at `t`.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * Complex64::from_polar(1.0, m.omega * t))
            .sum()
    }

    /// Whether every `(ω, F)` has a partner `(-ω, conj F)` within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.modes.iter().all(|m| {
            self.modes.iter().any(|o| {
                (o.omega + m.omega).abs() <= tol && (o.amplitude - m.amplitude.conj()).norm() <= tol
            })
        })
    }

    /// Scale all amplitudes by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            modes: self
                .modes
                .iter()
                .map(|m| ForceMode {
                    omega: m.omega,
                    amplitude: m.amplitude * s,
                })
                .collect(),
        }
    }
}

/// Collect `ρ_jk A_kj` by frequency `ω_kj`, summing terms whose frequencies
/// agree within [`GROUPING_TOL`] and dropping vanishing modes.
pub fn force_decomposition(sys: &DiscreteSpectrumSystem) -> ForceSignal {
    let rho = sys.rho.matrix();
    let a = sys.observable.matrix();
    let n = sys.dim();
    let mut terms = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let w = (sys.levels[k] - sys.levels[j]) / sys.hbar;
            terms.push((w, rho[(j, k)] * a[(k, j)]));
        }
    }
    terms.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut modes = Vec::new();
    let mut i = 0;
    while i < terms.len() {
        let mut end = i + 1;
        while end < terms.len() && terms[end].0 - terms[end - 1].0 <= GROUPING_TOL {
            end += 1;
        }
        let group = &terms[i..end];
        let amplitude: Complex64 = group.iter().map(|t| t.1).sum();
        let omega = group.iter().map(|t| t.0).sum::<f64>() / group.len() as f64;
        if amplitude.norm() > AMPLITUDE_FLOOR {
            modes.push(ForceMode { omega, amplitude });
        }
        i = end;
    }
    ForceSignal { modes }
}

/// Mass and damping of the probe `m q̈ + c q̇ + m ω² q = F(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    mass: f64,
    damping: f64,
}

impl OscillatorParams {
    /// `damping` may be zero; responses then fail at exact resonance.
    pub fn new(mass: f64, damping: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(invalid("mass", "must be positive"));
        }
        if !(damping >= 0.0 && damping.is_finite()) {
            return Err(invalid("damping", "must be nonnegative"));
        }
        Ok(Self { mass, damping })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    fn denominator(&self, omega: f64, omega_l: f64) -> Result<Complex64> {
        let d = Complex64::new(
            self.mass * (omega * omega - omega_l * omega_l),
            self.damping * omega_l,
        );
        if d.norm() == 0.0 {
            return Err(Error::ResonanceSingularity { omega_l });
        }
        Ok(d)
    }
}

fn check_probe_frequency(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid("omega", "must be positive"));
    }
    Ok(())
}

/// `q_l = F_l / (m(ω² - ω_l²) + i c ω_l)` for every mode.
pub fn steady_state_amplitudes(
    force: &ForceSignal,
    osc: &OscillatorParams,
    omega: f64,
) -> Result<Vec<(f64, Complex64)>> {
    check_probe_frequency(omega)?;
    force
        .modes
        .iter()
        .map(|m| Ok((m.omega, m.amplitude / osc.denominator(omega, m.omega)?)))
        .collect()
}

/// Steady-state displacement and velocity `(q(t), q̇(t))` of the probe tuned
/// to `omega`.
pub fn steady_state_motion(
    force: &ForceSignal,
    osc: &OscillatorParams,
    omega: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let amps = steady_state_amplitudes(force, osc, omega)?;
    let mut q = Complex64::new(0.0, 0.0);
    let mut v = Complex64::new(0.0, 0.0);
    for (w, a) in amps {
        let z = a * Complex64::from_polar(1.0, w * t);
        q += z;
        v += z * Complex64::new(0.0, w);
    }
    Ok((q.re, v.re))
}

/// Frequency grid and the mean-energy response at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScan {
    omegas: Vec<f64>,
    response: Vec<f64>,
}

impl ResonanceScan {
    pub fn new(omegas: Vec<f64>, response: Vec<f64>) -> Result<Self> {
        check_scan_grid(&omegas)?;
        if response.len() != omegas.len() {
            return Err(Error::DimensionMismatch {
                expected: omegas.len(),
                found: response.len(),
            });
        }
        if response.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(invalid("response", "must be finite and nonnegative"));
        }
        Ok(Self { omegas, response })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

fn check_scan_grid(omegas: &[f64]) -> Result<()> {
    if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(invalid("omegas", "must be finite and positive"));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("omegas", "must be strictly ascending"));
    }
    Ok(())
}

/// Uniform grid `start, start + step, ...` up to `stop` inclusive (within
/// half a step).
pub fn frequency_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start > 0.0 && stop >= start && stop.is_finite()) {
        return Err(invalid("grid", "needs 0 < start <= stop and step > 0"));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

/// `a(ω) = Σ_l |F_l|² / (m²(ω² - ω_l²)² + c² ω_l²)` over the non-constant
/// modes.
pub fn mean_energy_scan(
    force: &ForceSignal,
    osc: &OscillatorParams,
    omegas: &[f64],
) -> Result<ResonanceScan> {
    check_scan_grid(omegas)?;
    let modes: Vec<ForceMode> = force
        .modes
        .iter()
        .copied()
        .filter(|m| m.omega.abs() > GROUPING_TOL)
        .collect();
    let response = omegas
        .par_iter()
        .map(|&w| {
            modes.iter().try_fold(0.0, |acc, m| {
                let d = osc.denominator(w, m.omega)?;
                Ok(acc + m.amplitude.norm_sqr() / d.norm_sqr())
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ResonanceScan {
        omegas: omegas.to_vec(),
        response,
    })
}

/// Local maxima of the scan, refined by a parabola through the three
/// samples around each, keeping those whose height exceeds the higher
/// neighbouring valley by at least `prominence`.
pub fn recover_spectrum(scan: &ResonanceScan, prominence: f64) -> Vec<f64> {
    let r = &scan.response;
    let w = &scan.omegas;
    let n = r.len();
    if n < 3 {
        return Vec::new();
    }
    // a plateau counts once, at its left end
    let peaks: Vec<usize> = (1..n - 1)
        .filter(|&i| {
            if !(r[i] > r[i - 1]) {
                return false;
            }
            let mut j = i + 1;
            while j < n && r[j] == r[i] {
                j += 1;
            }
            j < n && r[j] < r[i]
        })
        .collect();

    let mut out = Vec::new();
    for (p, &i) in peaks.iter().enumerate() {
        let left_start = if p == 0 { 0 } else { peaks[p - 1] };
        let right_end = if p + 1 == peaks.len() {
            n - 1
        } else {
            peaks[p + 1]
        };
        let left = r[left_start..=i]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let right = r[i..=right_end]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if r[i] - left.max(right) < prominence {
            continue;
        }
        out.push(parabola_vertex(
            (w[i - 1], r[i - 1]),
            (w[i], r[i]),
            (w[i + 1], r[i + 1]),
        ));
    }
    out
}

fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature >= 0.0 {
        return x1;
    }
    // y = y1 + d01 (x - x1) + curvature (x - x0)(x - x1)
    let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    vertex.clamp(x0, x2)
}
