//! Per-experiment parameter schemas and runs.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{deserialize_at, Experiment, ExperimentConfig};
use super::{Artifacts, RunError};
use crate::born_emergence::{
    born_run, born_statistics, pointer_trajectory, small_universe_diagnostics, validate_qubit,
    EnvironmentTrajectoryModel, PointerTrajectory, QubitState, SmallUniverse,
};
use crate::detectors::{
    boltzmann_occupancy, bucket_count, double_well_ensemble, dual_error_ledger, occupancy,
    stern_gerlach_replicates, summarize, DoubleWellParams, MeasurementRecord,
};
use crate::ehrenfest::{
    classical_trajectory, classicality_deviation, gaussian_packet, GridPropagator, GridSystem,
};
use crate::error::Error;
use crate::quantum_core::{
    q_expectation, unitary, DensityOperator, HermitianOperator, OperatorDoc, PureState,
};
use crate::rng::{derive_seed, substream};
use crate::spectral_probe::{
    force_decomposition, frequency_grid, mean_energy_scan, recover_spectrum,
    DiscreteSpectrumSystem, OscillatorParams,
};
use crate::stats::{linear_fit, mean_std};

/// Engine-side validation failures are config errors naming the parameter.
fn config_err(e: Error) -> RunError {
    match e {
        Error::InvalidParameter { name, reason } => {
            RunError::config(format!("parameters.{name}"), reason)
        }
        other => RunError::config("parameters", other.to_string()),
    }
}

fn check(cond: bool, key: &str, message: &str) -> Result<(), RunError> {
    if cond {
        Ok(())
    } else {
        Err(RunError::config(format!("parameters.{key}"), message))
    }
}

pub(crate) enum Prepared {
    Ehrenfest(Box<EhrenfestRun>),
    Spectrum(Box<SpectrumRun>),
    Born(Box<BornRun>),
    BornUniverse(Box<UniverseRun>),
    Ledger(Box<LedgerRun>),
    Bucket(BucketParams),
    DoubleWell(DoubleWellRun),
    SternGerlach(SgParams),
}

pub(crate) fn prepare(config: &ExperimentConfig) -> Result<Prepared, RunError> {
    let params = Value::Object(config.parameters.clone());
    Ok(match config.experiment {
        Experiment::Ehrenfest => Prepared::Ehrenfest(Box::new(EhrenfestRun::new(deserialize_at(
            params,
            "parameters",
        )?)?)),
        Experiment::Spectrum => Prepared::Spectrum(Box::new(SpectrumRun::new(deserialize_at(
            params,
            "parameters",
        )?)?)),
        Experiment::Born => Prepared::Born(Box::new(BornRun::new(deserialize_at(
            params,
            "parameters",
        )?)?)),
        Experiment::BornUniverse => Prepared::BornUniverse(Box::new(UniverseRun::new(
            deserialize_at(params, "parameters")?,
        )?)),
        Experiment::DetectorsLedger => Prepared::Ledger(Box::new(LedgerRun::new(deserialize_at(
            params,
            "parameters",
        )?)?)),
        Experiment::DetectorsBucket => {
            let p: BucketParams = deserialize_at(params, "parameters")?;
            p.validate()?;
            Prepared::Bucket(p)
        }
        Experiment::DetectorsDoublewell => {
            Prepared::DoubleWell(DoubleWellRun::new(deserialize_at(params, "parameters")?)?)
        }
        Experiment::DetectorsSg => {
            let p: SgParams = deserialize_at(params, "parameters")?;
            p.validate()?;
            Prepared::SternGerlach(p)
        }
    })
}

impl Prepared {
    /// The fully defaulted parameter block.
    pub(crate) fn echo(&self) -> Value {
        let v = match self {
            Prepared::Ehrenfest(r) => serde_json::to_value(&r.params),
            Prepared::Spectrum(r) => serde_json::to_value(&r.params),
            Prepared::Born(r) => serde_json::to_value(&r.params),
            Prepared::BornUniverse(r) => serde_json::to_value(&r.params),
            Prepared::Ledger(r) => serde_json::to_value(&r.params),
            Prepared::Bucket(p) => serde_json::to_value(p),
            Prepared::DoubleWell(r) => serde_json::to_value(&r.params),
            Prepared::SternGerlach(p) => serde_json::to_value(p),
        };
        v.expect("parameter structs serialize")
    }

    pub(crate) fn execute(
        &self,
        seed: u64,
        debug_dump: bool,
        out: &mut Artifacts,
    ) -> Result<(), RunError> {
        match self {
            Prepared::Ehrenfest(r) => r.execute(out),
            Prepared::Spectrum(r) => r.execute(out),
            Prepared::Born(r) => r.execute(seed, debug_dump, out),
            Prepared::BornUniverse(r) => r.execute(seed, out),
            Prepared::Ledger(r) => r.execute(out),
            Prepared::Bucket(p) => p.execute(seed, out),
            Prepared::DoubleWell(r) => r.execute(seed, out),
            Prepared::SternGerlach(p) => p.execute(seed, out),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------- ehrenfest

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum PotentialKind {
    /// `½ m ω² x²`
    Harmonic,
    /// `λ x⁴`
    Quartic,
    /// Explicit samples in `potential_values`.
    Samples,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct EhrenfestParams {
    potential: PotentialKind,
    omega: f64,
    quartic_coefficient: f64,
    potential_values: Option<Vec<f64>>,
    n_points: usize,
    x_min: f64,
    x_max: f64,
    mass: f64,
    hbar: f64,
    q0: f64,
    p0: f64,
    sigma: f64,
    t_end: f64,
    n_times: usize,
    /// `sup |V'''|`; derived for the built-in potentials when omitted.
    third_derivative_bound: Option<f64>,
}

impl Default for EhrenfestParams {
    fn default() -> Self {
        Self {
            potential: PotentialKind::Harmonic,
            omega: 1.0,
            quartic_coefficient: 1.0,
            potential_values: None,
            n_points: 1200,
            x_min: -5.0,
            x_max: 5.0,
            mass: 1.0,
            hbar: 1.0,
            q0: 0.5,
            p0: 0.0,
            sigma: FRAC_1_SQRT_2,
            t_end: 20.0 * PI,
            n_times: 2000,
            third_derivative_bound: None,
        }
    }
}

pub(crate) struct EhrenfestRun {
    params: EhrenfestParams,
    sys: GridSystem,
    psi: PureState,
    times: Vec<f64>,
    bound: f64,
}

impl EhrenfestRun {
    fn new(params: EhrenfestParams) -> Result<Self, RunError> {
        let p = &params;
        check(p.n_times >= 2, "n_times", "must be at least 2")?;
        check(
            p.t_end > 0.0 && p.t_end.is_finite(),
            "t_end",
            "must be positive",
        )?;
        check(
            p.n_points <= 4000,
            "n_points",
            "at most 4000 grid points are supported",
        )?;
        let reach = p.x_min.abs().max(p.x_max.abs());
        let (sys, bound) = match p.potential {
            PotentialKind::Harmonic => {
                check(
                    p.potential_values.is_none(),
                    "potential_values",
                    "only used with potential = samples",
                )?;
                let k = p.mass * p.omega * p.omega;
                let sys = GridSystem::from_fn(p.n_points, p.x_min, p.x_max, p.mass, p.hbar, |x| {
                    0.5 * k * x * x
                });
                (sys, p.third_derivative_bound.unwrap_or(0.0))
            }
            PotentialKind::Quartic => {
                check(
                    p.potential_values.is_none(),
                    "potential_values",
                    "only used with potential = samples",
                )?;
                let l = p.quartic_coefficient;
                let sys = GridSystem::from_fn(p.n_points, p.x_min, p.x_max, p.mass, p.hbar, |x| {
                    l * x.powi(4)
                });
                (
                    sys,
                    p.third_derivative_bound.unwrap_or(24.0 * l.abs() * reach),
                )
            }
            PotentialKind::Samples => {
                let values = p.potential_values.clone().ok_or_else(|| {
                    RunError::config(
                        "parameters.potential_values",
                        "required with potential = samples",
                    )
                })?;
                let bound = p.third_derivative_bound.ok_or_else(|| {
                    RunError::config(
                        "parameters.third_derivative_bound",
                        "required with potential = samples",
                    )
                })?;
                (
                    GridSystem::new(p.n_points, p.x_min, p.x_max, p.mass, p.hbar, values),
                    bound,
                )
            }
        };
        let sys = sys.map_err(config_err)?;
        check(
            bound >= 0.0 && bound.is_finite(),
            "third_derivative_bound",
            "must be nonnegative",
        )?;
        let psi = gaussian_packet(&sys, p.q0, p.p0, p.sigma).map_err(config_err)?;
        let n = p.n_times;
        let times = (0..n)
            .map(|i| p.t_end * i as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            params,
            sys,
            psi,
            times,
            bound,
        })
    }

    fn execute(&self, out: &mut Artifacts) -> Result<(), RunError> {
        let prop = GridPropagator::new(&self.sys)?;
        let tr = prop.trajectory(&self.psi, &self.times)?;
        let dev = classicality_deviation(&tr, &self.sys, self.bound)?;
        let n = tr.len();
        let rows = (0..n).map(|i| {
            let interior = i > 0 && i + 1 < n;
            format!(
                "{},{},{},{},{},{},{}",
                tr.times[i],
                tr.q_mean[i],
                tr.p_mean[i],
                tr.sigma_q[i],
                tr.sigma_p[i],
                opt(interior.then(|| dev.residual[i - 1])),
                opt(interior.then(|| dev.bound[i - 1])),
            )
        });
        out.csv(
            "trajectory.csv",
            "t,q_mean,p_mean,sigma_q,sigma_p,residual,bound",
            rows,
        )?;

        let classical =
            match classical_trajectory(&self.sys, tr.q_mean[0], tr.p_mean[0], &self.times) {
                Ok(c) => Some(
                    c.q.iter()
                        .zip(&tr.q_mean)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                ),
                Err(Error::TrajectoryExited { time }) => {
                    out.warn(format!("classical trajectory left the grid at t = {time}"));
                    None
                }
                Err(e) => return Err(e.into()),
            };
        if tr.boundary_contact {
            out.warn(
                "wave packet reached the boundary region; expectations are contaminated".into(),
            );
        }
        out.json(
            "summary.json",
            &serde_json::json!({
                "boundary_contact": tr.boundary_contact,
                "norm_error": tr.norm_error,
                "ehrenfest_error": tr.ehrenfest_error,
                "min_uncertainty_product": tr.min_uncertainty_product(),
                "max_classical_deviation": classical,
                "max_residual": dev.max_residual(),
                "worst_excess": dev.worst_excess(),
                "third_derivative_bound": self.bound,
            }),
        )
    }
}

// ----------------------------------------------------------------- spectrum

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct SpectrumParams {
    levels: Vec<f64>,
    hbar: f64,
    /// Real amplitudes of a pure state in the energy basis, normalized on
    /// load. Exclusive with `rho`.
    psi: Option<Vec<f64>>,
    rho: Option<OperatorDoc>,
    /// Defaults to ones off the diagonal.
    observable: Option<OperatorDoc>,
    mass: f64,
    damping: f64,
    omega_min: f64,
    omega_max: f64,
    omega_step: f64,
    prominence: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            levels: vec![0.0, 1.0, 2.5],
            hbar: 1.0,
            psi: None,
            rho: None,
            observable: None,
            mass: 1.0,
            damping: 0.02,
            omega_min: 0.1,
            omega_max: 3.5,
            omega_step: 0.002,
            prominence: 1.0,
        }
    }
}

pub(crate) struct SpectrumRun {
    params: SpectrumParams,
    sys: DiscreteSpectrumSystem,
    osc: OscillatorParams,
    grid: Vec<f64>,
}

impl SpectrumRun {
    fn new(params: SpectrumParams) -> Result<Self, RunError> {
        let n = params.levels.len();
        check(n >= 1, "levels", "must not be empty")?;
        let rho = match (&params.psi, &params.rho) {
            (Some(_), Some(_)) => {
                return Err(RunError::config(
                    "parameters.rho",
                    "give either psi or rho, not both",
                ))
            }
            (Some(psi), None) => {
                check(psi.len() == n, "psi", "needs one amplitude per level")?;
                let v: Vec<Complex64> = psi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                PureState::normalized(nalgebra::DVector::from_vec(v))
                    .map_err(|e| RunError::config("parameters.psi", e.to_string()))?
                    .density()
            }
            (None, Some(doc)) => DensityOperator::try_from(doc.clone())
                .map_err(|e| RunError::config("parameters.rho", e.to_string()))?,
            (None, None) => {
                let v = vec![Complex64::new(1.0, 0.0); n];
                PureState::normalized(nalgebra::DVector::from_vec(v))
                    .map_err(config_err)?
                    .density()
            }
        };
        let observable = match &params.observable {
            Some(doc) => HermitianOperator::try_from(doc.clone())
                .map_err(|e| RunError::config("parameters.observable", e.to_string()))?,
            None => HermitianOperator::from_real(nalgebra::DMatrix::from_fn(n, n, |j, k| {
                if j == k {
                    0.0
                } else {
                    1.0
                }
            }))
            .map_err(config_err)?,
        };
        let sys = DiscreteSpectrumSystem::new(params.levels.clone(), rho, observable, params.hbar)
            .map_err(config_err)?;
        let osc = OscillatorParams::new(params.mass, params.damping).map_err(config_err)?;
        check(
            params.prominence >= 0.0,
            "prominence",
            "must be nonnegative",
        )?;
        check(
            params.omega_step > 0.0
                && (params.omega_max - params.omega_min) / params.omega_step <= 1e7,
            "omega_step",
            "must be positive and give at most 1e7 grid points",
        )?;
        let grid = frequency_grid(params.omega_min, params.omega_max, params.omega_step)
            .map_err(|e| RunError::config("parameters.omega_min", e.to_string()))?;
        Ok(Self {
            params,
            sys,
            osc,
            grid,
        })
    }

    fn execute(&self, out: &mut Artifacts) -> Result<(), RunError> {
        let force = force_decomposition(&self.sys);
        let scan = mean_energy_scan(&force, &self.osc, &self.grid)?;
        out.csv(
            "scan.csv",
            "omega,response",
            scan.omegas()
                .iter()
                .zip(scan.response())
                .map(|(w, r)| format!("{w},{r}")),
        )?;
        let peaks = recover_spectrum(&scan, self.params.prominence);
        out.json("peaks.json", &peaks)
    }
}

// --------------------------------------------------------------------- born

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct BornParams {
    p: f64,
    alpha_re: f64,
    alpha_im: f64,
    n_runs: u64,
    threshold: f64,
    growth_rate: f64,
    noise_scale: f64,
    noise_decay: f64,
    coherence_scale: f64,
    horizon: f64,
    n_steps: usize,
    /// Runs written out with `--debug-dump`.
    debug_runs: u64,
}

impl Default for BornParams {
    fn default() -> Self {
        let m = EnvironmentTrajectoryModel::default();
        Self {
            p: 0.5,
            alpha_re: 0.0,
            alpha_im: 0.0,
            n_runs: 10_000,
            threshold: 1.0,
            growth_rate: m.growth_rate,
            noise_scale: m.noise_scale,
            noise_decay: m.noise_decay,
            coherence_scale: m.coherence_scale,
            horizon: m.horizon,
            n_steps: m.n_steps,
            debug_runs: 10,
        }
    }
}

fn qubit_from(p: f64, re: f64, im: f64) -> Result<QubitState, RunError> {
    check((0.0..=1.0).contains(&p), "p", "must lie in [0, 1]")?;
    validate_qubit(p, Complex64::new(re, im))
        .map_err(|e| RunError::config("parameters.alpha_re", e.to_string()))
}

fn pointer_rows(traj: &PointerTrajectory) -> impl Iterator<Item = String> + '_ {
    (0..traj.len()).map(move |i| {
        format!(
            "{},{},{},{},{}",
            traj.times[i], traj.xbar[i], traj.u_hat[i], traj.v_hat[i].re, traj.v_hat[i].im
        )
    })
}

const POINTER_HEADER: &str = "t,xbar,u_hat,v_re,v_im";

pub(crate) struct BornRun {
    params: BornParams,
    qubit: QubitState,
    model: EnvironmentTrajectoryModel,
}

impl BornRun {
    fn new(params: BornParams) -> Result<Self, RunError> {
        let qubit = qubit_from(params.p, params.alpha_re, params.alpha_im)?;
        let model = EnvironmentTrajectoryModel {
            growth_rate: params.growth_rate,
            noise_scale: params.noise_scale,
            noise_decay: params.noise_decay,
            coherence_scale: params.coherence_scale,
            horizon: params.horizon,
            n_steps: params.n_steps,
        };
        model.validate().map_err(config_err)?;
        check(params.n_runs >= 1, "n_runs", "must be at least 1")?;
        check(params.threshold > 0.0, "threshold", "must be positive")?;
        Ok(Self {
            params,
            qubit,
            model,
        })
    }

    fn execute(&self, seed: u64, debug_dump: bool, out: &mut Artifacts) -> Result<(), RunError> {
        let p = &self.params;
        let tally = born_statistics(&self.qubit, &self.model, p.n_runs, p.threshold, seed)?;
        if let Some(w) = tally.warning() {
            out.warn(w);
        }
        let (ks, _) = tally.u_uniformity();
        out.json(
            "tally.json",
            &serde_json::json!({
                "p": p.p,
                "alpha_re": p.alpha_re,
                "alpha_im": p.alpha_im,
                "n_plus": tally.n_plus,
                "n_minus": tally.n_minus,
                "n_undecided": tally.n_undecided,
                "u_ks_statistic": ks,
            }),
        )?;
        if debug_dump {
            for i in 0..p.debug_runs.min(p.n_runs) {
                let (_, traj, _) = born_run(&self.qubit, &self.model, p.threshold, seed, i)?;
                out.csv(
                    &format!("runs/run_{i:05}.csv"),
                    POINTER_HEADER,
                    pointer_rows(&traj),
                )?;
            }
        }
        Ok(())
    }
}

// ------------------------------------------------------------ born-universe

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct UniverseParams {
    dim_env: usize,
    coupling: f64,
    hbar: f64,
    p: f64,
    alpha_re: f64,
    alpha_im: f64,
    t_end: f64,
    n_times: usize,
}

impl Default for UniverseParams {
    fn default() -> Self {
        Self {
            dim_env: 8,
            coupling: 0.5,
            hbar: 1.0,
            p: 0.5,
            alpha_re: 0.0,
            alpha_im: 0.0,
            t_end: 20.0,
            n_times: 200,
        }
    }
}

pub(crate) struct UniverseRun {
    params: UniverseParams,
    qubit: QubitState,
}

impl UniverseRun {
    fn new(params: UniverseParams) -> Result<Self, RunError> {
        let qubit = qubit_from(params.p, params.alpha_re, params.alpha_im)?;
        check(
            params.dim_env >= 2 && params.dim_env <= 128,
            "dim_env",
            "must lie in 2..=128",
        )?;
        check(params.coupling.is_finite(), "coupling", "must be finite")?;
        check(
            params.hbar > 0.0 && params.hbar.is_finite(),
            "hbar",
            "must be positive",
        )?;
        check(
            params.t_end > 0.0 && params.t_end.is_finite(),
            "t_end",
            "must be positive",
        )?;
        check(params.n_times >= 1, "n_times", "must be at least 1")?;
        Ok(Self { params, qubit })
    }

    fn execute(&self, seed: u64, out: &mut Artifacts) -> Result<(), RunError> {
        let p = &self.params;
        let mut rng = substream(derive_seed(seed, "universe"), 0);
        let universe = SmallUniverse::random(p.dim_env, p.coupling, p.hbar, &mut rng)?;
        let times: Vec<f64> = (1..=p.n_times)
            .map(|i| p.t_end * i as f64 / p.n_times as f64)
            .collect();
        let env = small_universe_diagnostics(&universe, &times)?;
        let traj = pointer_trajectory(&self.qubit, &env);
        out.csv("pointer.csv", POINTER_HEADER, pointer_rows(&traj))?;

        let rho0 = universe.initial_state(&self.qubit.density())?;
        let x = universe.pointer_observable();
        let mut worst = 0.0f64;
        for (i, &t) in times.iter().enumerate() {
            let u = unitary(universe.hamiltonian(), t, p.hbar)?;
            let heis = u.adjoint() * x.matrix() * &u;
            let direct = (rho0.matrix() * heis).trace().re;
            worst = worst.max((direct - traj.xbar[i]).abs());
        }
        let tr_env = q_expectation(universe.rho_env(), universe.x_env())?;
        out.json(
            "consistency.json",
            &serde_json::json!({
                "max_deviation_from_full_universe": worst,
                "initial_pointer_value": tr_env,
            }),
        )
    }
}

// ------------------------------------------------------------------- ledger

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct LedgerParams {
    values: Vec<f64>,
    counts: Vec<u64>,
    /// Defaults to the first basis state.
    rho: Option<OperatorDoc>,
    observable: OperatorDoc,
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self {
            values: vec![6.57, 6.58],
            counts: vec![20, 80],
            rho: None,
            observable: OperatorDoc {
                dim: 2,
                re: vec![vec![6.578, 0.004], vec![0.004, 6.572]],
                im: Vec::new(),
            },
        }
    }
}

pub(crate) struct LedgerRun {
    params: LedgerParams,
    record: MeasurementRecord,
    rho: DensityOperator,
    observable: HermitianOperator,
}

impl LedgerRun {
    fn new(params: LedgerParams) -> Result<Self, RunError> {
        let record = MeasurementRecord::new(params.values.clone(), params.counts.clone())
            .map_err(|e| RunError::config("parameters.values", e.to_string()))?;
        check(
            record.total() <= 10_000_000,
            "counts",
            "at most 1e7 observations",
        )?;
        let observable = HermitianOperator::try_from(params.observable.clone())
            .map_err(|e| RunError::config("parameters.observable", e.to_string()))?;
        let rho = match &params.rho {
            Some(doc) => DensityOperator::try_from(doc.clone())
                .map_err(|e| RunError::config("parameters.rho", e.to_string()))?,
            None => DensityOperator::basis(observable.dim(), 0),
        };
        check(
            rho.dim() == observable.dim(),
            "rho",
            "dimension differs from the observable",
        )?;
        Ok(Self {
            params,
            record,
            rho,
            observable,
        })
    }

    fn execute(&self, out: &mut Artifacts) -> Result<(), RunError> {
        let obs: Vec<f64> = self
            .record
            .values()
            .iter()
            .zip(self.record.counts())
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c as usize))
            .collect();
        let ledger = dual_error_ledger(&obs, &self.rho, &self.observable)?;
        out.csv(
            "ledger.csv",
            "observation,thermal_error,born_error",
            (0..obs.len()).map(|i| {
                format!(
                    "{},{},{}",
                    obs[i], ledger.thermal_errors[i], ledger.born_errors[i]
                )
            }),
        )?;
        let s = summarize(&self.record);
        out.json(
            "summary.json",
            &serde_json::json!({
                "mean": s.mean,
                "std": s.std,
                "std_error": s.std_error,
                "thermal_true_value": ledger.thermal_true_value,
                "born_eigenvalues": ledger.born_eigenvalues,
                "mean_thermal_error": ledger.mean_thermal_error(),
                "mean_born_error": ledger.mean_born_error(),
            }),
        )
    }
}

// ------------------------------------------------------------------- bucket

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct BucketParams {
    flow_rate: f64,
    duration: f64,
    bucket_size: f64,
    replicates: u64,
}

impl Default for BucketParams {
    fn default() -> Self {
        Self {
            flow_rate: 100.0,
            duration: 100.0,
            bucket_size: 1.0,
            replicates: 1000,
        }
    }
}

impl BucketParams {
    fn validate(&self) -> Result<(), RunError> {
        check(
            self.replicates >= 1 && self.replicates <= 10_000_000,
            "replicates",
            "must lie in 1..=1e7",
        )?;
        bucket_count(self.flow_rate, self.duration, self.bucket_size, 0).map_err(|e| match e {
            Error::CountOverflow { .. } => RunError::config("parameters.flow_rate", e.to_string()),
            other => config_err(other),
        })?;
        Ok(())
    }

    fn execute(&self, seed: u64, out: &mut Artifacts) -> Result<(), RunError> {
        let base = derive_seed(seed, "bucket");
        let readings = (0..self.replicates)
            .map(|i| {
                bucket_count(
                    self.flow_rate,
                    self.duration,
                    self.bucket_size,
                    base.wrapping_add(i),
                )
            })
            .collect::<crate::Result<Vec<_>>>()?;
        out.csv(
            "buckets.csv",
            "replicate,count,rate_estimate",
            readings
                .iter()
                .enumerate()
                .map(|(i, r)| format!("{i},{},{}", r.count, r.rate_estimate())),
        )?;
        let rates: Vec<f64> = readings.iter().map(|r| r.rate_estimate()).collect();
        let (m, sd) = mean_std(&rates);
        out.json(
            "summary.json",
            &serde_json::json!({
                "expected_count": self.flow_rate * self.duration / self.bucket_size,
                "resolution": self.bucket_size / self.duration,
                "mean_rate": m,
                "std_rate": sd,
                "relative_error_of_mean": (m - self.flow_rate).abs() / self.flow_rate,
            }),
        )
    }
}

// -------------------------------------------------------------- double well

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct DoubleWellConfig {
    barrier: f64,
    noise_temperature: f64,
    dt: f64,
    n_steps: usize,
    x0: f64,
    n_paths: usize,
    burn_in: usize,
    half_width: f64,
}

impl Default for DoubleWellConfig {
    fn default() -> Self {
        Self {
            barrier: 1.0,
            noise_temperature: 0.05,
            dt: 0.02,
            n_steps: 1000,
            x0: 0.0,
            n_paths: 1000,
            burn_in: 500,
            half_width: 0.3,
        }
    }
}

pub(crate) struct DoubleWellRun {
    params: DoubleWellConfig,
    model: DoubleWellParams,
}

impl DoubleWellRun {
    fn new(params: DoubleWellConfig) -> Result<Self, RunError> {
        let model = DoubleWellParams {
            barrier: params.barrier,
            noise_temperature: params.noise_temperature,
            dt: params.dt,
            n_steps: params.n_steps,
        };
        model.validate().map_err(config_err)?;
        check(params.n_paths >= 1, "n_paths", "must be at least 1")?;
        check(
            (params.n_paths as f64) * ((params.n_steps + params.burn_in) as f64) <= 1e9,
            "n_paths",
            "at most 1e9 steps in total",
        )?;
        check(
            params.x0.is_finite() && params.x0.abs() <= 10.0,
            "x0",
            "must lie in [-10, 10]",
        )?;
        check(
            params.half_width >= 0.0,
            "half_width",
            "must be nonnegative",
        )?;
        Ok(Self { params, model })
    }

    fn execute(&self, seed: u64, out: &mut Artifacts) -> Result<(), RunError> {
        let p = &self.params;
        let paths = double_well_ensemble(&self.model, p.x0, p.n_paths, p.burn_in, seed)?;
        out.csv(
            "path.csv",
            "step,x",
            paths[0]
                .iter()
                .enumerate()
                .map(|(i, x)| format!("{},{x}", p.burn_in + i + 1)),
        )?;
        let occ = occupancy(paths.iter().flatten(), p.half_width);
        let predicted = if self.model.noise_temperature > 0.0 {
            Some(boltzmann_occupancy(&self.model, p.half_width)?)
        } else {
            None
        };
        out.json(
            "occupancy.json",
            &serde_json::json!({
                "samples": p.n_paths * p.n_steps,
                "observed": occ,
                "boltzmann": predicted,
            }),
        )
    }
}

// ---------------------------------------------------------- stern-gerlach

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct SgParams {
    s_mean: f64,
    sizes: Vec<u64>,
    replicates: usize,
}

impl Default for SgParams {
    fn default() -> Self {
        Self {
            s_mean: 0.0,
            sizes: vec![100, 1000, 10_000],
            replicates: 200,
        }
    }
}

impl SgParams {
    fn validate(&self) -> Result<(), RunError> {
        check(
            (-1.0..=1.0).contains(&self.s_mean),
            "s_mean",
            "must lie in [-1, 1]",
        )?;
        check(!self.sizes.is_empty(), "sizes", "must not be empty")?;
        check(
            self.sizes.iter().all(|&n| n >= 1),
            "sizes",
            "must be positive",
        )?;
        check(self.replicates >= 1, "replicates", "must be at least 1")?;
        let total: f64 = self.sizes.iter().map(|&n| n as f64).sum::<f64>() * self.replicates as f64;
        check(
            total <= 1e10,
            "replicates",
            "at most 1e10 outcomes in total",
        )
    }

    fn execute(&self, seed: u64, out: &mut Artifacts) -> Result<(), RunError> {
        let mut rows = Vec::new();
        let mut stds = Vec::new();
        for &n in &self.sizes {
            let means = stern_gerlach_replicates(
                self.s_mean,
                n,
                self.replicates,
                derive_seed(seed, &format!("sg-{n}")),
            )?;
            for (r, m) in means.iter().enumerate() {
                rows.push(format!("{n},{r},{m}"));
            }
            stds.push(mean_std(&means).1);
        }
        out.csv("sweep.csv", "N,replicate,mean", rows)?;
        let slope = if self.sizes.len() >= 2 && stds.iter().all(|&s| s > 0.0) {
            let x: Vec<f64> = self.sizes.iter().map(|&n| (n as f64).ln()).collect();
            let y: Vec<f64> = stds.iter().map(|s| s.ln()).collect();
            Some(linear_fit(&x, &y).0)
        } else {
            None
        };
        let predicted: Vec<f64> = self
            .sizes
            .iter()
            .map(|&n| (1.0 - self.s_mean * self.s_mean).sqrt() / (n as f64).sqrt())
            .collect();
        out.json(
            "scaling.json",
            &serde_json::json!({
                "sizes": self.sizes,
                "std_of_means": stds,
                "predicted_std_of_mean": predicted,
                "log_log_slope": slope,
            }),
        )
    }
}
