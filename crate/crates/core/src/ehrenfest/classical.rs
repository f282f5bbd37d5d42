use super::quantum::check_time_grid;
use super::{CubicInterpolant, GridSystem};
use crate::error::{invalid, Error, Result};

/// Solution of `m q̈ = -V'(q)` sampled on the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `p²/2m + V(q)`, with `V` the antiderivative of the interpolated
    /// gradient (the potential whose force the integrator actually uses).
    pub energy: Vec<f64>,
}

impl ClassicalTrajectory {
    /// Largest `|E(t) - E(0)| / max(|E(0)|, 1e-300)`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let scale = e0.abs().max(1e-300);
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

struct Field {
    grad: CubicInterpolant,
    v0: f64,
    mass: f64,
}

impl Field {
    fn potential(&self, q: f64) -> f64 {
        self.v0 + self.grad.integral(q)
    }

    fn rhs(&self, q: f64, p: f64) -> (f64, f64) {
        (p / self.mass, -self.grad.eval(q))
    }

    fn rk4(&self, q: f64, p: f64, dt: f64) -> (f64, f64) {
        let (k1q, k1p) = self.rhs(q, p);
        let (k2q, k2p) = self.rhs(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p);
        let (k3q, k3p) = self.rhs(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p);
        let (k4q, k4p) = self.rhs(q + dt * k3q, p + dt * k3p);
        (
            q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
            p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        )
    }
}

/// Fixed-step RK4 with step at most `min Δt / 16`, starting from `(q0, p0)`
/// at `t_grid[0]`.
pub fn classical_trajectory(
    sys: &GridSystem,
    q0: f64,
    p0: f64,
    t_grid: &[f64],
) -> Result<ClassicalTrajectory> {
    check_time_grid(t_grid)?;
    if !(q0 >= sys.x_min && q0 <= sys.x_max) {
        return Err(invalid("q0", "must lie inside the grid"));
    }
    let field = Field {
        grad: sys.gradient(),
        v0: sys.potential[0],
        mass: sys.mass,
    };
    let min_dt = t_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let max_step = min_dt / 16.0;

    let energy = |q: f64, p: f64| p * p / (2.0 * sys.mass) + field.potential(q);
    let mut out = ClassicalTrajectory {
        times: t_grid.to_vec(),
        q: vec![q0],
        p: vec![p0],
        energy: vec![energy(q0, p0)],
    };
    let (mut q, mut p) = (q0, p0);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / max_step).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        for s in 0..steps {
            (q, p) = field.rk4(q, p, dt);
            if !(q >= sys.x_min && q <= sys.x_max) {
                return Err(Error::TrajectoryExited {
                    time: w[0] + (s + 1) as f64 * dt,
                });
            }
        }
        out.q.push(q);
        out.p.push(p);
        out.energy.push(energy(q, p));
    }
    Ok(out)
}
