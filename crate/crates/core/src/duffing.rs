//! Wave-excited Duffing oscillator
//!
//! ```text
//! m z'' = sum_i beta (zeta_i - alpha z) cos(w_i t + phi_i) - c1 z - c3 z^3 - b1 z' - b2 |z'| z'
//! ```
//!
//! and the five low-fidelity force models A-E that retain progressively fewer
//! of its linear terms. Whatever a model leaves out is the force correction
//! `delta = m z'' - f_low`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{dmatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{simulate, Corrector, FirstOrderSystem, IntegratorConfig, Kinematics};
use crate::trajectory::Trajectory;
use crate::wave::WaveRealization;

/// Seconds excluded from Duffing metrics while the zero-start response settles.
pub const TRANSIENT_CUTOFF: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub m: f64,
    pub c1: f64,
    pub c3: f64,
    pub b1: f64,
    pub b2: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl Default for DuffingParams {
    /// The configuration used throughout the experiments: cubic restoring is
    /// the only nonlinearity.
    fn default() -> Self {
        Self {
            m: 1.0,
            c1: 1.0,
            c3: 0.01,
            b1: 0.1,
            b2: 0.0,
            beta: 1.0,
            alpha: 0.0,
        }
    }
}

impl DuffingParams {
    pub fn linear(m: f64, c1: f64, b1: f64, beta: f64) -> Self {
        Self {
            m,
            c1,
            c3: 0.0,
            b1,
            b2: 0.0,
            beta,
            alpha: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m, self.c1, self.c3, self.b1, self.b2, self.beta, self.alpha];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(Error::Config("Duffing coefficients must be finite".into()));
        }
        if !(self.m > 0.0) {
            return Err(Error::Config(format!("mass must be > 0, got {}", self.m)));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::Config(format!("c1 must be > 0, got {}", self.c1)));
        }
        if !(self.b1 >= 0.0) {
            return Err(Error::Config(format!("b1 must be >= 0, got {}", self.b1)));
        }
        Ok(())
    }
}

/// Low-fidelity force model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForcingModelId {
    A,
    B,
    C,
    D,
    E,
}

impl ForcingModelId {
    pub const ALL: [ForcingModelId; 5] = [Self::A, Self::B, Self::C, Self::D, Self::E];

    pub fn keeps_excitation(self) -> bool {
        matches!(self, Self::A | Self::D)
    }

    pub fn keeps_damping(self) -> bool {
        matches!(self, Self::A | Self::B)
    }

    pub fn keeps_restoring(self) -> bool {
        matches!(self, Self::A | Self::B | Self::C | Self::D)
    }
}

impl fmt::Display for ForcingModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
            Self::D => "D",
            Self::E => "E",
        };
        f.write_str(s)
    }
}

impl FromStr for ForcingModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Self::A),
            "B" => Ok(Self::B),
            "C" => Ok(Self::C),
            "D" => Ok(Self::D),
            "E" => Ok(Self::E),
            other => Err(Error::Config(format!("unknown forcing model {other:?}"))),
        }
    }
}

/// `beta * sum zeta_i cos(w_i t + phi_i)`.
pub fn linear_excitation(params: &DuffingParams, waves: &WaveRealization, t: f64) -> f64 {
    params.beta * waves.elevation(t)
}

/// Low-fidelity force for the given model at state `(z, zdot)`.
pub fn eval_low_fidelity_force(
    id: ForcingModelId,
    params: &DuffingParams,
    z: f64,
    zdot: f64,
    waves: &WaveRealization,
    t: f64,
) -> f64 {
    let mut f = 0.0;
    if id.keeps_excitation() {
        f += linear_excitation(params, waves, t);
    }
    if id.keeps_restoring() {
        f -= params.c1 * z;
    }
    if id.keeps_damping() {
        f -= params.b1 * zdot;
    }
    f
}

fn system(
    params: &DuffingParams,
    waves: &WaveRealization,
    damping: f64,
    stiffness: f64,
    excitation: bool,
) -> Result<FirstOrderSystem> {
    params.validate()?;
    let waves = Arc::new(waves.clone());
    let mut sys = FirstOrderSystem::new(
        vec!["z".into()],
        dmatrix![params.m],
        dmatrix![damping],
        dmatrix![stiffness],
        Kinematics::Inertial,
    )?;
    let eta_waves = Arc::clone(&waves);
    sys = sys.with_elevation(Arc::new(move |t| eta_waves.elevation(t)));
    if excitation {
        let beta = params.beta;
        sys = sys.with_excitation(Arc::new(move |t| DVector::from_element(1, beta * waves.elevation(t))));
    }
    Ok(sys)
}

/// The full nonlinear equation as a first-order system.
pub fn high_fidelity_system(params: &DuffingParams, waves: &WaveRealization) -> Result<FirstOrderSystem> {
    let p = *params;
    let sys = system(params, waves, p.b1, p.c1, true)?;
    let shared = Arc::new(waves.clone());
    Ok(sys.with_nonlinear(Arc::new(move |t, pos, vel| {
        let (z, zd) = (pos[0], vel[0]);
        let mut f = -p.c3 * z * z * z - p.b2 * zd.abs() * zd;
        if p.alpha != 0.0 {
            f -= p.beta * p.alpha * z * shared.unit_cosine_sum(t);
        }
        DVector::from_element(1, f)
    })))
}

/// The linear system kept by a low-fidelity model.
pub fn low_fidelity_system(id: ForcingModelId, params: &DuffingParams, waves: &WaveRealization) -> Result<FirstOrderSystem> {
    system(
        params,
        waves,
        if id.keeps_damping() { params.b1 } else { 0.0 },
        if id.keeps_restoring() { params.c1 } else { 0.0 },
        id.keeps_excitation(),
    )
}

fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    if !(duration >= dt) {
        return Err(Error::Config(format!("duration {duration} shorter than dt {dt}")));
    }
    Ok((duration / dt).round() as usize)
}

/// Reference response from rest, integrated with BDF2 and the full force.
pub fn solve_high_fidelity(params: &DuffingParams, waves: &WaveRealization, duration: f64, dt: f64) -> Result<Trajectory> {
    let steps = step_count(duration, dt)?;
    let sys = high_fidelity_system(params, waves)?;
    let mut traj = simulate(&sys, &DVector::zeros(2), 0.0, steps, &IntegratorConfig::new(dt), None)?;
    traj.transient_cutoff = TRANSIENT_CUTOFF;
    Ok(traj)
}

/// Hybrid (or, without a corrector, purely low-fidelity) response from rest.
pub fn predict(
    id: ForcingModelId,
    params: &DuffingParams,
    waves: &WaveRealization,
    duration: f64,
    dt: f64,
    corrector: Option<&mut dyn Corrector>,
) -> Result<Trajectory> {
    let steps = step_count(duration, dt)?;
    let sys = low_fidelity_system(id, params, waves)?;
    let mut traj = simulate(&sys, &DVector::zeros(2), 0.0, steps, &IntegratorConfig::new(dt), corrector)?;
    traj.transient_cutoff = TRANSIENT_CUTOFF;
    Ok(traj)
}

/// `delta_n = m z''_n - f_low(z_n, z'_n, t_n)` along a reference trajectory.
pub fn extract_delta(
    id: ForcingModelId,
    params: &DuffingParams,
    traj: &Trajectory,
    waves: &WaveRealization,
) -> Result<Vec<f64>> {
    if traj.ndof() != 1 {
        return Err(Error::Data(format!(
            "Duffing extraction needs a 1-DOF trajectory, got {} DOF",
            traj.ndof()
        )));
    }
    let (z, zd, zdd) = (&traj.positions[0], &traj.velocities[0], &traj.accelerations[0]);
    if z.len() != zd.len() || z.len() != zdd.len() || z.len() != traj.len() {
        return Err(Error::Data("trajectory channels have mismatched lengths".into()));
    }
    Ok((0..traj.len())
        .map(|n| params.m * zdd[n] - eval_low_fidelity_force(id, params, z[n], zd[n], waves, traj.time(n)))
        .collect())
}
