//! Implicit BDF2 time stepping of hybrid first-order systems.
//!
//! Each step solves the BDF2 equations with Newton iteration and a
//! finite-difference Jacobian. The force correction for a step is evaluated
//! once, before the Newton loop, from samples up to and including `t_n`, and
//! is held constant while the step converges.

pub mod bdf;
pub mod kinematics;
pub mod newton;
pub mod system;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub use bdf::{step_bdf1, step_bdf2, StepOutcome};
pub use kinematics::{euler_transform, rotation_rate_matrix, translation_matrix};
pub use newton::{fd_jacobian, newton_solve, NewtonSolution};
pub use system::{ElevationFn, ExcitationFn, FirstOrderSystem, Kinematics, NonlinearFn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Newton stops when `|alpha| <= newton_tol (1 + |v|)`.
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    /// Relative finite-difference step, scaled by `1 + |v_j|`.
    pub jacobian_perturbation: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            newton_tol: 1e-10,
            newton_max_iters: 25,
            jacobian_perturbation: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be > 0".into()));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::Config("newton_max_iters must be >= 1".into()));
        }
        if !(self.jacobian_perturbation > 0.0) {
            return Err(Error::Config("jacobian_perturbation must be > 0".into()));
        }
        Ok(())
    }
}

/// Supplies the force correction applied over each time step.
pub trait Corrector {
    /// Correction for the step from sample `n` to `n + 1`, given samples
    /// `0..=n` in `history`. `None` applies no correction (stencil warm-up).
    fn correction(&mut self, n: usize, history: &Trajectory) -> Result<Option<DVector<f64>>>;
}

/// Replays a precomputed correction table: `delta[d][n]` is applied over the
/// step ending at sample `n`.
#[derive(Debug, Clone)]
pub struct TabulatedCorrector {
    pub delta: Vec<Vec<f64>>,
}

impl Corrector for TabulatedCorrector {
    fn correction(&mut self, n: usize, _history: &Trajectory) -> Result<Option<DVector<f64>>> {
        let ndof = self.delta.len();
        let mut out = DVector::zeros(ndof);
        for d in 0..ndof {
            out[d] = *self.delta[d].get(n + 1).ok_or_else(|| {
                Error::Data(format!("correction table exhausted at sample {}", n + 1))
            })?;
        }
        Ok(Some(out))
    }
}

/// Integrates `sys` from `v0` at `t0` for `steps` steps (BDF1 start, then BDF2).
pub fn simulate(
    sys: &FirstOrderSystem,
    v0: &DVector<f64>,
    t0: f64,
    steps: usize,
    cfg: &IntegratorConfig,
    mut corrector: Option<&mut dyn Corrector>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = sys.ndof();
    if v0.len() != 2 * n {
        return Err(Error::Contract(format!(
            "initial state has {} entries, system needs {}",
            v0.len(),
            2 * n
        )));
    }
    let mut traj = Trajectory::with_capacity(cfg.dt, t0, sys.dof_names().to_vec(), steps + 1);
    let zero = DVector::zeros(n);
    let record = |traj: &mut Trajectory, t: f64, v: &DVector<f64>, delta: &DVector<f64>| {
        let (pos, vel) = v.as_slice().split_at(n);
        let force = sys.net_force(t, &sys.external_force(t), pos, vel, Some(delta));
        let acc = sys.accelerations(&force);
        traj.push(sys.elevation(t), pos, vel, acc.as_slice(), delta.as_slice());
    };
    record(&mut traj, t0, v0, &zero);

    let mut prev = v0.clone();
    let mut curr = v0.clone();
    for step in 0..steps {
        let t_n = t0 + step as f64 * cfg.dt;
        let delta = match corrector.as_deref_mut() {
            Some(c) => c.correction(step, &traj).map_err(|e| e.at_step(step + 1, t_n + cfg.dt))?,
            None => None,
        };
        let outcome = if step == 0 {
            step_bdf1(sys, &curr, t_n, delta.as_ref(), cfg)
        } else {
            step_bdf2(sys, &curr, &prev, t_n, delta.as_ref(), cfg)
        }
        .map_err(|e| e.at_step(step + 1, t_n + cfg.dt))?;
        let applied = delta.unwrap_or_else(|| zero.clone());
        record(&mut traj, t_n + cfg.dt, &outcome.state, &applied);
        prev = std::mem::replace(&mut curr, outcome.state);
    }
    Ok(traj)
}
