use nalgebra::DVector;

use crate::error::Result;

use super::kinematics::check_pitch;
use super::newton::newton_solve;
use super::system::{FirstOrderSystem, Kinematics};
use super::IntegratorConfig;

/// Result of one implicit step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: DVector<f64>,
    pub newton_iterations: usize,
}

fn finish(sys: &FirstOrderSystem, prev: &DVector<f64>, mut state: DVector<f64>) -> Result<DVector<f64>> {
    let n = sys.ndof();
    for &d in sys.fixed_velocity() {
        state[n + d] = prev[n + d];
    }
    if sys.kinematics() == Kinematics::ShipFixed {
        check_pitch(state[4])?;
    }
    Ok(state)
}

/// Backward-Euler step from `(t0, v0)` to `t0 + dt`. `delta` is held fixed
/// over the step.
pub fn step_bdf1(
    sys: &FirstOrderSystem,
    v0: &DVector<f64>,
    t0: f64,
    delta: Option<&DVector<f64>>,
    cfg: &IntegratorConfig,
) -> Result<StepOutcome> {
    let dt = cfg.dt;
    let t1 = t0 + dt;
    let external = sys.external_force(t1);
    let sol = newton_solve(
        |v| Ok(v - v0 - sys.rate(t1, &external, v, delta)? * dt),
        v0.clone(),
        cfg,
    )?;
    Ok(StepOutcome {
        state: finish(sys, v0, sol.root)?,
        newton_iterations: sol.iterations,
    })
}

/// BDF2 step solving `3 v1 - 4 v_n + v_{n-1} = 2 dt (Q(v1) v1 + q(t_{n+1}))`.
pub fn step_bdf2(
    sys: &FirstOrderSystem,
    v_n: &DVector<f64>,
    v_nm1: &DVector<f64>,
    t_n: f64,
    delta: Option<&DVector<f64>>,
    cfg: &IntegratorConfig,
) -> Result<StepOutcome> {
    let dt = cfg.dt;
    let t1 = t_n + dt;
    let external = sys.external_force(t1);
    let history = v_n * 4.0 - v_nm1;
    // second-order extrapolation as the starting guess
    let guess = v_n * 2.0 - v_nm1;
    let sol = newton_solve(
        |v| Ok(v * 3.0 - &history - sys.rate(t1, &external, v, delta)? * (2.0 * dt)),
        guess,
        cfg,
    )?;
    Ok(StepOutcome {
        state: finish(sys, v_n, sol.root)?,
        newton_iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    /// v' = -v written as a unit-mass system with zero stiffness: the velocity
    /// DOF obeys u' = -u.
    fn decay() -> FirstOrderSystem {
        FirstOrderSystem::new(
            vec!["x".into()],
            dmatrix![1.0],
            dmatrix![1.0],
            dmatrix![0.0],
            super::super::Kinematics::Inertial,
        )
        .unwrap()
    }

    #[test]
    fn implicit_euler_closed_form() {
        let cfg = IntegratorConfig::new(0.1);
        let v0 = DVector::from_vec(vec![0.0, 1.0]);
        let out = step_bdf1(&decay(), &v0, 0.0, None, &cfg).unwrap();
        assert_relative_eq!(out.state[1], 1.0 / 1.1, epsilon = 1e-12);
        assert_relative_eq!(out.state[1], 0.90909, epsilon = 1e-5);
    }

    #[test]
    fn bdf2_recurrence() {
        let cfg = IntegratorConfig::new(0.1);
        let sys = decay();
        let v0 = DVector::from_vec(vec![0.0, 1.0]);
        let v1 = step_bdf1(&sys, &v0, 0.0, None, &cfg).unwrap().state;
        let v2 = step_bdf2(&sys, &v1, &v0, 0.1, None, &cfg).unwrap().state;
        let expect = (4.0 * v1[1] - v0[1]) / (3.0 + 2.0 * 0.1);
        assert_relative_eq!(v2[1], expect, epsilon = 1e-12);
    }

    #[test]
    fn zero_state_stays_zero() {
        let cfg = IntegratorConfig::new(0.05);
        let sys = decay();
        let z = DVector::zeros(2);
        let out = step_bdf2(&sys, &z, &z, 0.0, None, &cfg).unwrap();
        assert_eq!(out.state, z);
    }

    #[test]
    fn explicit_delta_enters_force() {
        let cfg = IntegratorConfig::new(0.1);
        let sys = decay();
        let v0 = DVector::zeros(2);
        let d = DVector::from_element(1, 1.1);
        // (u1 - 0)/dt = -u1 + 1.1  ->  u1 = 0.1
        let out = step_bdf1(&sys, &v0, 0.0, Some(&d), &cfg).unwrap();
        assert_relative_eq!(out.state[1], 0.1, epsilon = 1e-12);
    }
}
