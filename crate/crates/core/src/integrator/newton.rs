use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::IntegratorConfig;

/// Converged Newton root and the number of linear solves it took.
#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub root: DVector<f64>,
    pub iterations: usize,
}

/// Forward-difference Jacobian of `residual` at `v`, with `h0 = residual(v)`.
pub fn fd_jacobian<F>(residual: &mut F, v: &DVector<f64>, h0: &DVector<f64>, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = v.len();
    let mut jac = DMatrix::zeros(h0.len(), n);
    let mut probe = v.clone();
    for j in 0..n {
        let step = rel_step * (1.0 + v[j].abs());
        probe[j] = v[j] + step;
        let hp = residual(&probe)?;
        probe[j] = v[j];
        let mut col = jac.column_mut(j);
        col.copy_from(&((hp - h0) / step));
    }
    Ok(jac)
}

/// Solves `residual(v) = 0` by Newton iteration with a finite-difference
/// Jacobian. Stops when `|alpha| <= tol (1 + |v|)` for the update `alpha`.
///
/// Errors carry step 0 and t = 0; callers inside a time loop re-annotate them.
pub fn newton_solve<F>(mut residual: F, guess: DVector<f64>, cfg: &IntegratorConfig) -> Result<NewtonSolution>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut v = guess;
    let mut last_norm = f64::INFINITY;
    for iteration in 1..=cfg.newton_max_iters {
        let h = residual(&v)?;
        if !h.iter().all(|x| x.is_finite()) {
            return Err(Error::NonConvergence {
                step: 0,
                time: 0.0,
                residual: f64::NAN,
                iterations: iteration,
            });
        }
        let jac = fd_jacobian(&mut residual, &v, &h, cfg.jacobian_perturbation)?;
        let alpha = jac
            .lu()
            .solve(&(-&h))
            .ok_or(Error::SingularJacobian { step: 0, time: 0.0 })?;
        if !alpha.iter().all(|x| x.is_finite()) {
            return Err(Error::SingularJacobian { step: 0, time: 0.0 });
        }
        v += &alpha;
        last_norm = alpha.norm();
        if last_norm <= cfg.newton_tol * (1.0 + v.norm()) {
            return Ok(NewtonSolution {
                root: v,
                iterations: iteration,
            });
        }
    }
    Err(Error::NonConvergence {
        step: 0,
        time: 0.0,
        residual: last_norm,
        iterations: cfg.newton_max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::new(0.1)
    }

    #[test]
    fn linear_system_converges_immediately() {
        let a = dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, -1.0; 0.0, -1.0, 2.0];
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let sol = newton_solve(|v| Ok(&a * v - &b), DVector::zeros(3), &cfg()).unwrap();
        // forward differences leave ~1e-10 relative Jacobian error, so the second
        // update sits right at the tolerance and a third confirms convergence
        assert!(sol.iterations <= 3, "{}", sol.iterations);
        let exact = a.lu().solve(&b).unwrap();
        assert!((sol.root - exact).norm() < 1e-9);
    }

    #[test]
    fn scalar_square_root() {
        let sol = newton_solve(
            |v| Ok(DVector::from_element(1, v[0] * v[0] - 4.0)),
            DVector::from_element(1, 3.0),
            &cfg(),
        )
        .unwrap();
        assert_relative_eq!(sol.root[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn root_at_guess() {
        let guess = DVector::from_vec(vec![1.0, -2.0]);
        let sol = newton_solve(|v| Ok(v - DVector::from_vec(vec![1.0, -2.0])), guess.clone(), &cfg()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.root, guess);
    }

    #[test]
    fn singular_jacobian_reported() {
        let err = newton_solve(
            |v| Ok(DVector::from_vec(vec![v[0] + v[1] - 1.0, 2.0 * v[0] + 2.0 * v[1] - 3.0])),
            DVector::zeros(2),
            &cfg(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { .. }), "{err}");
    }

    #[test]
    fn iteration_cap_reported() {
        let mut c = cfg();
        c.newton_max_iters = 2;
        // no real root: v^2 + 1 = 0
        let err = newton_solve(
            |v| Ok(DVector::from_element(1, v[0] * v[0] + 1.0)),
            DVector::from_element(1, 0.3),
            &c,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 2, .. }), "{err}");
    }

    #[test]
    fn jacobian_matches_analytic() {
        let mut f = |v: &DVector<f64>| Ok(DVector::from_vec(vec![v[0] * v[1], v[0].sin()]));
        let v = DVector::from_vec(vec![0.7, -1.3]);
        let h0 = f(&v).unwrap();
        let j = fd_jacobian(&mut f, &v, &h0, 1e-7).unwrap();
        assert_relative_eq!(j[(0, 0)], -1.3, epsilon = 1e-6);
        assert_relative_eq!(j[(0, 1)], 0.7, epsilon = 1e-6);
        assert_relative_eq!(j[(1, 0)], 0.7f64.cos(), epsilon = 1e-6);
        assert_relative_eq!(j[(1, 1)], 0.0, epsilon = 1e-12);
    }
}
