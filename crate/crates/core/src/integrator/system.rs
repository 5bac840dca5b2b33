use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::kinematics::euler_transform;

/// State-independent external force `f_w(t)`, one entry per DOF.
pub type ExcitationFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
/// Additional state-dependent force `(t, positions, velocities) -> force`.
pub type NonlinearFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> DVector<f64> + Send + Sync>;
pub type ElevationFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How position rates relate to velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kinematics {
    /// Position rates equal velocities (inertial frame).
    Inertial,
    /// Six DOF: earth-fixed position/Euler-angle rates are `T(angles)` times
    /// ship-fixed velocities.
    ShipFixed,
}

/// First-order system `I v' = G(v) v + F(t)` with
///
/// ```text
/// v = [positions; velocities]
/// I = diag(identity, M + A)
/// G = [0, T(v); -C, -B]
/// F = [0; f_w(t) + f_nl(t, v) + delta]
/// ```
///
/// DOFs listed in `fixed_velocity` have their acceleration forced to zero and
/// the remaining accelerations are solved from the reduced mass block.
#[derive(Clone)]
pub struct FirstOrderSystem {
    dof_names: Vec<String>,
    inertia: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    kinematics: Kinematics,
    excitation: Option<ExcitationFn>,
    nonlinear: Option<NonlinearFn>,
    elevation: Option<ElevationFn>,
    fixed_velocity: Vec<usize>,
    free: Vec<usize>,
    reduced_inverse: DMatrix<f64>,
}

impl std::fmt::Debug for FirstOrderSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FirstOrderSystem")
            .field("dof_names", &self.dof_names)
            .field("inertia", &self.inertia)
            .field("damping", &self.damping)
            .field("stiffness", &self.stiffness)
            .field("kinematics", &self.kinematics)
            .field("fixed_velocity", &self.fixed_velocity)
            .finish_non_exhaustive()
    }
}

impl FirstOrderSystem {
    /// `inertia` is the total mass matrix `M + A`.
    pub fn new(
        dof_names: Vec<String>,
        inertia: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        kinematics: Kinematics,
    ) -> Result<Self> {
        let n = dof_names.len();
        if n == 0 {
            return Err(Error::Config("system needs at least one DOF".into()));
        }
        for (name, m) in [("inertia", &inertia), ("damping", &damping), ("stiffness", &stiffness)] {
            if m.shape() != (n, n) {
                return Err(Error::Config(format!(
                    "{name} matrix is {:?}, expected {n}x{n}",
                    m.shape()
                )));
            }
            if !m.iter().all(|x| x.is_finite()) {
                return Err(Error::Config(format!("{name} matrix has non-finite entries")));
            }
        }
        if kinematics == Kinematics::ShipFixed && n != 6 {
            return Err(Error::Config("ship-fixed kinematics requires 6 DOF".into()));
        }
        let mut sys = Self {
            dof_names,
            inertia,
            damping,
            stiffness,
            kinematics,
            excitation: None,
            nonlinear: None,
            elevation: None,
            fixed_velocity: Vec::new(),
            free: Vec::new(),
            reduced_inverse: DMatrix::zeros(0, 0),
        };
        sys.refresh_reduced_inverse()?;
        Ok(sys)
    }

    pub fn with_excitation(mut self, f: ExcitationFn) -> Self {
        self.excitation = Some(f);
        self
    }

    pub fn with_nonlinear(mut self, f: NonlinearFn) -> Self {
        self.nonlinear = Some(f);
        self
    }

    pub fn with_elevation(mut self, f: ElevationFn) -> Self {
        self.elevation = Some(f);
        self
    }

    /// Holds the velocity of each listed DOF at its initial value.
    pub fn with_fixed_velocity(mut self, dofs: &[usize]) -> Result<Self> {
        let mut dofs = dofs.to_vec();
        dofs.sort_unstable();
        dofs.dedup();
        if let Some(&d) = dofs.iter().find(|&&d| d >= self.ndof()) {
            return Err(Error::Config(format!("constrained DOF {d} out of range")));
        }
        self.fixed_velocity = dofs;
        self.refresh_reduced_inverse()?;
        Ok(self)
    }

    fn refresh_reduced_inverse(&mut self) -> Result<()> {
        self.free = (0..self.ndof())
            .filter(|d| !self.fixed_velocity.contains(d))
            .collect();
        let k = self.free.len();
        let reduced = DMatrix::from_fn(k, k, |i, j| self.inertia[(self.free[i], self.free[j])]);
        self.reduced_inverse = if k == 0 {
            reduced
        } else {
            reduced
                .try_inverse()
                .ok_or_else(|| Error::Config("mass matrix (M + A) is singular".into()))?
        };
        Ok(())
    }

    pub fn ndof(&self) -> usize {
        self.dof_names.len()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.ndof()
    }

    pub fn dof_names(&self) -> &[String] {
        &self.dof_names
    }

    pub fn inertia(&self) -> &DMatrix<f64> {
        &self.inertia
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn kinematics(&self) -> Kinematics {
        self.kinematics
    }

    pub fn fixed_velocity(&self) -> &[usize] {
        &self.fixed_velocity
    }

    pub fn external_force(&self, t: f64) -> DVector<f64> {
        match &self.excitation {
            Some(f) => f(t),
            None => DVector::zeros(self.ndof()),
        }
    }

    pub fn elevation(&self, t: f64) -> f64 {
        self.elevation.as_ref().map_or(0.0, |f| f(t))
    }

    /// Position rates `T(v) u`.
    fn position_rates(&self, pos: &[f64], vel: &[f64]) -> Result<DVector<f64>> {
        let vel_v = DVector::from_column_slice(vel);
        Ok(match self.kinematics {
            Kinematics::Inertial => vel_v,
            Kinematics::ShipFixed => {
                let t = euler_transform(pos[3], pos[4], pos[5])?;
                let out = t * nalgebra::Vector6::from_column_slice(vel);
                DVector::from_column_slice(out.as_slice())
            }
        })
    }

    /// Net force on each DOF, excluding inertia: `f_w - C x - B u + f_nl + delta`.
    pub fn net_force(
        &self,
        t: f64,
        external: &DVector<f64>,
        pos: &[f64],
        vel: &[f64],
        delta: Option<&DVector<f64>>,
    ) -> DVector<f64> {
        let pos_v = DVector::from_column_slice(pos);
        let vel_v = DVector::from_column_slice(vel);
        let mut force = external - &self.stiffness * pos_v - &self.damping * vel_v;
        if let Some(nl) = &self.nonlinear {
            force += nl(t, pos, vel);
        }
        if let Some(d) = delta {
            force += d;
        }
        force
    }

    /// Accelerations from the force balance, zero on fixed-velocity DOFs.
    pub fn accelerations(&self, force: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.ndof());
        if self.free.is_empty() {
            return acc;
        }
        let rhs = DVector::from_iterator(self.free.len(), self.free.iter().map(|&d| force[d]));
        let solved = &self.reduced_inverse * rhs;
        for (i, &d) in self.free.iter().enumerate() {
            acc[d] = solved[i];
        }
        acc
    }

    /// `v' = Q(v) v + q(t)` given the precomputed external force at `t`.
    pub fn rate(
        &self,
        t: f64,
        external: &DVector<f64>,
        v: &DVector<f64>,
        delta: Option<&DVector<f64>>,
    ) -> Result<DVector<f64>> {
        let n = self.ndof();
        let (pos, vel) = v.as_slice().split_at(n);
        let pos_rate = self.position_rates(pos, vel)?;
        let acc = self.accelerations(&self.net_force(t, external, pos, vel, delta));
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&pos_rate);
        out.rows_mut(n, n).copy_from(&acc);
        Ok(out)
    }

    /// Coefficient matrix `Q = I^-1 G` at state `v`, ignoring constraints and
    /// any nonlinear force.
    pub fn coefficient_matrix(&self, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.ndof();
        let t = match self.kinematics {
            Kinematics::Inertial => DMatrix::identity(n, n),
            Kinematics::ShipFixed => {
                let m = euler_transform(v[3], v[4], v[5])?;
                DMatrix::from_column_slice(6, 6, m.as_slice())
            }
        };
        let inv = self
            .inertia
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("mass matrix (M + A) is singular".into()))?;
        let mut q = DMatrix::zeros(2 * n, 2 * n);
        q.view_mut((0, n), (n, n)).copy_from(&t);
        q.view_mut((n, 0), (n, n)).copy_from(&(-&inv * &self.stiffness));
        q.view_mut((n, n), (n, n)).copy_from(&(-&inv * &self.damping));
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn oscillator() -> FirstOrderSystem {
        FirstOrderSystem::new(
            vec!["z".into()],
            dmatrix![2.0],
            dmatrix![0.4],
            dmatrix![8.0],
            Kinematics::Inertial,
        )
        .unwrap()
    }

    #[test]
    fn rate_of_linear_oscillator() {
        let sys = oscillator();
        let v = DVector::from_vec(vec![1.0, 0.5]);
        let r = sys.rate(0.0, &DVector::zeros(1), &v, None).unwrap();
        assert_eq!(r[0], 0.5);
        assert!((r[1] - (-8.0 - 0.2) / 2.0).abs() < 1e-15);
        let q = sys.coefficient_matrix(&v).unwrap();
        assert!((&q * &v - r).norm() < 1e-14);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let err = FirstOrderSystem::new(
            vec!["a".into(), "b".into()],
            DMatrix::identity(2, 2),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(2, 2),
            Kinematics::Inertial,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn singular_mass_rejected() {
        let err = FirstOrderSystem::new(
            vec!["z".into()],
            dmatrix![0.0],
            dmatrix![0.0],
            dmatrix![1.0],
            Kinematics::Inertial,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn fixed_velocity_zeroes_acceleration_and_decouples() {
        let sys = FirstOrderSystem::new(
            vec!["a".into(), "b".into()],
            dmatrix![2.0, 1.0; 1.0, 4.0],
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            Kinematics::Inertial,
        )
        .unwrap()
        .with_fixed_velocity(&[0])
        .unwrap();
        let acc = sys.accelerations(&DVector::from_vec(vec![3.0, 8.0]));
        assert_eq!(acc[0], 0.0);
        assert!((acc[1] - 2.0).abs() < 1e-15);
    }
}
