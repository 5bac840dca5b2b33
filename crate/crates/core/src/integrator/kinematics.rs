//! Euler-angle kinematics between the ship-fixed and earth-fixed frames.
//!
//! Angles are roll `phi`, pitch `theta`, yaw `psi` in the z-y-x convention.
//! `T1` rotates ship-fixed translational velocities into earth-fixed rates and
//! `T2` maps ship-fixed angular velocities to Euler-angle rates.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Matrix6};

use crate::error::{Error, Result};

/// Pitch angles closer than this to +/- pi/2 are rejected.
pub const SINGULARITY_GUARD: f64 = 1e-3;

pub fn check_pitch(theta: f64) -> Result<()> {
    let wrapped = theta.rem_euclid(std::f64::consts::PI);
    if (wrapped - FRAC_PI_2).abs() < SINGULARITY_GUARD {
        return Err(Error::KinematicSingularity { theta });
    }
    Ok(())
}

pub fn translation_matrix(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Matrix3::new(
        cp * ct,
        -cf * sp + cp * sf * st,
        sf * sp + cf * cp * st,
        ct * sp,
        cf * cp + sf * sp * st,
        -cp * sf + cf * sp * st,
        -st,
        ct * sf,
        cf * ct,
    )
}

pub fn rotation_rate_matrix(phi: f64, theta: f64) -> Result<Matrix3<f64>> {
    check_pitch(theta)?;
    let (sf, cf) = phi.sin_cos();
    let (tt, ct) = (theta.tan(), theta.cos());
    Ok(Matrix3::new(
        1.0,
        sf * tt,
        cf * tt,
        0.0,
        cf,
        -sf,
        0.0,
        sf / ct,
        cf / ct,
    ))
}

/// Block-diagonal `diag(T1, T2)`.
pub fn euler_transform(phi: f64, theta: f64, psi: f64) -> Result<Matrix6<f64>> {
    let t2 = rotation_rate_matrix(phi, theta)?;
    let t1 = translation_matrix(phi, theta, psi);
    let mut t = Matrix6::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&t1);
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&t2);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn identity_at_zero_angles() {
        assert_eq!(euler_transform(0.0, 0.0, 0.0).unwrap(), Matrix6::identity());
    }

    #[test]
    fn yaw_quarter_turn_maps_x_to_y() {
        let t1 = translation_matrix(0.0, 0.0, FRAC_PI_2);
        let y = t1 * Vector3::x();
        assert!((y - Vector3::y()).norm() < 1e-15);
    }

    #[test]
    fn matches_composed_elementary_rotations() {
        let (phi, theta, psi): (f64, f64, f64) = (0.3, -0.4, 1.1);
        let rz = Matrix3::new(psi.cos(), -psi.sin(), 0.0, psi.sin(), psi.cos(), 0.0, 0.0, 0.0, 1.0);
        let ry = Matrix3::new(theta.cos(), 0.0, theta.sin(), 0.0, 1.0, 0.0, -theta.sin(), 0.0, theta.cos());
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, phi.cos(), -phi.sin(), 0.0, phi.sin(), phi.cos());
        let diff = translation_matrix(phi, theta, psi) - rz * ry * rx;
        assert!(diff.norm() < 1e-14);
    }

    #[test]
    fn rotation_rates_invert_body_rates() {
        // T2^-1 = [1 0 -st; 0 cf sf ct; 0 -sf cf ct]
        let (phi, theta): (f64, f64) = (0.2, 0.5);
        let t2 = rotation_rate_matrix(phi, theta).unwrap();
        let (sf, cf, st, ct) = (phi.sin(), phi.cos(), theta.sin(), theta.cos());
        let inv = Matrix3::new(1.0, 0.0, -st, 0.0, cf, sf * ct, 0.0, -sf, cf * ct);
        assert!((t2 * inv - Matrix3::identity()).norm() < 1e-14);
    }

    #[test]
    fn singular_pitch_rejected() {
        for theta in [FRAC_PI_2, -FRAC_PI_2 + 5e-4, FRAC_PI_2 + 1e-4] {
            assert!(matches!(
                euler_transform(0.1, theta, 0.0),
                Err(Error::KinematicSingularity { .. })
            ));
        }
        assert!(euler_transform(0.1, FRAC_PI_2 - 2e-3, 0.0).is_ok());
    }
}
