//! Linear stability of the single-DOF low-fidelity models.
//!
//! For `(m + a1) x'' + b1 x' + c1 x = f`, the first-order coefficient matrix is
//! `Q = [0, 1; -c1/(m+a1), -b1/(m+a1)]`, with damping and restoring zeroed for
//! the models that do not retain them. Eigenvalues are computed numerically
//! from `Q`.

use std::io::Write;

use nalgebra::{dmatrix, Complex, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::duffing::{DuffingParams, ForcingModelId};
use crate::error::{Error, Result};
use crate::integrator::{FirstOrderSystem, Kinematics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointKind {
    SpiralSink,
    Center,
    DegenerateLine,
    SpiralSource,
    NodeSink,
    NodeSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub model: ForcingModelId,
    /// `(re, im)`
    pub lambda1: (f64, f64),
    pub lambda2: (f64, f64),
    pub classification: FixedPointKind,
    /// `2 sqrt(c1 (m + a1))`, or `None` when restoring is not retained.
    pub critical_damping: Option<f64>,
}

/// Retained `(damping, restoring)` for a model.
fn retained(model: ForcingModelId, params: &DuffingParams) -> (f64, f64) {
    (
        if model.keeps_damping() { params.b1 } else { 0.0 },
        if model.keeps_restoring() { params.c1 } else { 0.0 },
    )
}

/// `Q` for the model, assembled through the same system type the integrator uses.
pub fn coefficient_matrix(model: ForcingModelId, params: &DuffingParams, a1: f64) -> Result<Matrix2<f64>> {
    let total = params.m + a1;
    if !(total > 0.0) {
        return Err(Error::Domain(format!("m + a1 must be > 0, got {total}")));
    }
    let (b, c) = retained(model, params);
    let sys = FirstOrderSystem::new(vec!["x".into()], dmatrix![total], dmatrix![b], dmatrix![c], Kinematics::Inertial)?;
    let q = sys.coefficient_matrix(&DVector::zeros(2))?;
    Ok(Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]))
}

/// Fixed-point type from the trace and determinant of a real 2x2 linearization.
pub fn classify_trace_det(trace: f64, det: f64, scale: f64) -> FixedPointKind {
    let tol = 1e-12 * scale.max(1.0);
    let disc = trace * trace - 4.0 * det;
    if det.abs() <= tol {
        return FixedPointKind::DegenerateLine;
    }
    if disc < -tol * tol {
        if trace.abs() <= tol {
            FixedPointKind::Center
        } else if trace < 0.0 {
            FixedPointKind::SpiralSink
        } else {
            FixedPointKind::SpiralSource
        }
    } else if trace < 0.0 {
        FixedPointKind::NodeSink
    } else {
        FixedPointKind::NodeSource
    }
}

fn classify_eigenvalues(l1: Complex<f64>, l2: Complex<f64>, scale: f64) -> FixedPointKind {
    let tol = 1e-12 * scale.max(1.0);
    if l1.norm() <= tol || l2.norm() <= tol {
        return FixedPointKind::DegenerateLine;
    }
    if l1.im.abs() > tol {
        if l1.re.abs() <= tol {
            FixedPointKind::Center
        } else if l1.re < 0.0 {
            FixedPointKind::SpiralSink
        } else {
            FixedPointKind::SpiralSource
        }
    } else if l1.re < 0.0 && l2.re < 0.0 {
        FixedPointKind::NodeSink
    } else {
        FixedPointKind::NodeSource
    }
}

pub fn eigenvalues(model: ForcingModelId, params: &DuffingParams, a1: f64) -> Result<EigenReport> {
    let q = coefficient_matrix(model, params, a1)?;
    let ev = q.complex_eigenvalues();
    let (mut l1, mut l2) = (ev[0], ev[1]);
    // report the upper-half-plane root first
    if l1.im < l2.im || (l1.im == l2.im && l1.re < l2.re) {
        std::mem::swap(&mut l1, &mut l2);
    }
    let scale = q.abs().max();
    Ok(EigenReport {
        model,
        lambda1: (l1.re, l1.im),
        lambda2: (l2.re, l2.im),
        classification: classify_eigenvalues(l1, l2, scale),
        critical_damping: model
            .keeps_restoring()
            .then(|| 2.0 * (params.c1 * (params.m + a1)).sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub v1_range: (f64, f64),
    pub v2_range: (f64, f64),
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub v1: f64,
    pub v2: f64,
    pub dv1: f64,
    pub dv2: f64,
}

/// Unforced phase-plane field `(v1', v2') = Q (v1, v2)` on a regular grid.
pub fn phase_field(model: ForcingModelId, params: &DuffingParams, a1: f64, grid: &PhaseGrid) -> Result<Vec<PhaseSample>> {
    let (lo1, hi1) = grid.v1_range;
    let (lo2, hi2) = grid.v2_range;
    if grid.n1 < 2 || grid.n2 < 2 || !(hi1 > lo1) || !(hi2 > lo2) {
        return Err(Error::Domain("phase grid must have >= 2 points per axis and non-empty ranges".into()));
    }
    let q = coefficient_matrix(model, params, a1)?;
    let mut out = Vec::with_capacity(grid.n1 * grid.n2);
    for i in 0..grid.n1 {
        let v1 = lo1 + (hi1 - lo1) * i as f64 / (grid.n1 - 1) as f64;
        for j in 0..grid.n2 {
            let v2 = lo2 + (hi2 - lo2) * j as f64 / (grid.n2 - 1) as f64;
            out.push(field_at(&q, v1, v2));
        }
    }
    Ok(out)
}

fn field_at(q: &Matrix2<f64>, v1: f64, v2: f64) -> PhaseSample {
    let d = q * nalgebra::Vector2::new(v1, v2);
    PhaseSample { v1, v2, dv1: d[0], dv2: d[1] }
}

/// Fixed-point type of the origin from a central-difference linearization of
/// the phase field.
pub fn classify_from_field(model: ForcingModelId, params: &DuffingParams, a1: f64) -> Result<FixedPointKind> {
    let q = coefficient_matrix(model, params, a1)?;
    let h = 1e-3;
    let col = |e1: f64, e2: f64| {
        let p = field_at(&q, e1 * h, e2 * h);
        let m = field_at(&q, -e1 * h, -e2 * h);
        ((p.dv1 - m.dv1) / (2.0 * h), (p.dv2 - m.dv2) / (2.0 * h))
    };
    let (j11, j21) = col(1.0, 0.0);
    let (j12, j22) = col(0.0, 1.0);
    let scale = [j11, j12, j21, j22].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(classify_trace_det(j11 + j22, j11 * j22 - j12 * j21, scale))
}

pub fn write_phase_csv<W: Write>(out: W, samples: &[PhaseSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(b1: f64) -> DuffingParams {
        DuffingParams::linear(1.0, 1.0, b1, 1.0)
    }

    #[test]
    fn undamped_models_are_centers() {
        for model in [ForcingModelId::C, ForcingModelId::D] {
            let r = eigenvalues(model, &unit(0.1), 0.0).unwrap();
            assert_eq!(r.classification, FixedPointKind::Center);
            assert!(r.lambda1.0.abs() < 1e-14);
            assert_relative_eq!(r.lambda1.1, 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.lambda2.1, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn model_e_is_degenerate() {
        let r = eigenvalues(ForcingModelId::E, &unit(0.1), 0.5).unwrap();
        assert_eq!(r.lambda1, (0.0, 0.0));
        assert_eq!(r.lambda2, (0.0, 0.0));
        assert_eq!(r.classification, FixedPointKind::DegenerateLine);
        assert_eq!(r.critical_damping, None);
    }

    #[test]
    fn damped_models_spiral_in() {
        for model in [ForcingModelId::A, ForcingModelId::B] {
            let r = eigenvalues(model, &unit(0.1), 0.0).unwrap();
            assert_eq!(r.classification, FixedPointKind::SpiralSink);
            assert_relative_eq!(r.lambda1.0, -0.05, epsilon = 1e-12);
            assert_relative_eq!(r.lambda1.1, 0.99875, epsilon = 1e-5);
            assert_relative_eq!(r.lambda1.1, (1.0f64 - 0.0025).sqrt(), epsilon = 1e-12);
            assert_relative_eq!(r.critical_damping.unwrap(), 2.0);
        }
    }

    #[test]
    fn overdamped_is_node_sink() {
        let r = eigenvalues(ForcingModelId::A, &unit(3.0), 0.0).unwrap();
        assert_eq!(r.classification, FixedPointKind::NodeSink);
        assert!(r.lambda1.1 == 0.0 && r.lambda2.1 == 0.0);
    }

    #[test]
    fn non_positive_total_mass_rejected() {
        assert!(matches!(
            eigenvalues(ForcingModelId::A, &unit(0.1), -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn phase_field_examples() {
        let grid = PhaseGrid { v1_range: (-1.0, 1.0), v2_range: (-2.0, 2.0), n1: 3, n2: 5 };
        let p = unit(0.1);
        for s in phase_field(ForcingModelId::E, &p, 0.0, &grid).unwrap() {
            assert_eq!((s.dv1, s.dv2), (s.v2, 0.0));
        }
        let c = phase_field(ForcingModelId::C, &p, 0.0, &grid).unwrap();
        let at = c.iter().find(|s| s.v1 == 1.0 && s.v2 == 0.0).unwrap();
        assert_eq!((at.dv1, at.dv2), (0.0, -1.0));
        for model in ForcingModelId::ALL {
            let f = phase_field(model, &p, 0.0, &grid).unwrap();
            let o = f.iter().find(|s| s.v1 == 0.0 && s.v2 == 0.0).unwrap();
            assert_eq!((o.dv1, o.dv2), (0.0, 0.0));
        }
        assert_eq!(c.len(), 15);
        let bad = PhaseGrid { n1: 1, ..grid };
        assert!(phase_field(ForcingModelId::A, &p, 0.0, &bad).is_err());
    }

    #[test]
    fn phase_csv_header() {
        let mut buf = Vec::new();
        write_phase_csv(&mut buf, &[PhaseSample { v1: 1.0, v2: 0.0, dv1: 0.0, dv2: -1.0 }]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("v1,v2,dv1,dv2\n"));
    }

    proptest! {
        #[test]
        fn trace_det_and_threshold(m in 0.1f64..10.0, a1 in 0.0f64..5.0, c1 in 0.1f64..10.0, b1 in 0.0f64..10.0) {
            let p = DuffingParams::linear(m, c1, b1, 1.0);
            let r = eigenvalues(ForcingModelId::A, &p, a1).unwrap();
            let total = m + a1;
            let (l1, l2) = (Complex::new(r.lambda1.0, r.lambda1.1), Complex::new(r.lambda2.0, r.lambda2.1));
            let sum = l1 + l2;
            let prod = l1 * l2;
            prop_assert!((sum.re + b1 / total).abs() < 1e-10 && sum.im.abs() < 1e-10);
            prop_assert!((prod.re - c1 / total).abs() < 1e-10 * (1.0 + c1 / total) && prod.im.abs() < 1e-10);
            let bc = r.critical_damping.unwrap();
            if (b1 - bc).abs() > 1e-6 {
                prop_assert_eq!(l1.im == 0.0, b1 > bc);
            }
            let bigger = eigenvalues(ForcingModelId::A, &p, a1 + 1.0).unwrap().critical_damping.unwrap();
            prop_assert!(bigger > bc);
        }

        #[test]
        fn classification_agrees_with_field(m in 0.1f64..10.0, a1 in 0.0f64..5.0, c1 in 0.1f64..10.0, b1 in 0.0f64..10.0, k in 0usize..5) {
            let model = ForcingModelId::ALL[k];
            let p = DuffingParams::linear(m, c1, b1, 1.0);
            prop_assume!((b1 - 2.0 * (c1 * (m + a1)).sqrt()).abs() > 1e-6);
            let from_eigs = eigenvalues(model, &p, a1).unwrap().classification;
            prop_assert_eq!(from_eigs, classify_from_field(model, &p, a1).unwrap());
        }
    }
}
