//! Learned force correction.
//!
//! A [`CorrectorNet`] maps a stencil of the `k` most recent samples of the
//! response and wave elevation to the correction for the next step. One net
//! is trained per corrected DOF.

pub mod net;
pub mod stencil;
pub mod train;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::integrator::Corrector;
use crate::trajectory::Trajectory;

pub use net::{CorrectorNet, Mlp, ModelDocument, Normalizer, MODEL_FORMAT_VERSION};
pub use stencil::{build_dataset, Dataset, StencilSpec};
pub use train::{train, TrainConfig, TrainMetadata};

/// Hidden layers used for the single-DOF oscillator.
pub const DUFFING_HIDDEN: [usize; 2] = [30, 30];
/// Hidden layers used for the ship model.
pub const SHIP_HIDDEN: [usize; 3] = [30, 30, 30];

/// Applies trained nets inside the time loop, one net per corrected DOF.
///
/// The correction is zero until `k` samples after the start are available.
#[derive(Debug, Clone)]
pub struct NetCorrector<'a> {
    ndof: usize,
    nets: Vec<(usize, &'a CorrectorNet)>,
    window: Vec<f64>,
    pub evaluations: usize,
}

impl<'a> NetCorrector<'a> {
    pub fn new(ndof: usize, nets: Vec<(usize, &'a CorrectorNet)>) -> Result<Self> {
        for (dof, net) in &nets {
            if *dof >= ndof {
                return Err(Error::Config(format!("corrected DOF {dof} out of range")));
            }
            if net.output_dim() != 1 {
                return Err(Error::Config("each corrector net must have a single output".into()));
            }
        }
        Ok(Self { ndof, nets, window: Vec::new(), evaluations: 0 })
    }

    pub fn single(net: &'a CorrectorNet) -> Result<Self> {
        Self::new(1, vec![(0, net)])
    }
}

impl Corrector for NetCorrector<'_> {
    fn correction(&mut self, n: usize, history: &Trajectory) -> Result<Option<DVector<f64>>> {
        let mut out = DVector::zeros(self.ndof);
        let mut any = false;
        for (dof, net) in &self.nets {
            if n < net.stencil.k {
                continue;
            }
            net.stencil.window(history, n, &mut self.window)?;
            out[*dof] = net.infer(&self.window)?[0];
            self.evaluations += 1;
            any = true;
        }
        Ok(any.then_some(out))
    }
}
