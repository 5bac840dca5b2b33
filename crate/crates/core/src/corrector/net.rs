use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::stencil::StencilSpec;
use super::train::TrainMetadata;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Z-score statistics. Standard deviations are floored so they stay positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(n: usize) -> Self {
        Self { mean: vec![0.0; n], std: vec![1.0; n] }
    }

    /// Statistics of `groups` column groups: column `j` of a `cols`-wide row
    /// belongs to group `j / (cols / groups)`.
    pub fn fit(rows: &[f64], cols: usize, groups: usize) -> Self {
        let width = cols / groups;
        let n_rows = rows.len() / cols;
        let mut mean = vec![0.0; groups];
        let mut sq = vec![0.0; groups];
        for r in 0..n_rows {
            for j in 0..cols {
                let g = j / width;
                let x = rows[r * cols + j];
                mean[g] += x;
                sq[g] += x * x;
            }
        }
        let count = (n_rows * width).max(1) as f64;
        let std = mean
            .iter_mut()
            .zip(&sq)
            .map(|(m, s)| {
                *m /= count;
                let var = (s / count - *m * *m).max(0.0);
                let sd = var.sqrt();
                if sd > 1e-12 * (1.0 + m.abs()) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn group_width(&self, cols: usize) -> usize {
        cols / self.mean.len()
    }

    pub fn normalize(&self, x: &[f64], out: &mut Vec<f64>) {
        let w = self.group_width(x.len());
        out.clear();
        out.extend(x.iter().enumerate().map(|(j, v)| {
            let g = j / w;
            (v - self.mean[g]) / self.std[g]
        }));
    }

    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        let w = self.group_width(y.len());
        y.iter()
            .enumerate()
            .map(|(j, v)| {
                let g = j / w;
                v * self.std[g] + self.mean[g]
            })
            .collect()
    }
}

/// Dense feed-forward network: ReLU on hidden layers, identity output.
/// `weights[l]` is row-major `sizes[l + 1] x sizes[l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Parameter-shaped buffer for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Params {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        for w in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            w.iter_mut().for_each(|x| *x = value);
        }
    }
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sizes.len() >= 2
            && self.weights.len() == self.sizes.len() - 1
            && self.biases.len() == self.sizes.len() - 1
            && self.sizes.windows(2).zip(&self.weights).all(|(p, w)| w.len() == p[0] * p[1])
            && self.sizes[1..].iter().zip(&self.biases).all(|(&n, b)| b.len() == n);
        if !ok {
            return Err(Error::Data("network weights do not match layer sizes".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn layer(&self, l: usize, input: &[f64], out: &mut Vec<f64>) {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let w = &self.weights[l];
        let hidden = l + 2 < self.sizes.len();
        out.clear();
        for i in 0..n_out {
            let row = &w[i * n_in..(i + 1) * n_in];
            let z = self.biases[l][i] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            out.push(if hidden { z.max(0.0) } else { z });
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let mut next = Vec::new();
        for l in 0..self.weights.len() {
            self.layer(l, &a, &mut next);
            std::mem::swap(&mut a, &mut next);
        }
        a
    }

    /// Activations of every layer, input first.
    pub fn forward_trace(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize(self.sizes.len(), Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for l in 0..self.weights.len() {
            let (before, after) = acts.split_at_mut(l + 1);
            self.layer(l, &before[l], &mut after[0]);
        }
    }

    /// Adds `d loss / d params` to `grads` given the output gradient.
    pub fn backward(&self, acts: &[Vec<f64>], d_out: &[f64], grads: &mut Params, scratch: &mut (Vec<f64>, Vec<f64>)) {
        let (delta, prev) = scratch;
        delta.clear();
        delta.extend_from_slice(d_out);
        for l in (0..self.weights.len()).rev() {
            let n_in = self.sizes[l];
            let input = &acts[l];
            let gw = &mut grads.weights[l];
            for (i, &d) in delta.iter().enumerate() {
                grads.biases[l][i] += d;
                let row = &mut gw[i * n_in..(i + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            prev.clear();
            prev.resize(n_in, 0.0);
            let w = &self.weights[l];
            for (i, &d) in delta.iter().enumerate() {
                let row = &w[i * n_in..(i + 1) * n_in];
                for (p, wij) in prev.iter_mut().zip(row) {
                    *p += wij * d;
                }
            }
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            std::mem::swap(delta, prev);
        }
    }
}

/// Trained force-correction model: stencil layout, network and the frozen
/// normalization statistics of its training data.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorNet {
    pub stencil: StencilSpec,
    pub mlp: Mlp,
    /// One entry per stencil channel.
    pub feature_norm: Normalizer,
    /// One entry per output.
    pub target_norm: Normalizer,
    pub metadata: TrainMetadata,
}

impl CorrectorNet {
    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    /// Normalize, forward pass, denormalize.
    pub fn infer(&self, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.input_dim() {
            return Err(Error::Contract(format!(
                "input window has {} values, network expects {}",
                window.len(),
                self.input_dim()
            )));
        }
        let mut x = Vec::with_capacity(window.len());
        self.feature_norm.normalize(window, &mut x);
        Ok(self.target_norm.denormalize(&self.mlp.forward(&x)))
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            version: MODEL_FORMAT_VERSION,
            stencil_spec: self.stencil.clone(),
            layer_sizes: self.mlp.sizes.clone(),
            weights: self.mlp.weights.clone(),
            biases: self.mlp.biases.clone(),
            feature_norm: self.feature_norm.clone(),
            target_norm: self.target_norm.clone(),
            train_metadata: self.metadata.clone(),
        }
    }

    pub fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Version { expected: MODEL_FORMAT_VERSION, found: doc.version });
        }
        doc.stencil_spec.validate()?;
        let mlp = Mlp { sizes: doc.layer_sizes, weights: doc.weights, biases: doc.biases };
        mlp.validate()?;
        if mlp.input_dim() != doc.stencil_spec.input_dim() {
            return Err(Error::Data("network input size does not match stencil".into()));
        }
        if doc.feature_norm.mean.len() != doc.stencil_spec.channels.len()
            || doc.feature_norm.std.len() != doc.feature_norm.mean.len()
            || doc.target_norm.mean.len() != mlp.output_dim()
            || doc.target_norm.std.len() != mlp.output_dim()
        {
            return Err(Error::Data("normalization statistics have the wrong shape".into()));
        }
        if doc.feature_norm.std.iter().chain(&doc.target_norm.std).any(|&s| !(s > 0.0)) {
            return Err(Error::Data("normalization standard deviations must be positive".into()));
        }
        Ok(Self {
            stencil: doc.stencil_spec,
            mlp,
            feature_norm: doc.feature_norm,
            target_norm: doc.target_norm,
            metadata: doc.train_metadata,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the serialized model, for run manifests.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }
}

/// Versioned JSON form of a [`CorrectorNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub stencil_spec: StencilSpec,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub feature_norm: Normalizer,
    pub target_norm: Normalizer,
    pub train_metadata: TrainMetadata,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Channel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn one_unit_net() -> CorrectorNet {
        let mlp = Mlp {
            sizes: vec![1, 1, 1],
            weights: vec![vec![1.0], vec![3.0]],
            biases: vec![vec![-1.0], vec![0.0]],
        };
        CorrectorNet {
            stencil: StencilSpec::new(1, vec![Channel::Position(0)], 0.1).unwrap(),
            mlp,
            feature_norm: Normalizer::identity(1),
            target_norm: Normalizer::identity(1),
            metadata: TrainMetadata::default(),
        }
    }

    #[test]
    fn hand_computed_forward_pass() {
        let net = one_unit_net();
        assert_eq!(net.infer(&[2.0]).unwrap(), vec![3.0]);
        assert_eq!(net.infer(&[0.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_network_outputs_target_mean() {
        let mut net = one_unit_net();
        net.mlp = Mlp::zeros(&[1, 4, 4, 1]).unwrap();
        net.target_norm = Normalizer { mean: vec![0.7], std: vec![2.0] };
        assert_eq!(net.infer(&[123.0]).unwrap(), vec![0.7]);
    }

    #[test]
    fn dimension_mismatch_is_contract_error() {
        assert!(matches!(one_unit_net().infer(&[1.0, 2.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let net = one_unit_net();
        let back = CorrectorNet::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        let mut doc = net.to_document();
        doc.version = 99;
        let err = CorrectorNet::from_document(doc).unwrap_err();
        assert!(matches!(err, Error::Version { expected: 1, found: 99 }));
        let mut doc = net.to_document();
        doc.weights[0].push(1.0);
        assert!(CorrectorNet::from_document(doc).is_err());
    }

    #[test]
    fn hash_is_stable() {
        let net = one_unit_net();
        assert_eq!(net.hash().unwrap(), net.clone().hash().unwrap());
        assert_eq!(net.hash().unwrap().len(), 64);
    }

    #[test]
    fn normalizer_groups_channels() {
        // two channels of width 2
        let rows = [1.0, 3.0, 10.0, 10.0, 3.0, 1.0, 10.0, 10.0];
        let n = Normalizer::fit(&rows, 4, 2);
        assert_eq!(n.mean, vec![2.0, 10.0]);
        assert_eq!(n.std, vec![1.0, 1.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::zeros(&[4, 6, 5, 2]).unwrap();
        for w in net.weights.iter_mut().chain(net.biases.iter_mut()) {
            w.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = [0.3, -0.2];
        let loss = |n: &Mlp| {
            let o = n.forward(&x);
            0.5 * o.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };
        let mut acts = Vec::new();
        net.forward_trace(&x, &mut acts);
        let out = acts.last().unwrap();
        let d_out: Vec<f64> = out.iter().zip(&y).map(|(a, b)| a - b).collect();
        let mut grads = Params::zeros_like(&net);
        net.backward(&acts, &d_out, &mut grads, &mut (Vec::new(), Vec::new()));
        let h = 1e-6;
        for l in 0..net.weights.len() {
            for i in 0..net.weights[l].len() {
                let mut p = net.clone();
                p.weights[l][i] += h;
                let mut m = net.clone();
                m.weights[l][i] -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                let an = grads.weights[l][i];
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "w[{l}][{i}]: {an} vs {fd}");
            }
        }
    }

    proptest! {
        #[test]
        fn normalization_round_trip(x in prop::collection::vec(-1e6f64..1e6, 6), m in -10.0f64..10.0, s in 0.01f64..100.0) {
            let n = Normalizer { mean: vec![m, -m, 0.5 * m], std: vec![s, 2.0 * s, 0.5 * s] };
            let mut z = Vec::new();
            n.normalize(&x, &mut z);
            let back = n.denormalize(&z);
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
