use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::net::{CorrectorNet, Mlp, Normalizer, Params};
use super::stencil::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            validation_fraction: 0.1,
            patience: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Record of how a network was trained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMetadata {
    pub config: Option<TrainConfig>,
    pub hidden_layers: Vec<usize>,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Mean normalized MSE per epoch.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// Validation MSE of the returned weights, in target units.
    pub validation_mse: f64,
}

struct Adam {
    m: Params,
    v: Params,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(net: &Mlp, lr: f64) -> Self {
        Self { m: Params::zeros_like(net), v: Params::zeros_like(net), t: 0, lr }
    }

    fn step(&mut self, net: &mut Mlp, grads: &Params) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        };
        for l in 0..net.weights.len() {
            update(&mut net.weights[l], &grads.weights[l], &mut self.m.weights[l], &mut self.v.weights[l]);
            update(&mut net.biases[l], &grads.biases[l], &mut self.m.biases[l], &mut self.v.biases[l]);
        }
    }
}

/// He-uniform initialization scaled by fan-in, zero biases.
pub fn init_mlp(sizes: &[usize], rng: &mut ChaCha8Rng) -> Result<Mlp> {
    let mut net = Mlp::zeros(sizes)?;
    for (l, w) in net.weights.iter_mut().enumerate() {
        let limit = (6.0 / sizes[l] as f64).sqrt();
        w.iter_mut().for_each(|x| *x = rng.gen_range(-limit..limit));
    }
    Ok(net)
}

fn normalized(ds: &Dataset, fnorm: &Normalizer, tnorm: &Normalizer) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(ds.inputs.len());
    let mut buf = Vec::new();
    for i in 0..ds.rows() {
        fnorm.normalize(ds.input_row(i), &mut buf);
        xs.extend_from_slice(&buf);
    }
    let mut ys = Vec::with_capacity(ds.targets.len());
    for i in 0..ds.rows() {
        tnorm.normalize(ds.target_row(i), &mut buf);
        ys.extend_from_slice(&buf);
    }
    (xs, ys)
}

fn mse(net: &Mlp, xs: &[f64], ys: &[f64], rows: &[usize], din: usize, dout: usize) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for &r in rows {
        let out = net.forward(&xs[r * din..(r + 1) * din]);
        acc += out.iter().zip(&ys[r * dout..(r + 1) * dout]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    acc / (rows.len() * dout) as f64
}

/// Fits a network mapping stencil windows to corrections by minibatch Adam on
/// z-scored inputs and targets, keeping the weights with the best validation
/// loss. Deterministic for a fixed seed.
pub fn train(dataset: &Dataset, hidden: &[usize], cfg: &TrainConfig) -> Result<CorrectorNet> {
    cfg.validate()?;
    let rows = dataset.rows();
    if rows == 0 {
        return Err(Error::Data("training dataset is empty".into()));
    }
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(Error::Config(format!("hidden layer sizes must be >= 1, got {hidden:?}")));
    }
    let (din, dout) = (dataset.input_dim, dataset.output_dim);
    let mut sizes = vec![din];
    sizes.extend_from_slice(hidden);
    sizes.push(dout);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut rng);
    let n_val = ((rows as f64 * cfg.validation_fraction).round() as usize).min(rows - 1);
    let (val_rows, train_rows) = order.split_at(n_val);
    let (val_rows, mut train_rows) = (val_rows.to_vec(), train_rows.to_vec());

    let train_set = dataset.subset(&train_rows);
    let fnorm = Normalizer::fit(&train_set.inputs, din, dataset.stencil.channels.len());
    let tnorm = Normalizer::fit(&train_set.targets, dout, dout);
    let (xs, ys) = normalized(dataset, &fnorm, &tnorm);

    let mut net = init_mlp(&sizes, &mut rng)?;
    let mut adam = Adam::new(&net, cfg.learning_rate);
    let mut grads = Params::zeros_like(&net);
    let mut acts = Vec::new();
    let mut scratch = (Vec::new(), Vec::new());
    let mut d_out = vec![0.0; dout];

    let mut meta = TrainMetadata {
        config: Some(*cfg),
        hidden_layers: hidden.to_vec(),
        train_rows: train_rows.len(),
        validation_rows: val_rows.len(),
        ..TrainMetadata::default()
    };
    let mut best = (f64::INFINITY, net.clone(), 0usize);
    for epoch in 1..=cfg.epochs {
        train_rows.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_rows.chunks(cfg.batch_size) {
            grads.fill(0.0);
            let scale = 2.0 / (batch.len() * dout) as f64;
            for &r in batch {
                net.forward_trace(&xs[r * din..(r + 1) * din], &mut acts);
                let target = &ys[r * dout..(r + 1) * dout];
                for (j, (o, t)) in acts.last().unwrap().iter().zip(target).enumerate() {
                    let e = o - t;
                    epoch_loss += e * e;
                    d_out[j] = scale * e;
                }
                net.backward(&acts, &d_out, &mut grads, &mut scratch);
            }
            adam.step(&mut net, &grads);
        }
        let train_loss = epoch_loss / (train_rows.len() * dout) as f64;
        if !train_loss.is_finite() {
            return Err(Error::Training { epoch });
        }
        let monitor = if val_rows.is_empty() {
            train_loss
        } else {
            mse(&net, &xs, &ys, &val_rows, din, dout)
        };
        if !monitor.is_finite() {
            return Err(Error::Training { epoch });
        }
        meta.train_loss.push(train_loss);
        meta.validation_loss.push(monitor);
        meta.epochs_run = epoch;
        if monitor < best.0 {
            best = (monitor, net.clone(), epoch);
        } else if epoch - best.2 >= cfg.patience {
            break;
        }
    }
    let (best_loss, net, best_epoch) = best;
    meta.best_epoch = best_epoch;
    let tvar: f64 = tnorm.std.iter().map(|s| s * s).sum::<f64>() / dout as f64;
    meta.validation_mse = best_loss * tvar;
    Ok(CorrectorNet {
        stencil: dataset.stencil.clone(),
        mlp: net,
        feature_norm: fnorm,
        target_norm: tnorm,
        metadata: meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::stencil::StencilSpec;
    use crate::trajectory::Channel;

    fn scalar_dataset(f: impl Fn(f64) -> f64, n: usize) -> Dataset {
        let inputs: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
        let targets = inputs.iter().map(|&x| f(x)).collect();
        Dataset {
            stencil: StencilSpec::new(1, vec![Channel::Position(0)], 0.1).unwrap(),
            inputs,
            targets,
            input_dim: 1,
            output_dim: 1,
        }
    }

    #[test]
    fn constant_zero_target() {
        let ds = scalar_dataset(|_| 0.0, 200);
        let cfg = TrainConfig { epochs: 300, ..TrainConfig::default() };
        let net = train(&ds, &[8], &cfg).unwrap();
        for x in [-2.0, -1.0, 0.0, 1.5] {
            let y = net.infer(&[x]).unwrap()[0];
            assert!(y.abs() < 5e-2, "f({x}) = {y}");
        }
    }

    #[test]
    fn learns_linear_map() {
        let ds = scalar_dataset(|x| 2.0 * x, 400);
        let cfg = TrainConfig { epochs: 400, seed: 1, ..TrainConfig::default() };
        let net = train(&ds, &[16, 16], &cfg).unwrap();
        let var = 4.0 * 4.0 / 3.0; // variance of 2x, x ~ U(-2, 2)
        assert!(net.metadata.validation_mse < 1e-4 * var, "val mse {}", net.metadata.validation_mse);
        assert!((net.infer(&[0.5]).unwrap()[0] - 1.0).abs() < 0.02);
    }

    #[test]
    fn deterministic_for_seed() {
        let ds = scalar_dataset(|x| x * x, 100);
        let cfg = TrainConfig { epochs: 20, seed: 9, ..TrainConfig::default() };
        let a = train(&ds, &[5, 5], &cfg).unwrap();
        let b = train(&ds, &[5, 5], &cfg).unwrap();
        assert_eq!(a, b);
        let c = train(&ds, &[5, 5], &TrainConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.mlp, c.mlp);
    }

    #[test]
    fn divergence_reported_with_epoch() {
        let ds = scalar_dataset(|x| 2.0 * x, 50);
        let cfg = TrainConfig { epochs: 50, learning_rate: 1e300, ..TrainConfig::default() };
        match train(&ds, &[4], &cfg) {
            Err(Error::Training { epoch }) => assert!(epoch >= 1),
            other => panic!("expected a training error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_inputs() {
        let ds = scalar_dataset(|x| x, 10);
        assert!(train(&ds, &[], &TrainConfig::default()).is_err());
        assert!(train(&ds, &[0], &TrainConfig::default()).is_err());
        let empty = ds.subset(&[]);
        assert!(matches!(train(&empty, &[4], &TrainConfig::default()), Err(Error::Data(_))));
        let bad = TrainConfig { validation_fraction: 1.0, ..TrainConfig::default() };
        assert!(train(&ds, &[4], &bad).is_err());
    }
}
