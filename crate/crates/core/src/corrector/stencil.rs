use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Channel, Trajectory};

/// Which samples feed the network: the `k` most recent values of each channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilSpec {
    pub k: usize,
    pub channels: Vec<Channel>,
    pub dt: f64,
}

impl StencilSpec {
    pub fn new(k: usize, channels: Vec<Channel>, dt: f64) -> Result<Self> {
        let spec = Self { k, channels, dt };
        spec.validate()?;
        Ok(spec)
    }

    /// Position, velocity and acceleration of each listed DOF, then elevation.
    pub fn state_and_elevation(k: usize, dofs: &[usize], dt: f64) -> Result<Self> {
        let mut channels = Vec::with_capacity(3 * dofs.len() + 1);
        for &d in dofs {
            channels.extend([Channel::Position(d), Channel::Velocity(d), Channel::Acceleration(d)]);
        }
        channels.push(Channel::WaveElevation);
        Self::new(k, channels, dt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("stencil length k must be >= 1".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("stencil needs at least one channel".into()));
        }
        for (i, c) in self.channels.iter().enumerate() {
            if self.channels[..i].contains(c) {
                return Err(Error::Config(format!("duplicate stencil channel {c:?}")));
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("stencil dt must be > 0".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.k * self.channels.len()
    }

    /// Flattened window of samples `n - k + 1 ..= n`, channel-major.
    pub fn window(&self, traj: &Trajectory, n: usize, out: &mut Vec<f64>) -> Result<()> {
        if n + 1 < self.k || n >= traj.len() {
            return Err(Error::Contract(format!(
                "window ending at sample {n} needs {} prior samples of {}",
                self.k,
                traj.len()
            )));
        }
        out.clear();
        for &ch in &self.channels {
            out.extend_from_slice(&traj.channel(ch)?[n + 1 - self.k..=n]);
        }
        Ok(())
    }
}

/// Row-major training pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub stencil: StencilSpec,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        if self.input_dim == 0 {
            0
        } else {
            self.inputs.len() / self.input_dim
        }
    }

    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target_row(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    /// Rows in `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_dim);
        let mut targets = Vec::with_capacity(indices.len() * self.output_dim);
        for &i in indices {
            inputs.extend_from_slice(self.input_row(i));
            targets.extend_from_slice(self.target_row(i));
        }
        Dataset {
            stencil: self.stencil.clone(),
            inputs,
            targets,
            input_dim: self.input_dim,
            output_dim: self.output_dim,
        }
    }
}

/// Pairs each stencil window ending at sample `n` with the correction at
/// `n + 1`. Samples before the trajectory's transient cutoff are excluded, and
/// the first window ends `k` samples after the first usable one, mirroring the
/// `k`-step warm-up of a hybrid run.
pub fn build_dataset(traj: &Trajectory, targets: &[&[f64]], spec: &StencilSpec) -> Result<Dataset> {
    spec.validate()?;
    if targets.is_empty() {
        return Err(Error::Data("at least one target series is required".into()));
    }
    if let Some(t) = targets.iter().find(|t| t.len() != traj.len()) {
        return Err(Error::Data(format!(
            "target series has {} samples, trajectory has {}",
            t.len(),
            traj.len()
        )));
    }
    let start = traj.first_usable_index();
    let usable = traj.len() - start;
    if usable < spec.k + 2 {
        return Err(Error::Data(format!(
            "{usable} usable samples, stencil length {} needs at least {}",
            spec.k,
            spec.k + 2
        )));
    }
    let rows = usable - spec.k - 1;
    let mut inputs = Vec::with_capacity(rows * spec.input_dim());
    let mut out = Vec::with_capacity(rows * targets.len());
    let mut window = Vec::with_capacity(spec.input_dim());
    for n in start + spec.k..traj.len() - 1 {
        spec.window(traj, n, &mut window)?;
        inputs.extend_from_slice(&window);
        out.extend(targets.iter().map(|t| t[n + 1]));
    }
    Ok(Dataset {
        stencil: spec.clone(),
        inputs,
        targets: out,
        input_dim: spec.input_dim(),
        output_dim: targets.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize, cutoff: f64) -> Trajectory {
        let mut tr = Trajectory::with_capacity(1.0, 0.0, vec!["z".into()], len);
        for n in 0..len {
            let x = n as f64;
            tr.push(1000.0 + x, &[x], &[100.0 + x], &[200.0 + x], &[0.0]);
        }
        tr.transient_cutoff = cutoff;
        tr
    }

    #[test]
    fn index_arithmetic() {
        let tr = ramp(12, 0.0);
        let spec = StencilSpec::state_and_elevation(5, &[0], 1.0).unwrap();
        let delta: Vec<f64> = (0..12).map(|n| n as f64 * 10.0).collect();
        let ds = build_dataset(&tr, &[&delta], &spec).unwrap();
        assert_eq!(ds.rows(), 6);
        assert_eq!(ds.input_dim, 20);
        assert_eq!(ds.targets, vec![60.0, 70.0, 80.0, 90.0, 100.0, 110.0]);
        // first row: positions 1..=5 then velocities, accelerations, elevation
        assert_eq!(&ds.input_row(0)[..5], &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(&ds.input_row(0)[5..10], &[101.0, 102.0, 103.0, 104.0, 105.0]);
        assert_eq!(&ds.input_row(0)[15..20], &[1001.0, 1002.0, 1003.0, 1004.0, 1005.0]);
    }

    #[test]
    fn single_lag_single_channel() {
        let tr = ramp(5, 0.0);
        let spec = StencilSpec::new(1, vec![Channel::Position(0)], 1.0).unwrap();
        let delta: Vec<f64> = (0..5).map(|n| -(n as f64)).collect();
        let ds = build_dataset(&tr, &[&delta], &spec).unwrap();
        for i in 0..ds.rows() {
            let x = ds.input_row(i)[0];
            assert_eq!(ds.target_row(i)[0], -(x + 1.0));
        }
    }

    #[test]
    fn transient_excluded() {
        let tr = ramp(20, 5.0);
        let spec = StencilSpec::new(2, vec![Channel::Position(0)], 1.0).unwrap();
        let delta = vec![0.0; 20];
        let ds = build_dataset(&tr, &[&delta], &spec).unwrap();
        assert_eq!(ds.rows(), 15 - 3);
        assert_eq!(ds.input_row(0), &[6.0, 7.0]);
    }

    #[test]
    fn too_short_is_data_error() {
        let tr = ramp(6, 0.0);
        let spec = StencilSpec::new(5, vec![Channel::Position(0)], 1.0).unwrap();
        let delta = vec![0.0; 6];
        assert!(matches!(build_dataset(&tr, &[&delta], &spec), Err(Error::Data(_))));
        let tr = ramp(7, 0.0);
        assert_eq!(build_dataset(&tr, &[&[0.0; 7]], &spec).unwrap().rows(), 1);
    }

    #[test]
    fn misaligned_targets_rejected() {
        let tr = ramp(10, 0.0);
        let spec = StencilSpec::new(2, vec![Channel::Position(0)], 1.0).unwrap();
        assert!(matches!(build_dataset(&tr, &[&[0.0; 9]], &spec), Err(Error::Data(_))));
    }

    #[test]
    fn invalid_specs() {
        assert!(StencilSpec::new(0, vec![Channel::Position(0)], 0.1).is_err());
        assert!(StencilSpec::new(3, vec![], 0.1).is_err());
        assert!(StencilSpec::new(3, vec![Channel::WaveElevation, Channel::WaveElevation], 0.1).is_err());
    }
}
