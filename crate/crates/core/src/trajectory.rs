use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A per-sample quantity that can feed a corrector stencil or a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Position(usize),
    Velocity(usize),
    Acceleration(usize),
    WaveElevation,
}

impl Channel {
    pub fn label(&self, dof_names: &[String]) -> String {
        let name = |d: &usize| dof_names.get(*d).cloned().unwrap_or_else(|| format!("dof{d}"));
        match self {
            Channel::Position(d) => name(d),
            Channel::Velocity(d) => format!("{}_dot", name(d)),
            Channel::Acceleration(d) => format!("{}_ddot", name(d)),
            Channel::WaveElevation => "eta".to_string(),
        }
    }
}

/// Uniformly sampled multi-DOF response record.
///
/// `positions[d][n]` is the position (or Euler angle) of DOF `d` at sample `n`;
/// velocities and accelerations follow the same layout. `delta` holds the force
/// correction that was applied at each sample and is empty when none was.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t0: f64,
    pub transient_cutoff: f64,
    pub dof_names: Vec<String>,
    pub eta: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn with_capacity(dt: f64, t0: f64, dof_names: Vec<String>, capacity: usize) -> Self {
        let ndof = dof_names.len();
        let make = || (0..ndof).map(|_| Vec::with_capacity(capacity)).collect::<Vec<_>>();
        Self {
            dt,
            t0,
            transient_cutoff: 0.0,
            dof_names,
            eta: Vec::with_capacity(capacity),
            positions: make(),
            velocities: make(),
            accelerations: make(),
            delta: make(),
        }
    }

    pub fn ndof(&self) -> usize {
        self.dof_names.len()
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }

    pub(crate) fn push(&mut self, eta: f64, pos: &[f64], vel: &[f64], acc: &[f64], delta: &[f64]) {
        self.eta.push(eta);
        for d in 0..self.ndof() {
            self.positions[d].push(pos[d]);
            self.velocities[d].push(vel[d]);
            self.accelerations[d].push(acc[d]);
            self.delta[d].push(delta[d]);
        }
    }

    pub fn channel(&self, ch: Channel) -> Result<&[f64]> {
        let check = |d: usize| {
            if d < self.ndof() {
                Ok(d)
            } else {
                Err(Error::Contract(format!(
                    "channel refers to DOF {d}, trajectory has {}",
                    self.ndof()
                )))
            }
        };
        Ok(match ch {
            Channel::Position(d) => &self.positions[check(d)?],
            Channel::Velocity(d) => &self.velocities[check(d)?],
            Channel::Acceleration(d) => &self.accelerations[check(d)?],
            Channel::WaveElevation => &self.eta,
        })
    }

    /// Index of the first sample with `t >= transient_cutoff`.
    pub fn first_usable_index(&self) -> usize {
        first_index_at_or_after(self.t0, self.dt, self.transient_cutoff).min(self.len())
    }

    /// Samples of `ch` at or after `cutoff` seconds.
    pub fn window(&self, ch: Channel, cutoff: f64) -> Result<&[f64]> {
        let start = first_index_at_or_after(self.t0, self.dt, cutoff).min(self.len());
        Ok(&self.channel(ch)?[start..])
    }

    /// First `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let cut = |v: &Vec<Vec<f64>>| v.iter().map(|c| c[..n.min(c.len())].to_vec()).collect();
        Self {
            dt: self.dt,
            t0: self.t0,
            transient_cutoff: self.transient_cutoff,
            dof_names: self.dof_names.clone(),
            eta: self.eta[..n].to_vec(),
            positions: cut(&self.positions),
            velocities: cut(&self.velocities),
            accelerations: cut(&self.accelerations),
            delta: cut(&self.delta),
        }
    }

    /// CSV with `t, eta`, then position/velocity/acceleration per DOF, then the
    /// applied correction per DOF, then any `extra` named columns.
    pub fn write_csv<W: Write>(&self, out: W, extra: &[(&str, &[f64])]) -> Result<()> {
        for (name, col) in extra {
            if col.len() != self.len() {
                return Err(Error::Data(format!(
                    "extra column {name} has {} rows, trajectory has {}",
                    col.len(),
                    self.len()
                )));
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "eta".to_string()];
        for d in 0..self.ndof() {
            header.push(Channel::Position(d).label(&self.dof_names));
            header.push(Channel::Velocity(d).label(&self.dof_names));
            header.push(Channel::Acceleration(d).label(&self.dof_names));
        }
        for name in &self.dof_names {
            header.push(format!("delta_{name}"));
        }
        header.extend(extra.iter().map(|(n, _)| n.to_string()));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for n in 0..self.len() {
            row.clear();
            row.push(self.time(n));
            row.push(self.eta[n]);
            for d in 0..self.ndof() {
                row.push(self.positions[d][n]);
                row.push(self.velocities[d][n]);
                row.push(self.accelerations[d][n]);
            }
            for d in 0..self.ndof() {
                row.push(self.delta[d].get(n).copied().unwrap_or(0.0));
            }
            row.extend(extra.iter().map(|(_, c)| c[n]));
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
    /// Inverse of [`Trajectory::write_csv`]. Extra columns are ignored; the
    /// transient cutoff is not stored and comes back as zero.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != "t" || header[1] != "eta" {
            return Err(Error::Data("trajectory CSV must start with columns t, eta".into()));
        }
        let mut dof_names = Vec::new();
        let mut i = 2;
        while i + 2 < header.len() && !header[i].starts_with("delta_") {
            let name = &header[i];
            if header[i + 1] != format!("{name}_dot") || header[i + 2] != format!("{name}_ddot") {
                return Err(Error::Data(format!("unexpected trajectory columns after {name}")));
            }
            dof_names.push(name.clone());
            i += 3;
        }
        let ndof = dof_names.len();
        let has_delta = (0..ndof).all(|d| header.get(i + d) == Some(&format!("delta_{}", dof_names[d])));
        let mut times = Vec::new();
        let mut traj = Trajectory::with_capacity(0.0, 0.0, dof_names, 0);
        let zeros = vec![0.0; ndof];
        for rec in r.records() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Data(format!("bad number {x:?}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() < 2 + 3 * ndof {
                return Err(Error::Data(format!("short trajectory row at t = {}", v.first().unwrap_or(&f64::NAN))));
            }
            times.push(v[0]);
            let pick = |o: usize| (0..ndof).map(|d| v[2 + 3 * d + o]).collect::<Vec<_>>();
            let delta = if has_delta { v[i..i + ndof].to_vec() } else { zeros.clone() };
            traj.push(v[1], &pick(0), &pick(1), &pick(2), &delta);
        }
        if times.len() < 2 {
            return Err(Error::Data("trajectory CSV needs at least two rows".into()));
        }
        traj.t0 = times[0];
        traj.dt = times[1] - times[0];
        if !(traj.dt > 0.0) {
            return Err(Error::Data("trajectory times must increase".into()));
        }
        for (n, t) in times.iter().enumerate() {
            if (t - traj.time(n)).abs() > 1e-6 * traj.dt.max(1.0) {
                return Err(Error::Data(format!("non-uniform sampling at row {n}")));
            }
        }
        Ok(traj)
    }
}

pub(crate) fn first_index_at_or_after(t0: f64, dt: f64, cutoff: f64) -> usize {
    if cutoff <= t0 {
        return 0;
    }
    // tolerate rounding in t0 + n dt
    ((cutoff - t0) / dt - 1e-9).ceil() as usize
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}
