//! Configuration-driven experiment studies.
//!
//! A study is a grid of hermetic training cells `(k, budget, train seed,
//! model)`. Each cell trains its corrector(s) on a reference record from the
//! training sea state, then predicts every test sea state for every test seed
//! and scores the prediction against the reference response. Cells run in
//! parallel; results are gathered and written in a fixed order, so output is
//! independent of scheduling.
//!
//! Output layout under the study directory:
//!
//! ```text
//! plan.json  results.csv  [convergence.csv]
//! manifests/<run>.json  models/<run>_<dof>.json  [trajectories/*.csv]
//! ```

mod duffing;
mod ship;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corrector::TrainConfig;
use crate::duffing::{DuffingParams, ForcingModelId};
use crate::error::{Error, Result};
use crate::metrics::{compare, PdfSettings};
use crate::trajectory::{Channel, Trajectory};
use crate::vessel::{OracleNonlinearity, VesselDefinition};

pub use duffing::{duffing_training_record, DuffingTrainingRecord};
pub use ship::ship_training_record;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    #[serde(rename = "duffing-trainsize")]
    DuffingTrainSize,
    DuffingHsSweep,
    StencilSweep,
    #[serde(rename = "trainsize-6dof")]
    TrainSizeSweep6Dof,
    SeawayGrid,
}

impl Study {
    pub const ALL: [Study; 5] = [
        Study::DuffingTrainSize,
        Study::DuffingHsSweep,
        Study::StencilSweep,
        Study::TrainSizeSweep6Dof,
        Study::SeawayGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::DuffingTrainSize => "duffing-trainsize",
            Study::DuffingHsSweep => "duffing-hs-sweep",
            Study::StencilSweep => "stencil-sweep",
            Study::TrainSizeSweep6Dof => "trainsize-6dof",
            Study::SeawayGrid => "seaway-grid",
        }
    }

    pub fn is_ship(self) -> bool {
        matches!(self, Study::StencilSweep | Study::TrainSizeSweep6Dof | Study::SeawayGrid)
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Study::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown study {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Sea state: `Hs` plus the peak frequency (oscillator studies, rad/s) or the
/// peak period (ship studies, s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaState {
    #[serde(rename = "Hs")]
    pub hs: f64,
    pub tp_or_wp: f64,
}

impl SeaState {
    pub fn new(hs: f64, tp_or_wp: f64) -> Self {
        Self { hs, tp_or_wp }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub study: Study,
    pub train_condition: SeaState,
    pub test_conditions: Vec<SeaState>,
    /// Low-fidelity force models (oscillator studies only).
    pub models: Vec<ForcingModelId>,
    pub stencil_k: Vec<usize>,
    /// Training budgets: zero up-crossings for the oscillator, seconds after
    /// the transient for the ship.
    pub budgets: Vec<f64>,
    pub train_seeds: Vec<u64>,
    pub test_seeds: Vec<u64>,
    pub dt: f64,
    pub test_duration: f64,
    pub transient_cutoff: f64,
    pub train: TrainConfig,
    pub pdf: PdfSettings,
    pub duffing: DuffingParams,
    pub vessel: VesselDefinition,
    /// Defaults to [`OracleNonlinearity::fds_default`].
    pub oracle: Option<OracleNonlinearity>,
    /// JONSWAP peak-shape factor for ship studies.
    pub gamma: f64,
    pub output_dir: PathBuf,
    pub export_trajectories: bool,
    pub threads: Option<usize>,
}

impl ExperimentPlan {
    /// The configuration each study uses unless overridden.
    pub fn for_study(study: Study) -> Self {
        let mut plan = Self {
            study,
            train_condition: SeaState::new(1.0, 1.0),
            test_conditions: vec![SeaState::new(1.0, 1.0)],
            models: ForcingModelId::ALL.to_vec(),
            stencil_k: vec![5],
            budgets: vec![100.0],
            train_seeds: vec![1, 2, 3],
            test_seeds: vec![1001],
            dt: 0.1,
            test_duration: 1000.0,
            transient_cutoff: crate::duffing::TRANSIENT_CUTOFF,
            train: TrainConfig::default(),
            pdf: PdfSettings::default(),
            duffing: DuffingParams::default(),
            vessel: VesselDefinition::fds(),
            oracle: None,
            gamma: 1.0,
            output_dir: PathBuf::from(study.name()),
            export_trajectories: false,
            threads: None,
        };
        let ship_grid = || {
            let mut v = Vec::new();
            for hs in [2.0, 4.0, 6.0] {
                for tp in [7.5, 8.5, 9.5] {
                    v.push(SeaState::new(hs, tp));
                }
            }
            v
        };
        match study {
            Study::DuffingTrainSize => {
                plan.budgets = vec![10.0, 25.0, 50.0, 100.0, 200.0, 500.0, 1000.0];
                plan.train_seeds = vec![1];
            }
            Study::DuffingHsSweep => {
                plan.test_conditions = [0.01, 0.25, 0.5, 1.0, 1.5].iter().map(|&h| SeaState::new(h, 1.0)).collect();
            }
            Study::StencilSweep | Study::TrainSizeSweep6Dof | Study::SeawayGrid => {
                plan.train_condition = SeaState::new(4.0, 8.5);
                plan.models = Vec::new();
                plan.stencil_k = vec![10];
                plan.budgets = vec![100.0];
                plan.train_seeds = vec![1];
                plan.test_duration = 600.0;
                plan.transient_cutoff = crate::vessel::TRANSIENT_CUTOFF;
                plan.test_conditions = ship_grid();
                if study == Study::StencilSweep {
                    plan.stencil_k = vec![1, 2, 5, 10, 20, 50, 100];
                    plan.budgets = vec![550.0];
                    plan.test_conditions = vec![SeaState::new(4.0, 8.5), SeaState::new(2.0, 9.5), SeaState::new(6.0, 7.5)];
                }
                if study == Study::TrainSizeSweep6Dof {
                    plan.budgets = vec![10.0, 25.0, 50.0, 100.0, 200.0, 350.0, 550.0];
                    plan.test_conditions = vec![SeaState::new(4.0, 8.5), SeaState::new(2.0, 9.5), SeaState::new(6.0, 7.5)];
                }
            }
        }
        plan
    }

    /// Study defaults overridden by the top-level keys of a JSON object. The
    /// object must name its study unless `study` is given.
    pub fn from_json_overrides(text: &str, study: Option<Study>) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("plan configuration is not valid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("plan configuration must be a JSON object".into()))?;
        let study = match (study, obj.get("study")) {
            (Some(s), _) => s,
            (None, Some(v)) => serde_json::from_value(v.clone())?,
            (None, None) => return Err(Error::Config("plan configuration does not name a study".into())),
        };
        let mut base = serde_json::to_value(Self::for_study(study))?;
        let base_obj = base.as_object_mut().expect("plan serializes to an object");
        for (k, v) in obj {
            if !base_obj.contains_key(k) {
                return Err(Error::Config(format!("unknown plan field {k:?}")));
            }
            base_obj.insert(k.clone(), v.clone());
        }
        base_obj.insert("study".into(), serde_json::to_value(study)?);
        let plan: Self = serde_json::from_value(base).map_err(|e| Error::Config(format!("invalid plan: {e}")))?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0) {
            return cfg(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.transient_cutoff >= 0.0) || !(self.test_duration > self.transient_cutoff + self.dt) {
            return cfg("test_duration must exceed the transient cutoff".into());
        }
        if self.test_conditions.is_empty() {
            return cfg("at least one test condition is required".into());
        }
        for c in self.test_conditions.iter().chain([&self.train_condition]) {
            if !(c.hs >= 0.0) || !(c.tp_or_wp > 0.0) {
                return cfg(format!("invalid sea state {c:?}"));
            }
        }
        if !(self.train_condition.hs > 0.0) {
            return cfg("training sea state needs Hs > 0".into());
        }
        if self.stencil_k.is_empty() || self.stencil_k.contains(&0) {
            return cfg("stencil_k must list lengths >= 1".into());
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|b| !(*b > 0.0)) {
            return cfg("budgets must be positive".into());
        }
        if self.train_seeds.is_empty() || self.test_seeds.is_empty() {
            return cfg("train_seeds and test_seeds must be non-empty".into());
        }
        let train: BTreeSet<_> = self.train_seeds.iter().collect();
        if let Some(s) = self.test_seeds.iter().find(|s| train.contains(s)) {
            return cfg(format!("seed {s} is used for both training and testing"));
        }
        if self.study.is_ship() {
            self.vessel.assemble()?;
            if let Some(o) = &self.oracle {
                o.validate()?;
            }
            if !(self.gamma >= 1.0) {
                return cfg("gamma must be >= 1".into());
            }
        } else {
            if self.models.is_empty() {
                return cfg("at least one forcing model is required".into());
            }
            self.duffing.validate()?;
        }
        self.train.validate()?;
        if self.pdf.bins < 2 || !(self.pdf.support_sigmas > 0.0) {
            return cfg("pdf settings need >= 2 bins and a positive support".into());
        }
        if self.threads == Some(0) {
            return cfg("threads must be >= 1".into());
        }
        Ok(())
    }
}

/// One results.csv row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub study: String,
    pub run_id: String,
    #[serde(rename = "Hs")]
    pub hs: f64,
    pub tp_or_wp: f64,
    pub model_id: String,
    pub dof: String,
    pub quantity: String,
    pub k: usize,
    pub budget: f64,
    pub n_zuc: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub l2: f64,
    pub linf: f64,
    pub jsd: f64,
    pub n_samples: usize,
}

/// Training provenance for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub study: Study,
    pub model_id: String,
    pub k: usize,
    pub budget: f64,
    pub n_zuc: usize,
    pub train_seed: u64,
    pub net_seeds: Vec<u64>,
    pub train_condition: SeaState,
    pub train_samples: usize,
    pub dt: f64,
    pub transient_cutoff: f64,
    pub train: TrainConfig,
    pub models: Vec<ModelRecord>,
    pub test_conditions: Vec<SeaState>,
    pub test_seeds: Vec<u64>,
    /// Oscillator coefficients or vessel definition, whichever applies.
    pub physics: serde_json::Value,
    pub constrained_dofs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub dof: String,
    pub file: String,
    pub sha256: String,
    pub train_rows: usize,
    pub epochs_run: usize,
    pub validation_mse: f64,
}

/// Error change between successive budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub model_id: String,
    pub budget: f64,
    /// Median over training seeds of the mean JSD over all scored quantities.
    pub jsd: f64,
    /// `|jsd(next) - jsd| / jsd`, empty for the last budget.
    pub change_to_next: Option<f64>,
    /// The smallest budget whose change to the next is below the threshold.
    pub converged: bool,
}

pub const CONVERGENCE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub dir: PathBuf,
    pub rows: Vec<StudyRow>,
    pub manifests: Vec<RunManifest>,
    pub convergence: Vec<ConvergenceRow>,
}

impl StudyOutput {
    /// Rows matching a model and quantity, in output order.
    pub fn select<'a>(&'a self, model_id: &'a str, dof: &'a str, quantity: &'a str) -> impl Iterator<Item = &'a StudyRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.model_id == model_id && r.dof == dof && r.quantity == quantity)
    }
}

/// Runs a study and writes its output directory.
pub fn run_study(plan: &ExperimentPlan) -> Result<StudyOutput> {
    plan.validate()?;
    let run = || match plan.study.is_ship() {
        true => ship::run(plan),
        false => duffing::run(plan),
    };
    let (rows, manifests, artifacts) = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let convergence = convergence_table(&rows, &plan.budgets);
    let dir = plan.output_dir.clone();
    write_outputs(&dir, plan, &rows, &manifests, &artifacts, &convergence)?;
    Ok(StudyOutput { dir, rows, manifests, convergence })
}

/// Files produced by a cell, written after all cells finish.
#[derive(Debug, Clone, Default)]
pub(crate) struct Artifacts {
    pub models: Vec<(String, String)>,
    pub trajectories: Vec<(String, String)>,
}

fn write_outputs(
    dir: &Path,
    plan: &ExperimentPlan,
    rows: &[StudyRow],
    manifests: &[RunManifest],
    artifacts: &Artifacts,
    convergence: &[ConvergenceRow],
) -> Result<()> {
    fs::create_dir_all(dir.join("manifests"))?;
    fs::create_dir_all(dir.join("models"))?;
    fs::write(dir.join("plan.json"), serde_json::to_string_pretty(plan)?)?;
    let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    for m in manifests {
        fs::write(dir.join("manifests").join(format!("{}.json", m.run_id)), serde_json::to_string_pretty(m)?)?;
    }
    for (name, text) in &artifacts.models {
        fs::write(dir.join("models").join(name), text)?;
    }
    if !artifacts.trajectories.is_empty() {
        fs::create_dir_all(dir.join("trajectories"))?;
        for (name, text) in &artifacts.trajectories {
            fs::write(dir.join("trajectories").join(name), text)?;
        }
    }
    if plan.budgets.len() > 1 {
        let mut w = csv::Writer::from_path(dir.join("convergence.csv"))?;
        for r in convergence {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per model and budget: mean JSD over every scored (condition, test seed,
/// DOF, quantity), median over training seeds.
pub fn convergence_table(rows: &[StudyRow], budgets: &[f64]) -> Vec<ConvergenceRow> {
    let models: BTreeSet<&str> = rows.iter().filter(|r| r.train_seed != 0).map(|r| r.model_id.as_str()).collect();
    let mut out = Vec::new();
    for model in models {
        let mut budgets: Vec<f64> = budgets.to_vec();
        budgets.sort_by(|a, b| a.total_cmp(b));
        let curve: Vec<f64> = budgets
            .iter()
            .map(|&b| {
                let seeds: BTreeSet<u64> = rows.iter().filter(|r| r.model_id == model && r.budget == b).map(|r| r.train_seed).collect();
                median(
                    seeds
                        .into_iter()
                        .map(|s| {
                            let v: Vec<f64> = rows
                                .iter()
                                .filter(|r| r.model_id == model && r.budget == b && r.train_seed == s)
                                .map(|r| r.jsd)
                                .collect();
                            v.iter().sum::<f64>() / v.len().max(1) as f64
                        })
                        .collect(),
                )
            })
            .collect();
        let mut found = false;
        for (i, &b) in budgets.iter().enumerate() {
            let change = curve.get(i + 1).map(|next| (next - curve[i]).abs() / curve[i]);
            let converged = !found && change.is_some_and(|c| c < CONVERGENCE_THRESHOLD);
            found |= converged;
            out.push(ConvergenceRow { model_id: model.to_string(), budget: b, jsd: curve[i], change_to_next: change, converged });
        }
    }
    out
}

pub(crate) const QUANTITIES: [(&str, fn(usize) -> Channel); 3] = [
    ("position", Channel::Position),
    ("velocity", Channel::Velocity),
    ("acceleration", Channel::Acceleration),
];

/// Scores position, velocity and acceleration of `dofs` after the cutoff.
#[allow(clippy::too_many_arguments)]
pub(crate) fn score(
    plan: &ExperimentPlan,
    pred: &Trajectory,
    reference: &Trajectory,
    dofs: &[usize],
    cell: &CellKey,
    model_id: &str,
    condition: SeaState,
    test_seed: u64,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for &d in dofs {
        for (quantity, ch) in QUANTITIES {
            let p = pred.window(ch(d), plan.transient_cutoff)?;
            let r = reference.window(ch(d), plan.transient_cutoff)?;
            let rep = compare(p, r, plan.pdf, plan.transient_cutoff)?;
            rows.push(StudyRow {
                study: plan.study.name().to_string(),
                run_id: cell.run_id.clone(),
                hs: condition.hs,
                tp_or_wp: condition.tp_or_wp,
                model_id: model_id.to_string(),
                dof: reference.dof_names[d].clone(),
                quantity: quantity.to_string(),
                k: cell.k,
                budget: cell.budget,
                n_zuc: cell.n_zuc,
                train_seed: cell.train_seed,
                test_seed,
                l2: rep.l2,
                linf: rep.linf,
                jsd: rep.jsd,
                n_samples: rep.n_samples,
            });
        }
    }
    Ok(rows)
}

/// Identity of a training cell, shared by the rows it produces.
#[derive(Debug, Clone)]
pub(crate) struct CellKey {
    pub run_id: String,
    pub k: usize,
    pub budget: f64,
    pub n_zuc: usize,
    pub train_seed: u64,
}

impl CellKey {
    /// Benchmark rows carry no training identity.
    pub fn benchmark() -> Self {
        Self { run_id: "linear".into(), k: 0, budget: 0.0, n_zuc: 0, train_seed: 0 }
    }
}

/// Deterministic net seed from the cell coordinates.
pub(crate) fn net_seed(train_seed: u64, salt: u64) -> u64 {
    train_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x}");
    s.replace('.', "p")
}

pub(crate) fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, &[])?;
    String::from_utf8(buf).map_err(|e| Error::Data(e.to_string()))
}

pub(crate) fn trajectory_name(model_id: &str, run_id: &str, c: SeaState, test_seed: u64) -> String {
    format!("{model_id}_{run_id}_hs{}_p{}_s{test_seed}.csv", fmt_num(c.hs), fmt_num(c.tp_or_wp))
}
