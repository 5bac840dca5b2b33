use rayon::prelude::*;

use crate::corrector::{build_dataset, train, CorrectorNet, NetCorrector, StencilSpec, TrainConfig, SHIP_HIDDEN};
use crate::error::Result;
use crate::trajectory::Trajectory;
use crate::vessel::{
    extract_delta, predict, synthetic_high_fidelity, ExcitationModel, OracleNonlinearity, VesselModel, DOF_NAMES,
    HEAVE, PITCH, SURGE,
};
use crate::wave::{count_zuc, sample_realization, SpectrumSpec, WaveRealization};

use super::{
    net_seed, score, trajectory_csv, trajectory_name, Artifacts, CellKey, ExperimentPlan, ModelRecord, RunManifest,
    SeaState, StudyRow,
};

const CORRECTED: [usize; 2] = [HEAVE, PITCH];

/// Oracle record of `cutoff + seconds` taken from the start of a realization
/// of `realization_duration` seconds.
#[allow(clippy::too_many_arguments)]
pub fn ship_training_record(
    model: &VesselModel,
    excitation: &ExcitationModel,
    oracle: &OracleNonlinearity,
    spec: &SpectrumSpec,
    seconds: f64,
    seed: u64,
    dt: f64,
    cutoff: f64,
    realization_duration: f64,
) -> Result<(Trajectory, WaveRealization)> {
    let duration = cutoff + seconds;
    let waves = sample_realization(spec, realization_duration.max(duration), seed)?;
    let mut traj = synthetic_high_fidelity(model, excitation, &waves, oracle, duration, dt)?;
    traj.transient_cutoff = cutoff;
    Ok((traj, waves))
}

struct TestCase {
    condition: SeaState,
    seed: u64,
    waves: WaveRealization,
    reference: Trajectory,
}

type Output = (Vec<StudyRow>, Vec<RunManifest>, Artifacts);

struct Setup {
    model: VesselModel,
    excitation: ExcitationModel,
    oracle: OracleNonlinearity,
}

fn spectrum(plan: &ExperimentPlan, c: SeaState) -> Result<SpectrumSpec> {
    SpectrumSpec::jonswap(c.hs, c.tp_or_wp, plan.gamma)
}

pub(super) fn run(plan: &ExperimentPlan) -> Result<Output> {
    let model = plan.vessel.assemble()?;
    let excitation = ExcitationModel::box_hull(&model);
    let oracle = plan.oracle.unwrap_or_else(|| OracleNonlinearity::fds_default(&model));
    let setup = Setup { model, excitation, oracle };
    let train_spec = spectrum(plan, plan.train_condition)?;

    let record_keys: Vec<(u64, f64)> = plan
        .train_seeds
        .iter()
        .flat_map(|&s| plan.budgets.iter().map(move |&b| (s, b)))
        .collect();
    let records: Vec<(Trajectory, WaveRealization)> = record_keys
        .par_iter()
        .map(|&(seed, seconds)| {
            ship_training_record(
                &setup.model,
                &setup.excitation,
                &setup.oracle,
                &train_spec,
                seconds,
                seed,
                plan.dt,
                plan.transient_cutoff,
                plan.test_duration,
            )
        })
        .collect::<Result<_>>()?;

    let test_keys: Vec<(SeaState, u64)> = plan
        .test_conditions
        .iter()
        .flat_map(|&c| plan.test_seeds.iter().map(move |&s| (c, s)))
        .collect();
    let tests: Vec<TestCase> = test_keys
        .par_iter()
        .map(|&(condition, seed)| {
            let waves = sample_realization(&spectrum(plan, condition)?, plan.test_duration, seed)?;
            let reference = synthetic_high_fidelity(
                &setup.model,
                &setup.excitation,
                &waves,
                &setup.oracle,
                plan.test_duration,
                plan.dt,
            )?;
            Ok(TestCase { condition, seed, waves, reference })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut artifacts = Artifacts::default();
    let benchmark: Vec<(Vec<StudyRow>, Vec<(String, String)>)> = tests
        .par_iter()
        .map(|tc| {
            let pred = predict(&setup.model, &setup.excitation, &tc.waves, plan.test_duration, plan.dt, None)?;
            let rows = score(plan, &pred, &tc.reference, &CORRECTED, &CellKey::benchmark(), "linear", tc.condition, tc.seed)?;
            let mut files = Vec::new();
            if plan.export_trajectories {
                files.push((trajectory_name("linear", "benchmark", tc.condition, tc.seed), trajectory_csv(&pred)?));
                files.push((trajectory_name("reference", "oracle", tc.condition, tc.seed), trajectory_csv(&tc.reference)?));
            }
            Ok((rows, files))
        })
        .collect::<Result<_>>()?;
    for (r, f) in benchmark {
        rows.extend(r);
        artifacts.trajectories.extend(f);
    }

    let cells: Vec<(usize, usize)> = plan
        .stencil_k
        .iter()
        .flat_map(|&k| (0..record_keys.len()).map(move |ri| (k, ri)))
        .collect();
    let outputs: Vec<Output> = cells
        .par_iter()
        .map(|&(k, ri)| {
            let (seed, budget) = record_keys[ri];
            run_cell(plan, &setup, &records[ri], &tests, k, seed, budget)
        })
        .collect::<Result<_>>()?;
    let mut manifests = Vec::new();
    for (r, m, a) in outputs {
        rows.extend(r);
        manifests.extend(m);
        artifacts.models.extend(a.models);
        artifacts.trajectories.extend(a.trajectories);
    }
    Ok((rows, manifests, artifacts))
}

fn run_cell(
    plan: &ExperimentPlan,
    setup: &Setup,
    record: &(Trajectory, WaveRealization),
    tests: &[TestCase],
    k: usize,
    seed: u64,
    budget: f64,
) -> Result<Output> {
    let (traj, waves) = record;
    let run_id = format!("hybrid_k{k}_t{}_s{seed}", budget.round() as u64);
    log::info!("training {run_id}");
    let n_zuc = count_zuc(&traj.eta[traj.first_usable_index()..]);
    let delta = extract_delta(&setup.model, &setup.excitation, traj, waves)?;
    let stencil = StencilSpec::state_and_elevation(k, &CORRECTED, plan.dt)?;
    let mut nets: Vec<CorrectorNet> = Vec::new();
    let mut seeds = Vec::new();
    for &d in &CORRECTED {
        let dataset = build_dataset(traj, &[&delta[d]], &stencil)?;
        let nseed = net_seed(seed, (d as u64) << 32 | k as u64);
        seeds.push(nseed);
        nets.push(train(&dataset, &SHIP_HIDDEN, &TrainConfig { seed: nseed, ..plan.train })?);
    }
    let key = CellKey { run_id: run_id.clone(), k, budget, n_zuc, train_seed: seed };

    let mut rows = Vec::new();
    let mut artifacts = Artifacts::default();
    for tc in tests {
        let mut corrector = NetCorrector::new(6, CORRECTED.iter().copied().zip(nets.iter()).collect())?;
        let pred = predict(&setup.model, &setup.excitation, &tc.waves, plan.test_duration, plan.dt, Some(&mut corrector))?;
        rows.extend(score(plan, &pred, &tc.reference, &CORRECTED, &key, "hybrid", tc.condition, tc.seed)?);
        if plan.export_trajectories {
            artifacts.trajectories.push((trajectory_name("hybrid", &run_id, tc.condition, tc.seed), trajectory_csv(&pred)?));
        }
    }
    let mut records = Vec::new();
    for (&d, net) in CORRECTED.iter().zip(&nets) {
        let file = format!("{run_id}_{}.json", DOF_NAMES[d]);
        records.push(ModelRecord {
            dof: DOF_NAMES[d].into(),
            file: format!("models/{file}"),
            sha256: net.hash()?,
            train_rows: net.metadata.train_rows,
            epochs_run: net.metadata.epochs_run,
            validation_mse: net.metadata.validation_mse,
        });
        artifacts.models.push((file, net.to_json()?));
    }
    let manifest = RunManifest {
        run_id,
        study: plan.study,
        model_id: "hybrid".into(),
        k,
        budget,
        n_zuc,
        train_seed: seed,
        net_seeds: seeds,
        train_condition: plan.train_condition,
        train_samples: traj.len(),
        dt: plan.dt,
        transient_cutoff: plan.transient_cutoff,
        train: plan.train,
        models: records,
        test_conditions: plan.test_conditions.clone(),
        test_seeds: plan.test_seeds.clone(),
        physics: serde_json::json!({
            "vessel": plan.vessel,
            "oracle": setup.oracle,
            "gamma": plan.gamma,
            "excitation": "box-hull Froude-Krylov",
            "speed": setup.model.speed(),
        }),
        constrained_dofs: vec![DOF_NAMES[SURGE].into()],
    };
    Ok((rows, vec![manifest], artifacts))
}
