use rayon::prelude::*;

use crate::corrector::{build_dataset, train, NetCorrector, StencilSpec, TrainConfig, DUFFING_HIDDEN};
use crate::duffing::{extract_delta, predict, solve_high_fidelity, DuffingParams, ForcingModelId};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use crate::wave::{mean_zero_crossing_period, sample_realization, SpectrumSpec, WaveRealization};

use super::{
    net_seed, score, trajectory_csv, trajectory_name, Artifacts, CellKey, ExperimentPlan, ModelRecord, RunManifest,
    SeaState, StudyRow,
};

/// Reference record cut off right after its `n_zuc`-th zero up-crossing past
/// the transient.
#[derive(Debug, Clone)]
pub struct DuffingTrainingRecord {
    pub trajectory: Trajectory,
    pub waves: WaveRealization,
    pub n_zuc: usize,
}

pub fn duffing_training_record(
    params: &DuffingParams,
    spec: &SpectrumSpec,
    n_zuc: usize,
    seed: u64,
    dt: f64,
    cutoff: f64,
) -> Result<DuffingTrainingRecord> {
    if n_zuc == 0 {
        return Err(Error::Config("training budget must be at least one zero up-crossing".into()));
    }
    let tz = mean_zero_crossing_period(spec);
    let mut duration = cutoff + 1.5 * n_zuc as f64 * tz + 20.0;
    for _ in 0..4 {
        let waves = sample_realization(spec, duration, seed)?;
        let mut traj = solve_high_fidelity(params, &waves, duration, dt)?;
        traj.transient_cutoff = cutoff;
        let start = traj.first_usable_index();
        let eta = &traj.eta;
        let nth = (start..eta.len().saturating_sub(1))
            .filter(|&i| eta[i] < 0.0 && eta[i + 1] >= 0.0)
            .nth(n_zuc - 1);
        if let Some(i) = nth {
            let trajectory = traj.truncated(i + 2);
            return Ok(DuffingTrainingRecord { trajectory, waves, n_zuc });
        }
        duration *= 2.0;
    }
    Err(Error::Data(format!("could not collect {n_zuc} zero up-crossings")))
}

fn spectrum(c: SeaState) -> Result<SpectrumSpec> {
    SpectrumSpec::bretschneider(c.hs, c.tp_or_wp)
}

struct TestCase {
    condition: SeaState,
    seed: u64,
    waves: WaveRealization,
    reference: Trajectory,
}

type Output = (Vec<StudyRow>, Vec<RunManifest>, Artifacts);

pub(super) fn run(plan: &ExperimentPlan) -> Result<Output> {
    let p = plan.duffing;
    let train_spec = spectrum(plan.train_condition)?;

    let record_keys: Vec<(u64, f64)> = plan
        .train_seeds
        .iter()
        .flat_map(|&s| plan.budgets.iter().map(move |&b| (s, b)))
        .collect();
    let records: Vec<DuffingTrainingRecord> = record_keys
        .par_iter()
        .map(|&(seed, budget)| {
            duffing_training_record(&p, &train_spec, budget.round().max(1.0) as usize, seed, plan.dt, plan.transient_cutoff)
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
            let waves = sample_realization(&spectrum(condition)?, plan.test_duration, seed)?;
            let reference = solve_high_fidelity(&p, &waves, plan.test_duration, plan.dt)?;
            Ok(TestCase { condition, seed, waves, reference })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut artifacts = Artifacts::default();
    let benchmark: Vec<(Vec<StudyRow>, Vec<(String, String)>)> = tests
        .par_iter()
        .map(|tc| {
            let pred = predict(ForcingModelId::A, &p, &tc.waves, plan.test_duration, plan.dt, None)?;
            let key = CellKey::benchmark();
            let rows = score(plan, &pred, &tc.reference, &[0], &key, "linear", tc.condition, tc.seed)?;
            let mut files = Vec::new();
            if plan.export_trajectories {
                files.push((trajectory_name("linear", "benchmark", tc.condition, tc.seed), trajectory_csv(&pred)?));
                files.push((trajectory_name("reference", "hf", tc.condition, tc.seed), trajectory_csv(&tc.reference)?));
            }
            Ok((rows, files))
        })
        .collect::<Result<_>>()?;
    for (r, f) in benchmark {
        rows.extend(r);
        artifacts.trajectories.extend(f);
    }

    let mut cells = Vec::new();
    for &k in &plan.stencil_k {
        for (ri, &(seed, budget)) in record_keys.iter().enumerate() {
            for &model in &plan.models {
                cells.push((k, ri, seed, budget, model));
            }
        }
    }
    let outputs: Vec<Output> = cells
        .par_iter()
        .map(|&(k, ri, seed, budget, model)| run_cell(plan, &records[ri], &tests, k, seed, budget, model))
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
    record: &DuffingTrainingRecord,
    tests: &[TestCase],
    k: usize,
    seed: u64,
    budget: f64,
    model: ForcingModelId,
) -> Result<Output> {
    let p = plan.duffing;
    let run_id = format!("{model}_k{k}_n{}_s{seed}", record.n_zuc);
    log::info!("training {run_id}");
    let delta = extract_delta(model, &p, &record.trajectory, &record.waves)?;
    let stencil = StencilSpec::state_and_elevation(k, &[0], plan.dt)?;
    let dataset = build_dataset(&record.trajectory, &[&delta], &stencil)?;
    let nseed = net_seed(seed, (model as u64) << 32 | k as u64);
    let net = train(&dataset, &DUFFING_HIDDEN, &TrainConfig { seed: nseed, ..plan.train })?;
    let key = CellKey { run_id: run_id.clone(), k, budget, n_zuc: record.n_zuc, train_seed: seed };

    let mut rows = Vec::new();
    let mut artifacts = Artifacts::default();
    for tc in tests {
        let mut corrector = NetCorrector::single(&net)?;
        let pred = predict(model, &p, &tc.waves, plan.test_duration, plan.dt, Some(&mut corrector))?;
        rows.extend(score(plan, &pred, &tc.reference, &[0], &key, &model.to_string(), tc.condition, tc.seed)?);
        if plan.export_trajectories {
            artifacts
                .trajectories
                .push((trajectory_name(&model.to_string(), &run_id, tc.condition, tc.seed), trajectory_csv(&pred)?));
        }
    }
    let file = format!("{run_id}_z.json");
    let manifest = RunManifest {
        run_id: run_id.clone(),
        study: plan.study,
        model_id: model.to_string(),
        k,
        budget,
        n_zuc: record.n_zuc,
        train_seed: seed,
        net_seeds: vec![nseed],
        train_condition: plan.train_condition,
        train_samples: record.trajectory.len(),
        dt: plan.dt,
        transient_cutoff: plan.transient_cutoff,
        train: plan.train,
        models: vec![ModelRecord {
            dof: "z".into(),
            file: format!("models/{file}"),
            sha256: net.hash()?,
            train_rows: net.metadata.train_rows,
            epochs_run: net.metadata.epochs_run,
            validation_mse: net.metadata.validation_mse,
        }],
        test_conditions: plan.test_conditions.clone(),
        test_seeds: plan.test_seeds.clone(),
        physics: serde_json::to_value(p)?,
        constrained_dofs: Vec::new(),
    };
    artifacts.models.push((file, net.to_json()?));
    Ok((rows, vec![manifest], artifacts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::count_zuc;

    #[test]
    fn record_holds_exact_crossing_count() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let r = duffing_training_record(&DuffingParams::default(), &spec, 12, 4, 0.1, 100.0).unwrap();
        let start = r.trajectory.first_usable_index();
        assert_eq!(count_zuc(&r.trajectory.eta[start..]), 12);
        let last = r.trajectory.len() - 1;
        assert!(r.trajectory.eta[last - 1] < 0.0 && r.trajectory.eta[last] >= 0.0);
        assert!(duffing_training_record(&DuffingParams::default(), &spec, 0, 4, 0.1, 100.0).is_err());
    }
}
