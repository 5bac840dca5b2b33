//! Command-line front end: single-step verbs for scripting and `study` for the
//! full sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use seacorr::corrector::{build_dataset, train, CorrectorNet, NetCorrector, StencilSpec, DUFFING_HIDDEN, SHIP_HIDDEN};
use seacorr::duffing::{self, ForcingModelId};
use seacorr::experiment::{run_study, ExperimentPlan, Study};
use seacorr::metrics::compare;
use seacorr::vessel::{self, ExcitationModel, OracleNonlinearity, VesselModel, HEAVE, PITCH};
use seacorr::wave::{sample_realization, SpectrumSpec, WaveRealization};
use seacorr::{Channel, Trajectory};

#[derive(Parser)]
#[command(name = "seacorr", version, about = "Hybrid physics + learned-correction motion simulation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON object overriding plan fields (physics, dt, training settings, ...).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Wave phase seed for `waves`; network seed for `train`; training seed for `study`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "SEACORR_OUT_DIR", default_value = "seacorr-out")]
    out_dir: PathBuf,
    /// Worker threads for `study` (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write every predicted and reference trajectory of a study.
    #[arg(long, global = true)]
    export_trajectories: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random-phase wave realization.
    Waves {
        #[arg(long, value_enum)]
        spectrum: SpectrumArg,
        #[arg(long)]
        hs: f64,
        /// Peak frequency (rad/s) for bretschneider, peak period (s) for jonswap.
        #[arg(long)]
        peak: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Reference response: the nonlinear oscillator or the synthetic ship oracle.
    Simulate {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        waves: PathBuf,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Force correction along a reference trajectory.
    ExtractDelta {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        waves: PathBuf,
    },
    /// Train corrector networks on a reference trajectory.
    Train {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        waves: PathBuf,
        /// Stencil length.
        #[arg(long)]
        k: Option<usize>,
        /// Samples before this time are not used for training.
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Low-fidelity prediction, corrected when networks are given.
    Predict {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        waves: PathBuf,
        #[arg(long)]
        duration: Option<f64>,
        /// Corrector network as DOF=PATH (or just PATH for the oscillator). Repeatable.
        #[arg(long = "net")]
        nets: Vec<String>,
    },
    /// L2, L-infinity and JSD of a prediction against a reference.
    Metrics {
        #[arg(long)]
        prediction: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Transient cutoff in seconds (default: the system's).
        #[arg(long)]
        cutoff: Option<f64>,
        #[arg(long, value_enum, default_value = "duffing")]
        system: SystemKind,
    },
    /// Run one of the predefined studies.
    Study {
        #[arg(value_parser = parse_study)]
        name: Study,
    },
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, value_enum, default_value = "duffing")]
    system: SystemKind,
    /// Forcing model A-E (oscillator only).
    #[arg(long, default_value = "A")]
    model: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpectrumArg {
    Bretschneider,
    Jonswap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemKind {
    Duffing,
    Ship,
}

impl SystemKind {
    fn name(self) -> &'static str {
        match self {
            SystemKind::Duffing => "duffing",
            SystemKind::Ship => "ship",
        }
    }
}

fn parse_study(s: &str) -> Result<Study, String> {
    s.parse::<Study>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<seacorr::Error>())
                .map(|e| e.category().exit_code())
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    fs::create_dir_all(&g.out_dir).with_context(|| format!("creating {}", g.out_dir.display()))?;
    match &cli.command {
        Command::Waves { spectrum, hs, peak, gamma, duration } => {
            let plan = plan_for(g, SystemKind::Ship)?;
            let spec = match spectrum {
                SpectrumArg::Bretschneider => SpectrumSpec::bretschneider(*hs, *peak)?,
                SpectrumArg::Jonswap => SpectrumSpec::jonswap(*hs, *peak, gamma.unwrap_or(plan.gamma))?,
            };
            let duration = duration.unwrap_or(plan.test_duration);
            let waves = sample_realization(&spec, duration, g.seed.unwrap_or(0))?;
            let json = g.out_dir.join("waves.json");
            waves.save_json(&json)?;
            let n = (duration / plan.dt).round() as usize + 1;
            let csv = g.out_dir.join("waves.csv");
            waves.write_elevation_csv(fs::File::create(&csv)?, plan.dt, n)?;
            report(&[&json, &csv]);
        }
        Command::Simulate { sys, waves, duration } => {
            let plan = plan_for(g, sys.system)?;
            let w = load_waves(waves)?;
            let duration = duration.unwrap_or(plan.test_duration);
            let traj = match sys.system {
                SystemKind::Duffing => duffing::solve_high_fidelity(&plan.duffing, &w, duration, plan.dt)?,
                SystemKind::Ship => {
                    let (model, ex, oracle) = ship_setup(&plan)?;
                    vessel::synthetic_high_fidelity(&model, &ex, &w, &oracle, duration, plan.dt)?
                }
            };
            let path = g.out_dir.join("reference.csv");
            write_trajectory(&traj, &path)?;
            let sidecar = serde_json::json!({
                "kind": "reference",
                "system": sys.system.name(),
                "physics": physics(&plan, sys.system)?,
                "dt": plan.dt,
                "duration": duration,
                "waves": waves,
                "realization": w.to_document(duration),
            });
            write_sidecar(&path, &sidecar)?;
            report(&[&path]);
        }
        Command::ExtractDelta { sys, trajectory, waves } => {
            let plan = plan_for(g, sys.system)?;
            let traj = read_trajectory(trajectory)?;
            let w = load_waves(waves)?;
            let delta = extract(&plan, sys, &traj, &w)?;
            let mut text = String::from("t");
            for name in &traj.dof_names {
                write!(text, ",delta_{name}")?;
            }
            text.push('\n');
            for n in 0..traj.len() {
                write!(text, "{}", traj.time(n))?;
                for d in &delta {
                    write!(text, ",{}", d[n])?;
                }
                text.push('\n');
            }
            let path = g.out_dir.join("delta.csv");
            fs::write(&path, text)?;
            report(&[&path]);
        }
        Command::Train { sys, trajectory, waves, k, cutoff } => {
            let plan = plan_for(g, sys.system)?;
            let mut traj = read_trajectory(trajectory)?;
            traj.transient_cutoff = cutoff.unwrap_or(plan.transient_cutoff);
            let w = load_waves(waves)?;
            let delta = extract(&plan, sys, &traj, &w)?;
            let k = k.unwrap_or(plan.stencil_k[0]);
            let (dofs, hidden): (Vec<usize>, &[usize]) = match sys.system {
                SystemKind::Duffing => (vec![0], &DUFFING_HIDDEN),
                SystemKind::Ship => (vec![HEAVE, PITCH], &SHIP_HIDDEN),
            };
            let stencil = StencilSpec::state_and_elevation(k, &dofs, plan.dt)?;
            let mut cfg = plan.train;
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            let dir = g.out_dir.join("models");
            fs::create_dir_all(&dir)?;
            let mut written = Vec::new();
            for &d in &dofs {
                let dataset = build_dataset(&traj, &[&delta[d]], &stencil)?;
                let net = train(&dataset, hidden, &cfg)?;
                let path = dir.join(format!("{}.json", traj.dof_names[d]));
                net.save(&path)?;
                log::info!("{}: {} rows, validation mse {:.3e}", traj.dof_names[d], net.metadata.train_rows, net.metadata.validation_mse);
                written.push(path);
            }
            report(&written.iter().map(|p| p.as_path()).collect::<Vec<_>>());
        }
        Command::Predict { sys, waves, duration, nets } => {
            let plan = plan_for(g, sys.system)?;
            let w = load_waves(waves)?;
            let duration = duration.unwrap_or(plan.test_duration);
            let names: Vec<&str> = match sys.system {
                SystemKind::Duffing => vec!["z"],
                SystemKind::Ship => vessel::DOF_NAMES.to_vec(),
            };
            let loaded = load_nets(nets, &names)?;
            let mut corrector = if loaded.is_empty() {
                None
            } else {
                Some(NetCorrector::new(names.len(), loaded.iter().map(|(d, n)| (*d, n)).collect())?)
            };
            let corr = corrector.as_mut().map(|c| c as &mut dyn seacorr::integrator::Corrector);
            let traj = match sys.system {
                SystemKind::Duffing => {
                    duffing::predict(forcing_model(sys)?, &plan.duffing, &w, duration, plan.dt, corr)?
                }
                SystemKind::Ship => {
                    let (model, ex, _) = ship_setup(&plan)?;
                    vessel::predict(&model, &ex, &w, duration, plan.dt, corr)?
                }
            };
            let path = g.out_dir.join("prediction.csv");
            write_trajectory(&traj, &path)?;
            let sidecar = serde_json::json!({
                "kind": "prediction",
                "system": sys.system.name(),
                "model": if sys.system == SystemKind::Duffing { sys.model.to_uppercase() } else { "linear".into() },
                "physics": physics(&plan, sys.system)?,
                "dt": plan.dt,
                "duration": duration,
                "waves": waves,
                "realization": w.to_document(duration),
                "nets": nets,
            });
            write_sidecar(&path, &sidecar)?;
            report(&[&path]);
        }
        Command::Metrics { prediction, reference, cutoff, system } => {
            let plan = plan_for(g, *system)?;
            let pred = read_trajectory(prediction)?;
            let reference = read_trajectory(reference)?;
            if pred.dof_names != reference.dof_names {
                bail!(seacorr::Error::Data("prediction and reference have different DOFs".into()));
            }
            let cutoff = cutoff.unwrap_or(plan.transient_cutoff);
            let mut text = String::from("dof,quantity,l2,linf,jsd,n_samples\n");
            for (d, name) in reference.dof_names.iter().enumerate() {
                for (quantity, ch) in [
                    ("position", Channel::Position(d)),
                    ("velocity", Channel::Velocity(d)),
                    ("acceleration", Channel::Acceleration(d)),
                ] {
                    let r = compare(pred.window(ch, cutoff)?, reference.window(ch, cutoff)?, plan.pdf, cutoff)?;
                    writeln!(text, "{name},{quantity},{},{},{},{}", r.l2, r.linf, r.jsd, r.n_samples)?;
                }
            }
            let path = g.out_dir.join("metrics.csv");
            fs::write(&path, &text)?;
            print!("{text}");
            report(&[&path]);
        }
        Command::Study { name } => {
            let mut plan = match &g.config {
                Some(p) => ExperimentPlan::from_json_overrides(&read_text(p)?, Some(*name))?,
                None => ExperimentPlan::for_study(*name),
            };
            if let Some(s) = g.seed {
                plan.train_seeds = vec![s];
            }
            if g.threads.is_some() {
                plan.threads = g.threads;
            }
            plan.export_trajectories |= g.export_trajectories;
            plan.output_dir = g.out_dir.join(&plan.output_dir);
            let out = run_study(&plan)?;
            println!("{}: {} result rows, {} runs", name, out.rows.len(), out.manifests.len());
            report(&[&out.dir.join("results.csv")]);
        }
    }
    Ok(())
}

fn report(paths: &[&Path]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    let text = fs::read_to_string(path).map_err(seacorr::Error::from)?;
    Ok(text)
}

/// Plan defaults for the system, with `--config` overrides applied.
fn plan_for(g: &Global, system: SystemKind) -> anyhow::Result<ExperimentPlan> {
    let study = match system {
        SystemKind::Duffing => Study::DuffingHsSweep,
        SystemKind::Ship => Study::SeawayGrid,
    };
    let plan = match &g.config {
        Some(p) => ExperimentPlan::from_json_overrides(&read_text(p)?, Some(study))
            .with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentPlan::for_study(study),
    };
    Ok(plan)
}

fn ship_setup(plan: &ExperimentPlan) -> anyhow::Result<(VesselModel, ExcitationModel, OracleNonlinearity)> {
    let model = plan.vessel.assemble()?;
    let ex = ExcitationModel::box_hull(&model);
    let oracle = plan.oracle.unwrap_or_else(|| OracleNonlinearity::fds_default(&model));
    Ok((model, ex, oracle))
}

fn forcing_model(sys: &SystemArgs) -> anyhow::Result<ForcingModelId> {
    Ok(sys.model.parse::<ForcingModelId>()?)
}

fn extract(plan: &ExperimentPlan, sys: &SystemArgs, traj: &Trajectory, w: &WaveRealization) -> anyhow::Result<Vec<Vec<f64>>> {
    Ok(match sys.system {
        SystemKind::Duffing => vec![duffing::extract_delta(forcing_model(sys)?, &plan.duffing, traj, w)?],
        SystemKind::Ship => {
            let (model, ex, _) = ship_setup(plan)?;
            vessel::extract_delta(&model, &ex, traj, w)?
        }
    })
}

fn load_nets(specs: &[String], dof_names: &[&str]) -> anyhow::Result<Vec<(usize, CorrectorNet)>> {
    let mut out = Vec::new();
    for spec in specs {
        let (dof, path) = match spec.split_once('=') {
            Some((name, path)) => {
                let d = dof_names.iter().position(|n| *n == name).ok_or_else(|| {
                    seacorr::Error::Config(format!("unknown DOF {name:?}; expected one of {dof_names:?}"))
                })?;
                (d, path)
            }
            None if dof_names.len() == 1 => (0, spec.as_str()),
            None => bail!(seacorr::Error::Config(format!("--net {spec}: name the DOF as DOF=PATH"))),
        };
        let net = CorrectorNet::load(Path::new(path)).with_context(|| format!("loading {path}"))?;
        out.push((dof, net));
    }
    Ok(out)
}

fn read_trajectory(path: &Path) -> anyhow::Result<Trajectory> {
    let file = fs::File::open(path).map_err(seacorr::Error::from).with_context(|| format!("opening {}", path.display()))?;
    Trajectory::read_csv(file).with_context(|| format!("reading {}", path.display()))
}

fn write_trajectory(traj: &Trajectory, path: &Path) -> anyhow::Result<()> {
    traj.write_csv(fs::File::create(path).map_err(seacorr::Error::from)?, &[])?;
    Ok(())
}

fn load_waves(path: &Path) -> anyhow::Result<WaveRealization> {
    WaveRealization::load_json(path).with_context(|| format!("reading {}", path.display()))
}

fn physics(plan: &ExperimentPlan, system: SystemKind) -> anyhow::Result<serde_json::Value> {
    Ok(match system {
        SystemKind::Duffing => serde_json::to_value(plan.duffing)?,
        SystemKind::Ship => {
            let (model, _, oracle) = ship_setup(plan)?;
            serde_json::json!({ "vessel": plan.vessel, "oracle": oracle, "speed": model.speed() })
        }
    })
}

/// Provenance next to a trajectory CSV: `reference.csv` gets `reference.json`.
fn write_sidecar(csv: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let path = csv.with_extension("json");
    fs::write(&path, serde_json::to_string_pretty(value)?).map_err(seacorr::Error::from)?;
    Ok(())
}
