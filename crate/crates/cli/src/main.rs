use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bimanual_core::agents::{
    compose, AgentError, ArmPolicy, BimanualPart, BimanualPolicy, NnPolicy, OraclePolicy, PolicyParts,
    SubprocessPolicy, Topology,
};
use bimanual_core::augment::PerturbSpec;
use bimanual_core::camvox::{fuse, write_bvox, GridSpec};
use bimanual_core::harness::{
    evaluate, generate_dataset, load_dataset, load_episode, stats, write_stats_csv, write_targets, EvalConfig,
    GenOptions, HarnessError, TargetOptions,
};
use bimanual_core::keyframes::{extract_keyframes, KeyframeParams};
use bimanual_core::par::Execution;
use bimanual_core::simworld::{CameraRig, TaskId, DEFAULT_RESOLUTION, SPEC_ONLY_TASKS};
use bimanual_core::PerArm;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bimanual", version, about = "Bimanual manipulation benchmark toolkit")]
struct Cli {
    /// Print the task registry and exit.
    #[arg(long)]
    list_tasks: bool,
    /// More log output on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate expert demonstrations.
    Gen {
        #[arg(long, value_parser = parse_task)]
        task: TaskId,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Square image size of every camera.
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
        /// Skip rendering; only trajectories and metadata are written.
        #[arg(long)]
        no_images: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the keyframes of every episode as JSON lines.
    Keyframes {
        /// A task directory or a single episode directory.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        trans_eps: Option<f64>,
        #[arg(long)]
        rot_eps: Option<f64>,
    },
    /// Fuse one recorded step into a voxel grid.
    Voxelize {
        /// Task directory.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        episode: usize,
        #[arg(long)]
        step: usize,
        /// Write the grid as a voxel dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Build training targets from a task directory.
    Targets {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximum translation perturbation in meters.
        #[arg(long, default_value_t = 0.0)]
        aug_trans: f64,
        /// Maximum yaw perturbation in degrees.
        #[arg(long, default_value_t = 0.0)]
        aug_rot: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a policy in closed loop.
    Eval {
        #[arg(long, value_parser = parse_task)]
        task: TaskId,
        #[arg(long, value_enum)]
        policy: PolicyKind,
        #[arg(long, value_parser = parse_topology, default_value = "joint")]
        topology: Topology,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        /// Task directory with rendered demonstrations (nn policy).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Shell command of an external policy (subprocess policy).
        #[arg(long)]
        policy_cmd: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize datasets: per-task averages as CSV and JSON.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Print the task registry.
    ListTasks,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Oracle,
    Nn,
    Subprocess,
}

fn parse_task(s: &str) -> Result<TaskId, String> {
    s.parse().map_err(|e: bimanual_core::simworld::SimError| e.to_string())
}

fn parse_topology(s: &str) -> Result<Topology, String> {
    s.parse().map_err(|e: AgentError| e.to_string())
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string(v).expect("json values serialize"));
}

fn list_tasks() {
    let flag = |b: bool| if b { "y" } else { "n" };
    println!(
        "{:<22} {:>10}  temporal spatial physical symmetric synchronous  status",
        "task", "variations"
    );
    for t in TaskId::ALL {
        let s = t.spec();
        let f = s.taxonomy.flags().map(flag);
        println!(
            "{:<22} {:>10}  {:<8} {:<7} {:<8} {:<9} {:<11}  implemented",
            t.as_str(),
            s.variations(),
            f[0],
            f[1],
            f[2],
            f[3],
            f[4]
        );
    }
    for d in SPEC_ONLY_TASKS.iter() {
        let f = d.taxonomy.flags().map(flag);
        println!(
            "{:<22} {:>10}  {:<8} {:<7} {:<8} {:<9} {:<11}  spec-only",
            d.name, d.reference.variations, f[0], f[1], f[2], f[3], f[4]
        );
    }
}

fn keyframes(
    input: &Path,
    window: Option<usize>,
    trans_eps: Option<f64>,
    rot_eps: Option<f64>,
) -> Result<(), HarnessError> {
    let mut params = KeyframeParams::default();
    params.stationary_window = window.unwrap_or(params.stationary_window);
    params.trans_eps = trans_eps.unwrap_or(params.trans_eps);
    params.rot_eps = rot_eps.unwrap_or(params.rot_eps);
    params.validate()?;
    let dirs: Vec<PathBuf> = if input.join("steps.bin").is_file() {
        vec![input.to_path_buf()]
    } else {
        let m = load_dataset(input)?;
        m.episode_meta.iter().map(|e| input.join(&e.dir)).collect()
    };
    for dir in dirs {
        let (m, demo) = load_episode(&dir, false)?;
        let ks = extract_keyframes(&demo, &params)?;
        print_json(&json!({"episode": m.meta.index, "indices": ks.indices(), "count": ks.len()}));
    }
    Ok(())
}

fn voxelize(input: &Path, episode: usize, step: usize, dump: Option<&Path>) -> Result<(), HarnessError> {
    let m = load_dataset(input)?;
    let meta = m
        .episode_meta
        .iter()
        .find(|e| e.index == episode)
        .ok_or_else(|| HarnessError::Invalid(format!("no episode {episode} in {}", input.display())))?;
    let (em, demo) = load_episode(&input.join(&meta.dir), true)?;
    if em.cameras.is_empty() {
        return Err(HarnessError::Invalid("episode has no images".into()));
    }
    let s = demo
        .steps
        .get(step)
        .ok_or_else(|| HarnessError::Invalid(format!("step {step} out of range (episode has {})", demo.len())))?;
    let cams = m.rig.resolve(&s.observation.proprio);
    let grid = fuse(&s.observation, &cams, &m.grid, Execution::Parallel)?;
    if let Some(path) = dump {
        let f = File::create(path).map_err(io_err(path))?;
        write_bvox(&grid, BufWriter::new(f))?;
    }
    print_json(&json!({
        "episode": episode,
        "step": step,
        "dims": m.grid.dims,
        "occupied": grid.occupied_count(),
    }));
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn spawn(cmd: &str, scratch: &Path, spec: GridSpec) -> Result<SubprocessPolicy, HarnessError> {
    Ok(SubprocessPolicy::spawn(
        "sh",
        &["-c".into(), cmd.into()],
        scratch,
        spec,
    )?)
}

fn build_policy(
    kind: PolicyKind,
    topology: Topology,
    train: Option<&Path>,
    policy_cmd: Option<&str>,
    scratch: &Path,
    cfg: &mut EvalConfig,
) -> Result<BimanualPolicy, HarnessError> {
    let joint = topology == Topology::Joint;
    let parts = match kind {
        PolicyKind::Oracle => {
            let o = OraclePolicy::new(cfg.grid);
            if joint {
                PolicyParts::Bimanual(Box::new(o))
            } else {
                PolicyParts::PerArm(PerArm::new(Box::new(o), Box::new(o)))
            }
        }
        PolicyKind::Nn => {
            let dir = train.ok_or_else(|| HarnessError::Invalid("--policy nn needs --train DIR".into()))?;
            let m = load_dataset(dir)?;
            if !m.images {
                return Err(HarnessError::Invalid(format!("{} has no images", dir.display())));
            }
            let demos = m
                .episode_meta
                .iter()
                .map(|e| load_episode(&dir.join(&e.dir), true).map(|(_, d)| d))
                .collect::<Result<Vec<_>, _>>()?;
            let nn = NnPolicy::from_demos(&demos, &m.rig, &m.grid, &m.keyframe_params, Execution::Parallel)?;
            cfg.rig = m.rig;
            cfg.grid = m.grid;
            if joint {
                PolicyParts::Bimanual(Box::new(nn))
            } else {
                PolicyParts::PerArm(PerArm::new(Box::new(nn.clone()), Box::new(nn)))
            }
        }
        PolicyKind::Subprocess => {
            let cmd =
                policy_cmd.ok_or_else(|| HarnessError::Invalid("--policy subprocess needs --policy-cmd".into()))?;
            if joint {
                PolicyParts::Bimanual(Box::new(spawn(cmd, scratch, cfg.grid)?) as Box<dyn BimanualPart>)
            } else {
                let arm = |name: &str| -> Result<Box<dyn ArmPolicy>, HarnessError> {
                    Ok(Box::new(spawn(cmd, &scratch.join(name), cfg.grid)?))
                };
                PolicyParts::PerArm(PerArm::new(arm("right")?, arm("left")?))
            }
        }
    };
    Ok(compose(parts, topology)?)
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Gen {
            task,
            episodes,
            seed,
            out,
            resolution,
            no_images,
            threads,
        } => {
            if resolution == 0 {
                return Err(HarnessError::Invalid("--resolution must be positive".into()));
            }
            let opts = GenOptions {
                rig: CameraRig::standard(resolution),
                images: !no_images,
                threads,
                ..GenOptions::default()
            };
            let m = generate_dataset(task, episodes, seed, &out, &opts)?;
            print_json(&json!({
                "task": m.task_id,
                "episodes": m.episodes,
                "failed_seeds": m.failed_seeds.len(),
                "dir": out.join(task.as_str()),
            }));
        }
        Command::Keyframes {
            input,
            window,
            trans_eps,
            rot_eps,
        } => keyframes(&input, window, trans_eps, rot_eps)?,
        Command::Voxelize {
            input,
            episode,
            step,
            dump,
        } => voxelize(&input, episode, step, dump.as_deref())?,
        Command::Targets {
            input,
            out,
            aug_trans,
            aug_rot,
            seed,
        } => {
            let augment = (aug_trans != 0.0 || aug_rot != 0.0).then_some(PerturbSpec {
                max_trans: aug_trans,
                max_rot_z: aug_rot,
                rng_seed: seed,
            });
            let set = write_targets(
                &input,
                &out,
                &TargetOptions {
                    augment,
                    ..TargetOptions::default()
                },
            )?;
            print_json(&json!({"samples": set.records.len(), "dropped": set.dropped, "out": out}));
        }
        Command::Eval {
            task,
            policy,
            topology,
            episodes,
            seed,
            report,
            train,
            policy_cmd,
            threads,
        } => {
            let scratch = std::env::temp_dir().join(format!("bimanual-eval-{}", std::process::id()));
            let mut cfg = EvalConfig {
                threads,
                ..EvalConfig::default()
            };
            let p = build_policy(
                policy,
                topology,
                train.as_deref(),
                policy_cmd.as_deref(),
                &scratch,
                &mut cfg,
            )?;
            let start = std::time::Instant::now();
            let r = evaluate(&p, task, episodes, seed, &cfg)?;
            drop(p);
            let _ = fs::remove_dir_all(&scratch);
            tracing::info!(elapsed_s = start.elapsed().as_secs_f64(), "evaluation finished");
            let text = serde_json::to_string_pretty(&r).expect("report serializes");
            fs::write(&report, format!("{text}\n")).map_err(io_err(&report))?;
            print_json(&json!({
                "task": r.task_id,
                "policy": r.policy,
                "topology": r.topology,
                "episodes": r.episodes,
                "successes": r.successes,
                "success_rate": r.success_rate,
            }));
        }
        Command::Stats { input, csv } => {
            let rows = stats(&input)?;
            write_stats_csv(&csv, &rows)?;
            print_json(&serde_json::to_value(&rows).expect("stats serialize"));
        }
        Command::ListTasks => list_tasks(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| level.into()))
        .init();

    if cli.list_tasks {
        list_tasks();
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: no subcommand given (try --help)");
        return ExitCode::from(1);
    };
    match run(cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
