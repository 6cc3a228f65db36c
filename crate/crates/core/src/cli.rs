//! Command-line front end. Every subcommand writes its artifacts under
//! `--out` together with a `run.json` echoing the resolved configuration.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::critic::CriticParams;
use crate::dataset::{read_dataset, stats_of, DatasetHeader, DatasetWriter, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::esdf::{esdf_for_scene, write_esdf_dump, EsdfParams};
use crate::pipeline::{generate_scene_trajectories, label_record, plan_pair, records_for, GenerationConfig, SceneMaps};
use crate::planner::{astar, path_points, refine_waypoints, spline_smooth, validate_trajectory};
use crate::policy::{serve_echo, EchoMode, EchoOptions, PolicySpec};
use crate::robot::{pitch_for_height, RobotModel};
use crate::scene::{generate_scene, load_scene, write_scene, SceneGenConfig, SceneSpec};
use crate::seed::digest_hex;
use crate::simulator::{run_benchmark, BenchmarkSpec, Task};

#[derive(Debug, Parser)]
#[command(name = "navgen", version, about = "Navigation trajectory generation, labeling and benchmarking")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "NAVGEN_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Scene utilities.
    #[command(subcommand)]
    Scene(SceneCmd),
    /// Distance field of one scene for one robot height.
    Esdf(EsdfArgs),
    /// Plan a single trajectory between two points.
    Plan(PlanArgs),
    /// Generate reference trajectories and training records.
    Generate(GenerateArgs),
    /// Augment records and compute critic labels.
    Label(LabelArgs),
    /// Closed-loop benchmark of a policy.
    Eval(EvalArgs),
    /// Dataset statistics.
    Stats(StatsArgs),
    /// Single-threaded generation throughput.
    Bench(BenchArgs),
    /// Protocol fixture for remote-policy tests.
    #[command(hide = true)]
    EchoPolicy(EchoArgs),
}

#[derive(Debug, Subcommand)]
pub enum SceneCmd {
    /// Procedurally generate box-world scenes.
    Gen(SceneGenArgs),
}

#[derive(Debug, Args)]
pub struct SceneGenArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding generator parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EsdfArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    pub height: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    pub height: f64,
    /// Start as `x,y`.
    #[arg(long, value_parser = parse_point)]
    pub start: [f64; 2],
    /// Goal as `x,y`.
    #[arg(long, value_parser = parse_point)]
    pub goal: [f64; 2],
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Directory of scene JSON files.
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub per_scene_pairs: Option<usize>,
    /// JSON file overriding generation parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Augmented samples per record.
    #[arg(long, default_value_t = 4)]
    pub aug: usize,
    #[arg(long, default_value_t = 0.5)]
    pub d_safe: f64,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// expert, sampler, random or remote:CMD
    #[arg(long)]
    pub policy: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset files, or generate output directories.
    pub datasets: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EchoModeArg {
    Straight,
    Cmd,
    Garbage,
}

#[derive(Debug, Args)]
pub struct EchoArgs {
    #[arg(long)]
    pub reply_version: Option<u32>,
    #[arg(long)]
    pub exit_after: Option<usize>,
    #[arg(long)]
    pub stall: bool,
    #[arg(long, value_enum, default_value = "straight")]
    pub mode: EchoModeArg,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y but got `{s}`"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([x, y])
}

/// Exit status for an error: 2 bad arguments, 3 missing or unreadable
/// input, 4 generation failure, 5 policy start-up failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Io { .. }
        | Error::Parse(_)
        | Error::InvalidScene(_)
        | Error::Dataset { .. }
        | Error::VersionMismatch { .. } => 3,
        Error::PolicyStartup(_) => 5,
        _ => 4,
    }
}

fn error_kind(code: i32) -> &'static str {
    match code {
        2 => "bad-args",
        3 => "missing-input",
        5 => "policy-failure",
        _ => "generation-failure",
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log_level).try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error code={code} kind={}: {msg}", error_kind(code));
            code
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| match cli.command {
        Cmd::Scene(SceneCmd::Gen(a)) => cmd_scene_gen(a),
        Cmd::Esdf(a) => cmd_esdf(a),
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Label(a) => cmd_label(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::EchoPolicy(a) => cmd_echo(a),
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// SHA-256 of the compact JSON form of `config`.
pub fn config_digest<T: Serialize>(config: &T) -> Result<String> {
    Ok(digest_hex(serde_json::to_string(config)?.as_bytes()))
}

#[derive(Serialize)]
struct RunRecord<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a T,
    config_digest: String,
}

fn write_run<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<String> {
    let digest = config_digest(config)?;
    write_json(
        &out.join("run.json"),
        &RunRecord {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            config_digest: digest.clone(),
        },
    )?;
    Ok(digest)
}

/// Scene files in a directory (sorted by name), or the file itself.
pub fn scene_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_owned()]);
    }
    let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !matches!(p.file_name().and_then(|n| n.to_str()), Some("run.json" | "manifest.json"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no scene files"),
        ));
    }
    Ok(files)
}

pub fn load_scenes(path: &Path) -> Result<Vec<SceneSpec>> {
    scene_files(path)?.iter().map(load_scene).collect()
}

#[derive(Serialize)]
struct SceneGenRun<'a> {
    count: usize,
    seed: u64,
    generator: &'a SceneGenConfig,
}

fn cmd_scene_gen(a: SceneGenArgs) -> Result<()> {
    let config: SceneGenConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SceneGenConfig::default(),
    };
    create_dir(&a.out)?;
    for k in 0..a.count {
        let seed = crate::seed::derive_seed(a.seed, &["scene".into(), (k as u64).into()]);
        let mut scene = generate_scene(&config, seed)?;
        scene.id = format!("scene_{k:03}");
        write_scene(&scene, a.out.join(format!("scene_{k:03}.json")))?;
    }
    write_run(
        &a.out,
        "scene gen",
        &SceneGenRun {
            count: a.count,
            seed: a.seed,
            generator: &config,
        },
    )?;
    println!("wrote {} scenes to {}", a.count, a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct EsdfRun<'a> {
    scene: &'a Path,
    height: f64,
    params: EsdfParams,
}

fn cmd_esdf(a: EsdfArgs) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let params = EsdfParams::default();
    let (_, esdf) = esdf_for_scene(&scene, a.height, &params)?;
    create_dir(&a.out)?;
    write_esdf_dump(&esdf, a.out.join("esdf.bin"))?;
    write_run(
        &a.out,
        "esdf",
        &EsdfRun {
            scene: &a.scene,
            height: a.height,
            params,
        },
    )?;
    println!(
        "{}x{} cells, {} navigable",
        esdf.dims[0],
        esdf.dims[1],
        esdf.navigable_count()
    );
    Ok(())
}

#[derive(Serialize)]
struct PlanRun<'a> {
    scene: &'a Path,
    height: f64,
    start: [f64; 2],
    goal: [f64; 2],
    params: EsdfParams,
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let params = EsdfParams::default();
    let maps = SceneMaps::new(scene, params)?;
    let pm = maps.maps_for(a.height)?;
    let cell = |p: [f64; 2]| -> Result<usize> {
        let (i, j) = pm
            .coarse
            .cell_of(p[0], p[1])
            .ok_or(Error::OutOfBounds { x: p[0], y: p[1] })?;
        if !pm.coarse.is_navigable(i, j) {
            return Err(Error::InvalidArgument(format!("({}, {}) is not navigable", p[0], p[1])));
        }
        Ok(pm.coarse.index(i, j))
    };
    let path = astar(&pm.coarse, cell(a.start)?, cell(a.goal)?)?;
    let refined = refine_waypoints(&path_points(&pm.coarse, &path), &pm.esdf, crate::planner::DEFAULT_REFINE_WINDOW);
    let traj = spline_smooth(&refined, crate::planner::DEFAULT_SPACING)?;
    let check = validate_trajectory(&traj, &pm.esdf, params.r_b);
    create_dir(&a.out)?;
    write_json(&a.out.join("trajectory.json"), &traj)?;
    write_run(
        &a.out,
        "plan",
        &PlanRun {
            scene: &a.scene,
            height: a.height,
            start: a.start,
            goal: a.goal,
            params,
        },
    )?;
    println!(
        "{} poses, {:.2} m, min clearance {:.3} m, valid {}",
        traj.len(),
        traj.arc_length(),
        check.min_clearance,
        check.valid
    );
    Ok(())
}

#[derive(Serialize)]
struct GenerateRun<'a> {
    scenes: &'a Path,
    seed: u64,
    generation: &'a GenerationConfig,
}

#[derive(Serialize)]
struct ManifestScene {
    id: String,
    file: String,
    trajectories: usize,
    failures: Vec<(u64, String)>,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    config_digest: String,
    scenes: Vec<ManifestScene>,
    total_trajectories: usize,
    total_records: usize,
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut config: GenerationConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => GenerationConfig::default(),
    };
    if let Some(n) = a.per_scene_pairs {
        config.pairs_per_scene = n;
    }
    let files = scene_files(&a.scenes)?;
    create_dir(&a.out)?;
    let digest = write_run(
        &a.out,
        "generate",
        &GenerateRun {
            scenes: &a.scenes,
            seed: a.seed,
            generation: &config,
        },
    )?;
    let mut records = DatasetWriter::create(a.out.join("records.ndjson"), &DatasetHeader::new(digest.clone()))?;
    let traj_path = a.out.join("trajectories.ndjson");
    let mut trajs = BufWriter::new(fs::File::create(&traj_path).map_err(|e| Error::io(&traj_path, e))?);
    let mut manifest = Manifest {
        seed: a.seed,
        config_digest: digest,
        scenes: Vec::new(),
        total_trajectories: 0,
        total_records: 0,
    };
    for file in &files {
        let scene = load_scene(file)?;
        log::info!("scene {} from {}", scene.id, file.display());
        let maps = SceneMaps::new(scene, config.esdf)?;
        let gen = generate_scene_trajectories(&maps, &config, a.seed);
        let per_traj: Vec<Vec<TrajectoryRecord>> = gen
            .trajectories
            .par_iter()
            .map(|t| records_for(t, &config, a.seed))
            .collect();
        for (t, recs) in gen.trajectories.iter().zip(&per_traj) {
            serde_json::to_writer(&mut trajs, t)?;
            trajs.write_all(b"\n").map_err(|e| Error::io(&traj_path, e))?;
            for r in recs {
                records.write(r)?;
            }
            manifest.total_records += recs.len();
        }
        manifest.total_trajectories += gen.trajectories.len();
        manifest.scenes.push(ManifestScene {
            id: maps.scene.id.clone(),
            file: file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            trajectories: gen.trajectories.len(),
            failures: gen.failures,
        });
    }
    records.finish()?;
    trajs.flush().map_err(|e| Error::io(&traj_path, e))?;
    write_json(&a.out.join("manifest.json"), &manifest)?;
    println!(
        "{} trajectories, {} records from {} scenes",
        manifest.total_trajectories,
        manifest.total_records,
        files.len()
    );
    if manifest.total_trajectories == 0 && config.pairs_per_scene > 0 {
        return Err(Error::PlanningFailed(config.max_attempts));
    }
    Ok(())
}

#[derive(Serialize)]
struct LabelRun<'a> {
    dataset: &'a Path,
    scenes: &'a Path,
    seed: u64,
    aug_per_record: usize,
    critic: CriticParams,
    esdf: EsdfParams,
}

fn cmd_label(a: LabelArgs) -> Result<()> {
    let critic = CriticParams {
        d_safe: a.d_safe,
        alpha: a.alpha,
    };
    let esdf_params = EsdfParams::default();
    let (_, records) = read_dataset(&a.dataset)?;
    let mut maps = BTreeMap::new();
    for s in load_scenes(&a.scenes)? {
        maps.insert(s.id.clone(), SceneMaps::new(s, esdf_params)?);
    }
    let lines: Vec<Vec<crate::pipeline::LabelLine>> = records
        .par_iter()
        .map(|r| {
            let m = maps
                .get(&r.scene_id)
                .ok_or_else(|| Error::InvalidScene(format!("scene `{}` not found in {}", r.scene_id, a.scenes.display())))?;
            let pm = m.maps_for(r.robot.h_b)?;
            Ok(label_record(r, &pm.esdf, &critic, a.aug, a.seed))
        })
        .collect::<Result<_>>()?;
    create_dir(&a.out)?;
    let stem = a
        .dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "records".into());
    let path = a.out.join(format!("{stem}.labels.ndjson"));
    let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
    let mut n = 0;
    for l in lines.iter().flatten() {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_run(
        &a.out,
        "label",
        &LabelRun {
            dataset: &a.dataset,
            scenes: &a.scenes,
            seed: a.seed,
            aug_per_record: a.aug,
            critic,
            esdf: esdf_params,
        },
    )?;
    println!("{n} labels for {} records", records.len());
    Ok(())
}

/// Robot entry of an evaluation config; the pitch defaults to the height rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotEntry {
    pub h_b: f64,
    #[serde(default)]
    pub camera_pitch: Option<f64>,
}

impl RobotEntry {
    pub fn model(&self) -> RobotModel {
        RobotModel::with_height(self.h_b, self.camera_pitch.unwrap_or_else(|| pitch_for_height(self.h_b, 0.0)))
    }
}

/// Evaluation config file. Scene paths are relative to the file and may name
/// directories of scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub scenes: Vec<PathBuf>,
    #[serde(default = "default_robots")]
    pub robots: Vec<RobotEntry>,
    #[serde(flatten)]
    pub spec: BenchmarkSpec,
}

fn default_robots() -> Vec<RobotEntry> {
    vec![RobotEntry {
        h_b: 0.6,
        camera_pitch: None,
    }]
}

#[derive(Serialize)]
struct EvalRun<'a> {
    config: &'a EvalConfig,
    policy: String,
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let config: EvalConfig = read_json(&a.config)?;
    let policy: PolicySpec = a.policy.parse()?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let mut scenes = Vec::new();
    for s in &config.scenes {
        scenes.extend(load_scenes(&base.join(s))?);
    }
    let robots: Vec<RobotModel> = config.robots.iter().map(RobotEntry::model).collect();
    if let Some(r) = robots.iter().find(|r| !r.is_valid()) {
        return Err(Error::InvalidArgument(format!("robot height {} outside the supported range", r.h_b)));
    }
    let report = run_benchmark(&scenes, &robots, &policy, &config.spec)?;
    create_dir(&a.out)?;
    let csv = report.to_csv();
    write_text(&a.out.join("metrics.csv"), &csv)?;
    let path = a.out.join("episodes.ndjson");
    let mut w = BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
    for e in &report.episodes {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_run(
        &a.out,
        "eval",
        &EvalRun {
            config: &config,
            policy: policy.name(),
        },
    )?;
    print!("{csv}");
    let failures = report.rows.iter().map(|r| r.policy_failures).sum::<usize>();
    if failures > 0 {
        eprintln!("{failures} episodes ended in policy failure");
    }
    if config.spec.task == Task::PointGoal {
        let results = report.results();
        println!(
            "overall sr {:.3} spl {:.3}",
            crate::simulator::success_rate(&results),
            crate::simulator::spl(&results)
        );
    }
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let mut records = Vec::new();
    for p in &a.datasets {
        let file = if p.is_dir() { p.join("records.ndjson") } else { p.clone() };
        records.extend(read_dataset(&file)?.1);
    }
    let stats = stats_of(&records);
    println!("{stats}");
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_json(&out.join("stats.json"), &stats)?;
        write_run(out, "stats", &a.datasets)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRun {
    trajectories: usize,
    seed: u64,
    scene: SceneGenConfig,
    generation: GenerationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub requested: usize,
    pub trajectories: usize,
    pub failures: usize,
    pub seconds: f64,
    pub trajectories_per_second: f64,
    /// Digest of the generated trajectories; independent of timing.
    pub digest: String,
}

/// Plans `n` trajectories on a single thread, including map construction,
/// cycling through freshly generated scenes every 100 pairs.
pub fn bench_generation(n: usize, seed: u64) -> Result<BenchResult> {
    let scene_cfg = SceneGenConfig::default();
    let gen_cfg = GenerationConfig::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| {
        let started = Instant::now();
        let mut hasher = Sha256::new();
        let (mut ok, mut failed) = (0, 0);
        let mut maps: Option<SceneMaps> = None;
        for k in 0..n {
            if k % gen_cfg.pairs_per_scene == 0 {
                let s = crate::seed::derive_seed(seed, &["bench".into(), ((k / gen_cfg.pairs_per_scene) as u64).into()]);
                maps = Some(SceneMaps::new(generate_scene(&scene_cfg, s)?, gen_cfg.esdf)?);
            }
            let m = maps.as_ref().expect("scene built above");
            match plan_pair(m, &gen_cfg, seed, (k % gen_cfg.pairs_per_scene) as u64) {
                Ok(t) => {
                    hasher.update(serde_json::to_string(&t)?.as_bytes());
                    ok += 1;
                }
                Err(_) => failed += 1,
            }
        }
        let seconds = started.elapsed().as_secs_f64();
        Ok(BenchResult {
            requested: n,
            trajectories: ok,
            failures: failed,
            seconds,
            trajectories_per_second: ok as f64 / seconds.max(1e-9),
            digest: hex::encode(hasher.finalize()),
        })
    })
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let result = bench_generation(a.trajectories, a.seed)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("bench.json"), &result)?;
    write_run(
        &a.out,
        "bench",
        &BenchRun {
            trajectories: a.trajectories,
            seed: a.seed,
            scene: SceneGenConfig::default(),
            generation: GenerationConfig::default(),
        },
    )?;
    println!(
        "{} trajectories in {:.2} s: {:.1} trajectories/s (single thread)",
        result.trajectories, result.seconds, result.trajectories_per_second
    );
    Ok(())
}

fn cmd_echo(a: EchoArgs) -> Result<()> {
    let options = EchoOptions {
        reply_version: a.reply_version,
        exit_after: a.exit_after,
        stall: a.stall,
        mode: match a.mode {
            EchoModeArg::Straight => EchoMode::Straight,
            EchoModeArg::Cmd => EchoMode::Cmd,
            EchoModeArg::Garbage => EchoMode::Garbage,
        },
    };
    let stdin = std::io::stdin();
    serve_echo(stdin.lock(), std::io::stdout().lock(), &options).map_err(|e| Error::io("<stdio>", e))
}
