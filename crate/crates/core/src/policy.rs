//! Benchmark policies: a replanning expert, the arc sampler with critic or
//! random selection, and a bridge to an external process speaking a
//! line-delimited JSON protocol over stdio.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command as Process, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critic::{critic_label, select_best, CriticParams, LABEL_POINTS};
use crate::error::{Error, Result};
use crate::esdf::{downsample, CoarseGrid, EsdfMap};
use crate::geom::{wrap_angle, Point2};
use crate::planner::{astar, path_points, refine_waypoints, spline_smooth, DEFAULT_REFINE_WINDOW, DEFAULT_SPACING};
use crate::robot::{trajectory_to_cmd, RobotModel, DEFAULT_K_OMEGA, DEFAULT_K_V};
use crate::seed::{derive_rng, rng_from, Rng, SeedPart};
use crate::simulator::{EpisodeConfig, Goal, Observation};

pub const CANDIDATE_STEPS: usize = 24;
pub const CANDIDATE_SPACING: f64 = 0.25;
pub const KAPPA_MAX: f64 = 1.0 / 0.75;
pub const DEFAULT_CANDIDATES: usize = 16;
pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(1);
pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
}

impl Command {
    pub const STOP: Command = Command { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("remote policy process exited")]
    Exited,
    #[error("remote policy missed the {0:?} reply deadline")]
    Deadline(Duration),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("protocol version mismatch: expected {expected}, remote speaks {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("policy io: {0}")]
    Io(String),
}

/// Read-only maps and limits handed to a policy each step.
pub struct PolicyContext<'a> {
    pub esdf: &'a EsdfMap,
    pub coarse: &'a CoarseGrid,
    pub robot: &'a RobotModel,
    pub config: &'a EpisodeConfig,
}

pub trait Policy {
    fn reset(&mut self, seed: u64);

    fn wants_depth(&self) -> bool {
        false
    }

    fn act(&mut self, obs: &Observation, ctx: &PolicyContext<'_>) -> Result<Command, PolicyError>;

    /// Count of flagged steps (e.g. unreachable goal) since the last reset.
    fn flags(&self) -> usize {
        0
    }
}

fn clamp_command(v: f64, omega: f64, robot: &RobotModel) -> Command {
    Command::new(v.clamp(-robot.v_max, robot.v_max), omega.clamp(-robot.omega_max, robot.omega_max))
}

fn goal_point(goal: &Goal) -> Option<Point2> {
    match goal {
        Goal::Point { x, y } => Some([*x, *y]),
        _ => None,
    }
}

/// Nearest navigable cell by 8-connected breadth-first search from the cell
/// containing `p` (clamped into the grid).
pub fn nearest_navigable(grid: &CoarseGrid, p: Point2) -> Option<usize> {
    let clamp = |v: f64, o: f64, n: usize| (((v - o) / grid.resolution).floor().max(0.0) as usize).min(n - 1);
    let (i, j) = (clamp(p[0], grid.origin[0], grid.dims[0]), clamp(p[1], grid.origin[1], grid.dims[1]));
    let start = grid.index(i, j);
    if grid.navigable[start] {
        return Some(start);
    }
    let mut seen = vec![false; grid.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let (ci, cj) = grid.coords(c);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ni, nj) = (ci as i64 + di, cj as i64 + dj);
                if ni < 0 || nj < 0 || ni as usize >= grid.dims[0] || nj as usize >= grid.dims[1] {
                    continue;
                }
                let n = grid.index(ni as usize, nj as usize);
                if seen[n] {
                    continue;
                }
                if grid.navigable[n] {
                    return Some(n);
                }
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    None
}

/// Replans grid search, refinement and smoothing toward a point goal and
/// follows the result with the midpoint command rule.
pub struct ExpertPolicy {
    /// Extra clearance added to the robot radius when planning.
    pub margin: f64,
    /// Poses ahead of the closest one that the command window reaches.
    pub lookahead: usize,
    pub replan_every: usize,
    maps: Option<(EsdfMap, CoarseGrid)>,
    plan: Option<Vec<Point2>>,
    since_plan: usize,
    flags: usize,
}

impl Default for ExpertPolicy {
    fn default() -> Self {
        Self {
            margin: 0.1,
            lookahead: 6,
            replan_every: 5,
            maps: None,
            plan: None,
            since_plan: 0,
            flags: 0,
        }
    }
}

impl ExpertPolicy {
    fn maps(&mut self, ctx: &PolicyContext<'_>) -> &(EsdfMap, CoarseGrid) {
        self.maps.get_or_insert_with(|| {
            let inflated = ctx.esdf.retruncate(ctx.robot.r_b + self.margin);
            let coarse = downsample(&inflated, ctx.coarse.resolution).expect("coarse resolution already validated");
            (inflated, coarse)
        })
    }

    /// World-frame path from `from` to `goal`, or `None` when unreachable.
    pub fn plan_path(&mut self, from: Point2, goal: Point2, ctx: &PolicyContext<'_>) -> Option<Vec<Point2>> {
        let (_, coarse) = self.maps(ctx);
        let s = nearest_navigable(coarse, from)?;
        let g = nearest_navigable(coarse, goal)?;
        let path = astar(coarse, s, g).ok()?;
        let mut pts = path_points(coarse, &path);
        let last = pts.len() - 1;
        pts[0] = from;
        if last == 0 {
            pts.push(goal);
        } else {
            pts[last] = goal;
        }
        let refined = refine_waypoints(&pts, ctx.esdf, DEFAULT_REFINE_WINDOW);
        match spline_smooth(&refined, DEFAULT_SPACING) {
            Ok(t) => Some(t.positions()),
            Err(_) => Some(vec![from, goal]),
        }
    }
}

impl Policy for ExpertPolicy {
    fn reset(&mut self, _seed: u64) {
        self.plan = None;
        self.since_plan = 0;
        self.flags = 0;
        self.maps = None;
    }

    fn act(&mut self, obs: &Observation, ctx: &PolicyContext<'_>) -> Result<Command, PolicyError> {
        let Some(goal_body) = goal_point(&obs.goal) else {
            return Err(PolicyError::Protocol("the expert needs a point goal".into()));
        };
        if goal_body[0].hypot(goal_body[1]) < ctx.config.success_radius {
            return Ok(Command::STOP);
        }
        let pose = obs.robot_pose;
        let goal = pose.transform_point(goal_body);
        if self.plan.is_none() || self.since_plan >= self.replan_every {
            self.plan = self.plan_path(pose.position(), goal, ctx);
            self.since_plan = 0;
        }
        self.since_plan += 1;
        let Some(plan) = &self.plan else {
            self.flags += 1;
            return Ok(Command::STOP);
        };
        let here = pose.position();
        let nearest = plan
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1[0] - here[0]).hypot(a.1[1] - here[1]);
                let db = (b.1[0] - here[0]).hypot(b.1[1] - here[1]);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let end = (nearest + 2 * self.lookahead + 1).min(plan.len());
        let window: Vec<Point2> = plan[nearest..end].iter().map(|&p| pose.inverse_transform_point(p)).collect();
        let (v, w) = trajectory_to_cmd(&window, DEFAULT_K_V, DEFAULT_K_OMEGA, ctx.robot);
        Ok(clamp_command(v, w, ctx.robot))
    }

    fn flags(&self) -> usize {
        self.flags
    }
}

/// Robot-frame candidate trajectories, `[dx, dy, heading]` per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Vec<[f64; 3]>>,
    pub curvatures: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Constant-curvature arc from the origin: 24 points with consecutive
/// straight-line spacing 0.25 m.
pub fn arc_primitive(kappa: f64) -> Vec<[f64; 3]> {
    if kappa.abs() < 1e-12 {
        return (1..=CANDIDATE_STEPS)
            .map(|k| [CANDIDATE_SPACING * k as f64, 0.0, 0.0])
            .collect();
    }
    let r = 1.0 / kappa;
    let dphi = 2.0 * (CANDIDATE_SPACING * kappa / 2.0).asin();
    (1..=CANDIDATE_STEPS)
        .map(|k| {
            let phi = dphi * k as f64;
            [r * phi.sin(), r * (1.0 - phi.cos()), wrap_angle(phi)]
        })
        .collect()
}

/// Straight primitive first, then `n - 1` arcs with curvature uniform in
/// `[-κ_max, κ_max]`.
pub fn sample_candidates(rng: &mut Rng, n: usize) -> CandidateSet {
    let n = n.max(1);
    let mut curvatures = vec![0.0];
    curvatures.extend((1..n).map(|_| rng.random_range(-KAPPA_MAX..=KAPPA_MAX)));
    CandidateSet {
        candidates: curvatures.iter().map(|&k| arc_primitive(k)).collect(),
        curvatures,
        scores: vec![0.0; n],
    }
}

/// Body-frame points of a candidate with the robot origin prepended.
pub fn with_origin(candidate: &[[f64; 3]]) -> Vec<Point2> {
    std::iter::once([0.0, 0.0]).chain(candidate.iter().map(|p| [p[0], p[1]])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Critic,
    Random,
}

/// Arc sampler with critic (two-stage) or uniform random selection. Both
/// variants draw identical candidate sets for the same seed.
pub struct SamplerPolicy {
    pub n: usize,
    pub selection: Selection,
    pub params: CriticParams,
    /// Score penalty per radian between candidate endpoint and goal bearings.
    pub goal_weight: f64,
    candidate_rng: Rng,
    select_rng: Rng,
    /// Last scored set and chosen index, kept for inspection.
    pub last: Option<(CandidateSet, usize)>,
}

impl SamplerPolicy {
    pub fn new(n: usize, selection: Selection) -> Self {
        Self {
            n: n.max(1),
            selection,
            params: CriticParams::default(),
            goal_weight: 1.0,
            candidate_rng: rng_from(0),
            select_rng: rng_from(0),
            last: None,
        }
    }

    pub fn two_stage(n: usize) -> Self {
        Self::new(n, Selection::Critic)
    }

    pub fn random(n: usize) -> Self {
        Self::new(n, Selection::Random)
    }

    /// Scores a candidate set in place and returns the chosen index, or
    /// `None` when every candidate is fully unsafe.
    pub fn select(&mut self, set: &mut CandidateSet, obs: &Observation, esdf: &EsdfMap) -> Option<usize> {
        let pose = obs.robot_pose;
        let labels: Vec<_> = set
            .candidates
            .par_iter()
            .map(|c| {
                let world: Vec<Point2> = with_origin(c).into_iter().map(|p| pose.transform_point(p)).collect();
                critic_label(&world, esdf, &self.params)
            })
            .collect();
        let goal_bearing = goal_point(&obs.goal).map(|g| g[1].atan2(g[0]));
        set.scores = labels
            .iter()
            .zip(&set.candidates)
            .map(|(l, c)| {
                let end = c[c.len() - 1];
                let penalty = goal_bearing.map_or(0.0, |b| wrap_angle(end[1].atan2(end[0]) - b).abs());
                l.value - self.goal_weight * penalty
            })
            .collect();
        if labels.iter().all(|l| l.unsafe_count == LABEL_POINTS) {
            return None;
        }
        Some(match self.selection {
            Selection::Critic => select_best(&set.scores).expect("candidate set is never empty"),
            Selection::Random => self.select_rng.random_range(0..set.candidates.len()),
        })
    }
}

impl Policy for SamplerPolicy {
    fn reset(&mut self, seed: u64) {
        self.candidate_rng = derive_rng(seed, &[SeedPart::Str("candidates")]);
        self.select_rng = derive_rng(seed, &[SeedPart::Str("select")]);
        self.last = None;
    }

    fn act(&mut self, obs: &Observation, ctx: &PolicyContext<'_>) -> Result<Command, PolicyError> {
        if let Some(g) = goal_point(&obs.goal) {
            if g[0].hypot(g[1]) < ctx.config.success_radius {
                return Ok(Command::STOP);
            }
        }
        let mut set = sample_candidates(&mut self.candidate_rng, self.n);
        let chosen = self.select(&mut set, obs, ctx.esdf);
        let cmd = match chosen {
            Some(i) => {
                let (v, w) = trajectory_to_cmd(&with_origin(&set.candidates[i]), DEFAULT_K_V, DEFAULT_K_OMEGA, ctx.robot);
                clamp_command(v, w, ctx.robot)
            }
            // everything ahead is blocked: turn in place to re-orient
            None => Command::new(0.0, ctx.robot.omega_max),
        };
        self.last = Some((set, chosen.unwrap_or(0)));
        Ok(cmd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireGoal {
    pub x: f64,
    pub y: f64,
}

/// Messages of the stdio protocol, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello { version: u32, obs_shape: [usize; 2] },
    Ready { version: u32 },
    Obs { t: f64, depth: Vec<f64>, goal: Option<WireGoal> },
    Act { candidates: Vec<Vec<[f64; 3]>>, scores: Vec<f64> },
    Cmd { v: f64, w: f64 },
}

/// Child process speaking the stdio protocol. Dropping it kills the child.
pub struct RemotePolicy {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    pub deadline: Duration,
}

impl RemotePolicy {
    /// Starts `command` (whitespace-separated program and arguments) and
    /// completes the handshake.
    pub fn spawn(command: &str, obs_shape: [usize; 2], deadline: Duration) -> Result<Self> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty remote policy command".into()))?;
        let mut child = Process::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::PolicyStartup(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut policy = Self {
            child,
            stdin,
            lines: rx,
            deadline,
        };
        policy.handshake(obs_shape).map_err(|e| Error::PolicyStartup(e.to_string()))?;
        Ok(policy)
    }

    fn handshake(&mut self, obs_shape: [usize; 2]) -> Result<(), PolicyError> {
        self.send(&Message::Hello {
            version: PROTOCOL_VERSION,
            obs_shape,
        })?;
        match self.receive(HANDSHAKE_TIMEOUT.max(self.deadline))? {
            Message::Ready { version } if version == PROTOCOL_VERSION => Ok(()),
            Message::Ready { version } => Err(PolicyError::VersionMismatch {
                expected: PROTOCOL_VERSION,
                found: version,
            }),
            other => Err(PolicyError::Protocol(format!("expected ready, got {other:?}"))),
        }
    }

    fn send(&mut self, msg: &Message) -> Result<(), PolicyError> {
        let mut line = serde_json::to_string(msg).map_err(|e| PolicyError::Io(e.to_string()))?;
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|_| PolicyError::Exited)
    }

    fn receive(&mut self, timeout: Duration) -> Result<Message, PolicyError> {
        let line = match self.lines.recv_timeout(timeout) {
            Ok(l) => l,
            Err(RecvTimeoutError::Timeout) => return Err(PolicyError::Deadline(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(PolicyError::Exited),
        };
        serde_json::from_str(&line).map_err(|e| PolicyError::Protocol(format!("unparseable reply: {e}")))
    }
}

impl Drop for RemotePolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn check_act(candidates: &[Vec<[f64; 3]>], scores: &[f64]) -> Result<(), PolicyError> {
    if candidates.is_empty() {
        return Err(PolicyError::Protocol("no candidates".into()));
    }
    if scores.len() != candidates.len() {
        return Err(PolicyError::Protocol(format!(
            "{} scores for {} candidates",
            scores.len(),
            candidates.len()
        )));
    }
    if let Some(c) = candidates.iter().find(|c| c.len() != CANDIDATE_STEPS) {
        return Err(PolicyError::Protocol(format!("candidate with {} steps, expected {CANDIDATE_STEPS}", c.len())));
    }
    let finite = scores.iter().all(|s| s.is_finite()) && candidates.iter().flatten().flatten().all(|v| v.is_finite());
    if !finite {
        return Err(PolicyError::Protocol("non-finite value".into()));
    }
    Ok(())
}

impl Policy for RemotePolicy {
    fn reset(&mut self, _seed: u64) {}

    fn wants_depth(&self) -> bool {
        true
    }

    fn act(&mut self, obs: &Observation, ctx: &PolicyContext<'_>) -> Result<Command, PolicyError> {
        let msg = Message::Obs {
            t: obs.t,
            depth: obs.depth.as_ref().map(|d| d.data.clone()).unwrap_or_default(),
            goal: goal_point(&obs.goal).map(|[x, y]| WireGoal { x, y }),
        };
        self.send(&msg)?;
        match self.receive(self.deadline)? {
            Message::Act { candidates, scores } => {
                check_act(&candidates, &scores)?;
                let best = select_best(&scores).map_err(|e| PolicyError::Protocol(e.to_string()))?;
                let (v, w) = trajectory_to_cmd(&with_origin(&candidates[best]), DEFAULT_K_V, DEFAULT_K_OMEGA, ctx.robot);
                Ok(clamp_command(v, w, ctx.robot))
            }
            Message::Cmd { v, w } if v.is_finite() && w.is_finite() => Ok(clamp_command(v, w, ctx.robot)),
            other => Err(PolicyError::Protocol(format!("unexpected reply {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Expert,
    Sampler { n: usize },
    Random { n: usize },
    Remote { command: String },
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(cmd) = s.strip_prefix("remote:") {
            if cmd.trim().is_empty() {
                return Err(Error::InvalidArgument("remote policy needs a command".into()));
            }
            return Ok(PolicySpec::Remote { command: cmd.to_owned() });
        }
        match s {
            "expert" => Ok(PolicySpec::Expert),
            "sampler" | "two-stage" => Ok(PolicySpec::Sampler { n: DEFAULT_CANDIDATES }),
            "random" => Ok(PolicySpec::Random { n: DEFAULT_CANDIDATES }),
            _ => Err(Error::InvalidArgument(format!(
                "unknown policy `{s}` (expected expert, sampler, random or remote:CMD)"
            ))),
        }
    }
}

impl PolicySpec {
    pub fn build(&self, config: &EpisodeConfig) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            PolicySpec::Expert => Box::new(ExpertPolicy::default()),
            PolicySpec::Sampler { n } => Box::new(SamplerPolicy::two_stage(*n)),
            PolicySpec::Random { n } => Box::new(SamplerPolicy::random(*n)),
            PolicySpec::Remote { command } => Box::new(RemotePolicy::spawn(
                command,
                [config.image_width, config.image_height],
                DEFAULT_DEADLINE,
            )?),
        })
    }

    pub fn name(&self) -> String {
        match self {
            PolicySpec::Expert => "expert".into(),
            PolicySpec::Sampler { .. } => "sampler".into(),
            PolicySpec::Random { .. } => "random".into(),
            PolicySpec::Remote { command } => format!("remote:{command}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EchoMode {
    /// Reply with the straight primitive as the only candidate.
    #[default]
    Straight,
    /// Reply with a fixed direct command.
    Cmd,
    /// Reply with a line that is not JSON.
    Garbage,
}

#[derive(Debug, Clone, Default)]
pub struct EchoOptions {
    pub reply_version: Option<u32>,
    /// Exit after answering this many observations.
    pub exit_after: Option<usize>,
    /// Never answer observations.
    pub stall: bool,
    pub mode: EchoMode,
}

/// Trivial protocol speaker used as a test fixture.
pub fn serve_echo(input: impl BufRead, mut output: impl Write, options: &EchoOptions) -> std::io::Result<()> {
    let mut answered = 0;
    let reply = |out: &mut dyn Write, msg: &Message| -> std::io::Result<()> {
        writeln!(out, "{}", serde_json::to_string(msg).expect("messages serialize"))?;
        out.flush()
    };
    for line in input.lines() {
        let line = line?;
        let Ok(msg) = serde_json::from_str::<Message>(&line) else {
            continue;
        };
        match msg {
            Message::Hello { .. } => reply(
                &mut output,
                &Message::Ready {
                    version: options.reply_version.unwrap_or(PROTOCOL_VERSION),
                },
            )?,
            Message::Obs { .. } => {
                if options.exit_after.is_some_and(|n| answered >= n) {
                    return Ok(());
                }
                if options.stall {
                    std::thread::sleep(Duration::from_secs(3600));
                }
                match options.mode {
                    EchoMode::Straight => reply(
                        &mut output,
                        &Message::Act {
                            candidates: vec![arc_primitive(0.0)],
                            scores: vec![0.0],
                        },
                    )?,
                    EchoMode::Cmd => reply(&mut output, &Message::Cmd { v: 0.5, w: 0.0 })?,
                    EchoMode::Garbage => {
                        writeln!(output, "this is not json")?;
                        output.flush()?;
                    }
                }
                answered += 1;
            }
            _ => {}
        }
    }
    Ok(())
}
