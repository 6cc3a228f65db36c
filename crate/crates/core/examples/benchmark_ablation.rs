//! Critic-selected versus randomly selected candidates on cluttered no-goal episodes.

use navgen::policy::PolicySpec;
use navgen::robot::RobotModel;
use navgen::scene::{generate_scene, SceneGenConfig};
use navgen::simulator::{run_benchmark, BenchmarkSpec, EpisodeConfig, Task};

fn main() -> navgen::Result<()> {
    let cfg = SceneGenConfig {
        obstacle_count: 20,
        min_gap: 1.0,
        ..Default::default()
    };
    let scenes = (0..2).map(|k| generate_scene(&cfg, 40 + k)).collect::<navgen::Result<Vec<_>>>()?;
    let spec = BenchmarkSpec {
        task: Task::NoGoal,
        n_spawns: 8,
        seed: 1,
        episode: EpisodeConfig::default(),
        esdf: Default::default(),
    };
    for policy in [PolicySpec::Sampler { n: 16 }, PolicySpec::Random { n: 16 }] {
        let report = run_benchmark(&scenes, &[RobotModel::default()], &policy, &spec)?;
        println!("{}", policy.name());
        print!("{}", report.to_csv());
    }
    Ok(())
}
