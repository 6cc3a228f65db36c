//! One point-goal episode with the expert policy, printed every few seconds.

use navgen::esdf::EsdfParams;
use navgen::geom::Pose2;
use navgen::pipeline::SceneMaps;
use navgen::planner::sample_endpoints;
use navgen::policy::ExpertPolicy;
use navgen::robot::RobotModel;
use navgen::scene::{generate_scene, SceneGenConfig};
use navgen::seed::rng_from;
use navgen::simulator::{run_episode, EpisodeConfig, EpisodeContext};

fn main() -> navgen::Result<()> {
    let maps = SceneMaps::new(generate_scene(&SceneGenConfig::default(), 5)?, EsdfParams::default())?;
    let robot = RobotModel::default();
    let pm = maps.maps_for(robot.h_b)?;
    let (s, g) = sample_endpoints(&pm.coarse, &mut rng_from(2), 6.0, 12.0)?;
    let centre = |c: usize| {
        let (i, j) = pm.coarse.coords(c);
        pm.coarse.cell_center(i, j)
    };
    let (start, goal) = (centre(s), centre(g));
    let ctx = EpisodeContext {
        scene: &maps.scene,
        mask: &pm.mask,
        esdf: &pm.esdf,
        coarse: &pm.coarse,
        robot: &robot,
    };
    let config = EpisodeConfig::default();
    let mut expert = ExpertPolicy::default();
    let r = run_episode(&ctx, &mut expert, Pose2::new(start[0], start[1], 0.0), Some(goal), &config, 9);
    for step in r.trace.iter().step_by(30) {
        println!("t {:5.1}  ({:5.2}, {:5.2})  v {:4.2}", step.t, step.state.x, step.state.y, step.v);
    }
    println!(
        "{:?} after {:.1} s, path {:.2} m, goal was ({:.2}, {:.2})",
        r.outcome, r.elapsed, r.path_length, goal[0], goal[1]
    );
    Ok(())
}
