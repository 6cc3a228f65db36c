//! Drive an episode through the stdio policy protocol. The example starts a
//! copy of itself with `--serve` as the policy process.

use std::time::Duration;

use navgen::geom::Pose2;
use navgen::policy::{serve_echo, EchoOptions, RemotePolicy};
use navgen::robot::RobotModel;
use navgen::scene::{Bounds, SceneSpec};
use navgen::simulator::{run_episode, EpisodeConfig, EpisodeContext};

fn main() -> navgen::Result<()> {
    if std::env::args().any(|a| a == "--serve") {
        let stdin = std::io::stdin();
        serve_echo(stdin.lock(), std::io::stdout(), &EchoOptions::default()).expect("stdio");
        return Ok(());
    }
    let exe = std::env::current_exe().expect("own path");
    let config = EpisodeConfig::default();
    let mut policy = RemotePolicy::spawn(
        &format!("{} --serve", exe.display()),
        [config.image_height, config.image_width],
        Duration::from_secs(1),
    )?;
    let scene = SceneSpec {
        id: "open".into(),
        seed: 0,
        bounds: Bounds::new(-2.0, 10.0, -3.0, 3.0),
        obstacles: Vec::new(),
    };
    let maps = navgen::pipeline::SceneMaps::new(scene, Default::default())?;
    let robot = RobotModel::default();
    let pm = maps.maps_for(robot.h_b)?;
    let ctx = EpisodeContext {
        scene: &maps.scene,
        mask: &pm.mask,
        esdf: &pm.esdf,
        coarse: &pm.coarse,
        robot: &robot,
    };
    let r = run_episode(&ctx, &mut policy, Pose2::new(0.0, 0.0, 0.0), Some([5.0, 0.0]), &config, 0);
    // the echo server always answers with the straight primitive, so the
    // robot drives past the goal into the far wall
    println!("{:?} after {:.1} s over {:.2} m, {} remote steps", r.outcome, r.elapsed, r.path_length, r.trace.len());
    Ok(())
}
