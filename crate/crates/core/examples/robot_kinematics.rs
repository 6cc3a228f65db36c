//! Track a curved reference with the unicycle model and the pose-following controller.

use navgen::geom::Pose2;
use navgen::robot::{step_diff_drive, trajectory_to_cmd, RobotModel, RobotState, DEFAULT_K_OMEGA, DEFAULT_K_V};

fn main() {
    let robot = RobotModel::default();
    let reference: Vec<[f64; 2]> = (0..200).map(|k| {
        let s = 0.1 * k as f64;
        [s, (0.3 * s).sin()]
    }).collect();
    let mut state = RobotState::at(Pose2::new(0.0, -0.3, 0.0));
    for step in 0..100 {
        let pose = state.pose();
        let nearest = reference
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1[0] - pose.x).hypot(a.1[1] - pose.y);
                let db = (b.1[0] - pose.x).hypot(b.1[1] - pose.y);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let window: Vec<[f64; 2]> = reference[nearest..(nearest + 10).min(reference.len())]
            .iter()
            .map(|&p| pose.inverse_transform_point(p))
            .collect();
        let (v, omega) = trajectory_to_cmd(&window, DEFAULT_K_V, DEFAULT_K_OMEGA, &robot);
        state = step_diff_drive(&state, v, omega, 0.1);
        if step % 20 == 0 {
            println!("t {:4.1} s  x {:5.2}  y {:5.2}  v {v:4.2}  ω {omega:5.2}", 0.1 * step as f64, state.x, state.y);
        }
    }
}
