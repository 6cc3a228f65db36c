//! Render a depth image in front of a box and print it as ASCII shades.

use navgen::geom::Pose2;
use navgen::robot::RobotModel;
use navgen::scene::{Bounds, Box3, SceneSpec};
use navgen::simulator::render_depth;

fn main() {
    let scene = SceneSpec {
        id: "demo".into(),
        seed: 0,
        bounds: Bounds::new(-5.0, 5.0, -5.0, 5.0),
        obstacles: vec![Box3::new(1.5, 2.0, -0.4, 0.6, 0.0, 0.8)],
    };
    let cam = RobotModel::default().camera(64, 48);
    let depth = render_depth(&scene, &cam, &Pose2::new(0.0, 0.0, 0.0));
    let shades = [b'#', b'%', b'+', b'=', b'-', b'.', b' '];
    for v in (0..depth.height).step_by(3) {
        let row: Vec<u8> = (0..depth.width)
            .map(|u| {
                let d = depth.at(u, v);
                shades[((d / 3.0) * (shades.len() - 1) as f64).round() as usize]
            })
            .collect();
        println!("{}", String::from_utf8_lossy(&row));
    }
}
