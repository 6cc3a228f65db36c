//! Augment a straight trajectory toward an obstacle and compare critic values.

use navgen::critic::{augment, critic_label, CriticParams};
use navgen::esdf::{compute_esdf, ObstacleMask};
use navgen::geom::Pose2;
use navgen::seed::rng_from;

fn main() -> navgen::Result<()> {
    let mut mask = ObstacleMask::empty(0.05, [0.0, -3.0], [160, 120]);
    for j in 50..70 {
        for i in 80..90 {
            mask.set_blocked(i, j, true);
        }
    }
    let esdf = compute_esdf(&mask, 0.25, 10.0)?;
    let params = CriticParams::default();
    let tau: Vec<[f64; 2]> = (0..25).map(|k| [0.25 * k as f64, 0.0]).collect();
    let start = Pose2::new(0.5, 0.0, 0.0);
    let mut rng = rng_from(4);
    let world: Vec<[f64; 2]> = tau.iter().map(|&p| start.transform_point(p)).collect();
    let base = critic_label(&world, &esdf, &params);
    println!("reference: value {:.3}, unsafe {}", base.value, base.unsafe_count);
    for k in 0..6 {
        let aug = augment(&tau, &mut rng, "demo");
        let label = critic_label(&aug.to_world(&start), &esdf, &params);
        println!(
            "aug {k}: beta {:.2} rotation {:+.2} rad, value {:.3}, unsafe {}, trend {:+.3}",
            aug.beta, aug.rotation, label.value, label.unsafe_count, label.trend_term
        );
    }
    Ok(())
}
