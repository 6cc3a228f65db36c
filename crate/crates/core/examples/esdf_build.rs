//! Distance field for two robot heights of the same scene.

use navgen::esdf::{downsample, esdf_for_scene, EsdfParams};
use navgen::scene::{generate_scene, SceneGenConfig};

fn main() -> navgen::Result<()> {
    let scene = generate_scene(&SceneGenConfig::default(), 3)?;
    let params = EsdfParams::default();
    for h_b in [0.3, 1.1] {
        let (mask, esdf) = esdf_for_scene(&scene, h_b, &params)?;
        let blocked = mask.blocked.iter().filter(|&&b| b).count();
        let coarse = downsample(&esdf, params.coarse_resolution)?;
        let max = esdf.distance.iter().cloned().fold(0.0, f64::max);
        println!(
            "h_b {h_b:.1} m: {blocked} blocked cells, {} navigable fine, {} navigable coarse, max distance {max:.2} m",
            esdf.navigable_count(),
            coarse.navigable_count()
        );
    }
    Ok(())
}
