//! Generate a procedural scene and count occupied voxels per height layer.

use navgen::scene::{generate_scene, voxelize, SceneGenConfig};

fn main() -> navgen::Result<()> {
    let scene = generate_scene(&SceneGenConfig::default(), 7)?;
    println!("{} obstacles in {:?}", scene.obstacles.len(), scene.bounds);
    let grid = voxelize(&scene, 0.05)?;
    println!("grid {:?}, {} occupied voxels", grid.dims, grid.occupied_count());
    for k in (0..grid.dims[2]).step_by(8) {
        let n = (0..grid.dims[1])
            .flat_map(|j| (0..grid.dims[0]).map(move |i| (i, j)))
            .filter(|&(i, j)| grid.is_occupied(i, j, k))
            .count();
        println!("  z = {:.2} m: {n}", grid.center(0, 0, k)[2]);
    }
    Ok(())
}
