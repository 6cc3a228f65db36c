//! Grid search, clearance refinement and spline smoothing between two sampled endpoints.

use navgen::esdf::EsdfParams;
use navgen::pipeline::SceneMaps;
use navgen::planner::{astar, path_points, refine_waypoints, sample_endpoints, spline_smooth, validate_trajectory};
use navgen::scene::{generate_scene, SceneGenConfig};
use navgen::seed::rng_from;

fn main() -> navgen::Result<()> {
    let maps = SceneMaps::new(generate_scene(&SceneGenConfig::default(), 11)?, EsdfParams::default())?;
    let pm = maps.maps_for(0.6)?;
    let (s, g) = sample_endpoints(&pm.coarse, &mut rng_from(1), 3.0, 15.0)?;
    let path = astar(&pm.coarse, s, g)?;
    let raw = path_points(&pm.coarse, &path);
    let refined = refine_waypoints(&raw, &pm.esdf, 0.3);
    let traj = spline_smooth(&refined, 0.25)?;
    let check = validate_trajectory(&traj, &pm.esdf, 0.25);
    println!("grid cost {:.2} m over {} cells", path.cost, path.cells.len());
    println!(
        "spline {} poses, {:.2} m, min clearance {:.3} m, valid {}",
        traj.len(),
        traj.arc_length(),
        check.min_clearance,
        check.valid
    );
    Ok(())
}
