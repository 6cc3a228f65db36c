//! Generate trajectories for a scene, slice them into records and print dataset statistics.

use navgen::dataset::{read_dataset, stats_of, write_dataset};
use navgen::pipeline::{generate_scene_trajectories, records_for, GenerationConfig, SceneMaps};
use navgen::scene::{generate_scene, SceneGenConfig};

fn main() -> navgen::Result<()> {
    let config = GenerationConfig {
        pairs_per_scene: 40,
        ..Default::default()
    };
    let maps = SceneMaps::new(generate_scene(&SceneGenConfig::default(), 21)?, config.esdf)?;
    let gen = generate_scene_trajectories(&maps, &config, 21);
    println!("{} trajectories, {} failed slots", gen.trajectories.len(), gen.failures.len());
    let records: Vec<_> = gen.trajectories.iter().flat_map(|t| records_for(t, &config, 21)).collect();
    let path = std::env::temp_dir().join("navgen_example_records.ndjson");
    write_dataset(&records, &path, "example")?;
    let (_, back) = read_dataset(&path)?;
    println!("{}", stats_of(&back));
    println!("written to {}", path.display());
    Ok(())
}
