//! Exports the masked region of the reference as a colored point cloud.

use viewprop::dataset::{load_dataset, write_synthetic_dataset, SynthDatasetConfig};
use viewprop::io::write_ply;
use viewprop::pipeline::{reference_seed_points, RunConfig};

fn main() -> viewprop::Result<()> {
    let root = std::env::temp_dir().join("viewprop-seed-points");
    let synth = write_synthetic_dataset(&SynthDatasetConfig::default(), &root)?;
    let ds = load_dataset(&synth.manifest_path)?;
    let points = reference_seed_points(&ds, &RunConfig::default(), 2)?;

    let (lo, hi) = points.iter().fold(([f64::MAX; 3], [f64::MIN; 3]), |(mut lo, mut hi), p| {
        for i in 0..3 {
            lo[i] = lo[i].min(p.position[i]);
            hi[i] = hi[i].max(p.position[i]);
        }
        (lo, hi)
    });
    println!("{} points, bounds {lo:.3?} .. {hi:.3?}", points.len());
    let path = root.join("seed_points.ply");
    write_ply(&path, &points)?;
    println!("wrote {}", path.display());
    Ok(())
}
