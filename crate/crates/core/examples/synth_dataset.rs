//! Writes a synthetic dataset (manifest, images, depth, sparse samples, ground truth).
//!
//!     cargo run --example synth_dataset -- /tmp/synth

use std::path::PathBuf;

use viewprop::dataset::{load_dataset, write_synthetic_dataset, SynthDatasetConfig};

fn main() -> viewprop::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("viewprop-synth"));
    let cfg = SynthDatasetConfig {
        depth_noise_sigma: 0.005,
        ..Default::default()
    };
    let written = write_synthetic_dataset(&cfg, &out)?;
    println!("manifest: {}", written.manifest_path.display());
    println!("reference: {}", written.reference_id);
    for (id, (a, b)) in &written.corruption {
        println!("  {id}: metric = {a:.4} * estimate + {b:.4}");
    }
    let ds = load_dataset(&written.manifest_path)?;
    println!("reloaded {} views, {} warnings", ds.views.len(), ds.warnings.len());
    Ok(())
}
