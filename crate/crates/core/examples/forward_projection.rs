//! Forward-projects one view of a checkerboard plane into the others and compares the result
//! with the exact plane-homography warp.

use viewprop::synth::{generate_scene, oracle_warp_plane, SynthSceneConfig};
use viewprop::{forward_project, ProjectionConfig, SplatFootprint};

fn main() -> viewprop::Result<()> {
    let cfg = SynthSceneConfig::plane_ring();
    let views = generate_scene(&cfg)?;
    let plane = cfg.planes[0];
    let source = &views[0];

    for splat in [SplatFootprint::Single, SplatFootprint::Quad] {
        println!("{splat:?} splat");
        let pc = ProjectionConfig {
            splat,
            use_depth_prior: false,
            ..Default::default()
        };
        for target in &views[1..] {
            let proj = forward_project(&source.color, &source.depth, &source.cam, &target.cam, None, &pc)?;
            let (oracle, valid) = oracle_warp_plane(source, &target.cam, plane.normal, plane.offset)?;
            let (mut both, mut exact) = (0usize, 0usize);
            for i in 0..oracle.len() {
                if valid.as_slice()[i] && proj.coverage.as_slice()[i] {
                    both += 1;
                    exact += usize::from(oracle.as_slice()[i] == proj.color.as_slice()[i]);
                }
            }
            println!(
                "  {} <- {}: {} covered, {:.3}% byte-exact vs oracle, {} z-buffer rejections",
                target.cam.view_id,
                source.cam.view_id,
                proj.stats.covered,
                100.0 * exact as f64 / both as f64,
                proj.stats.zbuffer_rejected
            );
        }
    }
    Ok(())
}
