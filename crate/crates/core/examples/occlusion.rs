//! A near patch that the reference cannot see hides part of the far plane in the target.
//! Without a target depth prior the far plane shows through it.

use viewprop::synth::{generate_scene, SynthSceneConfig};
use viewprop::{forward_project, ProjectionConfig};

fn main() -> viewprop::Result<()> {
    let cfg = SynthSceneConfig::occlusion_pair()?;
    let views = generate_scene(&cfg)?;
    let (reference, target) = (&views[0], &views[1]);

    for use_prior in [true, false] {
        let pc = ProjectionConfig {
            use_depth_prior: use_prior,
            ..Default::default()
        };
        let proj = forward_project(
            &reference.color,
            &reference.depth,
            &reference.cam,
            &target.cam,
            Some(&target.depth),
            &pc,
        )?;
        // Far-plane points landing where the target actually sees the near patch.
        let revealed = (0..proj.zbuffer.len())
            .filter(|&i| {
                proj.coverage.as_slice()[i] && target.depth.as_slice()[i] < 3.0 && proj.zbuffer.as_slice()[i] > 4.0
            })
            .count();
        println!(
            "depth prior {}: {revealed} wrongly revealed pixels, {} prior rejections",
            if use_prior { "on " } else { "off" },
            proj.stats.prior_rejected
        );
    }
    Ok(())
}
