//! Warps the reference object mask into every view and scores it against the exact masks.

use viewprop::synth::{generate_scene, SynthSceneConfig};
use viewprop::{mask_score, propagate_mask};

fn main() -> viewprop::Result<()> {
    let views = generate_scene(&SynthSceneConfig::plane_ring())?;
    let reference = &views[views.len() / 2];
    for v in &views {
        let prop = propagate_mask(&reference.mask, &reference.depth, &reference.cam, &v.cam, 2)?;
        let s = mask_score(&prop.mask, &v.mask)?;
        println!(
            "{}: IoU {:.4}  Dice {:.4}  accuracy {:.5}  ({} object pixels out of frame)",
            v.cam.view_id, s.iou, s.dice, s.accuracy, prop.out_of_frustum
        );
    }
    Ok(())
}
