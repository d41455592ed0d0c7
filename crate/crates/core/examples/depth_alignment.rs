//! Recovers the scale and shift of a corrupted depth map from sparse metric samples.

use viewprop::synth::{corrupt_depth, generate_scene, SynthSceneConfig};
use viewprop::{apply_affine_depth, fit_affine_depth, select_alignment_samples};

fn main() -> viewprop::Result<()> {
    let cfg = SynthSceneConfig::plane_ring();
    let view = generate_scene(&cfg)?.swap_remove(0);

    for (a, b, sigma) in [(2.0, 0.5, 0.0), (1.5, -0.2, 0.0), (0.7, 3.0, 0.01)] {
        let initial = corrupt_depth(&view.depth, a, b, sigma, 11)?;
        let band = 0.25 * ((cfg.width.pow(2) + cfg.height.pow(2)) as f64).sqrt();
        let samples = select_alignment_samples(&view.samples, &view.mask, band);
        let fit = fit_affine_depth(&initial, &samples)?;
        let (aligned, invalid) = apply_affine_depth(&initial, &fit);
        let worst = aligned
            .as_slice()
            .iter()
            .zip(view.depth.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        println!(
            "true ({a}, {b}) sigma {sigma}: fit ({:.6}, {:.6}) from {} samples, rms {:.2e}, max err {worst:.2e}, {invalid} invalid",
            fit.a, fit.b, fit.sample_count, fit.rms_residual
        );
    }
    Ok(())
}
