//! Forward projection of a reference view into target views.
//!
//! Every valid-depth source pixel is lifted to 3D, moved into the target camera and splatted
//! to its nearest target pixel. A per-target-pixel Z-buffer keeps the nearest surface, and an
//! optional depth prior for the target rejects points that disagree with the target's own
//! geometry (surfaces that should be hidden behind content the reference never saw).

use std::collections::BTreeMap;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    backproject_unchecked, pose_distance, project_unchecked, relative_pose, transform_point,
    CameraView, RigidPose,
};
use crate::raster::{
    ensure_dims, is_valid_depth, nearest_pixel, round_half_down, BinaryMask, ColorImage,
    DepthMap, Raster,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplatFootprint {
    /// Nearest target pixel only.
    Single,
    /// Nearest pixel plus its right, down and diagonal neighbors. Neighbor writes only land
    /// on target pixels that no source point hit directly.
    Quad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub epsilon_rel: f64,
    /// Absolute floor of the prior tolerance; `None` means `0.001 ×` the median valid prior
    /// depth of the target.
    pub epsilon_abs: Option<f64>,
    pub splat: SplatFootprint,
    pub use_depth_prior: bool,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            epsilon_rel: 0.02,
            epsilon_abs: None,
            splat: SplatFootprint::Single,
            use_depth_prior: true,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_rel >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon_rel must be >= 0, got {}",
                self.epsilon_rel
            )));
        }
        if let Some(e) = self.epsilon_abs {
            if !(e >= 0.0) {
                return Err(Error::Config(format!("epsilon_abs must be >= 0, got {e}")));
            }
        }
        Ok(())
    }
}

/// Counters for everything that did not make it into the target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectionStats {
    pub source_pixels: usize,
    pub invalid_depth: usize,
    pub behind_camera: usize,
    pub out_of_bounds: usize,
    pub prior_rejected: usize,
    pub zbuffer_rejected: usize,
    pub written: usize,
    pub covered: usize,
    pub prior_used: bool,
    pub epsilon_abs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub color: ColorImage,
    /// Set exactly where `zbuffer` holds a valid depth.
    pub coverage: BinaryMask,
    pub zbuffer: DepthMap,
    pub stats: ProjectionStats,
}

struct Warped<P> {
    values: Raster<P>,
    coverage: BinaryMask,
    zbuffer: DepthMap,
    stats: ProjectionStats,
}

struct PriorTest<'a> {
    prior: &'a DepthMap,
    eps_rel: f64,
    eps_abs: f64,
}

impl PriorTest<'_> {
    #[inline]
    fn accepts(&self, x: usize, y: usize, z: f64) -> bool {
        match self.prior.depth_at(x, y) {
            Some(p) => (p - z).abs() < self.eps_abs.max(self.eps_rel * p),
            None => true,
        }
    }
}

/// Shared engine behind [`forward_project`] and [`propagate_mask`]: warps any per-pixel
/// payload. Source pixels are visited in row-major order and the Z test is strict, so the
/// first of several equally deep candidates wins.
fn warp<P: Copy>(
    values: &Raster<P>,
    empty: P,
    source_depth: &DepthMap,
    source_cam: &CameraView,
    target_cam: &CameraView,
    prior: Option<&DepthMap>,
    cfg: &ProjectionConfig,
) -> Warped<P> {
    let (sw, sh) = source_depth.dims();
    let (tw, th) = target_cam.intrinsics.dims();
    let ks = &source_cam.intrinsics;
    let kt = &target_cam.intrinsics;
    let rel = relative_pose(&source_cam.pose, &target_cam.pose);

    let mut stats = ProjectionStats {
        source_pixels: sw * sh,
        ..Default::default()
    };
    let prior_test = match prior {
        Some(p) if cfg.use_depth_prior => {
            let eps_abs = cfg
                .epsilon_abs
                .unwrap_or_else(|| 0.001 * p.median_valid().unwrap_or(0.0));
            stats.prior_used = true;
            stats.epsilon_abs = Some(eps_abs);
            Some(PriorTest {
                prior: p,
                eps_rel: cfg.epsilon_rel,
                eps_abs,
            })
        }
        _ => None,
    };

    let mut out = Raster::filled(tw, th, empty);
    let mut zbuf = vec![f64::INFINITY; tw * th];

    // (target u, v, z) for one source pixel, or None if it has no usable depth.
    let land = |x: usize, y: usize| -> Option<(f64, f64, f64)> {
        let d = source_depth.depth_at(x, y)?;
        let p = backproject_unchecked(x as f64, y as f64, d, ks);
        let q = transform_point(&rel, &p);
        if !(q.z > 0.0) {
            return Some((f64::NAN, f64::NAN, q.z));
        }
        let s = project_unchecked(&q, kt);
        Some((s.u, s.v, s.depth))
    };

    for y in 0..sh {
        for x in 0..sw {
            let Some((u, v, z)) = land(x, y) else {
                stats.invalid_depth += 1;
                continue;
            };
            if !(z > 0.0) {
                stats.behind_camera += 1;
                continue;
            }
            let Some((tx, ty)) = nearest_pixel(u, v, tw, th) else {
                stats.out_of_bounds += 1;
                continue;
            };
            if let Some(pt) = &prior_test {
                if !pt.accepts(tx, ty, z) {
                    stats.prior_rejected += 1;
                    continue;
                }
            }
            let ti = ty * tw + tx;
            if z < zbuf[ti] {
                zbuf[ti] = z;
                out.as_mut_slice()[ti] = *values.get(x, y);
                stats.written += 1;
            } else {
                stats.zbuffer_rejected += 1;
            }
        }
    }

    if cfg.splat == SplatFootprint::Quad {
        let primary: Vec<bool> = zbuf.iter().map(|z| z.is_finite()).collect();
        for y in 0..sh {
            for x in 0..sw {
                let Some((u, v, z)) = land(x, y) else {
                    continue;
                };
                if !(z > 0.0) {
                    continue;
                }
                let (bx, by) = (round_half_down(u), round_half_down(v));
                for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                    let (nx, ny) = (bx + dx, by + dy);
                    if !(nx >= 0.0 && ny >= 0.0 && nx < tw as f64 && ny < th as f64) {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let ti = ny * tw + nx;
                    if primary[ti] {
                        continue;
                    }
                    if let Some(pt) = &prior_test {
                        if !pt.accepts(nx, ny, z) {
                            stats.prior_rejected += 1;
                            continue;
                        }
                    }
                    if z < zbuf[ti] {
                        zbuf[ti] = z;
                        out.as_mut_slice()[ti] = *values.get(x, y);
                        stats.written += 1;
                    } else {
                        stats.zbuffer_rejected += 1;
                    }
                }
            }
        }
    }

    let coverage = BinaryMask::from_vec(tw, th, zbuf.iter().map(|z| z.is_finite()).collect())
        .expect("target buffer sized from intrinsics");
    stats.covered = coverage.count_ones();
    let zbuffer = DepthMap::from_vec(
        tw,
        th,
        zbuf.into_iter()
            .map(|z| if z.is_finite() { z } else { 0.0 })
            .collect(),
    )
    .expect("target buffer sized from intrinsics");
    Warped {
        values: out,
        coverage,
        zbuffer,
        stats,
    }
}

fn check_source(
    source_depth: &DepthMap,
    source_cam: &CameraView,
    target_cam: &CameraView,
    prior: Option<&DepthMap>,
) -> Result<()> {
    ensure_dims(
        "source depth",
        source_depth.dims(),
        source_cam.intrinsics.dims(),
    )?;
    if let Some(p) = prior {
        ensure_dims("target depth prior", p.dims(), target_cam.intrinsics.dims())?;
    }
    Ok(())
}

/// Forward-projects `source_color` into `target_cam` using `source_depth`.
pub fn forward_project(
    source_color: &ColorImage,
    source_depth: &DepthMap,
    source_cam: &CameraView,
    target_cam: &CameraView,
    target_prior: Option<&DepthMap>,
    cfg: &ProjectionConfig,
) -> Result<ProjectionResult> {
    cfg.validate()?;
    source_color.ensure_same_dims(source_depth, "source depth")?;
    check_source(source_depth, source_cam, target_cam, target_prior)?;
    let w = warp(
        source_color,
        [0, 0, 0],
        source_depth,
        source_cam,
        target_cam,
        target_prior,
        cfg,
    );
    Ok(ProjectionResult {
        color: w.values,
        coverage: w.coverage,
        zbuffer: w.zbuffer,
        stats: w.stats,
    })
}

/// Overwrites the masked region of `target_original` with projected pixels. Returns the
/// composite and the gap mask (masked pixels that received nothing).
pub fn composite_into_mask(
    target_original: &ColorImage,
    target_mask: &BinaryMask,
    proj: &ProjectionResult,
) -> Result<(ColorImage, BinaryMask)> {
    target_original.ensure_same_dims(target_mask, "target mask")?;
    target_original.ensure_same_dims(&proj.color, "projected image")?;
    target_original.ensure_same_dims(&proj.coverage, "projection coverage")?;
    let mut out = target_original.clone();
    for (i, px) in out.as_mut_slice().iter_mut().enumerate() {
        if target_mask.as_slice()[i] && proj.coverage.as_slice()[i] {
            *px = proj.color.as_slice()[i];
        }
    }
    let gaps = target_mask.and_not(&proj.coverage)?;
    Ok((out, gaps))
}

/// Fills gap pixels by repeated 4-neighbor dilation: each round, every gap pixel with at
/// least one known neighbor takes the rounded mean of those neighbors.
pub fn fill_gaps_naive(image: &ColorImage, gap_mask: &BinaryMask) -> Result<ColorImage> {
    image.ensure_same_dims(gap_mask, "gap mask")?;
    let (w, h) = image.dims();
    let mut known: Vec<bool> = gap_mask.as_slice().iter().map(|g| !g).collect();
    if !known.iter().any(|k| *k) {
        return Err(Error::NothingToFill);
    }
    let mut out = image.clone();
    let mut pending: Vec<usize> = (0..w * h).filter(|&i| !known[i]).collect();
    while !pending.is_empty() {
        let mut updates = Vec::new();
        for &i in &pending {
            let (x, y) = (i % w, i / w);
            let mut sum = [0u32; 3];
            let mut n = 0u32;
            let mut add = |j: usize| {
                if known[j] {
                    let c = out.as_slice()[j];
                    for k in 0..3 {
                        sum[k] += u32::from(c[k]);
                    }
                    n += 1;
                }
            };
            if x > 0 {
                add(i - 1);
            }
            if x + 1 < w {
                add(i + 1);
            }
            if y > 0 {
                add(i - w);
            }
            if y + 1 < h {
                add(i + w);
            }
            if n > 0 {
                let mean = sum.map(|s| ((s + n / 2) / n) as u8);
                updates.push((i, mean));
            }
        }
        for &(i, c) in &updates {
            out.as_mut_slice()[i] = c;
            known[i] = true;
        }
        pending.retain(|&i| !known[i]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPropagation {
    pub mask: BinaryMask,
    pub stats: ProjectionStats,
    /// Object pixels of the source mask that landed behind or outside the target camera.
    pub out_of_frustum: usize,
}

/// Carries the source object mask into the target view.
///
/// The mask is warped like an image (no depth prior, quad splat) so occlusion between object
/// and background is resolved by the Z-buffer, then closed with a disc of `close_radius` to
/// seal rounding pinholes.
pub fn propagate_mask(
    source_mask: &BinaryMask,
    source_depth: &DepthMap,
    source_cam: &CameraView,
    target_cam: &CameraView,
    close_radius: usize,
) -> Result<MaskPropagation> {
    source_mask.ensure_same_dims(source_depth, "source depth")?;
    check_source(source_depth, source_cam, target_cam, None)?;
    let cfg = ProjectionConfig {
        splat: SplatFootprint::Quad,
        use_depth_prior: false,
        ..Default::default()
    };
    let w = warp(
        source_mask,
        false,
        source_depth,
        source_cam,
        target_cam,
        None,
        &cfg,
    );
    let hit = BinaryMask::from_vec(
        w.values.width(),
        w.values.height(),
        w.values
            .as_slice()
            .iter()
            .zip(w.coverage.as_slice())
            .map(|(v, c)| *v && *c)
            .collect(),
    )?;
    let mask = hit.close(close_radius);

    let rel = relative_pose(&source_cam.pose, &target_cam.pose);
    let (tw, th) = target_cam.intrinsics.dims();
    let mut out_of_frustum = 0;
    for y in 0..source_mask.height() {
        for x in 0..source_mask.width() {
            if !*source_mask.get(x, y) {
                continue;
            }
            let Some(d) = source_depth.depth_at(x, y) else {
                continue;
            };
            let q = transform_point(
                &rel,
                &backproject_unchecked(x as f64, y as f64, d, &source_cam.intrinsics),
            );
            let visible = q.z > 0.0 && {
                let s = project_unchecked(&q, &target_cam.intrinsics);
                nearest_pixel(s.u, s.v, tw, th).is_some()
            };
            if !visible {
                out_of_frustum += 1;
            }
        }
    }
    if out_of_frustum > 0 {
        log::warn!(
            "{out_of_frustum} object pixels fall outside the frustum of `{}`",
            target_cam.view_id
        );
    }
    Ok(MaskPropagation {
        mask,
        stats: w.stats,
        out_of_frustum,
    })
}

/// Relative slack under which two mean distances count as tied. Symmetric rigs produce
/// exact geometric ties that rounding would otherwise break arbitrarily.
pub const REFERENCE_TIE_TOLERANCE: f64 = 1e-9;

/// Mean pose distance from each view to all others, in input order.
pub fn mean_pose_distances(views: &[CameraView], lambda_t: f64) -> Vec<f64> {
    let n = views.len();
    views
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let total: f64 = views
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| pose_distance(&a.pose, &b.pose, lambda_t))
                .sum();
            if n > 1 {
                total / (n - 1) as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Picks the reference view: the one with the smallest mean pose distance to all others.
/// Means within [`REFERENCE_TIE_TOLERANCE`] of the minimum are ties, which go to the
/// lexicographically smallest `view_id`.
pub fn select_reference(views: &[CameraView], lambda_t: f64) -> Result<String> {
    if views.is_empty() {
        return Err(Error::EmptyInput("no views to select a reference from"));
    }
    let means = mean_pose_distances(views, lambda_t);
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = REFERENCE_TIE_TOLERANCE * min.abs().max(1.0);
    let id = views
        .iter()
        .zip(&means)
        .filter(|&(_, &m)| m <= min + slack)
        .map(|(v, _)| v.view_id.as_str())
        .min()
        .expect("non-empty");
    Ok(id.to_owned())
}

/// The inpainted reference plus optional per-target directional variants rendered from the
/// reference viewpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSet {
    base: ColorImage,
    variants: BTreeMap<String, ColorImage>,
}

impl VariantSet {
    pub fn new(base: ColorImage, variants: BTreeMap<String, ColorImage>) -> Result<Self> {
        for img in variants.values() {
            base.ensure_same_dims(img, "directional variant")?;
        }
        Ok(VariantSet { base, variants })
    }

    pub fn base(&self) -> &ColorImage {
        &self.base
    }

    pub fn variants(&self) -> &BTreeMap<String, ColorImage> {
        &self.variants
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VariantPick<'a> {
    pub image: &'a ColorImage,
    pub is_fallback: bool,
}

/// Image to project into `target_id`: its own variant when one exists, else the base image.
pub fn render_variant_for_target<'a>(set: &'a VariantSet, target_id: &str) -> VariantPick<'a> {
    match set.variants.get(target_id) {
        Some(image) => VariantPick {
            image,
            is_fallback: false,
        },
        None => {
            if !set.variants.is_empty() {
                log::debug!("no directional variant for `{target_id}`, using the base image");
            }
            VariantPick {
                image: &set.base,
                is_fallback: true,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedPoint {
    pub position: Point3<f64>,
    pub color: [u8; 3],
}

/// World-frame colored points for every masked, valid-depth pixel on a `stride` grid.
pub fn export_seed_points(
    depth: &DepthMap,
    mask: &BinaryMask,
    color: &ColorImage,
    cam: &CameraView,
    stride: usize,
) -> Result<Vec<SeedPoint>> {
    if stride == 0 {
        return Err(Error::Config("seed point stride must be >= 1".into()));
    }
    depth.ensure_same_dims(mask, "mask")?;
    depth.ensure_same_dims(color, "color image")?;
    ensure_dims("depth", depth.dims(), cam.intrinsics.dims())?;
    let cam_to_world: RigidPose = cam.pose.inverse();
    let mut out = Vec::new();
    for y in (0..depth.height()).step_by(stride) {
        for x in (0..depth.width()).step_by(stride) {
            if !*mask.get(x, y) {
                continue;
            }
            let d = *depth.get(x, y);
            if !is_valid_depth(d) {
                continue;
            }
            let p = backproject_unchecked(x as f64, y as f64, d, &cam.intrinsics);
            out.push(SeedPoint {
                position: transform_point(&cam_to_world, &p),
                color: *color.get(x, y),
            });
        }
    }
    Ok(out)
}
