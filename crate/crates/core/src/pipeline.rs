//! End-to-end orchestration: reference selection, depth alignment, mask propagation,
//! projection, compositing and output/report emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{
    apply_affine_depth, fit_affine_depth_with, select_alignment_samples, AlignmentFit,
    FitOptions,
};
use crate::dataset::{Dataset, ReferenceChoice, ViewData};
use crate::error::{Error, Result};
use crate::geometry::{default_lambda_t, CameraView, RigidPose};
use crate::io;
use crate::metrics::{aggregate_report, mask_score, psnr, Report, ViewScores};
use crate::raster::{BinaryMask, ColorImage, DepthMap};
use crate::reproject::{
    composite_into_mask, export_seed_points, fill_gaps_naive, forward_project, propagate_mask,
    render_variant_for_target, ProjectionConfig, ProjectionStats, SeedPoint, VariantSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapFill {
    /// Emit gap masks only.
    None,
    /// Fill gaps by neighbor dilation.
    Naive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub projection: ProjectionConfig,
    /// Chebyshev band around the mask for alignment samples; `None` = 25% of the image
    /// diagonal.
    pub band_radius: Option<f64>,
    /// Translation weight of the pose distance; `None` = 1 / median camera spacing.
    pub lambda_t: Option<f64>,
    pub close_radius: usize,
    pub gap_fill: GapFill,
    pub trim_outliers: bool,
    /// Worker threads for per-view work; does not affect results.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            projection: ProjectionConfig::default(),
            band_radius: None,
            lambda_t: None,
            close_radius: 2,
            gap_fill: GapFill::None,
            trim_outliers: false,
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.projection.validate()?;
        if let Some(b) = self.band_radius {
            if !(b > 0.0) {
                return Err(Error::Config(format!("band radius must be > 0, got {b}")));
            }
        }
        if let Some(l) = self.lambda_t {
            if !(l >= 0.0) {
                return Err(Error::Config(format!("lambda_t must be >= 0, got {l}")));
            }
        }
        Ok(())
    }

    fn band_for(&self, w: usize, h: usize) -> f64 {
        self.band_radius
            .unwrap_or_else(|| 0.25 * ((w * w + h * h) as f64).sqrt())
    }
}

/// How far a pipeline invocation goes and which artifacts it writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    AlignDepth,
    PropagateMasks,
    Project,
    Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub view_id: String,
    pub status: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub rms: Option<f64>,
    pub sample_count: usize,
    pub invalidated: usize,
}

impl AlignmentRow {
    fn fitted(view_id: &str, fit: &AlignmentFit, invalidated: usize) -> Self {
        AlignmentRow {
            view_id: view_id.to_owned(),
            status: "aligned".into(),
            a: Some(fit.a),
            b: Some(fit.b),
            rms: Some(fit.rms_residual),
            sample_count: fit.sample_count,
            invalidated,
        }
    }

    fn unfitted(view_id: &str, status: impl Into<String>) -> Self {
        AlignmentRow {
            view_id: view_id.to_owned(),
            status: status.into(),
            a: None,
            b: None,
            rms: None,
            sample_count: 0,
            invalidated: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewStats {
    pub view_id: String,
    pub is_reference: bool,
    pub prior_used: bool,
    pub variant: String,
    pub filler: String,
    pub gap_pixels: usize,
    pub mask_pixels: usize,
    pub mask_out_of_frustum: usize,
    pub projection: ProjectionStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewOutput {
    pub view_id: String,
    pub aligned_depth: Option<DepthMap>,
    pub alignment: AlignmentRow,
    pub mask: Option<BinaryMask>,
    pub image: Option<ColorImage>,
    pub gaps: Option<BinaryMask>,
    pub coverage: Option<BinaryMask>,
    pub stats: Option<ViewStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedView {
    pub view_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub reference: String,
    pub processed: Vec<String>,
    pub skipped: Vec<SkippedView>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    /// 0 when every view was processed, 2 when some were skipped.
    pub fn exit_code(&self) -> i32 {
        if self.skipped.is_empty() {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub reference: String,
    pub views: Vec<ViewOutput>,
    pub summary: RunSummary,
}

/// Resolves the reference view id, either the explicit manifest choice or the view with the
/// smallest mean pose distance.
pub fn resolve_reference(ds: &Dataset, lambda_t: Option<f64>) -> Result<String> {
    let id = match &ds.reference {
        ReferenceChoice::Explicit(id) => id.clone(),
        ReferenceChoice::Auto => {
            let cams = ds.cameras();
            let poses: Vec<RigidPose> = cams.iter().map(|c| c.pose).collect();
            let lambda = lambda_t.unwrap_or_else(|| default_lambda_t(&poses));
            let id = crate::reproject::select_reference(&cams, lambda)?;
            if let Some(made_for) = &ds.inpainted_for {
                if made_for != &id {
                    return Err(Error::Reference(format!(
                        "automatic selection chose `{id}` but the inpainted image was made for `{made_for}`"
                    )));
                }
            }
            id
        }
    };
    let view = ds
        .view(&id)
        .ok_or_else(|| Error::Reference(format!("reference `{id}` is not a dataset view")))?;
    let dims = view.camera.intrinsics.dims();
    if ds.inpainted.dims() != dims || ds.reference_mask.dims() != dims {
        return Err(Error::Reference(format!(
            "inpainted image / mask size does not match reference `{id}` ({}x{})",
            dims.0, dims.1
        )));
    }
    Ok(id)
}

fn align_view(
    view: &ViewData,
    mask: &BinaryMask,
    cfg: &RunConfig,
) -> Result<(Option<DepthMap>, AlignmentRow)> {
    let id = view.id();
    let Some(initial) = &view.depth_init else {
        return Ok((None, AlignmentRow::unfitted(id, "no depth estimate")));
    };
    let Some(samples) = &view.sparse else {
        return Ok((None, AlignmentRow::unfitted(id, "no sparse samples")));
    };
    let (w, h) = initial.dims();
    let selected = select_alignment_samples(samples, mask, cfg.band_for(w, h));
    let fit = fit_affine_depth_with(
        initial,
        &selected,
        &FitOptions {
            trim_outliers: cfg.trim_outliers,
        },
    )?;
    let (aligned, invalidated) = apply_affine_depth(initial, &fit);
    Ok((Some(aligned), AlignmentRow::fitted(id, &fit, invalidated)))
}

/// The reference depth must exist; without sparse samples it is taken as already metric.
fn reference_depth(view: &ViewData, ds: &Dataset, cfg: &RunConfig) -> Result<(DepthMap, AlignmentRow)> {
    let id = view.id();
    match align_view(view, &ds.reference_mask, cfg)? {
        (Some(d), row) => Ok((d, row)),
        (None, row) if row.status == "no sparse samples" => {
            let d = view.depth_init.clone().expect("status implies a depth estimate");
            log::warn!("reference `{id}` has no sparse samples; using its depth as metric");
            Ok((d, AlignmentRow::unfitted(id, "used as metric")))
        }
        (None, _) => Err(Error::Reference(format!("reference `{id}` has no depth estimate"))),
    }
}

struct ReferenceState<'a> {
    view: &'a ViewData,
    depth: DepthMap,
    variants: VariantSet,
}

/// Everything for one target view; errors here skip only that view.
fn process_target(
    view: &ViewData,
    reference: &ReferenceState<'_>,
    ds: &Dataset,
    cfg: &RunConfig,
    stage: Stage,
) -> Result<ViewOutput> {
    let id = view.id();
    let ref_cam: &CameraView = &reference.view.camera;
    let propagated = propagate_mask(
        &ds.reference_mask,
        &reference.depth,
        ref_cam,
        &view.camera,
        cfg.close_radius,
    )?;
    let mask = propagated.mask;

    let (prior, alignment) = match align_view(view, &mask, cfg) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("view `{id}`: depth alignment failed ({e}); depth prior disabled");
            (None, AlignmentRow::unfitted(id, format!("failed: {e}")))
        }
    };
    let mut out = ViewOutput {
        view_id: id.to_owned(),
        aligned_depth: prior,
        alignment,
        mask: None,
        image: None,
        gaps: None,
        coverage: None,
        stats: None,
    };
    if stage < Stage::Project {
        out.mask = Some(mask);
        return Ok(out);
    }

    let pick = render_variant_for_target(&reference.variants, id);
    let proj_cfg = ProjectionConfig {
        use_depth_prior: cfg.projection.use_depth_prior && out.aligned_depth.is_some(),
        ..cfg.projection
    };
    if cfg.projection.use_depth_prior && out.aligned_depth.is_none() {
        log::info!("view `{id}`: no aligned depth prior, projecting without it");
    }
    let proj = forward_project(
        pick.image,
        &reference.depth,
        ref_cam,
        &view.camera,
        out.aligned_depth.as_ref(),
        &proj_cfg,
    )?;
    let (composite, gaps) = composite_into_mask(&view.image, &mask, &proj)?;
    let (image, filler) = fill(composite, &gaps, cfg.gap_fill)?;
    out.stats = Some(ViewStats {
        view_id: id.to_owned(),
        is_reference: false,
        prior_used: proj.stats.prior_used,
        variant: if pick.is_fallback { "base" } else { "directional" }.into(),
        filler: filler.into(),
        gap_pixels: gaps.count_ones(),
        mask_pixels: mask.count_ones(),
        mask_out_of_frustum: propagated.out_of_frustum,
        projection: proj.stats,
    });
    out.image = Some(image);
    out.gaps = Some(gaps);
    out.coverage = Some(proj.coverage);
    out.mask = Some(mask);
    Ok(out)
}

fn fill(composite: ColorImage, gaps: &BinaryMask, mode: GapFill) -> Result<(ColorImage, &'static str)> {
    match mode {
        GapFill::None => Ok((composite, "none")),
        GapFill::Naive if gaps.is_all_zero() => Ok((composite, "none")),
        GapFill::Naive => Ok((fill_gaps_naive(&composite, gaps)?, "naive")),
    }
}

fn process_reference(
    reference: &ReferenceState<'_>,
    row: AlignmentRow,
    ds: &Dataset,
    cfg: &RunConfig,
    stage: Stage,
) -> Result<ViewOutput> {
    let view = reference.view;
    let mut out = ViewOutput {
        view_id: view.id().to_owned(),
        aligned_depth: Some(reference.depth.clone()),
        alignment: row,
        mask: Some(ds.reference_mask.clone()),
        image: None,
        gaps: None,
        coverage: None,
        stats: None,
    };
    if stage < Stage::Project {
        return Ok(out);
    }
    let identity = ProjectionConfig {
        use_depth_prior: false,
        ..cfg.projection
    };
    let proj = forward_project(
        &ds.inpainted,
        &reference.depth,
        &view.camera,
        &view.camera,
        None,
        &identity,
    )?;
    let (composite, gaps) = composite_into_mask(&view.image, &ds.reference_mask, &proj)?;
    let (image, filler) = fill(composite, &gaps, cfg.gap_fill)?;
    out.stats = Some(ViewStats {
        view_id: view.id().to_owned(),
        is_reference: true,
        prior_used: false,
        variant: "base".into(),
        filler: filler.into(),
        gap_pixels: gaps.count_ones(),
        mask_pixels: ds.reference_mask.count_ones(),
        mask_out_of_frustum: 0,
        projection: proj.stats,
    });
    out.image = Some(image);
    out.gaps = Some(gaps);
    out.coverage = Some(proj.coverage);
    Ok(out)
}

/// Runs the pipeline in memory up to `stage`. Per-view results come back in dataset order,
/// independent of the thread count.
pub fn compute(ds: &Dataset, cfg: &RunConfig, stage: Stage) -> Result<PipelineOutput> {
    cfg.validate()?;
    let ref_id = resolve_reference(ds, cfg.lambda_t)?;
    let ref_view = ds.view(&ref_id).expect("resolved reference exists");

    let (ref_depth, ref_row) = reference_depth(ref_view, ds, cfg)?;

    let variants: BTreeMap<String, ColorImage> = ds
        .views
        .iter()
        .filter_map(|v| v.variant.clone().map(|img| (v.id().to_owned(), img)))
        .collect();
    let reference = ReferenceState {
        view: ref_view,
        depth: ref_depth,
        variants: VariantSet::new(ds.inpainted.clone(), variants)?,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<ViewOutput>> = pool.install(|| {
        ds.views
            .par_iter()
            .map(|v| {
                if v.id() == ref_id {
                    process_reference(&reference, ref_row.clone(), ds, cfg, stage)
                } else {
                    process_target(v, &reference, ds, cfg, stage)
                }
            })
            .collect()
    });

    let mut views = Vec::new();
    let mut summary = RunSummary {
        reference: ref_id.clone(),
        processed: Vec::new(),
        skipped: Vec::new(),
        warnings: ds.warnings.clone(),
    };
    for (v, r) in ds.views.iter().zip(results) {
        match r {
            Ok(out) => {
                summary.processed.push(out.view_id.clone());
                if out.alignment.status.starts_with("failed") {
                    summary.warnings.push(format!(
                        "view `{}`: depth alignment {}",
                        out.view_id, out.alignment.status
                    ));
                }
                views.push(out);
            }
            Err(e) => {
                log::error!("view `{}` skipped: {e}", v.id());
                summary.skipped.push(SkippedView {
                    view_id: v.id().to_owned(),
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(PipelineOutput {
        reference: ref_id,
        views,
        summary,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes the artifacts of `stage` under `out_dir`.
pub fn write_outputs(
    output: &PipelineOutput,
    cfg: &RunConfig,
    stage: Stage,
    out_dir: &Path,
) -> Result<()> {
    mkdir(out_dir)?;
    let write_alignment = matches!(stage, Stage::AlignDepth | Stage::Run);
    let write_masks = matches!(stage, Stage::PropagateMasks | Stage::Run);
    let write_images = stage >= Stage::Project;

    if stage == Stage::AlignDepth {
        mkdir(&out_dir.join("depth"))?;
    }
    if write_masks {
        mkdir(&out_dir.join("masks"))?;
    }
    if write_images {
        for sub in ["images", "gaps", "coverage"] {
            mkdir(&out_dir.join(sub))?;
        }
    }
    output.views.par_iter().try_for_each(|v| -> Result<()> {
        let id = &v.view_id;
        if stage == Stage::AlignDepth {
            if let Some(d) = &v.aligned_depth {
                io::write_pfm(&out_dir.join(format!("depth/{id}.pfm")), d)?;
            }
        }
        if write_masks {
            if let Some(m) = &v.mask {
                io::write_mask_png(&out_dir.join(format!("masks/{id}.png")), m)?;
            }
        }
        if write_images {
            if let (Some(img), Some(gaps), Some(cov)) = (&v.image, &v.gaps, &v.coverage) {
                io::write_color_png(&out_dir.join(format!("images/{id}.png")), img)?;
                io::write_mask_png(&out_dir.join(format!("gaps/{id}.png")), gaps)?;
                io::write_mask_png(&out_dir.join(format!("coverage/{id}.png")), cov)?;
            }
        }
        Ok(())
    })?;

    if write_alignment {
        let path = out_dir.join("alignment.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for v in &output.views {
            w.serialize(&v.alignment)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    if write_images {
        let stats: Vec<&ViewStats> = output.views.iter().filter_map(|v| v.stats.as_ref()).collect();
        write_json(&out_dir.join("projection_stats.json"), &stats)?;
    }
    if stage == Stage::Run {
        write_json(&out_dir.join("run_config.json"), cfg)?;
    }
    write_json(&out_dir.join("summary.json"), &output.summary)
}

/// Full pipeline: compute everything and write every artifact under `out_dir`.
pub fn run_pipeline(ds: &Dataset, cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    run_stage(ds, cfg, Stage::Run, out_dir)
}

pub fn run_stage(ds: &Dataset, cfg: &RunConfig, stage: Stage, out_dir: &Path) -> Result<RunSummary> {
    let output = compute(ds, cfg, stage)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| write_outputs(&output, cfg, stage, out_dir))?;
    Ok(output.summary)
}

/// Colored world points from the reference's aligned depth inside its mask, for
/// initializing a point-based scene representation.
pub fn reference_seed_points(ds: &Dataset, cfg: &RunConfig, stride: usize) -> Result<Vec<SeedPoint>> {
    cfg.validate()?;
    let ref_id = resolve_reference(ds, cfg.lambda_t)?;
    let view = ds.view(&ref_id).expect("resolved reference exists");
    let (depth, _) = reference_depth(view, ds, cfg)?;
    export_seed_points(&depth, &ds.reference_mask, &ds.inpainted, &view.camera, stride)
}

fn png_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(Error::io(dir, e)),
    };
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "png") {
            if let Some(stem) = path.file_stem() {
                out.insert(stem.to_string_lossy().into_owned());
            }
        }
    }
    Ok(out)
}

fn optional_mask(path: PathBuf) -> Result<Option<BinaryMask>> {
    if path.exists() {
        io::read_mask_png(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// Scores `outputs/images` against `ground_truth/images` (and the `masks/` folders when
/// present) for every view id found on both sides.
pub fn evaluate(outputs: &Path, ground_truth: &Path) -> Result<Report> {
    let ours = png_stems(&outputs.join("images"))?;
    let theirs = png_stems(&ground_truth.join("images"))?;
    let common: Vec<&String> = ours.intersection(&theirs).collect();
    if common.is_empty() {
        return Err(Error::EmptyInput("no view ids shared by outputs and ground truth"));
    }
    let orphans: Vec<String> = ours.symmetric_difference(&theirs).cloned().collect();

    let mut per_view = Vec::with_capacity(common.len());
    for id in common {
        let file = format!("{id}.png");
        let pred = io::read_color_png(&outputs.join("images").join(&file))?;
        let gt = io::read_color_png(&ground_truth.join("images").join(&file))?;
        let pred_mask = optional_mask(outputs.join("masks").join(&file))?;
        let gt_mask = optional_mask(ground_truth.join("masks").join(&file))?;

        let mut scores = ViewScores::new(id.clone());
        scores.psnr_full = Some(psnr(&pred, &gt, None)?);
        if let Some(m) = gt_mask.as_ref().filter(|m| !m.is_all_zero()) {
            scores.psnr_mask = Some(psnr(&pred, &gt, Some(m))?);
        }
        if let (Some(p), Some(g)) = (&pred_mask, &gt_mask) {
            scores = scores.with_mask_score(mask_score(p, g)?);
        }
        per_view.push(scores);
    }
    let mut report = aggregate_report(per_view)?;
    report.orphans = orphans;
    Ok(report)
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    write_json(path, report)
}
