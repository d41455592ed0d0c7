//! Propagate one inpainted reference view to every view of a posed multi-view capture.
//!
//! The reference depth is aligned to metric scale from sparse samples, the inpainted pixels
//! are forward-projected into each target with a Z-buffer, and an optional per-target depth
//! prior rejects points that should be hidden behind geometry the reference never saw.

pub mod align;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod reproject;
pub mod synth;

pub use align::{
    apply_affine_depth, fit_affine_depth, fit_affine_depth_with, select_alignment_samples,
    AlignmentFit, FitOptions, SparseDepthSample,
};
pub use dataset::{load_dataset, write_synthetic_dataset, Dataset, SynthDatasetConfig};
pub use error::{Error, Result};
pub use geometry::{
    backproject_pixel, default_lambda_t, pose_distance, project_point, relative_pose,
    CameraIntrinsics, CameraView, PixelSample, RigidPose,
};
pub use metrics::{mask_score, psnr, MaskScore, Report, ViewScores};
pub use pipeline::{evaluate, run_pipeline, GapFill, RunConfig, RunSummary, Stage};
pub use raster::{BinaryMask, ColorImage, DepthMap, Raster};
pub use reproject::{
    composite_into_mask, export_seed_points, fill_gaps_naive, forward_project, propagate_mask,
    select_reference, ProjectionConfig, ProjectionResult, ProjectionStats, SplatFootprint,
};
