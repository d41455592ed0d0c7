use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use viewprop::dataset::{load_dataset, write_synthetic_dataset, SynthDatasetConfig};
use viewprop::io::write_ply;
use viewprop::pipeline::{
    evaluate, reference_seed_points, resolve_reference, run_stage, write_report, GapFill,
    RunConfig, Stage,
};
use viewprop::synth::SynthSceneConfig;
use viewprop::{Error, ProjectionConfig, SplatFootprint};

#[derive(Parser)]
#[command(name = "viewprop", version, about = "Propagate an inpainted reference view across a posed capture")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Dataset manifest (manifest.json).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, default_value_t = 0.02)]
    epsilon_rel: f64,
    /// Absolute depth tolerance; defaults to 0.001 x the median prior depth.
    #[arg(long, global = true)]
    epsilon_abs: Option<f64>,
    /// Alignment sample band in pixels; defaults to 25% of the image diagonal.
    #[arg(long, global = true)]
    band_radius: Option<f64>,
    /// Translation weight of the pose distance; defaults to 1 / median camera spacing.
    #[arg(long, global = true)]
    lambda_t: Option<f64>,
    /// Splat footprint side: 1 (single pixel) or 2 (2x2).
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    splat: u8,
    #[arg(long, global = true)]
    no_depth_prior: bool,
    #[arg(long, global = true, value_enum, default_value_t = GapFillArg::None)]
    gap_fill: GapFillArg,
    #[arg(long, global = true, default_value_t = 2)]
    close_radius: usize,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapFillArg {
    None,
    Naive,
}

#[derive(Subcommand)]
enum Command {
    /// Print the reference view id.
    SelectRef,
    /// Align every depth estimate and write depth/<id>.pfm plus alignment.csv.
    AlignDepth,
    /// Write the propagated object mask of every view.
    PropagateMasks,
    /// Project the inpainted reference into every view.
    Project,
    /// Full pipeline: alignment, masks, projection and all tables.
    Run,
    /// Score an output directory against ground truth and write report.json.
    Evaluate {
        /// Ground-truth directory holding images/ and optionally masks/.
        #[arg(long)]
        gt: PathBuf,
    },
    /// Write a synthetic checkerboard dataset with ground truth.
    Synth {
        #[arg(long, default_value_t = 8)]
        views: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Add a near plane patch that occludes parts of the far plane.
        #[arg(long)]
        occluder: bool,
        /// Gaussian noise on the written depth estimates.
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Write "auto" as the manifest reference.
        #[arg(long)]
        auto_reference: bool,
        /// Give only the reference a depth estimate.
        #[arg(long)]
        no_target_depth: bool,
    },
    /// Export the reference's masked, aligned depth as a colored PLY point cloud.
    SeedPoints {
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
}

impl Global {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            projection: ProjectionConfig {
                epsilon_rel: self.epsilon_rel,
                epsilon_abs: self.epsilon_abs,
                splat: if self.splat == 2 {
                    SplatFootprint::Quad
                } else {
                    SplatFootprint::Single
                },
                use_depth_prior: !self.no_depth_prior,
            },
            band_radius: self.band_radius,
            lambda_t: self.lambda_t,
            close_radius: self.close_radius,
            gap_fill: match self.gap_fill {
                GapFillArg::None => GapFill::None,
                GapFillArg::Naive => GapFill::Naive,
            },
            trim_outliers: false,
            threads: self.threads,
        }
    }

    fn manifest(&self) -> Result<&Path, Error> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::Config("--manifest is required".into()))
    }

    fn out(&self) -> Result<&Path, Error> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required".into()))
    }
}

fn execute(cli: &Cli) -> Result<u8, Error> {
    let g = &cli.global;
    let cfg = g.run_config();
    cfg.validate()?;
    let stage = match &cli.command {
        Command::AlignDepth => Some(Stage::AlignDepth),
        Command::PropagateMasks => Some(Stage::PropagateMasks),
        Command::Project => Some(Stage::Project),
        Command::Run => Some(Stage::Run),
        _ => None,
    };
    if let Some(stage) = stage {
        let ds = load_dataset(g.manifest()?)?;
        let summary = run_stage(&ds, &cfg, stage, g.out()?)?;
        println!(
            "reference {}: {} processed, {} skipped",
            summary.reference,
            summary.processed.len(),
            summary.skipped.len()
        );
        return Ok(summary.exit_code() as u8);
    }
    match &cli.command {
        Command::SelectRef => {
            let ds = load_dataset(g.manifest()?)?;
            println!("{}", resolve_reference(&ds, cfg.lambda_t)?);
        }
        Command::Evaluate { gt } => {
            let report = evaluate(g.out()?, gt)?;
            let path = g.out()?.join("report.json");
            write_report(&path, &report)?;
            println!("{} views scored, report at {}", report.per_view.len(), path.display());
        }
        Command::Synth {
            views,
            size,
            occluder,
            noise_sigma,
            auto_reference,
            no_target_depth,
        } => {
            let mut scene = SynthSceneConfig::plane_ring();
            if let viewprop::synth::CameraRig::Ring { count, .. } = &mut scene.rig {
                *count = *views;
            }
            scene.focal *= *size as f64 / scene.width as f64;
            scene.width = *size;
            scene.height = *size;
            scene.seed = g.seed;
            if *occluder {
                scene.occluder = Some(SynthSceneConfig::default_occluder());
            }
            let ds = write_synthetic_dataset(
                &SynthDatasetConfig {
                    scene,
                    auto_reference: *auto_reference,
                    depth_noise_sigma: *noise_sigma,
                    target_depth: !*no_target_depth,
                },
                g.out()?,
            )?;
            println!("{}", ds.manifest_path.display());
        }
        Command::SeedPoints { stride } => {
            let ds = load_dataset(g.manifest()?)?;
            let points = reference_seed_points(&ds, &cfg, *stride)?;
            let out = g.out()?;
            std::fs::create_dir_all(out).map_err(|e| Error::Io {
                path: out.to_owned(),
                source: e,
            })?;
            let path = out.join("seed_points.ply");
            write_ply(&path, &points)?;
            println!("{} points written to {}", points.len(), path.display());
        }
        _ => unreachable!("pipeline stages handled above"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
