//! Dataset layout on disk: `manifest.json` plus the PNG / PFM / text files it references.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::SparseDepthSample;
use crate::error::{Error, Result};
use crate::geometry::{default_lambda_t, CameraIntrinsics, CameraView, RigidPose};
use crate::io;
use crate::raster::{BinaryMask, ColorImage, DepthMap};
use crate::reproject::select_reference;
use crate::synth::{corrupt_depth, generate_scene, SynthSceneConfig, SynthView};

/// Poses within this distance of orthonormal are snapped onto SO(3) at load time.
pub const POSE_SNAP_TOLERANCE: f64 = 1e-6;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub views: Vec<ManifestView>,
    pub reference: ManifestReference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_units: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestView {
    pub id: String,
    pub image: String,
    pub intrinsics: CameraIntrinsics,
    pub pose_w2c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestReference {
    /// A view id, or `"auto"` to pick the view closest to all others.
    pub id: String,
    pub inpainted: String,
    pub mask: String,
    /// View the inpainted image was produced for; checked against the automatic choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inpainted_for: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceChoice {
    Auto,
    Explicit(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewData {
    pub camera: CameraView,
    pub image: ColorImage,
    pub depth_init: Option<DepthMap>,
    pub sparse: Option<Vec<SparseDepthSample>>,
    pub mask: Option<BinaryMask>,
    pub variant: Option<ColorImage>,
}

impl ViewData {
    pub fn id(&self) -> &str {
        &self.camera.view_id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub views: Vec<ViewData>,
    pub reference: ReferenceChoice,
    pub inpainted: ColorImage,
    pub reference_mask: BinaryMask,
    pub inpainted_for: Option<String>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn view(&self, id: &str) -> Option<&ViewData> {
        self.views.iter().find(|v| v.id() == id)
    }

    pub fn cameras(&self) -> Vec<CameraView> {
        self.views.iter().map(|v| v.camera.clone()).collect()
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn check_dims<T>(view_id: &str, what: &str, raster: &crate::raster::Raster<T>, k: &CameraIntrinsics) -> Result<()> {
    if raster.dims() != k.dims() {
        return Err(Error::Load {
            view_id: view_id.to_owned(),
            reason: format!(
                "{what} is {}x{}, intrinsics say {}x{}",
                raster.width(),
                raster.height(),
                k.width,
                k.height
            ),
        });
    }
    Ok(())
}

/// Loads and validates every file named by the manifest.
///
/// Missing or unreadable depth estimates and sparse sample files only disable the depth
/// prior for that view (recorded in `warnings`); every other problem is a load error naming
/// the view.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = read_manifest(manifest_path)?;
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    let mut views = Vec::with_capacity(manifest.views.len());

    for mv in &manifest.views {
        let load_err = |reason: String| Error::Load {
            view_id: mv.id.clone(),
            reason,
        };
        if mv.id == "auto" {
            return Err(load_err("`auto` is reserved and cannot be a view id".into()));
        }
        if !seen.insert(mv.id.clone()) {
            return Err(load_err("duplicate view id".into()));
        }
        mv.intrinsics
            .validate()
            .map_err(|e| load_err(e.to_string()))?;
        let pose_arr: [f64; 16] = mv
            .pose_w2c
            .as_slice()
            .try_into()
            .map_err(|_| load_err(format!("pose_w2c has {} numbers, expected 16", mv.pose_w2c.len())))?;
        let pose = RigidPose::from_row_major(&pose_arr, POSE_SNAP_TOLERANCE)
            .map_err(|e| load_err(e.to_string()))?;
        let k = mv.intrinsics;

        let image = io::read_color_png(&root.join(&mv.image)).map_err(|e| load_err(e.to_string()))?;
        check_dims(&mv.id, "image", &image, &k)?;

        let depth_init = match &mv.depth_init {
            None => None,
            Some(rel) => match io::read_pfm(&root.join(rel)) {
                Ok(d) => {
                    check_dims(&mv.id, "depth estimate", &d, &k)?;
                    Some(d)
                }
                Err(e) => {
                    warnings.push(format!(
                        "view `{}`: depth estimate unusable ({e}); depth prior disabled",
                        mv.id
                    ));
                    None
                }
            },
        };
        let sparse = match &mv.sparse {
            None => None,
            Some(rel) => match io::read_sparse_samples(&root.join(rel)) {
                Ok(s) => Some(s),
                Err(e) => {
                    warnings.push(format!(
                        "view `{}`: sparse samples unusable ({e}); depth alignment disabled",
                        mv.id
                    ));
                    None
                }
            },
        };
        let mask = match &mv.mask {
            None => None,
            Some(rel) => {
                let m = io::read_mask_png(&root.join(rel)).map_err(|e| load_err(e.to_string()))?;
                check_dims(&mv.id, "mask", &m, &k)?;
                Some(m)
            }
        };
        let variant = match &mv.variant {
            None => None,
            Some(rel) => Some(
                io::read_color_png(&root.join(rel)).map_err(|e| load_err(e.to_string()))?,
            ),
        };
        views.push(ViewData {
            camera: CameraView::new(mv.id.clone(), k, pose),
            image,
            depth_init,
            sparse,
            mask,
            variant,
        });
    }

    let r = &manifest.reference;
    let reference = if r.id == "auto" {
        ReferenceChoice::Auto
    } else {
        if !seen.contains(&r.id) {
            return Err(Error::Reference(format!("reference view `{}` is not in the manifest", r.id)));
        }
        ReferenceChoice::Explicit(r.id.clone())
    };
    let ref_err = |e: Error| Error::Load {
        view_id: r.id.clone(),
        reason: format!("reference input: {e}"),
    };
    let inpainted = io::read_color_png(&root.join(&r.inpainted)).map_err(ref_err)?;
    let reference_mask = io::read_mask_png(&root.join(&r.mask)).map_err(ref_err)?;

    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Dataset {
        root,
        views,
        reference,
        inpainted,
        reference_mask,
        inpainted_for: r.inpainted_for.clone(),
        warnings,
    })
}

/// How [`write_synthetic_dataset`] lays out a generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDatasetConfig {
    pub scene: SynthSceneConfig,
    /// Write `"auto"` as the reference id instead of the resolved view id.
    pub auto_reference: bool,
    /// Noise added to the scale-ambiguous depth estimates.
    pub depth_noise_sigma: f64,
    /// Write depth estimates and sparse samples for the non-reference views. The reference
    /// always gets them since projection needs its depth.
    pub target_depth: bool,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        SynthDatasetConfig {
            scene: SynthSceneConfig::plane_ring(),
            auto_reference: false,
            depth_noise_sigma: 0.0,
            target_depth: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest_path: PathBuf,
    pub ground_truth_dir: PathBuf,
    pub reference_id: String,
    pub views: Vec<SynthView>,
    /// Per-view `(a, b)` such that `a * depth_init + b` is the exact depth.
    pub corruption: BTreeMap<String, (f64, f64)>,
}

/// Generates the scene and writes it in the dataset layout, plus ground truth under `gt/`
/// (`gt/images` hold the object-free renders, `gt/masks` the exact object masks). The
/// reference's inpainted image is its object-free render.
pub fn write_synthetic_dataset(cfg: &SynthDatasetConfig, out: &Path) -> Result<SynthDataset> {
    let views = generate_scene(&cfg.scene)?;
    let cams: Vec<CameraView> = views.iter().map(|v| v.cam.clone()).collect();
    let poses: Vec<RigidPose> = cams.iter().map(|c| c.pose).collect();
    let reference_id = select_reference(&cams, default_lambda_t(&poses))?;
    let reference = views
        .iter()
        .find(|v| v.cam.view_id == reference_id)
        .expect("selected from these views");

    for sub in ["images", "depth", "sparse", "reference", "gt/images", "gt/masks"] {
        let dir = out.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.scene.seed.wrapping_add(0x5eed));
    let mut corruption = BTreeMap::new();
    let mut entries = Vec::new();
    for (i, v) in views.iter().enumerate() {
        let id = &v.cam.view_id;
        let image = format!("images/{id}.png");
        io::write_color_png(&out.join(&image), &v.color)?;
        io::write_color_png(&out.join(format!("gt/images/{id}.png")), &v.clean)?;
        io::write_mask_png(&out.join(format!("gt/masks/{id}.png")), &v.mask)?;
        let (mut depth_init, mut sparse) = (None, None);
        if cfg.target_depth || *id == reference_id {
            let a: f64 = rng.random_range(0.5..2.0);
            let b: f64 = rng.random_range(-0.5..0.5);
            let d = corrupt_depth(&v.depth, a, b, cfg.depth_noise_sigma, cfg.scene.seed ^ i as u64)?;
            let dpath = format!("depth/{id}.pfm");
            io::write_pfm(&out.join(&dpath), &d)?;
            let spath = format!("sparse/{id}.txt");
            io::write_sparse_samples(&out.join(&spath), &v.samples)?;
            corruption.insert(id.clone(), (a, b));
            depth_init = Some(dpath);
            sparse = Some(spath);
        }
        entries.push(ManifestView {
            id: id.clone(),
            image,
            intrinsics: v.cam.intrinsics,
            pose_w2c: v.cam.pose.to_row_major().to_vec(),
            depth_init,
            sparse,
            mask: None,
            variant: None,
        });
    }
    io::write_color_png(&out.join("reference/inpainted.png"), &reference.clean)?;
    io::write_mask_png(&out.join("reference/mask.png"), &reference.mask)?;

    let manifest = Manifest {
        views: entries,
        reference: ManifestReference {
            id: if cfg.auto_reference {
                "auto".into()
            } else {
                reference_id.clone()
            },
            inpainted: "reference/inpainted.png".into(),
            mask: "reference/mask.png".into(),
            inpainted_for: Some(reference_id.clone()),
        },
        scene_units: Some("synthetic".into()),
    };
    let manifest_path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(SynthDataset {
        manifest_path,
        ground_truth_dir: out.join("gt"),
        reference_id,
        views,
        corruption,
    })
}
