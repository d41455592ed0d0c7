//! Deterministic synthetic captures: checkerboard planes seen by a ring of pinhole cameras,
//! with exact depth, an object mask, sparse depth samples, and closed-form plane-homography
//! warps to check projections against.

use nalgebra::{Matrix3, Point3, Vector3};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::align::SparseDepthSample;
use crate::error::{Error, Result};
use crate::geometry::{relative_pose, CameraIntrinsics, CameraView, RigidPose};
use crate::raster::{is_valid_depth, nearest_pixel, BinaryMask, ColorImage, DepthMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    fn contains(&self, p: &Point3<f64>) -> bool {
        const TOL: f64 = 1e-9;
        (0..3).all(|i| p[i] >= self.min[i] - TOL && p[i] <= self.max[i] + TOL)
    }
}

/// The plane `normal · p + offset = 0`, textured with a checkerboard. A plane with `bounds`
/// is a finite patch: only hits inside the box count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub normal: [f64; 3],
    pub offset: f64,
    pub checker: f64,
    pub colors: [[u8; 3]; 2],
    pub bounds: Option<Aabb>,
}

impl PlaneSpec {
    /// Plane `z = depth` facing cameras on the `-z` side.
    pub fn fronto(depth: f64, checker: f64) -> Self {
        PlaneSpec {
            normal: [0.0, 0.0, 1.0],
            offset: -depth,
            checker,
            colors: [[230, 220, 200], [40, 60, 90]],
            bounds: None,
        }
    }

    fn unit_normal(&self) -> Vector3<f64> {
        Vector3::from(self.normal).normalize()
    }

    /// Offset rescaled to the unit normal.
    fn unit_offset(&self) -> f64 {
        self.offset / Vector3::from(self.normal).norm()
    }

    fn checker_color(&self, p: &Point3<f64>) -> [u8; 3] {
        let n = self.unit_normal();
        let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let e1 = n.cross(&helper).normalize();
        let e2 = n.cross(&e1);
        let s = (p.coords.dot(&e1) / self.checker).floor() as i64;
        let t = (p.coords.dot(&e2) / self.checker).floor() as i64;
        self.colors[(s + t).rem_euclid(2) as usize]
    }
}

/// The region of plane `plane` inside `bounds` is the object to be removed. It is drawn in a
/// flat `color` in captured images and labelled in the masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub plane: usize,
    pub bounds: Aabb,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CameraRig {
    /// `count` cameras on a horizontal arc of `arc_degrees` around `look_at`, all looking at
    /// it, raised by `elevation_degrees`.
    Ring {
        count: usize,
        radius: f64,
        look_at: [f64; 3],
        arc_degrees: f64,
        elevation_degrees: f64,
    },
    Explicit(Vec<RigidPose>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSceneConfig {
    pub planes: Vec<PlaneSpec>,
    pub object: Option<ObjectSpec>,
    /// An extra, nearer plane patch; set it to create occlusion.
    pub occluder: Option<PlaneSpec>,
    pub rig: CameraRig,
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub samples_per_view: usize,
    pub seed: u64,
}

impl SynthSceneConfig {
    /// One checkerboard plane at `z = 5` with a 2×2 object patch, seen by 8 cameras on a
    /// 35° arc (5° apart), 256×256 pixels, focal length 300.
    pub fn plane_ring() -> Self {
        let mut plane = PlaneSpec::fronto(5.0, 1.25);
        plane.colors = [[226, 214, 190], [52, 74, 110]];
        SynthSceneConfig {
            planes: vec![plane],
            object: Some(ObjectSpec {
                plane: 0,
                bounds: Aabb {
                    min: [-1.0, -1.0, 4.5],
                    max: [1.0, 1.0, 5.5],
                },
                color: [200, 30, 40],
            }),
            occluder: None,
            rig: CameraRig::Ring {
                count: 8,
                radius: 5.0,
                look_at: [0.0, 0.0, 5.0],
                arc_degrees: 35.0,
                elevation_degrees: 0.0,
            },
            width: 256,
            height: 256,
            focal: 300.0,
            samples_per_view: 500,
            seed: 7,
        }
    }

    /// A 1×1 fronto patch at `z = 2.5`, off to the right of the ring's look-at point.
    pub fn default_occluder() -> PlaneSpec {
        let mut p = PlaneSpec::fronto(2.5, 0.25);
        p.colors = [[250, 180, 20], [20, 120, 60]];
        p.bounds = Some(Aabb {
            min: [1.2, -0.5, 2.4],
            max: [2.2, 0.5, 2.6],
        });
        p
    }

    /// Far plane at `z = 5` plus [`Self::default_occluder`], seen by a camera at the origin
    /// (which misses the occluder) and one shifted by `+1` along x (which sees it).
    pub fn occlusion_pair() -> Result<Self> {
        let shifted = RigidPose::new(Matrix3::identity(), Vector3::new(-1.0, 0.0, 0.0))?;
        Ok(SynthSceneConfig {
            object: None,
            occluder: Some(Self::default_occluder()),
            rig: CameraRig::Explicit(vec![RigidPose::identity(), shifted]),
            ..Self::plane_ring()
        })
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        CameraIntrinsics::new(
            self.focal,
            self.focal,
            self.width as f64 / 2.0,
            self.height as f64 / 2.0,
            self.width,
            self.height,
        )
    }

    fn all_planes(&self) -> impl Iterator<Item = &PlaneSpec> {
        self.planes.iter().chain(self.occluder.iter())
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.planes.is_empty() {
            return bad("at least one plane is required".into());
        }
        for p in self.all_planes() {
            if !(p.checker > 0.0) {
                return bad(format!("checker size must be positive, got {}", p.checker));
            }
            if !(Vector3::from(p.normal).norm() > 0.0) {
                return bad("plane normal must be non-zero".into());
            }
        }
        if let Some(o) = &self.object {
            if o.plane >= self.planes.len() {
                return bad(format!("object plane index {} out of range", o.plane));
            }
        }
        match &self.rig {
            CameraRig::Ring { count, .. } if *count < 2 => {
                bad(format!("camera ring needs at least 2 cameras, got {count}"))
            }
            CameraRig::Explicit(p) if p.is_empty() => bad("no explicit camera poses".into()),
            _ => Ok(()),
        }
    }

    pub fn poses(&self) -> Result<Vec<RigidPose>> {
        match &self.rig {
            CameraRig::Explicit(p) => Ok(p.clone()),
            CameraRig::Ring {
                count,
                radius,
                look_at,
                arc_degrees,
                elevation_degrees,
            } => {
                let target = Point3::from(*look_at);
                let elev = elevation_degrees.to_radians();
                (0..*count)
                    .map(|i| {
                        let frac = i as f64 / (*count - 1) as f64;
                        let theta = (frac - 0.5) * arc_degrees.to_radians();
                        let dir = Vector3::new(
                            theta.sin() * elev.cos(),
                            -elev.sin(),
                            -theta.cos() * elev.cos(),
                        );
                        RigidPose::look_at(target + *radius * dir, target, Vector3::y())
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthView {
    pub cam: CameraView,
    /// Captured image, object included.
    pub color: ColorImage,
    /// The same view with the object painted over by the background texture.
    pub clean: ColorImage,
    /// Exact camera-frame depth, invalid where no plane is hit.
    pub depth: DepthMap,
    pub mask: BinaryMask,
    pub samples: Vec<SparseDepthSample>,
}

pub fn view_id(index: usize) -> String {
    format!("view_{index:03}")
}

/// Ray-casts every camera of the rig against the plane set.
pub fn generate_scene(cfg: &SynthSceneConfig) -> Result<Vec<SynthView>> {
    cfg.validate()?;
    let k = cfg.intrinsics()?;
    let poses = cfg.poses()?;
    let planes: Vec<&PlaneSpec> = cfg.all_planes().collect();
    let object_plane = cfg.object.map(|o| o.plane);

    poses
        .iter()
        .enumerate()
        .map(|(vi, pose)| {
            let cam = CameraView::new(view_id(vi), k, *pose);
            let center = pose.camera_center();
            let cam_to_world = pose.rotation().transpose();
            let (w, h) = (cfg.width, cfg.height);
            let mut color = ColorImage::filled(w, h, [0, 0, 0]);
            let mut clean = color.clone();
            let mut depth = DepthMap::filled(w, h, 0.0);
            let mut mask = BinaryMask::filled(w, h, false);
            let mut hits = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    let dir_cam = Vector3::new(
                        (x as f64 - k.cx) / k.fx,
                        (y as f64 - k.cy) / k.fy,
                        1.0,
                    );
                    let dir = cam_to_world * dir_cam;
                    let mut nearest: Option<(f64, usize)> = None;
                    for (pi, plane) in planes.iter().enumerate() {
                        let n = plane.unit_normal();
                        let denom = n.dot(&dir);
                        if denom.abs() < 1e-12 {
                            continue;
                        }
                        let t = -(n.dot(&center.coords) + plane.unit_offset()) / denom;
                        if !(t > 0.0) {
                            continue;
                        }
                        if let Some(b) = &plane.bounds {
                            if !b.contains(&(center + t * dir)) {
                                continue;
                            }
                        }
                        if nearest.is_none_or(|(best, _)| t < best) {
                            nearest = Some((t, pi));
                        }
                    }
                    let Some((t, pi)) = nearest else { continue };
                    let p = center + t * dir;
                    let bg = planes[pi].checker_color(&p);
                    let on_object = object_plane == Some(pi)
                        && cfg.object.is_some_and(|o| o.bounds.contains(&p));
                    depth.set(x, y, t);
                    clean.set(x, y, bg);
                    if on_object {
                        color.set(x, y, cfg.object.unwrap().color);
                        mask.set(x, y, true);
                    } else {
                        color.set(x, y, bg);
                    }
                    hits.push((x, y));
                }
            }
            if hits.is_empty() {
                return Err(Error::DegenerateScene(format!(
                    "camera {} sees no plane",
                    cam.view_id
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ (vi as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            let amount = cfg.samples_per_view.min(hits.len());
            let mut picked = index::sample(&mut rng, hits.len(), amount).into_vec();
            picked.sort_unstable();
            let samples = picked
                .into_iter()
                .map(|i| {
                    let (x, y) = hits[i];
                    SparseDepthSample::new(x as f64, y as f64, *depth.get(x, y))
                })
                .collect();
            Ok(SynthView {
                cam,
                color,
                clean,
                depth,
                mask,
                samples,
            })
        })
        .collect()
}

/// Warps `source` into `target_cam` through the homography induced by the world plane
/// `normal · p + offset = 0`, sampling the source by nearest neighbor. Returns the warped
/// image and the mask of target pixels that received a sample.
pub fn oracle_warp_plane(
    source: &SynthView,
    target_cam: &CameraView,
    normal: [f64; 3],
    offset: f64,
) -> Result<(ColorImage, BinaryMask)> {
    let scale = Vector3::from(normal).norm();
    if !(scale > 0.0) {
        return Err(Error::DegenerateHomography("zero plane normal".into()));
    }
    let n_world = Vector3::from(normal) / scale;
    let d_world = offset / scale;
    let in_frame = |pose: &RigidPose| {
        let n = pose.rotation() * n_world;
        (n, d_world - n.dot(pose.translation()))
    };
    let (n_src, d_src) = in_frame(&source.cam.pose);
    let (n_tgt, d_tgt) = in_frame(&target_cam.pose);
    if d_src.abs() < 1e-9 || d_tgt.abs() < 1e-9 {
        return Err(Error::DegenerateHomography(
            "plane passes through a camera center".into(),
        ));
    }
    let rel = relative_pose(&source.cam.pose, &target_cam.pose);
    let ks = &source.cam.intrinsics;
    let kt = &target_cam.intrinsics;
    let h: Matrix3<f64> = kt.matrix()
        * (rel.rotation() - rel.translation() * n_src.transpose() / d_src)
        * ks.inverse_matrix();
    let h_inv = h
        .try_inverse()
        .ok_or_else(|| Error::DegenerateHomography("singular homography".into()))?;
    let kt_inv = kt.inverse_matrix();

    let (tw, th) = kt.dims();
    let (sw, sh) = ks.dims();
    let mut color = ColorImage::filled(tw, th, [0, 0, 0]);
    let mut valid = BinaryMask::filled(tw, th, false);
    for y in 0..th {
        for x in 0..tw {
            let px = Vector3::new(x as f64, y as f64, 1.0);
            // Depth of the plane along this target ray must be positive.
            let z = -d_tgt / n_tgt.dot(&(kt_inv * px));
            if !(z > 0.0 && z.is_finite()) {
                continue;
            }
            let s = h_inv * px;
            if !(s.z > 0.0) {
                continue;
            }
            let Some((sx, sy)) = nearest_pixel(s.x / s.z, s.y / s.z, sw, sh) else {
                continue;
            };
            if !is_valid_depth(*source.depth.get(sx, sy)) {
                continue;
            }
            color.set(x, y, *source.color.get(sx, sy));
            valid.set(x, y, true);
        }
    }
    Ok((color, valid))
}

/// Manufactures a scale-ambiguous depth map whose alignment back to `depth` is `(a, b)`:
/// `(d - b) / a` plus seeded Gaussian noise of standard deviation `noise_sigma`.
pub fn corrupt_depth(
    depth: &DepthMap,
    a: f64,
    b: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<DepthMap> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::Config(format!("corruption scale must be non-zero, got {a}")));
    }
    let noise = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(depth.map(|&d| {
        let n = noise.map_or(0.0, |dist| dist.sample(&mut rng));
        if is_valid_depth(d) {
            (d - b) / a + n
        } else {
            0.0
        }
    }))
}
