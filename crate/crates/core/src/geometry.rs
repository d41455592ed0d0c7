//! Pinhole cameras, rigid world-to-camera poses and the pixel/point transforms built on them.
//!
//! Camera frames look along `+Z` with `x` to the right and `y` pointing down. Pixel `(i, j)`
//! has continuous coordinates `(i, j)`; nothing is re-centered by half a pixel.

use nalgebra::{Matrix3, Matrix4, Point3, Vector3, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidIntrinsics(m));
        if !(self.fx.is_finite() && self.fx > 0.0 && self.fy.is_finite() && self.fy > 0.0) {
            return fail(format!("focal lengths must be positive ({}, {})", self.fx, self.fy));
        }
        if self.width == 0 || self.height == 0 {
            return fail(format!("empty image {}x{}", self.width, self.height));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return fail(format!("cx = {} outside [0, {})", self.cx, self.width));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return fail(format!("cy = {} outside [0, {})", self.cy, self.height));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }
}

/// A world-to-camera rigid transform: `p_cam = rotation * p_world + translation`.
///
/// Serializes as the 16 row-major entries of its 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 16]", into = "[f64; 16]")]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    pub fn identity() -> Self {
        RigidPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose, rejecting rotations that are not orthonormal with determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        let err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if !(err <= ROTATION_TOL) {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {err:e})"
            )));
        }
        let det = rotation.determinant();
        if !((det - 1.0).abs() <= ROTATION_TOL) {
            return Err(Error::InvalidPose(format!("det(R) = {det}, expected +1")));
        }
        Ok(RigidPose {
            rotation,
            translation,
        })
    }

    /// Like [`RigidPose::new`], but first snaps a rotation that is within `tolerance` of
    /// orthonormal onto the nearest rotation matrix.
    pub fn orthonormalized(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if !rotation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPose("non-finite rotation".into()));
        }
        let det = rotation.determinant();
        if det <= 0.0 {
            return Err(Error::InvalidPose(format!("det(R) = {det}, expected +1")));
        }
        let err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if err > tolerance {
            return Err(Error::InvalidPose(format!(
                "rotation is not rigid (max |RᵀR - I| = {err:e} > {tolerance:e})"
            )));
        }
        if err <= 1e-12 {
            return Self::new(rotation, translation);
        }
        let svd = SVD::new(rotation, true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        Self::new(u * v_t, translation)
    }

    /// Pose of a camera centered at `center` looking at `target`. `down` hints the image
    /// `+y` direction in world coordinates.
    pub fn look_at(center: Point3<f64>, target: Point3<f64>, down: Vector3<f64>) -> Result<Self> {
        let forward = (target - center)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidPose("look_at target equals center".into()))?;
        let right = down
            .cross(&forward)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidPose("down hint is parallel to the view axis".into()))?;
        let down = forward.cross(&right);
        let cam_to_world = Matrix3::from_columns(&[right, down, forward]);
        let rotation = cam_to_world.transpose();
        let translation = -(rotation * center.coords);
        Self::new(rotation, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates, `-Rᵀ t`.
    pub fn camera_center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    pub fn inverse(&self) -> RigidPose {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Parses a row-major 4×4 matrix whose last row must be `0 0 0 1`; see
    /// [`RigidPose::orthonormalized`] for `tolerance`.
    pub fn from_row_major(m: &[f64; 16], tolerance: f64) -> Result<Self> {
        if m[12..] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidPose(format!(
                "last row must be 0 0 0 1, got {:?}",
                &m[12..]
            )));
        }
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        Self::orthonormalized(rotation, translation, tolerance)
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let m = self.to_matrix4();
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }
}

impl From<RigidPose> for [f64; 16] {
    fn from(p: RigidPose) -> Self {
        p.to_row_major()
    }
}

impl TryFrom<[f64; 16]> for RigidPose {
    type Error = Error;

    fn try_from(m: [f64; 16]) -> Result<Self> {
        Self::from_row_major(&m, ROTATION_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub view_id: String,
    pub intrinsics: CameraIntrinsics,
    pub pose: RigidPose,
}

impl CameraView {
    pub fn new(view_id: impl Into<String>, intrinsics: CameraIntrinsics, pose: RigidPose) -> Self {
        CameraView {
            view_id: view_id.into(),
            intrinsics,
            pose,
        }
    }
}

/// A continuous image-plane location with its camera-frame depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Lifts pixel `(u, v)` at `depth` into the camera frame: `depth · K⁻¹ · [u, v, 1]ᵀ`.
pub fn backproject_pixel(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Result<Point3<f64>> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::InvalidDepth(depth));
    }
    Ok(backproject_unchecked(u, v, depth, k))
}

#[inline]
pub(crate) fn backproject_unchecked(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Point3<f64> {
    Point3::new(
        (u - k.cx) / k.fx * depth,
        (v - k.cy) / k.fy * depth,
        depth,
    )
}

/// Projects a camera-frame point to continuous pixel coordinates (no rounding).
pub fn project_point(p: &Point3<f64>, k: &CameraIntrinsics) -> Result<PixelSample> {
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera(p.z));
    }
    Ok(project_unchecked(p, k))
}

#[inline]
pub(crate) fn project_unchecked(p: &Point3<f64>, k: &CameraIntrinsics) -> PixelSample {
    PixelSample {
        u: k.fx * p.x / p.z + k.cx,
        v: k.fy * p.y / p.z + k.cy,
        depth: p.z,
    }
}

#[inline]
pub fn transform_point(pose: &RigidPose, p: &Point3<f64>) -> Point3<f64> {
    Point3::from(pose.rotation * p.coords + pose.translation)
}

/// Transform taking points in the `source` camera frame to the `target` camera frame
/// (`target ∘ source⁻¹`).
pub fn relative_pose(source: &RigidPose, target: &RigidPose) -> RigidPose {
    target.compose(&source.inverse())
}

/// Rotation geodesic angle between two poses (radians), `arccos((tr(RaᵀRb) − 1) / 2)`.
/// Evaluated as `atan2(sin, cos)` of the relative rotation, which keeps full precision near
/// 0 and π.
pub fn rotation_angle(a: &RigidPose, b: &RigidPose) -> f64 {
    // m = RaᵀRb, summed so that swapping (a, b) yields exactly mᵀ.
    let m = |i: usize, j: usize| -> f64 { (0..3).map(|k| a.rotation[(k, i)] * b.rotation[(k, j)]).sum() };
    let trace = m(0, 0) + m(1, 1) + m(2, 2);
    let skew = Vector3::new(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    (0.5 * skew.norm()).atan2(0.5 * (trace - 1.0))
}

/// Rotation angle plus `lambda_t` times the distance between camera centers.
pub fn pose_distance(a: &RigidPose, b: &RigidPose, lambda_t: f64) -> f64 {
    let center_dist = (a.camera_center() - b.camera_center()).norm();
    rotation_angle(a, b) + lambda_t * center_dist
}

/// Default translation weight: the reciprocal of the median pairwise camera-center distance,
/// or `1.0` when every camera shares one center.
pub fn default_lambda_t(poses: &[RigidPose]) -> f64 {
    let centers: Vec<_> = poses.iter().map(|p| p.camera_center()).collect();
    let mut dists = Vec::new();
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            dists.push((centers[i] - centers[j]).norm());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    if median > 0.0 {
        1.0 / median
    } else {
        1.0
    }
}
