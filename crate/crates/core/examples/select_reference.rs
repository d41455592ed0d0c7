//! Picks the camera closest on average to all others on a ring with one outlier.

use nalgebra::{Point3, Vector3};
use viewprop::geometry::{default_lambda_t, CameraIntrinsics, CameraView, RigidPose};
use viewprop::select_reference;

fn main() -> viewprop::Result<()> {
    let k = CameraIntrinsics::new(300.0, 300.0, 128.0, 128.0, 256, 256)?;
    let target = Point3::new(0.0, 0.0, 5.0);
    let mut views = Vec::new();
    for i in 0..7 {
        let theta = (i as f64 - 3.0) * 6f64.to_radians();
        let center = target + 5.0 * Vector3::new(theta.sin(), 0.0, -theta.cos());
        let pose = RigidPose::look_at(center, target, Vector3::y())?;
        views.push(CameraView::new(format!("ring_{i}"), k.clone(), pose));
    }
    let far = RigidPose::look_at(Point3::new(6.0, -2.0, 1.0), target, Vector3::y())?;
    views.push(CameraView::new("outlier", k, far));

    let poses: Vec<RigidPose> = views.iter().map(|v| v.pose).collect();
    let lambda = default_lambda_t(&poses);
    println!("reference: {}", select_reference(&views, lambda)?);
    Ok(())
}
