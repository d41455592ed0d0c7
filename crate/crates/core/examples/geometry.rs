//! Pinhole projection round trips, relative poses and the pose distance.

use nalgebra::{Point3, Vector3};
use viewprop::{
    backproject_pixel, default_lambda_t, pose_distance, project_point, relative_pose,
    CameraIntrinsics, RigidPose,
};

fn main() -> viewprop::Result<()> {
    let k = CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480)?;

    let p = backproject_pixel(420.0, 240.0, 2.0, &k)?;
    println!("pixel (420, 240) at depth 2 -> camera point {:?}", p.coords.as_slice());
    let back = project_point(&p, &k)?;
    println!("reprojects to ({}, {}) at depth {}", back.u, back.v, back.depth);

    let a = RigidPose::look_at(Point3::new(0.0, 0.0, 0.0), Point3::new(0.0, 0.0, 5.0), Vector3::y())?;
    let b = RigidPose::look_at(Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 0.0, 5.0), Vector3::y())?;
    let c = RigidPose::look_at(Point3::new(3.0, 0.5, 1.0), Point3::new(0.0, 0.0, 5.0), Vector3::y())?;
    let rel = relative_pose(&a, &b);
    println!("relative pose a -> b:\n{}", rel.to_matrix4());

    let lambda = default_lambda_t(&[a, b, c]);
    println!("lambda_t = {lambda:.4}");
    for (name, x, y) in [("a-b", &a, &b), ("a-c", &a, &c), ("b-c", &b, &c)] {
        println!("d({name}) = {:.4}", pose_distance(x, y, lambda));
    }
    Ok(())
}
