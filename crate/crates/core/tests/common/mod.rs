#![allow(dead_code)]
//! Shared property suites and brute-force oracles. Each suite runs a fixed number of
//! randomized cases and returns the first counterexample as an error.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, Point3, Rotation3, Vector3};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use viewprop::align::{apply_affine_depth, fit_affine_depth, SparseDepthSample};
use viewprop::geometry::{
    backproject_pixel, pose_distance, project_point, relative_pose, transform_point,
    CameraIntrinsics, CameraView, RigidPose,
};
use viewprop::metrics::{mask_counts, mask_score, psnr};
use viewprop::raster::{BinaryMask, ColorImage, DepthMap};
use viewprop::reproject::{
    composite_into_mask, forward_project, propagate_mask, ProjectionConfig, ProjectionResult,
    SplatFootprint,
};
use viewprop::synth::{generate_scene, Aabb, CameraRig, PlaneSpec, SynthSceneConfig};

pub const CASES: u32 = 1000;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------------------
// random inputs

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotation(rng: &mut impl Rng, max_angle: f64) -> Matrix3<f64> {
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let axis = if axis.norm() < 1e-3 { Vector3::z() } else { axis.normalize() };
    let angle = rng.random_range(0.0..max_angle);
    Rotation3::from_scaled_axis(axis * angle).into_inner()
}

pub fn random_pose(rng: &mut impl Rng, max_angle: f64, max_shift: f64) -> RigidPose {
    let t = Vector3::new(
        rng.random_range(-max_shift..=max_shift),
        rng.random_range(-max_shift..=max_shift),
        rng.random_range(-max_shift..=max_shift),
    );
    RigidPose::new(random_rotation(rng, max_angle), t).expect("rotation is orthonormal")
}

pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize, p: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(p))
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> ColorImage {
    ColorImage::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()])
}

pub fn random_depth(rng: &mut impl Rng, w: usize, h: usize, invalid: f64) -> DepthMap {
    DepthMap::from_fn(w, h, |_, _| {
        if rng.random_bool(invalid) {
            0.0
        } else {
            rng.random_range(2.0..8.0)
        }
    })
}

/// A small random source view, a nearby target and a random target depth prior.
pub struct WarpScene {
    pub color: ColorImage,
    pub depth: DepthMap,
    pub source: CameraView,
    pub target: CameraView,
    pub prior: DepthMap,
}

pub fn random_warp_scene(seed: u64) -> WarpScene {
    let mut r = rng(seed);
    let (w, h) = (r.random_range(6..=32), r.random_range(6..=32));
    let f = r.random_range(15.0..50.0);
    let k = CameraIntrinsics::new(f, f * r.random_range(0.9..1.1), w as f64 / 2.0, h as f64 / 2.0, w, h)
        .expect("valid intrinsics");
    let src_pose = random_pose(&mut r, 3.0, 2.0);
    let delta = random_pose(&mut r, 0.15, 0.6);
    let color = random_image(&mut r, w, h);
    let depth = random_depth(&mut r, w, h, 0.1);
    let prior = random_depth(&mut r, w, h, 0.2);
    WarpScene {
        color,
        depth,
        source: CameraView::new("src", k.clone(), src_pose),
        target: CameraView::new("tgt", k, delta.compose(&src_pose)),
        prior,
    }
}

// ---------------------------------------------------------------------------------------
// oracles

/// Nearest integer with ties toward the smaller value.
fn nearest_index(x: f64) -> f64 {
    let fl = x.floor();
    if x - fl > 0.5 {
        fl + 1.0
    } else {
        fl
    }
}

/// One arriving source point at a target pixel.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub z: f64,
    pub color: [u8; 3],
    /// Lands here by rounding rather than as a 2x2 neighbor.
    pub primary: bool,
}

/// Per-target-pixel candidate lists that pass the prior test, in source row-major order.
pub fn candidate_lists(
    s: &WarpScene,
    prior: Option<&DepthMap>,
    eps_rel: f64,
    eps_abs: f64,
    quad: bool,
) -> BTreeMap<(usize, usize), Vec<Candidate>> {
    let rel = relative_pose(&s.source.pose, &s.target.pose);
    let (tw, th) = s.target.intrinsics.dims();
    let mut lists: BTreeMap<(usize, usize), Vec<Candidate>> = BTreeMap::new();
    for y in 0..s.depth.height() {
        for x in 0..s.depth.width() {
            let Ok(p) = backproject_pixel(x as f64, y as f64, *s.depth.get(x, y), &s.source.intrinsics) else {
                continue;
            };
            let Ok(px) = project_point(&transform_point(&rel, &p), &s.target.intrinsics) else {
                continue;
            };
            let (bx, by) = (nearest_index(px.u), nearest_index(px.v));
            let offsets: &[(f64, f64)] = if quad {
                &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
            } else {
                &[(0.0, 0.0)]
            };
            for &(dx, dy) in offsets {
                let (nx, ny) = (bx + dx, by + dy);
                if nx < 0.0 || ny < 0.0 || nx >= tw as f64 || ny >= th as f64 {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if let Some(pr) = prior {
                    let pd = *pr.get(nx, ny);
                    if pd.is_finite() && pd > 0.0 && (pd - px.depth).abs() >= eps_abs.max(eps_rel * pd) {
                        continue;
                    }
                }
                lists.entry((nx, ny)).or_default().push(Candidate {
                    z: px.depth,
                    color: *s.color.get(x, y),
                    primary: dx == 0.0 && dy == 0.0,
                });
            }
        }
    }
    lists
}

/// The winning candidate: nearest among primaries if any, else nearest among neighbor
/// candidates; first in visiting order on equal depth.
pub fn z_winner(cands: &[Candidate]) -> Candidate {
    let has_primary = cands.iter().any(|c| c.primary);
    let mut best: Option<Candidate> = None;
    for c in cands.iter().filter(|c| c.primary == has_primary) {
        if best.is_none_or(|b| c.z < b.z) {
            best = Some(*c);
        }
    }
    best.expect("non-empty candidate list")
}

pub fn check_against_oracle(
    s: &WarpScene,
    res: &ProjectionResult,
    prior: Option<&DepthMap>,
    eps_rel: f64,
    eps_abs: f64,
    quad: bool,
) -> Result<(), String> {
    let lists = candidate_lists(s, prior, eps_rel, eps_abs, quad);
    let (tw, th) = s.target.intrinsics.dims();
    for y in 0..th {
        for x in 0..tw {
            match lists.get(&(x, y)) {
                None => {
                    if *res.coverage.get(x, y) {
                        return Err(format!("pixel ({x},{y}) covered without candidates"));
                    }
                }
                Some(c) => {
                    let win = z_winner(c);
                    if !*res.coverage.get(x, y) {
                        return Err(format!("pixel ({x},{y}) has candidates but is uncovered"));
                    }
                    if res.zbuffer.get(x, y).to_bits() != win.z.to_bits() {
                        return Err(format!(
                            "pixel ({x},{y}): zbuffer {} but nearest candidate {}",
                            res.zbuffer.get(x, y),
                            win.z
                        ));
                    }
                    if *res.color.get(x, y) != win.color {
                        return Err(format!("pixel ({x},{y}): color of a non-winning candidate"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Least squares `y ≈ a x + b` through an SVD of the design matrix.
pub fn lstsq_oracle(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len();
    let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { pairs[i].0 } else { 1.0 });
    let y = DVector::from_iterator(n, pairs.iter().map(|p| p.1));
    let sol = a.svd(true, true).solve(&y, 1e-14).expect("svd solve");
    (sol[0], sol[1])
}

pub fn align_objective(pairs: &[(f64, f64)], a: f64, b: f64) -> f64 {
    pairs.iter().map(|&(x, y)| (a * x + b - y).powi(2)).sum()
}

/// Geodesic angle through the rotation-matrix logarithm.
pub fn geodesic_oracle(a: &RigidPose, b: &RigidPose) -> f64 {
    let rel = a.rotation().transpose() * b.rotation();
    Rotation3::from_matrix_unchecked(rel).angle()
}

/// Mean pose distance per view, then the lowest mean with ties (relative 1e-9) to the
/// smallest id.
pub fn reference_oracle(views: &[CameraView], lambda: f64) -> String {
    let n = views.len();
    let mut means = Vec::new();
    for i in 0..n {
        let mut total = 0.0;
        for j in 0..n {
            if i != j {
                let ca = views[i].pose.camera_center();
                let cb = views[j].pose.camera_center();
                total += geodesic_oracle(&views[i].pose, &views[j].pose) + lambda * (ca - cb).norm();
            }
        }
        means.push(if n > 1 { total / (n - 1) as f64 } else { 0.0 });
    }
    let min = means.iter().copied().fold(f64::INFINITY, f64::min);
    let mut ids: Vec<&str> = views
        .iter()
        .zip(&means)
        .filter(|(_, &m)| m <= min + 1e-9 * min.abs().max(1.0))
        .map(|(v, _)| v.view_id.as_str())
        .collect();
    ids.sort();
    ids[0].to_owned()
}

/// One camera at the origin looking at the plane `2y + z = 5`: depth runs from about 2.7
/// at the bottom of the image to about 36 at the top, so affine depth fits are well posed.
pub fn slanted_plane_view(samples: usize, seed: u64) -> viewprop::synth::SynthView {
    let mut cfg = SynthSceneConfig::plane_ring();
    cfg.planes[0].normal = [0.0, 2.0, 1.0];
    cfg.planes[0].offset = -5.0;
    cfg.object = None;
    cfg.rig = CameraRig::Explicit(vec![RigidPose::identity()]);
    cfg.samples_per_view = samples;
    cfg.seed = seed;
    generate_scene(&cfg).expect("valid scene").swap_remove(0)
}

pub fn iou_of(a: &BinaryMask, b: &BinaryMask) -> f64 {
    mask_score(a, b).expect("same dims").iou
}

// ---------------------------------------------------------------------------------------
// suites

fn intrinsics_strategy() -> impl Strategy<Value = CameraIntrinsics> {
    (50.0..2000.0f64, 0.5..2.0f64, 16usize..2048, 16usize..2048, -0.2..0.2f64, -0.2..0.2f64).prop_map(
        |(f, aspect, w, h, ox, oy)| {
            CameraIntrinsics::new(f, f * aspect, w as f64 * (0.5 + ox), h as f64 * (0.5 + oy), w, h).unwrap()
        },
    )
}

pub fn prop_projection_round_trip() -> Result<(), String> {
    let s = (intrinsics_strategy(), 0.0..1.0f64, 0.0..1.0f64, 0.01..1000.0f64);
    run(CASES, s, |(k, fu, fv, d)| {
        let (u, v) = (fu * k.width as f64, fv * k.height as f64);
        let p = backproject_pixel(u, v, d, &k).unwrap();
        let back = project_point(&p, &k).unwrap();
        prop_assert!((back.u - u).abs() <= 1e-9, "u {} vs {}", back.u, u);
        prop_assert!((back.v - v).abs() <= 1e-9, "v {} vs {}", back.v, v);
        prop_assert!((back.depth - d).abs() <= 1e-12 * d.max(1.0), "depth {} vs {}", back.depth, d);
        Ok(())
    })
}

pub fn prop_pose_inverse() -> Result<(), String> {
    run(CASES, any::<u64>(), |seed| {
        let mut r = rng(seed);
        let a = random_pose(&mut r, std::f64::consts::PI, 10.0);
        let b = random_pose(&mut r, std::f64::consts::PI, 10.0);
        let m = relative_pose(&a, &b).compose(&relative_pose(&b, &a)).to_matrix4();
        let err = (m - nalgebra::Matrix4::identity()).abs().max();
        prop_assert!(err <= 1e-9, "composition off identity by {err}");
        Ok(())
    })
}

pub fn prop_pose_distance_metric() -> Result<(), String> {
    run(CASES, (any::<u64>(), 0.0..5.0f64), |(seed, lambda)| {
        let mut r = rng(seed);
        let p: Vec<RigidPose> = (0..3).map(|_| random_pose(&mut r, std::f64::consts::PI, 5.0)).collect();
        let d = |i: usize, j: usize| pose_distance(&p[i], &p[j], lambda);
        prop_assert_eq!(d(0, 1).to_bits(), d(1, 0).to_bits());
        prop_assert!(d(0, 0).abs() <= 1e-9);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9, "triangle inequality");
        let want = geodesic_oracle(&p[0], &p[1])
            + lambda * (p[0].camera_center() - p[1].camera_center()).norm();
        prop_assert!((d(0, 1) - want).abs() <= 1e-9, "{} vs oracle {want}", d(0, 1));
        Ok(())
    })
}

pub fn prop_rigidity() -> Result<(), String> {
    let coord = -100.0..100.0f64;
    let pt = (coord.clone(), coord.clone(), coord);
    run(CASES, (any::<u64>(), pt.clone(), pt), |(seed, a, b)| {
        let pose = random_pose(&mut rng(seed), std::f64::consts::PI, 50.0);
        let (a, b) = (Point3::new(a.0, a.1, a.2), Point3::new(b.0, b.1, b.2));
        let before = (a - b).norm();
        let after = (transform_point(&pose, &a) - transform_point(&pose, &b)).norm();
        prop_assert!((before - after).abs() <= 1e-9, "{before} -> {after}");
        Ok(())
    })
}

/// Random alignment problem with integer sample pixels.
pub struct AlignCase {
    pub initial: DepthMap,
    pub samples: Vec<SparseDepthSample>,
}

pub fn random_align_case(seed: u64) -> AlignCase {
    let mut r = rng(seed);
    let (w, h) = (r.random_range(4..=24), r.random_range(4..=24));
    let initial = DepthMap::from_fn(w, h, |_, _| r.random_range(0.5..10.0));
    let a = r.random_range(0.2..3.0);
    let b = r.random_range(-1.0..2.0);
    let noise = r.random_range(0.0..0.2);
    let n = r.random_range(3..=60);
    let samples = (0..n)
        .map(|_| {
            let (x, y) = (r.random_range(0..w), r.random_range(0..h));
            let d = a * initial.get(x, y) + b + r.random_range(-noise..=noise);
            SparseDepthSample::new(x as f64, y as f64, d)
        })
        .collect();
    AlignCase { initial, samples }
}

pub fn pairs_of(c: &AlignCase) -> Vec<(f64, f64)> {
    c.samples
        .iter()
        .map(|s| (*c.initial.get(s.u as usize, s.v as usize), s.depth))
        .collect()
}

pub fn prop_alignment_local_optimality(cases: u32, perturbations: usize) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let c = random_align_case(seed);
        let Ok(fit) = fit_affine_depth(&c.initial, &c.samples) else {
            return Ok(());
        };
        let pairs = pairs_of(&c);
        let best = align_objective(&pairs, fit.a, fit.b);
        let mut r = rng(seed ^ 0xabcdef);
        for _ in 0..perturbations {
            let (da, db) = (r.random_range(-0.1..=0.1), r.random_range(-0.1..=0.1));
            let other = align_objective(&pairs, fit.a + da, fit.b + db);
            prop_assert!(best <= other + 1e-9 * best.max(1.0), "objective {best} beaten by {other}");
        }
        Ok(())
    })
}

pub fn prop_alignment_scale_equivariance() -> Result<(), String> {
    run(CASES, (any::<u64>(), 0.1..10.0f64), |(seed, s)| {
        let c = random_align_case(seed);
        let Ok(fit) = fit_affine_depth(&c.initial, &c.samples) else {
            return Ok(());
        };
        let scaled: Vec<_> = c
            .samples
            .iter()
            .map(|p| SparseDepthSample::new(p.u, p.v, p.depth * s))
            .collect();
        let fit2 = fit_affine_depth(&c.initial, &scaled).unwrap();
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        prop_assert!((fit2.a - s * fit.a).abs() <= tol(s * fit.a), "a {} vs {}", fit2.a, s * fit.a);
        prop_assert!((fit2.b - s * fit.b).abs() <= tol(s * fit.b), "b {} vs {}", fit2.b, s * fit.b);
        Ok(())
    })
}

pub fn prop_alignment_idempotent() -> Result<(), String> {
    run(CASES, any::<u64>(), |seed| {
        let c = random_align_case(seed);
        let Ok(fit) = fit_affine_depth(&c.initial, &c.samples) else {
            return Ok(());
        };
        let (aligned, invalid) = apply_affine_depth(&c.initial, &fit);
        if invalid > 0 {
            return Ok(());
        }
        let again = fit_affine_depth(&aligned, &c.samples).unwrap();
        prop_assert!((again.a - 1.0).abs() <= 1e-9, "a = {}", again.a);
        prop_assert!(again.b.abs() <= 1e-9, "b = {}", again.b);
        Ok(())
    })
}

pub fn prop_zbuffer_oracle(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), any::<bool>(), any::<bool>()), |(seed, quad, use_prior)| {
        let s = random_warp_scene(seed);
        let cfg = ProjectionConfig {
            epsilon_abs: Some(0.3),
            epsilon_rel: 0.05,
            splat: if quad { SplatFootprint::Quad } else { SplatFootprint::Single },
            use_depth_prior: use_prior,
        };
        let res = forward_project(&s.color, &s.depth, &s.source, &s.target, Some(&s.prior), &cfg).unwrap();
        let again = forward_project(&s.color, &s.depth, &s.source, &s.target, Some(&s.prior), &cfg).unwrap();
        prop_assert!(res == again, "projection is not deterministic");
        let prior = use_prior.then_some(&s.prior);
        check_against_oracle(&s, &res, prior, 0.05, 0.3, quad).map_err(TestCaseError::fail)?;
        Ok(())
    })
}

pub fn prop_prior_tightening_monotone() -> Result<(), String> {
    let eps = (0.0..0.5f64, 0.0..0.5f64, 0.0..1.0f64, 0.0..1.0f64);
    run(CASES, (any::<u64>(), any::<bool>(), eps), |(seed, quad, (r1, a1, fr, fa))| {
        let s = random_warp_scene(seed);
        let loose = ProjectionConfig {
            epsilon_rel: r1,
            epsilon_abs: Some(a1),
            splat: if quad { SplatFootprint::Quad } else { SplatFootprint::Single },
            use_depth_prior: true,
        };
        let tight = ProjectionConfig {
            epsilon_rel: r1 * fr,
            epsilon_abs: Some(a1 * fa),
            ..loose
        };
        let l = forward_project(&s.color, &s.depth, &s.source, &s.target, Some(&s.prior), &loose).unwrap();
        let t = forward_project(&s.color, &s.depth, &s.source, &s.target, Some(&s.prior), &tight).unwrap();
        for (i, (&ct, &cl)) in t.coverage.as_slice().iter().zip(l.coverage.as_slice()).enumerate() {
            prop_assert!(!ct || cl, "pixel {i} covered only under the tighter tolerance");
        }
        Ok(())
    })
}

pub fn prop_compositing_locality() -> Result<(), String> {
    run(CASES, (any::<u64>(), 0.0..1.0f64), |(seed, density)| {
        let s = random_warp_scene(seed);
        let mut r = rng(seed.rotate_left(17));
        let (w, h) = s.target.intrinsics.dims();
        let original = random_image(&mut r, w, h);
        let mask = random_mask(&mut r, w, h, density);
        let proj = forward_project(&s.color, &s.depth, &s.source, &s.target, None, &ProjectionConfig::default()).unwrap();
        let (out, gaps) = composite_into_mask(&original, &mask, &proj).unwrap();
        for i in 0..out.len() {
            let (m, c) = (mask.as_slice()[i], proj.coverage.as_slice()[i]);
            if !m {
                prop_assert_eq!(out.as_slice()[i], original.as_slice()[i]);
            } else if c {
                prop_assert_eq!(out.as_slice()[i], proj.color.as_slice()[i]);
            }
            prop_assert_eq!(gaps.as_slice()[i], m && !c);
        }
        Ok(())
    })
}

pub fn prop_mask_round_trip(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut r = rng(seed);
        let (w, h) = (96, 96);
        let f = r.random_range(50.0..90.0);
        let k = CameraIntrinsics::new(f, f, 48.0, 48.0, w, h).unwrap();
        let z = 5.0;
        let src = CameraView::new("a", k.clone(), RigidPose::identity());
        let shift = Vector3::new(r.random_range(-0.4..0.4), r.random_range(-0.4..0.4), 0.0);
        let tgt = CameraView::new("b", k, RigidPose::new(Matrix3::identity(), -shift).unwrap());
        let depth = DepthMap::filled(w, h, z);
        let (cx, cy) = (r.random_range(38.0..58.0), r.random_range(38.0..58.0));
        let (rx, ry) = (r.random_range(10.0..18.0), r.random_range(10.0..18.0));
        let mask = BinaryMask::from_fn(w, h, |x, y| {
            ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2) <= 1.0
        });
        let there = propagate_mask(&mask, &depth, &src, &tgt, 2).unwrap();
        let back = propagate_mask(&there.mask, &depth, &tgt, &src, 2).unwrap();
        let iou = iou_of(&back.mask, &mask);
        prop_assert!(iou >= 0.95, "round-trip IoU {iou}");
        Ok(())
    })
}

pub fn prop_dice_identity(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1usize..40, 1usize..40, 0.0..1.0f64, 0.0..1.0f64), |(seed, w, h, pa, pb)| {
        let mut r = rng(seed);
        let (a, b) = (random_mask(&mut r, w, h, pa), random_mask(&mut r, w, h, pb));
        let s = mask_score(&a, &b).unwrap();
        let c = mask_counts(&a, &b).unwrap();
        if c.union == 0 {
            prop_assert_eq!((s.iou, s.dice), (1.0, 1.0));
            return Ok(());
        }
        // 2·iou/(1+iou) = 2I/(U+I) in exact arithmetic, and |pred|+|gt| = I+U.
        prop_assert_eq!(c.pred + c.gt, c.intersection + c.union);
        let exact = (2 * c.intersection) as f64 / (c.intersection + c.union) as f64;
        prop_assert_eq!(s.dice.to_bits(), exact.to_bits());
        prop_assert!((s.dice - 2.0 * s.iou / (1.0 + s.iou)).abs() <= 4.0 * f64::EPSILON);
        Ok(())
    })
}

pub fn prop_psnr_symmetric() -> Result<(), String> {
    run(CASES, (any::<u64>(), 1usize..24, 1usize..24, any::<bool>()), |(seed, w, h, masked)| {
        let mut r = rng(seed);
        let (a, b) = (random_image(&mut r, w, h), random_image(&mut r, w, h));
        let mut region = random_mask(&mut r, w, h, 0.6);
        region.set(0, 0, true);
        let reg = masked.then_some(&region);
        prop_assert_eq!(psnr(&a, &b, reg).unwrap().to_bits(), psnr(&b, &a, reg).unwrap().to_bits());
        Ok(())
    })
}

pub fn prop_mask_score_permutation_invariant() -> Result<(), String> {
    run(CASES, (any::<u64>(), 1usize..30, 1usize..30), |(seed, w, h)| {
        let mut r = rng(seed);
        let (a, b) = (random_mask(&mut r, w, h, 0.4), random_mask(&mut r, w, h, 0.5));
        let mut perm: Vec<usize> = (0..w * h).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let pa = BinaryMask::from_vec(w, h, perm.iter().map(|&i| a.as_slice()[i]).collect()).unwrap();
        let pb = BinaryMask::from_vec(w, h, perm.iter().map(|&i| b.as_slice()[i]).collect()).unwrap();
        prop_assert_eq!(mask_score(&a, &b).unwrap(), mask_score(&pa, &pb).unwrap());
        Ok(())
    })
}

pub fn prop_synth_depth_on_plane(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut r = rng(seed);
        let normal = Vector3::new(r.random_range(-0.4..0.4), r.random_range(-0.4..0.4), 1.0);
        let plane = PlaneSpec {
            normal: normal.into(),
            offset: -r.random_range(3.0..8.0) * normal.norm(),
            checker: r.random_range(0.2..2.0),
            colors: [[255, 255, 255], [0, 0, 0]],
            bounds: None,
        };
        let occluder = r.random_bool(0.5).then(|| {
            let mut o = PlaneSpec::fronto(r.random_range(1.5..2.5), 0.3);
            o.bounds = Some(Aabb {
                min: [-0.5, -0.5, -10.0],
                max: [0.5, 0.5, 10.0],
            });
            o
        });
        let cfg = SynthSceneConfig {
            planes: vec![plane],
            object: None,
            occluder,
            rig: CameraRig::Explicit(vec![random_pose(&mut r, 0.2, 0.5)]),
            width: 24,
            height: 20,
            focal: 30.0,
            samples_per_view: 10,
            seed,
        };
        let view = generate_scene(&cfg).unwrap().swap_remove(0);
        let to_world = view.cam.pose.inverse();
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                let d = *view.depth.get(x, y);
                if !(d > 0.0) {
                    continue;
                }
                let p = transform_point(&to_world, &backproject_pixel(x as f64, y as f64, d, &view.cam.intrinsics).unwrap());
                let on = |pl: &PlaneSpec| (Vector3::from(pl.normal).dot(&p.coords) + pl.offset).abs() / Vector3::from(pl.normal).norm();
                let res = cfg.planes.iter().chain(cfg.occluder.iter()).map(on).fold(f64::INFINITY, f64::min);
                prop_assert!(res <= 1e-6, "pixel ({x},{y}) is {res} off every plane");
            }
        }
        Ok(())
    })
}

/// Every suite run by the property test target and timed by the acceptance harness.
pub fn property_suites() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("projection round trip", prop_projection_round_trip),
        ("pose inverse", prop_pose_inverse),
        ("pose distance symmetry and triangle inequality", prop_pose_distance_metric),
        ("rigidity", prop_rigidity),
        ("alignment scale equivariance", prop_alignment_scale_equivariance),
        ("alignment idempotence", prop_alignment_idempotent),
        ("alignment local optimality", || prop_alignment_local_optimality(CASES, 10_000)),
        ("z-buffer minimum and determinism", || prop_zbuffer_oracle(CASES)),
        ("prior tightening monotone", prop_prior_tightening_monotone),
        ("compositing locality", prop_compositing_locality),
        ("mask round trip", || prop_mask_round_trip(CASES)),
        ("dice identity", || prop_dice_identity(CASES)),
        ("psnr symmetry", prop_psnr_symmetric),
        ("mask score permutation invariance", prop_mask_score_permutation_invariant),
        ("synthetic depth lies on the planes", || prop_synth_depth_on_plane(CASES)),
    ]
}
