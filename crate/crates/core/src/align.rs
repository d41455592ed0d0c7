//! Affine alignment of a scale-ambiguous depth map against sparse metric depth samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{is_valid_depth, nearest_pixel, BinaryMask, DepthMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseDepthSample {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl SparseDepthSample {
    pub fn new(u: f64, v: f64, depth: f64) -> Self {
        SparseDepthSample { u, v, depth }
    }

    fn pixel(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        nearest_pixel(self.u, self.v, width, height)
    }
}

/// Result of fitting `aligned = a * initial + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentFit {
    pub a: f64,
    pub b: f64,
    pub sample_count: usize,
    pub rms_residual: f64,
    /// Samples dropped because the initial depth was invalid at their pixel, or because they
    /// fell outside the image.
    pub skipped: usize,
    /// Samples removed by residual trimming.
    pub trimmed: usize,
}

impl AlignmentFit {
    pub fn identity() -> Self {
        AlignmentFit {
            a: 1.0,
            b: 0.0,
            sample_count: 0,
            rms_residual: 0.0,
            skipped: 0,
            trimmed: 0,
        }
    }

    #[inline]
    pub fn apply(&self, d: f64) -> f64 {
        self.a * d + self.b
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Drop samples whose residual exceeds three times the RMS residual, then refit once.
    pub trim_outliers: bool,
}

/// Chebyshev distance (in pixels) from every pixel to the nearest mask pixel, `u32::MAX` when
/// the mask is empty.
pub fn chebyshev_distance(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = mask.dims();
    let inf = u32::MAX;
    let mut dist: Vec<u32> = mask
        .as_slice()
        .iter()
        .map(|&m| if m { 0 } else { inf })
        .collect();
    let relax = |d: &mut Vec<u32>, i: usize, j: usize| {
        let cand = d[j].saturating_add(1);
        if cand < d[i] {
            d[i] = cand;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x > 0 {
                relax(&mut dist, i, i - 1);
            }
            if y > 0 {
                relax(&mut dist, i, i - w);
                if x > 0 {
                    relax(&mut dist, i, i - w - 1);
                }
                if x + 1 < w {
                    relax(&mut dist, i, i - w + 1);
                }
            }
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let i = y * w + x;
            if x + 1 < w {
                relax(&mut dist, i, i + 1);
            }
            if y + 1 < h {
                relax(&mut dist, i, i + w);
                if x + 1 < w {
                    relax(&mut dist, i, i + w + 1);
                }
                if x > 0 {
                    relax(&mut dist, i, i + w - 1);
                }
            }
        }
    }
    dist
}

/// Keeps samples outside the mask but within `band_radius` pixels (Chebyshev) of it.
/// An empty mask keeps every sample.
pub fn select_alignment_samples(
    samples: &[SparseDepthSample],
    mask: &BinaryMask,
    band_radius: f64,
) -> Vec<SparseDepthSample> {
    if mask.is_all_zero() {
        return samples.to_vec();
    }
    let dist = chebyshev_distance(mask);
    let (w, h) = mask.dims();
    samples
        .iter()
        .filter(|s| match s.pixel(w, h) {
            Some((x, y)) => {
                let d = dist[y * w + x];
                d > 0 && f64::from(d) <= band_radius
            }
            None => false,
        })
        .copied()
        .collect()
}

/// Least-squares fit of `sample.depth ≈ a * initial(sample pixel) + b`.
pub fn fit_affine_depth(initial: &DepthMap, samples: &[SparseDepthSample]) -> Result<AlignmentFit> {
    fit_affine_depth_with(initial, samples, &FitOptions::default())
}

pub fn fit_affine_depth_with(
    initial: &DepthMap,
    samples: &[SparseDepthSample],
    opts: &FitOptions,
) -> Result<AlignmentFit> {
    let (w, h) = initial.dims();
    let mut pairs = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for s in samples {
        let x = s
            .pixel(w, h)
            .and_then(|(px, py)| initial.depth_at(px, py));
        match x {
            Some(x) if s.depth.is_finite() => pairs.push((x, s.depth)),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("depth alignment skipped {skipped} samples without a valid initial depth");
    }
    let mut fit = solve_normal_equations(&pairs)?;
    fit.skipped = skipped;

    if opts.trim_outliers && fit.rms_residual > 0.0 {
        let limit = 3.0 * fit.rms_residual;
        let kept: Vec<_> = pairs
            .iter()
            .copied()
            .filter(|&(x, y)| (y - fit.apply(x)).abs() <= limit)
            .collect();
        let trimmed = pairs.len() - kept.len();
        if trimmed > 0 {
            if let Ok(mut refit) = solve_normal_equations(&kept) {
                refit.skipped = skipped;
                refit.trimmed = trimmed;
                fit = refit;
            }
        }
    }
    Ok(fit)
}

fn solve_normal_equations(pairs: &[(f64, f64)]) -> Result<AlignmentFit> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 usable samples, have {n}"
        )));
    }
    let nf = n as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    // Centered 2x2 normal equations: the slope decouples from the intercept.
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in pairs {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    if !(sxx > f64::EPSILON * nf * mean_x * mean_x) {
        return Err(Error::DegenerateFit(
            "initial depths at the sample pixels are all identical".into(),
        ));
    }
    let a = sxy / sxx;
    let b = mean_y - a * mean_x;
    let sse: f64 = pairs
        .iter()
        .map(|&(x, y)| {
            let r = y - (a * x + b);
            r * r
        })
        .sum();
    Ok(AlignmentFit {
        a,
        b,
        sample_count: n,
        rms_residual: (sse / nf).sqrt(),
        skipped: 0,
        trimmed: 0,
    })
}

/// Applies the fit per pixel. Returns the aligned map and the number of pixels whose aligned
/// depth came out non-positive and were marked invalid.
pub fn apply_affine_depth(initial: &DepthMap, fit: &AlignmentFit) -> (DepthMap, usize) {
    let mut invalidated = 0;
    let aligned = initial.map(|&d| {
        if !is_valid_depth(d) {
            return 0.0;
        }
        let out = fit.apply(d);
        if is_valid_depth(out) {
            out
        } else {
            invalidated += 1;
            0.0
        }
    });
    if invalidated > 0 {
        log::warn!("{invalidated} aligned depths were non-positive and marked invalid");
    }
    (aligned, invalidated)
}
