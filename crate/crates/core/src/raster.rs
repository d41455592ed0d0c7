//! Row-major per-pixel grids: color images, depth maps and binary masks.

use crate::error::{Error, Result};

/// A dense row-major grid of per-pixel values.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit RGB image.
pub type ColorImage = Raster<[u8; 3]>;

/// Per-pixel depth in scene units. Values that are non-finite or `<= 0` mean "no depth".
pub type DepthMap = Raster<f64>;

/// Per-pixel object labels, `true` marks the object / inpaint region.
pub type BinaryMask = Raster<bool>;

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "raster buffer",
                got: (data.len(), 1),
                expected: (width * height, 1),
            });
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = y * self.width + x;
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Errors unless `other` has the same width and height.
    pub fn ensure_same_dims<U>(&self, other: &Raster<U>, what: &'static str) -> Result<()> {
        ensure_dims(what, other.dims(), self.dims())
    }
}

pub(crate) fn ensure_dims(
    what: &'static str,
    got: (usize, usize),
    expected: (usize, usize),
) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch {
            what,
            got,
            expected,
        });
    }
    Ok(())
}

#[inline]
pub fn is_valid_depth(d: f64) -> bool {
    d.is_finite() && d > 0.0
}

impl Raster<f64> {
    /// Depth at pixel `(x, y)` if it is valid.
    #[inline]
    pub fn depth_at(&self, x: usize, y: usize) -> Option<f64> {
        let d = *self.get(x, y);
        is_valid_depth(d).then_some(d)
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| is_valid_depth(**d)).count()
    }

    /// Median of the valid depths, `None` if there are none.
    pub fn median_valid(&self) -> Option<f64> {
        let mut valid: Vec<f64> = self
            .data
            .iter()
            .copied()
            .filter(|d| is_valid_depth(*d))
            .collect();
        if valid.is_empty() {
            return None;
        }
        valid.sort_by(f64::total_cmp);
        let n = valid.len();
        Some(if n % 2 == 1 {
            valid[n / 2]
        } else {
            0.5 * (valid[n / 2 - 1] + valid[n / 2])
        })
    }
}

impl Raster<bool> {
    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_all_zero(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.ensure_same_dims(other, "mask")?;
        Ok(Raster {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a && !*b)
                .collect(),
        })
    }

    /// Morphological closing (dilation then erosion) with a disc of the given radius.
    ///
    /// Out-of-image pixels count as background for the dilation and as foreground for the
    /// erosion, so the result always contains the input.
    pub fn close(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let disc = disc_offsets(radius);
        let dilated = self.morph(&disc, true);
        dilated.morph(&disc, false)
    }

    fn morph(&self, disc: &[(isize, isize)], dilate: bool) -> BinaryMask {
        let (w, h) = (self.width as isize, self.height as isize);
        Raster::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as isize, y as isize);
            if dilate {
                disc.iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx >= 0 && ny >= 0 && nx < w && ny < h && *self.get(nx as usize, ny as usize)
                })
            } else {
                disc.iter().all(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0 || ny < 0 || nx >= w || ny >= h || *self.get(nx as usize, ny as usize)
                })
            }
        })
    }
}

fn disc_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let r2 = r * r;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Rounds a continuous pixel coordinate to the nearest integer index, ties toward the
/// smaller index.
#[inline]
pub fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

/// Nearest in-bounds pixel for continuous coordinates, or `None` when outside.
#[inline]
pub fn nearest_pixel(u: f64, v: f64, width: usize, height: usize) -> Option<(usize, usize)> {
    let x = round_half_down(u);
    let y = round_half_down(v);
    if x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64 {
        Some((x as usize, y as usize))
    } else {
        None
    }
}
