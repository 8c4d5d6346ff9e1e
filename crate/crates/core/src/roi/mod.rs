//! Optic-nerve-head auto-cropping.
//!
//! The red channel is contrast-stretched, segmented into superpixels, replaced by
//! per-superpixel mean intensities and thresholded. The centroid of the largest
//! 8-connected bright region becomes the center of a fixed-size square crop.

mod slic;

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

pub use slic::{slic_segment, SuperpixelMap};

use crate::error::{Error, Result};
use crate::math::{round_to_i64, round_to_u8};
use crate::raster::{contrast_stretch, crop, extract_red, PixelBox, Raster};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct RoiConfig {
    pub num_superpixels: usize,
    /// Region-mean threshold; regions with mean `>= threshold` are foreground.
    pub threshold: f64,
    pub crop_side: usize,
    pub slic_compactness: f64,
    pub slic_iterations: usize,
}

impl Default for RoiConfig {
    fn default() -> Self {
        Self {
            num_superpixels: 50,
            threshold: 254.0,
            crop_side: 64,
            slic_compactness: 10.0,
            slic_iterations: 10,
        }
    }
}

impl RoiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_superpixels == 0 {
            return Err(Error::InvalidConfig("roi.num_superpixels must be >= 1".into()));
        }
        if !(0.0..=255.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig("roi.threshold must lie in [0, 255]".into()));
        }
        if self.crop_side == 0 {
            return Err(Error::InvalidConfig("roi.crop_side must be >= 1".into()));
        }
        if !(self.slic_compactness.is_finite() && self.slic_compactness >= 0.0) {
            return Err(Error::InvalidConfig(
                "roi.slic_compactness must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of [`extract_onh`].
#[derive(Debug, Clone, PartialEq)]
pub struct CropResult {
    pub center: (usize, usize),
    pub crop_box: PixelBox,
    pub raster: Raster,
    /// No superpixel passed the threshold; the brightest superpixel was used instead.
    pub fallback_used: bool,
}

/// Replaces every pixel by the rounded mean of its superpixel.
pub fn superpixel_mean_image(gray: &Raster, sp: &SuperpixelMap) -> Result<Raster> {
    check_dims(gray, sp)?;
    let levels: Vec<u8> = sp.region_means().iter().map(|&m| round_to_u8(m)).collect();
    let data = sp.labels().iter().map(|&l| levels[l as usize]).collect();
    Raster::new(sp.width(), sp.height(), 1, data)
}

/// Sets every superpixel whose mean is at least `t` to 255 and the rest to 0.
pub fn threshold_regions(coarse: &Raster, sp: &SuperpixelMap, t: f64) -> Result<Raster> {
    check_dims(coarse, sp)?;
    let on: Vec<u8> = sp
        .region_means()
        .iter()
        .map(|&m| if m >= t { 255 } else { 0 })
        .collect();
    let data = sp.labels().iter().map(|&l| on[l as usize]).collect();
    Raster::new(sp.width(), sp.height(), 1, data)
}

fn check_dims(r: &Raster, sp: &SuperpixelMap) -> Result<()> {
    if r.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            found: r.channels(),
        });
    }
    if r.width() != sp.width() || r.height() != sp.height() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "raster {}x{} vs superpixel map {}x{}",
            r.width(),
            r.height(),
            sp.width(),
            sp.height()
        )));
    }
    Ok(())
}

/// Centroid and pixel area of a connected region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionStats {
    pub center: (usize, usize),
    pub area: usize,
}

fn centroid(sum_x: u64, sum_y: u64, area: usize) -> (usize, usize) {
    let cx = round_to_i64(sum_x as f64 / area as f64).max(0) as usize;
    let cy = round_to_i64(sum_y as f64 / area as f64).max(0) as usize;
    (cx, cy)
}

/// Finds the largest 8-connected foreground (non-zero) component.
///
/// Equal areas are resolved in favor of the component whose first pixel comes
/// first in raster-scan order.
pub fn largest_region_centroid(binary: &Raster) -> Result<RegionStats> {
    if binary.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            found: binary.channels(),
        });
    }
    let (w, h) = (binary.width(), binary.height());
    let data = binary.data();
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut best: Option<(usize, u64, u64)> = None;
    for start in 0..w * h {
        if seen[start] || data[start] == 0 {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let (mut area, mut sx, mut sy) = (0usize, 0u64, 0u64);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            area += 1;
            sx += x as u64;
            sy += y as u64;
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && data[j] != 0 {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if best.is_none_or(|(a, _, _)| area > a) {
            best = Some((area, sx, sy));
        }
    }
    let (area, sx, sy) = best.ok_or(Error::NoRegion)?;
    Ok(RegionStats {
        center: centroid(sx, sy, area),
        area,
    })
}

/// Square box of `side` centered on `center`, translated to lie inside the image.
pub fn place_square(center: (usize, usize), side: usize, width: usize, height: usize) -> Result<PixelBox> {
    let limit = width.min(height);
    if side > limit || side == 0 {
        return Err(Error::CropTooLarge { side, limit });
    }
    let half = (side / 2) as i64;
    let x0 = (center.0 as i64 - half).clamp(0, (width - side) as i64) as usize;
    let y0 = (center.1 as i64 - half).clamp(0, (height - side) as i64) as usize;
    Ok(PixelBox::square(x0, y0, side))
}

/// Runs the full cropping pipeline on an RGB fundus image.
pub fn extract_onh(rgb: &Raster, cfg: &RoiConfig) -> Result<CropResult> {
    cfg.validate()?;
    if rgb.channels() != 3 {
        return Err(Error::ChannelMismatch {
            expected: 3,
            found: rgb.channels(),
        });
    }
    let limit = rgb.width().min(rgb.height());
    if cfg.crop_side > limit {
        return Err(Error::CropTooLarge {
            side: cfg.crop_side,
            limit,
        });
    }
    let stretched = contrast_stretch(&extract_red(rgb)?)?;
    let sp = slic_segment(
        &stretched,
        cfg.num_superpixels,
        cfg.slic_compactness,
        cfg.slic_iterations,
    )?;
    let coarse = superpixel_mean_image(&stretched, &sp)?;
    let binary = threshold_regions(&coarse, &sp, cfg.threshold)?;
    let (center, fallback_used) = match largest_region_centroid(&binary) {
        Ok(stats) => (stats.center, false),
        Err(Error::NoRegion) => (brightest_region_centroid(&sp), true),
        Err(e) => return Err(e),
    };
    let crop_box = place_square(center, cfg.crop_side, rgb.width(), rgb.height())?;
    Ok(CropResult {
        center,
        crop_box,
        raster: crop(rgb, crop_box)?,
        fallback_used,
    })
}

fn brightest_region_centroid(sp: &SuperpixelMap) -> (usize, usize) {
    let mut best = 0usize;
    for (k, &m) in sp.region_means().iter().enumerate() {
        if m > sp.region_means()[best] {
            best = k;
        }
    }
    let (mut sx, mut sy) = (0u64, 0u64);
    for (i, &l) in sp.labels().iter().enumerate() {
        if l as usize == best {
            sx += (i % sp.width()) as u64;
            sy += (i / sp.width()) as u64;
        }
    }
    centroid(sx, sy, sp.region_sizes()[best])
}
