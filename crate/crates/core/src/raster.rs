//! Byte rasters and the handful of pixel operations the pipeline needs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::round_to_u8;

/// Row-major, channel-interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
            });
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidDimensions {
                width,
                height,
                channels,
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a raster by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
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
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    fn require_channels(&self, expected: usize) -> Result<()> {
        if self.channels != expected {
            return Err(Error::ChannelMismatch {
                expected,
                found: self.channels,
            });
        }
        Ok(())
    }

    /// Edge-clamped bilinear sample at continuous pixel-center coordinates.
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        self.taps(x, y).sample(&self.data, c)
    }

    /// Writes the bilinear sample of every channel at `(x, y)` to `out`.
    pub fn sample_bilinear_all(&self, x: f64, y: f64, out: &mut [u8]) {
        let t = self.taps(x, y);
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            *o = crate::math::round_to_u8(t.sample(&self.data, c));
        }
    }

    fn taps(&self, x: f64, y: f64) -> Taps {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        // Both are clamped non-negative, so truncation is floor.
        let x0 = x as usize;
        let y0 = y as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let at = |x: usize, y: usize| (y * self.width + x) * self.channels;
        Taps {
            idx: [at(x0, y0), at(x1, y0), at(x0, y1), at(x1, y1)],
            fx: x - x0 as f64,
            fy: y - y0 as f64,
        }
    }
}

struct Taps {
    /// Offsets of the (x0,y0), (x1,y0), (x0,y1), (x1,y1) pixels.
    idx: [usize; 4],
    fx: f64,
    fy: f64,
}

impl Taps {
    fn sample(&self, data: &[u8], c: usize) -> f64 {
        let [p00, p10, p01, p11] = self.idx.map(|i| data[i + c] as f64);
        let top = p00 + (p10 - p00) * self.fx;
        let bottom = p01 + (p11 - p01) * self.fx;
        top + (bottom - top) * self.fy
    }
}

/// Axis-aligned pixel box; `x0`/`y0` inclusive, `w`/`h` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelBox {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl PixelBox {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn square(x0: usize, y0: usize, side: usize) -> Self {
        Self::new(x0, y0, side, side)
    }

    /// Exclusive right edge.
    pub fn x1(&self) -> usize {
        self.x0 + self.w
    }

    /// Exclusive bottom edge.
    pub fn y1(&self) -> usize {
        self.y0 + self.h
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.x1() <= width && self.y1() <= height
    }

    pub fn contains(&self, other: &PixelBox) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1() <= self.x1() && other.y1() <= self.y1()
    }
}

/// Red channel of an RGB raster as a gray raster.
pub fn extract_red(r: &Raster) -> Result<Raster> {
    r.require_channels(3)?;
    let data = r.data.chunks_exact(3).map(|p| p[0]).collect();
    Raster::new(r.width, r.height, 1, data)
}

/// Scales intensities so the brightest pixel becomes 255.
///
/// An all-zero image is returned unchanged.
pub fn contrast_stretch(r: &Raster) -> Result<Raster> {
    r.require_channels(1)?;
    let max = r.data.iter().copied().max().unwrap_or(0);
    if max == 0 || max == 255 {
        return Ok(r.clone());
    }
    let scale = 255.0 / max as f64;
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = round_to_u8(v as f64 * scale);
    }
    let data = r.data.iter().map(|&v| lut[v as usize]).collect();
    Raster::new(r.width, r.height, 1, data)
}

pub fn crop(r: &Raster, b: PixelBox) -> Result<Raster> {
    if !b.fits_in(r.width, r.height) {
        return Err(Error::BoxOutOfBounds {
            x0: b.x0,
            y0: b.y0,
            w: b.w,
            h: b.h,
            width: r.width,
            height: r.height,
        });
    }
    let row = b.w * r.channels;
    let mut data = Vec::with_capacity(row * b.h);
    for y in b.y0..b.y1() {
        let start = (y * r.width + b.x0) * r.channels;
        data.extend_from_slice(&r.data[start..start + row]);
    }
    Raster::new(b.w, b.h, r.channels, data)
}

/// Bilinear resample using half-pixel-center mapping with edge clamping.
pub fn resize_bilinear(r: &Raster, w: usize, h: usize) -> Result<Raster> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidDimensions {
            width: w,
            height: h,
            channels: r.channels,
        });
    }
    if w == r.width && h == r.height {
        return Ok(r.clone());
    }
    let sx = r.width as f64 / w as f64;
    let sy = r.height as f64 / h as f64;
    let mut data = vec![0; w * h * r.channels];
    for (y, row) in data.chunks_exact_mut(w * r.channels).enumerate() {
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        for (x, px) in row.chunks_exact_mut(r.channels).enumerate() {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            r.sample_bilinear_all(src_x, src_y, px);
        }
    }
    Raster::new(w, h, r.channels, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gray(w: usize, h: usize, data: Vec<u8>) -> Raster {
        Raster::new(w, h, 1, data).unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Raster::new(0, 1, 1, vec![]).is_err());
        assert!(Raster::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(Raster::new(2, 2, 1, vec![0; 3]).is_err());
    }

    #[test]
    fn red_channel() {
        let r = Raster::new(1, 1, 3, vec![200, 10, 5]).unwrap();
        assert_eq!(extract_red(&r).unwrap().data(), &[200]);
        let all_red = Raster::from_fn(4, 3, 3, |_, _, c| if c == 0 { 255 } else { 0 }).unwrap();
        assert!(extract_red(&all_red).unwrap().data().iter().all(|&v| v == 255));
        assert!(matches!(
            extract_red(&gray(1, 1, vec![0])),
            Err(Error::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn stretch_goldens() {
        let r = gray(3, 1, vec![0, 51, 102]);
        // 51 * 255 / 102 = 127.5 rounds away from zero.
        assert_eq!(contrast_stretch(&r).unwrap().data(), &[0, 128, 255]);
        let already = gray(2, 1, vec![3, 255]);
        assert_eq!(contrast_stretch(&already).unwrap(), already);
        let flat = gray(2, 2, vec![10; 4]);
        assert_eq!(contrast_stretch(&flat).unwrap().data(), &[255; 4]);
        let blank = gray(2, 2, vec![0; 4]);
        assert_eq!(contrast_stretch(&blank).unwrap(), blank);
    }

    #[test]
    fn crop_cases() {
        let r = Raster::from_fn(5, 4, 1, |x, y, _| (10 * y + x) as u8).unwrap();
        assert_eq!(crop(&r, PixelBox::new(0, 0, 5, 4)).unwrap(), r);
        assert_eq!(crop(&r, PixelBox::square(3, 2, 1)).unwrap().data(), &[23]);
        assert!(matches!(
            crop(&r, PixelBox::square(3, 2, 3)),
            Err(Error::BoxOutOfBounds { .. })
        ));
    }

    #[test]
    fn resize_goldens() {
        let r = gray(2, 1, vec![0, 255]);
        // Centers map to source x = -1/6 (clamped), 0.5, 7/6 (clamped).
        assert_eq!(resize_bilinear(&r, 3, 1).unwrap().data(), &[0, 128, 255]);
        let c = Raster::filled(7, 5, 3, 128).unwrap();
        let out = resize_bilinear(&c, 13, 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 128));
        assert_eq!(resize_bilinear(&r, 2, 1).unwrap(), r);
    }

    #[test]
    fn box_containment() {
        let outer = PixelBox::square(2, 2, 10);
        assert!(outer.contains(&PixelBox::new(2, 3, 10, 9)));
        assert!(!outer.contains(&PixelBox::new(1, 3, 4, 4)));
        assert!(outer.fits_in(12, 12));
        assert!(!outer.fits_in(11, 12));
    }
}
