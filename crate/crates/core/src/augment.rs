//! Training-time geometric augmentation.
//!
//! One draw produces a horizontal flip flag, rotation, shear, zoom and shift. They
//! are composed into a single affine map about the image center in the order
//! flip, rotate, shear, zoom, shift, and applied with edge-clamped bilinear
//! sampling so the output keeps the input size.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::round;
use crate::raster::{crop, resize_bilinear, PixelBox, Raster};

/// Sampling ranges for [`sample_augment`]. Ranges are inclusive `(lo, hi)` pairs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct AugmentSpec {
    pub rotation_deg: (f64, f64),
    /// Horizontal shear factor, `x' = x + s * y`.
    pub shear: (f64, f64),
    /// Zoom-in fraction; the scale factor is `1 + z`.
    pub zoom_frac: (f64, f64),
    pub hflip_prob: f64,
    /// Shift magnitude as a fraction of width (x) and height (y); the sign is random.
    pub shift_frac: (f64, f64),
    pub patch_margin_frac: f64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            rotation_deg: (-10.0, 10.0),
            shear: (-0.2, 0.2),
            zoom_frac: (0.0, 0.10),
            hflip_prob: 0.5,
            shift_frac: (0.0, 0.10),
            patch_margin_frac: 0.10,
        }
    }
}

impl AugmentSpec {
    /// A spec whose every draw is the identity transform.
    pub fn identity() -> Self {
        Self {
            rotation_deg: (0.0, 0.0),
            shear: (0.0, 0.0),
            zoom_frac: (0.0, 0.0),
            hflip_prob: 0.0,
            shift_frac: (0.0, 0.0),
            patch_margin_frac: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("rotation_deg", self.rotation_deg),
            ("shear", self.shear),
            ("zoom_frac", self.zoom_frac),
            ("shift_frac", self.shift_frac),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "augment.{name} must be a finite range with lo <= hi"
                )));
            }
        }
        if self.zoom_frac.0 < 0.0 || self.shift_frac.0 < 0.0 {
            return Err(Error::InvalidConfig(
                "augment.zoom_frac and augment.shift_frac must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.hflip_prob) {
            return Err(Error::InvalidConfig("augment.hflip_prob must lie in [0, 1]".into()));
        }
        if !(self.patch_margin_frac.is_finite() && self.patch_margin_frac >= 0.0) {
            return Err(Error::InvalidConfig("augment.patch_margin_frac must be >= 0".into()));
        }
        Ok(())
    }

    /// Names of fields whose range is wider than the default bounds.
    pub fn widened_fields(&self) -> Vec<&'static str> {
        let d = Self::default();
        let wider = |a: (f64, f64), b: (f64, f64)| a.0 < b.0 || a.1 > b.1;
        let mut out = Vec::new();
        if wider(self.rotation_deg, d.rotation_deg) {
            out.push("rotation_deg");
        }
        if wider(self.shear, d.shear) {
            out.push("shear");
        }
        if wider(self.zoom_frac, d.zoom_frac) {
            out.push("zoom_frac");
        }
        if wider(self.shift_frac, d.shift_frac) {
            out.push("shift_frac");
        }
        if self.patch_margin_frac > d.patch_margin_frac {
            out.push("patch_margin_frac");
        }
        out
    }
}

/// One sampled augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AffineParams {
    pub flip: bool,
    pub angle_deg: f64,
    pub shear: f64,
    pub zoom_frac: f64,
    /// Signed shift as a fraction of the image width.
    pub shift_x: f64,
    /// Signed shift as a fraction of the image height.
    pub shift_y: f64,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn signed<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64)) -> f64 {
    let magnitude = uniform(rng, range);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

pub fn sample_augment<R: Rng + ?Sized>(spec: &AugmentSpec, rng: &mut R) -> AffineParams {
    let flip = rng.random::<f64>() < spec.hflip_prob;
    let angle_deg = uniform(rng, spec.rotation_deg);
    let shear = uniform(rng, spec.shear);
    let zoom_frac = uniform(rng, spec.zoom_frac);
    let shift_x = signed(rng, spec.shift_frac);
    let shift_y = signed(rng, spec.shift_frac);
    AffineParams {
        flip,
        angle_deg,
        shear,
        zoom_frac,
        shift_x,
        shift_y,
    }
}

/// Inverse of the linear part, mapping output offsets back to source offsets.
fn inverse_linear(p: &AffineParams) -> [[f64; 2]; 2] {
    let map = |mut v: [f64; 2]| {
        let z = 1.0 + p.zoom_frac;
        v = [v[0] / z, v[1] / z];
        v = [v[0] - p.shear * v[1], v[1]];
        let (s, c) = libm::sincos(p.angle_deg.to_radians());
        v = [c * v[0] + s * v[1], -s * v[0] + c * v[1]];
        if p.flip {
            v[0] = -v[0];
        }
        v
    };
    let ex = map([1.0, 0.0]);
    let ey = map([0.0, 1.0]);
    [[ex[0], ey[0]], [ex[1], ey[1]]]
}

pub fn apply_affine(r: &Raster, p: &AffineParams) -> Raster {
    if *p == AffineParams::default() {
        return r.clone();
    }
    let (w, h, ch) = (r.width(), r.height(), r.channels());
    let m = inverse_linear(p);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let tx = p.shift_x * w as f64;
    let ty = p.shift_y * h as f64;
    let mut data = vec![0; r.data().len()];
    for (y, row) in data.chunks_exact_mut(w * ch).enumerate() {
        let oy = y as f64 - cy - ty;
        for (x, px) in row.chunks_exact_mut(ch).enumerate() {
            let ox = x as f64 - cx - tx;
            let sx = cx + m[0][0] * ox + m[0][1] * oy;
            let sy = cy + m[1][0] * ox + m[1][1] * oy;
            r.sample_bilinear_all(sx, sy, px);
        }
    }
    Raster::new(w, h, ch, data).expect("same dimensions as a valid raster")
}

fn patch_source(r: &Raster, side: usize, margin_frac: f64) -> Result<Raster> {
    if side == 0 {
        return Err(Error::InvalidDimensions {
            width: 0,
            height: 0,
            channels: r.channels(),
        });
    }
    let target = (round(side as f64 * (1.0 + margin_frac)) as usize).max(side);
    let (w, h) = (r.width() as f64, r.height() as f64);
    let (nw, nh) = if r.width() <= r.height() {
        (target, (round(h * target as f64 / w) as usize).max(target))
    } else {
        ((round(w * target as f64 / h) as usize).max(target), target)
    };
    resize_bilinear(r, nw, nh)
}

/// Resizes so the short side is `side * (1 + margin_frac)` and takes a uniformly
/// random `side x side` window.
pub fn random_patch<R: Rng + ?Sized>(r: &Raster, side: usize, margin_frac: f64, rng: &mut R) -> Result<Raster> {
    let src = patch_source(r, side, margin_frac)?;
    let x0 = rng.random_range(0..=src.width() - side);
    let y0 = rng.random_range(0..=src.height() - side);
    crop(&src, PixelBox::square(x0, y0, side))
}

/// Deterministic counterpart of [`random_patch`] taking the central window.
pub fn center_patch(r: &Raster, side: usize, margin_frac: f64) -> Result<Raster> {
    let src = patch_source(r, side, margin_frac)?;
    let x0 = (src.width() - side) / 2;
    let y0 = (src.height() - side) / 2;
    crop(&src, PixelBox::square(x0, y0, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    type TestRng = rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_spec_is_identity() {
        let mut rng = TestRng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(
                sample_augment(&AugmentSpec::identity(), &mut rng),
                AffineParams::default()
            );
        }
    }

    #[test]
    fn same_seed_same_params() {
        let spec = AugmentSpec::default();
        let a = sample_augment(&spec, &mut TestRng::seed_from_u64(42));
        let b = sample_augment(&spec, &mut TestRng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn angle_statistics() {
        let spec = AugmentSpec::default();
        let mut rng = TestRng::seed_from_u64(7);
        let draws: Vec<f64> = (0..10_000).map(|_| sample_augment(&spec, &mut rng).angle_deg).collect();
        let min = draws.iter().copied().fold(f64::INFINITY, f64::min);
        let max = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(min >= -10.0 && max <= 10.0);
        assert!(mean.abs() <= 0.5, "mean {mean}");
    }

    #[test]
    fn flip_of_two_pixels() {
        let r = Raster::new(2, 1, 1, vec![10, 200]).unwrap();
        let p = AffineParams {
            flip: true,
            ..AffineParams::default()
        };
        assert_eq!(apply_affine(&r, &p).data(), &[200, 10]);
    }

    #[test]
    fn validation_and_widening() {
        assert!(AugmentSpec::default().validate().is_ok());
        assert!(AugmentSpec::default().widened_fields().is_empty());
        let wide = AugmentSpec {
            rotation_deg: (-30.0, 30.0),
            ..AugmentSpec::default()
        };
        assert_eq!(wide.widened_fields(), vec!["rotation_deg"]);
        let bad = AugmentSpec {
            shear: (0.3, 0.1),
            ..AugmentSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn patch_full_frame_without_margin() {
        let r = Raster::from_fn(10, 10, 1, |x, y, _| (x * 20 + y) as u8).unwrap();
        let mut rng = TestRng::seed_from_u64(3);
        let p = random_patch(&r, 5, 0.0, &mut rng).unwrap();
        assert_eq!(p, resize_bilinear(&r, 5, 5).unwrap());
        assert_eq!(center_patch(&r, 10, 0.0).unwrap(), r);
    }
}
