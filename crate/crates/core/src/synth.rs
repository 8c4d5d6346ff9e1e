//! Synthetic fundus-like images with known optic-disc geometry.
//!
//! Each image has a dark reddish, vignetted background (red <= 180), a circular
//! disc whose red channel is saturated (>= 220), a paler concentric cup of radius
//! `cdr * disc_radius`, a few dark vessels crossing the disc and Gaussian noise.
//! Cup and disc share the red level; the cup is distinguished by its green and
//! blue channels, as in real fundus photographs.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::{GLAUCOMA, NORMAL};
use crate::math::round_to_u8;
use crate::raster::{PixelBox, Raster};

pub const DISC_RGB: [u8; 3] = [255, 150, 100];
pub const CUP_RGB: [u8; 3] = [255, 232, 200];
/// Channel multiplier under a vessel.
pub const VESSEL_FACTOR: f64 = 0.6;
const MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub disc_radius: (f64, f64),
    pub cdr: (f64, f64),
    pub cdr_glaucoma_cutoff: f64,
    pub vessel_count: (usize, usize),
    pub noise_sigma: f64,
    pub vignette_strength: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            disc_radius: (11.0, 15.0),
            cdr: (0.2, 0.9),
            cdr_glaucoma_cutoff: 0.7,
            vessel_count: (2, 5),
            noise_sigma: 2.0,
            vignette_strength: 0.3,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (rlo, rhi) = self.disc_radius;
        if !(rlo.is_finite() && rhi.is_finite() && rlo >= 1.0 && rlo <= rhi) {
            return Err(Error::InvalidConfig(
                "synth.disc_radius must satisfy 1 <= lo <= hi".into(),
            ));
        }
        let reach = 2 * (libm::floor(rhi) as usize + MARGIN) + 1;
        if reach > self.width || reach > self.height {
            return Err(Error::DiscTooLarge {
                radius: rhi,
                width: self.width,
                height: self.height,
            });
        }
        let (clo, chi) = self.cdr;
        if !(clo > 0.0 && chi < 1.0 && clo <= chi) {
            return Err(Error::InvalidConfig("synth.cdr must satisfy 0 < lo <= hi < 1".into()));
        }
        if self.vessel_count.0 > self.vessel_count.1 {
            return Err(Error::InvalidConfig("synth.vessel_count must satisfy lo <= hi".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("synth.noise_sigma must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.vignette_strength) {
            return Err(Error::InvalidConfig(
                "synth.vignette_strength must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Ground truth for one synthetic image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    /// Pixel bounding box of the disc.
    pub onh_box: PixelBox,
    pub disc_center: (usize, usize),
    pub disc_radius: f64,
    pub cup_radius: f64,
    pub cdr: f64,
    pub label: usize,
}

impl SynthTruth {
    /// Rebuilds the truth from manifest geometry.
    pub fn from_geometry(cx: usize, cy: usize, disc_radius: f64, cup_radius: f64, cutoff: f64) -> Self {
        let cdr = cup_radius / disc_radius;
        let reach = libm::floor(disc_radius) as usize;
        Self {
            onh_box: PixelBox::new(
                cx.saturating_sub(reach),
                cy.saturating_sub(reach),
                2 * reach + 1,
                2 * reach + 1,
            ),
            disc_center: (cx, cy),
            disc_radius,
            cup_radius,
            cdr,
            label: if cdr >= cutoff { GLAUCOMA } else { NORMAL },
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random point on the image border.
fn border_point<R: Rng>(rng: &mut R, w: f64, h: f64) -> (f64, f64) {
    match rng.random_range(0..4) {
        0 => (rng.random::<f64>() * w, 0.0),
        1 => (rng.random::<f64>() * w, h),
        2 => (0.0, rng.random::<f64>() * h),
        _ => (w, rng.random::<f64>() * h),
    }
}

/// Generates image `index` of the batch described by `spec`.
pub fn generate_one(spec: &SynthSpec, index: u64) -> Result<(Raster, SynthTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let (w, h) = (spec.width, spec.height);

    let radius = uniform(&mut rng, spec.disc_radius);
    let cdr = uniform(&mut rng, spec.cdr);
    let reach = libm::floor(radius) as usize + MARGIN;
    let cx = rng.random_range(reach..=w - 1 - reach);
    let cy = rng.random_range(reach..=h - 1 - reach);
    let truth = SynthTruth::from_geometry(cx, cy, radius, cdr * radius, spec.cdr_glaucoma_cutoff);

    let base = [
        uniform(&mut rng, (150.0, 170.0)),
        uniform(&mut rng, (45.0, 70.0)),
        uniform(&mut rng, (15.0, 35.0)),
    ];
    let (icx, icy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let half_diag2 = icx * icx + icy * icy;
    let mut img = vec![0.0f64; w * h * 3];
    let (r2, c2) = (radius * radius, truth.cup_radius * truth.cup_radius);
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) * 3;
            let (dx, dy) = (x as f64 - cx as f64, y as f64 - cy as f64);
            let d2 = dx * dx + dy * dy;
            let rgb = if d2 <= c2 {
                CUP_RGB.map(f64::from)
            } else if d2 <= r2 {
                DISC_RGB.map(f64::from)
            } else {
                let (vx, vy) = (x as f64 - icx, y as f64 - icy);
                let fall = 1.0 - spec.vignette_strength * (vx * vx + vy * vy) / half_diag2.max(1.0);
                base.map(|b| b * fall)
            };
            img[i..i + 3].copy_from_slice(&rgb);
        }
    }

    let vessels = rng.random_range(spec.vessel_count.0..=spec.vessel_count.1);
    let mut vessel_mask = vec![false; w * h];
    for _ in 0..vessels {
        let p0 = border_point(&mut rng, w as f64 - 1.0, h as f64 - 1.0);
        let p2 = border_point(&mut rng, w as f64 - 1.0, h as f64 - 1.0);
        // Control point near the disc center so the curve crosses the disc.
        let jitter = radius * 0.5;
        let ctrl_target = (
            cx as f64 + uniform(&mut rng, (-jitter, jitter)),
            cy as f64 + uniform(&mut rng, (-jitter, jitter)),
        );
        // Quadratic Bezier passing through ctrl_target at t = 1/2.
        let p1 = (
            2.0 * ctrl_target.0 - 0.5 * (p0.0 + p2.0),
            2.0 * ctrl_target.1 - 0.5 * (p0.1 + p2.1),
        );
        let steps = 4 * (w + h);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let u = 1.0 - t;
            let px = u * u * p0.0 + 2.0 * u * t * p1.0 + t * t * p2.0;
            let py = u * u * p0.1 + 2.0 * u * t * p1.1 + t * t * p2.1;
            let x_lo = libm::floor(px - 1.0).max(0.0) as usize;
            let y_lo = libm::floor(py - 1.0).max(0.0) as usize;
            for yy in y_lo..=((libm::ceil(py + 1.0).max(0.0) as usize).min(h - 1)) {
                for xx in x_lo..=((libm::ceil(px + 1.0).max(0.0) as usize).min(w - 1)) {
                    let (ex, ey) = (xx as f64 - px, yy as f64 - py);
                    if ex * ex + ey * ey <= 1.0 {
                        vessel_mask[yy * w + xx] = true;
                    }
                }
            }
        }
    }
    for (i, &v) in vessel_mask.iter().enumerate() {
        if v {
            img[i * 3..i * 3 + 3].iter_mut().for_each(|c| *c *= VESSEL_FACTOR);
        }
    }

    let data: Vec<u8> = if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
        img.iter().map(|&v| round_to_u8(v + normal.sample(&mut rng))).collect()
    } else {
        img.iter().map(|&v| round_to_u8(v)).collect()
    };
    Ok((Raster::new(w, h, 3, data)?, truth))
}

/// Generates `n` images; image `i` depends only on `(spec, i)`.
pub fn generate(spec: &SynthSpec, n: usize) -> Result<Vec<(Raster, SynthTruth)>> {
    spec.validate()?;
    (0..n as u64).map(|i| generate_one(spec, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean() -> SynthSpec {
        SynthSpec {
            noise_sigma: 0.0,
            vessel_count: (0, 0),
            ..SynthSpec::default()
        }
    }

    #[test]
    fn intensity_bands_without_noise() {
        for (img, truth) in generate(&clean(), 8).unwrap() {
            let (cx, cy) = truth.disc_center;
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let (dx, dy) = (x as f64 - cx as f64, y as f64 - cy as f64);
                    let inside = dx * dx + dy * dy <= truth.disc_radius * truth.disc_radius;
                    let red = img.get(x, y, 0);
                    if inside {
                        assert!(red >= 220);
                        assert!(truth.onh_box.contains(&PixelBox::square(x, y, 1)));
                    } else {
                        assert!(red <= 180);
                    }
                }
            }
        }
    }

    #[test]
    fn label_rule_and_geometry() {
        for (img, t) in generate(&SynthSpec::default(), 50).unwrap() {
            assert_eq!(t.label == GLAUCOMA, t.cdr >= 0.7);
            assert_eq!(t.cdr, t.cup_radius / t.disc_radius);
            assert!(t.onh_box.x0 >= 2 && t.onh_box.y0 >= 2);
            assert!(t.onh_box.x1() + 2 <= img.width() && t.onh_box.y1() + 2 <= img.height());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthSpec::default();
        assert_eq!(generate(&spec, 3).unwrap(), generate(&spec, 3).unwrap());
        let other = SynthSpec {
            seed: 1,
            ..spec.clone()
        };
        assert_ne!(generate(&spec, 1).unwrap(), generate(&other, 1).unwrap());
    }

    #[test]
    fn disc_too_large() {
        let spec = SynthSpec {
            width: 20,
            height: 20,
            disc_radius: (9.0, 9.0),
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&spec, 1), Err(Error::DiscTooLarge { .. })));
    }

    #[test]
    fn empty_batch() {
        assert!(generate(&SynthSpec::default(), 0).unwrap().is_empty());
    }
}
