//! Simple linear iterative clustering on a single intensity channel.
//!
//! Cluster centers start on a regular grid with spacing `S = sqrt(W*H/k)` and
//! are nudged to the lowest-gradient pixel of their 3x3 neighborhood. Each round
//! assigns pixels inside a `2S x 2S` window around every center using
//! `D = |dI| + (compactness / S) * |dxy|`, then moves centers to the mean of their
//! members. Afterwards every label is reduced to one 4-connected piece; stray
//! fragments are absorbed by their largest neighbor.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::round;
use crate::raster::Raster;

/// Per-pixel superpixel labels plus per-region statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    region_means: Vec<f64>,
    region_sizes: Vec<usize>,
}

impl SuperpixelMap {
    /// Builds a map from raw labels, renumbering them `0..K` by first raster-scan
    /// appearance and computing region statistics from `gray`.
    pub fn from_labels(gray: &Raster, labels: &[u32]) -> Result<Self> {
        if gray.channels() != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                found: gray.channels(),
            });
        }
        let n = gray.width() * gray.height();
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: n,
            });
        }
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![u32::MAX; max + 1];
        let mut next = 0u32;
        let mut out = Vec::with_capacity(n);
        for &l in labels {
            let slot = &mut remap[l as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            out.push(*slot);
        }
        let k = next as usize;
        let mut sums = vec![0u64; k];
        let mut sizes = vec![0usize; k];
        for (&l, &v) in out.iter().zip(gray.data()) {
            sums[l as usize] += v as u64;
            sizes[l as usize] += 1;
        }
        let means = sums.iter().zip(&sizes).map(|(&s, &c)| s as f64 / c as f64).collect();
        Ok(Self {
            width: gray.width(),
            height: gray.height(),
            labels: out,
            region_means: means,
            region_sizes: sizes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn region_count(&self) -> usize {
        self.region_sizes.len()
    }

    pub fn region_means(&self) -> &[f64] {
        &self.region_means
    }

    pub fn region_sizes(&self) -> &[usize] {
        &self.region_sizes
    }
}

#[derive(Clone, Copy)]
struct Center {
    x: f64,
    y: f64,
    intensity: f64,
}

fn gradient(gray: &Raster, x: usize, y: usize) -> f64 {
    let w = gray.width();
    let h = gray.height();
    let at = |x: usize, y: usize| gray.get(x, y, 0) as f64;
    let gx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
    let gy = at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
    gx * gx + gy * gy
}

fn initial_centers(gray: &Raster, spacing: f64) -> Vec<Center> {
    let (w, h) = (gray.width(), gray.height());
    let nx = (round(w as f64 / spacing) as usize).clamp(1, w);
    let ny = (round(h as f64 / spacing) as usize).clamp(1, h);
    let tile_w = w as f64 / nx as f64;
    let tile_h = h as f64 / ny as f64;
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let mut cx = (i as f64 + 0.5) * tile_w - 0.5;
            let mut cy = (j as f64 + 0.5) * tile_h - 0.5;
            let px = (round(cx) as usize).min(w - 1);
            let py = (round(cy) as usize).min(h - 1);
            let mut best = (gradient(gray, px, py), px, py);
            for ny_ in py.saturating_sub(1)..=(py + 1).min(h - 1) {
                for nx_ in px.saturating_sub(1)..=(px + 1).min(w - 1) {
                    let g = gradient(gray, nx_, ny_);
                    if g < best.0 {
                        best = (g, nx_, ny_);
                    }
                }
            }
            if (best.1, best.2) != (px, py) {
                cx = best.1 as f64;
                cy = best.2 as f64;
            }
            centers.push(Center {
                x: cx,
                y: cy,
                intensity: gray.get(best.1, best.2, 0) as f64,
            });
        }
    }
    centers
}

pub fn slic_segment(gray: &Raster, k: usize, compactness: f64, iterations: usize) -> Result<SuperpixelMap> {
    if gray.channels() != 1 {
        return Err(Error::ChannelMismatch {
            expected: 1,
            found: gray.channels(),
        });
    }
    let (w, h) = (gray.width(), gray.height());
    let n = w * h;
    if k == 0 || k > n {
        return Err(Error::TooManySuperpixels {
            requested: k,
            pixels: n,
        });
    }
    let spacing = libm::sqrt(n as f64 / k as f64);
    let spatial_weight = compactness / spacing;
    let mut centers = initial_centers(gray, spacing);

    let mut labels = vec![u32::MAX; n];
    let mut dist = vec![f64::INFINITY; n];
    let rounds = iterations.max(1);
    for round_idx in 0..rounds {
        labels.fill(u32::MAX);
        dist.fill(f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let x_lo = libm::ceil(c.x - spacing).max(0.0) as usize;
            let y_lo = libm::ceil(c.y - spacing).max(0.0) as usize;
            let x_hi = (libm::floor(c.x + spacing).max(0.0) as usize).min(w - 1);
            let y_hi = (libm::floor(c.y + spacing).max(0.0) as usize).min(h - 1);
            for y in y_lo..=y_hi {
                let dy = y as f64 - c.y;
                for x in x_lo..=x_hi {
                    let dx = x as f64 - c.x;
                    let i = y * w + x;
                    let di = (gray.data()[i] as f64 - c.intensity).abs();
                    let d = di + spatial_weight * libm::sqrt(dx * dx + dy * dy);
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = ci as u32;
                    }
                }
            }
        }
        // Pixels outside every window fall back to the globally nearest center.
        for (i, label) in labels.iter_mut().enumerate() {
            if *label != u32::MAX {
                continue;
            }
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let v = gray.data()[i] as f64;
            let mut best = (f64::INFINITY, 0u32);
            for (ci, c) in centers.iter().enumerate() {
                let dx = x - c.x;
                let dy = y - c.y;
                let d = (v - c.intensity).abs() + spatial_weight * libm::sqrt(dx * dx + dy * dy);
                if d < best.0 {
                    best = (d, ci as u32);
                }
            }
            *label = best.1;
        }
        if round_idx + 1 == rounds {
            break;
        }
        let mut acc = vec![(0.0f64, 0.0f64, 0.0f64, 0usize); centers.len()];
        for (i, &l) in labels.iter().enumerate() {
            let a = &mut acc[l as usize];
            a.0 += (i % w) as f64;
            a.1 += (i / w) as f64;
            a.2 += gray.data()[i] as f64;
            a.3 += 1;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a.3 > 0 {
                let cnt = a.3 as f64;
                c.x = a.0 / cnt;
                c.y = a.1 / cnt;
                c.intensity = a.2 / cnt;
            }
        }
    }

    let labels = enforce_connectivity(&labels, w, h);
    SuperpixelMap::from_labels(gray, &labels)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Reduces each label to a single 4-connected region.
///
/// For every label the largest 4-connected piece is kept; the remaining pieces
/// (smallest first) are merged into the adjacent region that is currently
/// largest. Returned labels are component roots, not yet compacted.
pub(crate) fn enforce_connectivity(labels: &[u32], w: usize, h: usize) -> Vec<u32> {
    let n = w * h;
    let mut comp = vec![usize::MAX; n];
    let mut comp_label: Vec<u32> = Vec::new();
    let mut comp_pixels: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comp_label.len();
        let label = labels[start];
        comp[start] = id;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && labels[j] == label {
                    comp[j] = id;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        comp_label.push(label);
        comp_pixels.push(pixels);
    }

    let ncomp = comp_label.len();
    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut main = vec![usize::MAX; max_label + 1];
    for c in 0..ncomp {
        let slot = &mut main[comp_label[c] as usize];
        if *slot == usize::MAX || comp_pixels[c].len() > comp_pixels[*slot].len() {
            *slot = c;
        }
    }
    let mut fragments: Vec<usize> = (0..ncomp).filter(|&c| main[comp_label[c] as usize] != c).collect();
    fragments.sort_by_key(|&c| (comp_pixels[c].len(), c));

    let mut parent: Vec<usize> = (0..ncomp).collect();
    let mut size: Vec<usize> = comp_pixels.iter().map(Vec::len).collect();
    for &frag in &fragments {
        let root = find(&mut parent, frag);
        let mut best: Option<(usize, usize)> = None;
        for &i in &comp_pixels[frag] {
            let (x, y) = (i % w, i / w);
            let mut neighbors = [usize::MAX; 4];
            if x > 0 {
                neighbors[0] = i - 1;
            }
            if x + 1 < w {
                neighbors[1] = i + 1;
            }
            if y > 0 {
                neighbors[2] = i - w;
            }
            if y + 1 < h {
                neighbors[3] = i + w;
            }
            for j in neighbors.into_iter().filter(|&j| j != usize::MAX) {
                let r = find(&mut parent, comp[j]);
                if r == root {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((br, bs)) => size[r] > bs || (size[r] == bs && r < br),
                };
                if better {
                    best = Some((r, size[r]));
                }
            }
        }
        if let Some((target, _)) = best {
            parent[root] = target;
            size[target] += size[root];
        }
    }
    (0..n).map(|i| find(&mut parent, comp[i]) as u32).collect()
}
