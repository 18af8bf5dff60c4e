//! SLIC superpixel segmentation: adaptive k-means over (CIELAB color,
//! position) with a windowed assignment step and a connectivity enforcement
//! pass.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::frame::ColorFrame;

const UNASSIGNED: u32 = u32::MAX;

/// A CIELAB frame (D65 white point, sRGB linearization).
#[derive(Debug, Clone)]
pub struct LabFrame {
    width: usize,
    height: usize,
    pixels: Vec<[f32; 3]>,
}

impl LabFrame {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn pixels(&self) -> &[[f32; 3]] {
        &self.pixels
    }
}

fn srgb_linear_table() -> [f32; 256] {
    let mut table = [0f32; 256];
    for (i, slot) in table.iter_mut().enumerate() {
        let c = i as f64 / 255.0;
        *slot = if c <= 0.04045 {
            (c / 12.92) as f32
        } else {
            (((c + 0.055) / 1.055).powf(2.4)) as f32
        };
    }
    table
}

/// Converts 8-bit sRGB to CIELAB (D65).
pub fn srgb_to_lab(frame: &ColorFrame) -> LabFrame {
    const XN: f64 = 0.95047;
    const YN: f64 = 1.0;
    const ZN: f64 = 1.08883;
    const EPS: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;

    let lin = srgb_linear_table();
    let f = |t: f64| -> f64 {
        if t > EPS {
            t.cbrt()
        } else {
            (KAPPA * t + 16.0) / 116.0
        }
    };
    let pixels = frame
        .pixels()
        .iter()
        .map(|&[r, g, b]| {
            let (r, g, b) = (lin[r as usize] as f64, lin[g as usize] as f64, lin[b as usize] as f64);
            let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
            let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
            let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
            let (fx, fy, fz) = (f(x / XN), f(y / YN), f(z / ZN));
            [
                (116.0 * fy - 16.0) as f32,
                (500.0 * (fx - fy)) as f32,
                (200.0 * (fy - fz)) as f32,
            ]
        })
        .collect();
    LabFrame {
        width: frame.width(),
        height: frame.height(),
        pixels,
    }
}

/// Segmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    /// Superpixel count control: L = floor(min(W, H) / sigma_n).
    pub sigma_n: f64,
    /// Compactness weight m balancing color vs spatial proximity.
    pub compactness: f64,
    /// Maximum assignment/update iterations.
    pub max_iterations: u32,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            sigma_n: 20.0,
            compactness: 10.0,
            max_iterations: 10,
        }
    }
}

impl SlicParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_n < 2.0 {
            return Err(Error::InvalidParam(format!(
                "sigma_n must be >= 2, got {}",
                self.sigma_n
            )));
        }
        if self.compactness <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "compactness must be > 0, got {}",
                self.compactness
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParam("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// A per-pixel superpixel labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelLabeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    region_count: usize,
    superpixel_size: usize,
}

impl SuperpixelLabeling {
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
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn region_count(&self) -> usize {
        self.region_count
    }

    /// The grid interval L the segmentation was seeded with.
    #[inline]
    pub fn superpixel_size(&self) -> usize {
        self.superpixel_size
    }
}

/// Expected superpixel side length, adaptive to the image size:
/// L = floor(min(W, H) / sigma_n), clamped to at least 2.
pub fn adaptive_superpixel_size(width: usize, height: usize, sigma_n: f64) -> usize {
    let l = (width.min(height) as f64 / sigma_n).floor() as usize;
    l.max(2)
}

/// Combined color/spatial distance between two 5-D points
/// (l, a, b, x, y): sqrt(d_c^2 + (d_s / L)^2 * m^2).
pub fn slic_distance(a: [f64; 5], b: [f64; 5], l: f64, m: f64) -> f64 {
    let dc2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
    let ds2 = (a[3] - b[3]).powi(2) + (a[4] - b[4]).powi(2);
    (dc2 + ds2 / (l * l) * (m * m)).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Center {
    l: f64,
    a: f64,
    b: f64,
    x: f64,
    y: f64,
}

/// Squared gradient magnitude in Lab space, used for seed perturbation.
fn gradient(lab: &LabFrame, x: usize, y: usize) -> f64 {
    let (w, h) = (lab.width, lab.height);
    let xl = x.saturating_sub(1);
    let xr = (x + 1).min(w - 1);
    let yu = y.saturating_sub(1);
    let yd = (y + 1).min(h - 1);
    let dx: f64 = lab
        .pixel(xr, y)
        .iter()
        .zip(lab.pixel(xl, y).iter())
        .map(|(a, b)| ((a - b) as f64).powi(2))
        .sum();
    let dy: f64 = lab
        .pixel(x, yd)
        .iter()
        .zip(lab.pixel(x, yu).iter())
        .map(|(a, b)| ((a - b) as f64).powi(2))
        .sum();
    dx + dy
}

fn initial_centers(lab: &LabFrame, l: usize) -> Vec<Center> {
    let (w, h) = (lab.width, lab.height);
    let nx = ((w as f64 / l as f64).round() as usize).max(1);
    let ny = ((h as f64 / l as f64).round() as usize).max(1);
    let mut centers = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let cx = (((gx as f64 + 0.5) * w as f64 / nx as f64) as usize).min(w - 1);
            let cy = (((gy as f64 + 0.5) * h as f64 / ny as f64) as usize).min(h - 1);
            // Move to the lowest-gradient position in the 3x3 neighborhood.
            let mut best = (cx, cy);
            let mut best_grad = f64::INFINITY;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let px = (cx as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    let py = (cy as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    let g = gradient(lab, px, py);
                    if g < best_grad {
                        best_grad = g;
                        best = (px, py);
                    }
                }
            }
            let color = lab.pixel(best.0, best.1);
            centers.push(Center {
                l: color[0] as f64,
                a: color[1] as f64,
                b: color[2] as f64,
                x: best.0 as f64,
                y: best.1 as f64,
            });
        }
    }
    centers
}

/// Segments a frame into superpixels.
///
/// Centers are seeded on a regular grid with interval L, each assignment step
/// searches a 2L x 2L window per center (ties go to the lower center id),
/// centers move to the mean of their pixels, and iteration stops early once
/// the average center displacement drops below half a pixel. A final pass
/// merges fragments smaller than L^2 / 4 into the neighboring region they
/// share the longest boundary with, so every region is one 4-connected
/// component.
pub fn segment(frame: &ColorFrame, params: &SlicParams) -> Result<SuperpixelLabeling> {
    params.validate()?;
    let (w, h) = frame.dims();
    let l = adaptive_superpixel_size(w, h, params.sigma_n);
    if w.min(h) < 2 * l {
        return Err(Error::FrameTooSmall {
            width: w,
            height: h,
            min_side: 2 * l,
        });
    }

    let lab = srgb_to_lab(frame);
    let mut centers = initial_centers(&lab, l);
    let mut labels = vec![UNASSIGNED; w * h];
    let inv_l2_m2 = (params.compactness * params.compactness) / ((l * l) as f64);

    let mut dist = vec![f64::INFINITY; w * h];
    for _ in 0..params.max_iterations {
        dist.fill(f64::INFINITY);
        // Assignment: centers in ascending id order; strict improvement keeps
        // the lower id on exact ties.
        for (k, c) in centers.iter().enumerate() {
            let x0 = ((c.x - l as f64).ceil()).max(0.0) as usize;
            let x1 = ((c.x + l as f64).floor()).min(w as f64 - 1.0) as usize;
            let y0 = ((c.y - l as f64).ceil()).max(0.0) as usize;
            let y1 = ((c.y + l as f64).floor()).min(h as f64 - 1.0) as usize;
            for y in y0..=y1 {
                let row = y * w;
                for x in x0..=x1 {
                    let p = lab.pixels[row + x];
                    let dc2 = (p[0] as f64 - c.l).powi(2)
                        + (p[1] as f64 - c.a).powi(2)
                        + (p[2] as f64 - c.b).powi(2);
                    let ds2 = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                    let d2 = dc2 + ds2 * inv_l2_m2;
                    if d2 < dist[row + x] {
                        dist[row + x] = d2;
                        labels[row + x] = k as u32;
                    }
                }
            }
        }

        // Update step: centers move to the mean of their pixels.
        let mut sums = vec![[0f64; 6]; centers.len()];
        for y in 0..h {
            for x in 0..w {
                let lbl = labels[y * w + x];
                if lbl == UNASSIGNED {
                    continue;
                }
                let p = lab.pixels[y * w + x];
                let s = &mut sums[lbl as usize];
                s[0] += p[0] as f64;
                s[1] += p[1] as f64;
                s[2] += p[2] as f64;
                s[3] += x as f64;
                s[4] += y as f64;
                s[5] += 1.0;
            }
        }
        let mut moved = 0.0;
        let mut updated = 0usize;
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[5] == 0.0 {
                continue;
            }
            let nx = s[3] / s[5];
            let ny = s[4] / s[5];
            moved += ((nx - c.x).powi(2) + (ny - c.y).powi(2)).sqrt();
            updated += 1;
            *c = Center {
                l: s[0] / s[5],
                a: s[1] / s[5],
                b: s[2] / s[5],
                x: nx,
                y: ny,
            };
        }
        if updated > 0 && moved / (updated as f64) < 0.5 {
            break;
        }
    }

    // Window misses are possible once centers drift; fall back to a full
    // search for any pixel left unassigned.
    for y in 0..h {
        for x in 0..w {
            if labels[y * w + x] != UNASSIGNED {
                continue;
            }
            let p = lab.pixels[y * w + x];
            let mut best = (f64::INFINITY, 0u32);
            for (k, c) in centers.iter().enumerate() {
                let dc2 = (p[0] as f64 - c.l).powi(2)
                    + (p[1] as f64 - c.a).powi(2)
                    + (p[2] as f64 - c.b).powi(2);
                let ds2 = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                let d2 = dc2 + ds2 * inv_l2_m2;
                if d2 < best.0 {
                    best = (d2, k as u32);
                }
            }
            labels[y * w + x] = best.1;
        }
    }

    let (labels, region_count) = enforce_connectivity(&labels, w, h, l);
    Ok(SuperpixelLabeling {
        width: w,
        height: h,
        labels,
        region_count,
        superpixel_size: l,
    })
}

struct Components {
    /// Component id per pixel.
    ids: Vec<usize>,
    sizes: Vec<usize>,
    /// Boundary-contact counts towards neighboring components.
    contacts: Vec<BTreeMap<usize, u64>>,
}

fn find_components(labels: &[u32], w: usize, h: usize) -> Components {
    let mut ids = vec![usize::MAX; w * h];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if ids[start] != usize::MAX {
            continue;
        }
        let comp = sizes.len();
        let lbl = labels[start];
        let mut size = 0usize;
        ids[start] = comp;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            size += 1;
            let (x, y) = (idx % w, idx / w);
            let mut visit = |nidx: usize| {
                if ids[nidx] == usize::MAX && labels[nidx] == lbl {
                    ids[nidx] = comp;
                    stack.push(nidx);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < w {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - w);
            }
            if y + 1 < h {
                visit(idx + w);
            }
        }
        sizes.push(size);
    }

    let mut contacts: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); sizes.len()];
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let a = ids[idx];
            if x + 1 < w {
                let b = ids[idx + 1];
                if a != b {
                    *contacts[a].entry(b).or_default() += 1;
                    *contacts[b].entry(a).or_default() += 1;
                }
            }
            if y + 1 < h {
                let b = ids[idx + w];
                if a != b {
                    *contacts[a].entry(b).or_default() += 1;
                    *contacts[b].entry(a).or_default() += 1;
                }
            }
        }
    }
    Components {
        ids,
        sizes,
        contacts,
    }
}

/// Merges 4-connected fragments smaller than L^2 / 4 into the neighboring
/// component with the largest shared boundary, then relabels compactly in
/// scan order. Returns (labels, region_count).
fn enforce_connectivity(labels: &[u32], w: usize, h: usize, l: usize) -> (Vec<u32>, usize) {
    let min_size = ((l * l) / 4).max(1);
    let mut comps = find_components(labels, w, h);
    let n = comps.sizes.len();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    loop {
        // Smallest undersized root (ties to the lower id).
        let mut pick: Option<(usize, usize)> = None;
        for i in 0..n {
            if find(&mut parent, i) != i || comps.sizes[i] >= min_size {
                continue;
            }
            if pick.map_or(true, |(sz, id)| (comps.sizes[i], i) < (sz, id)) {
                pick = Some((comps.sizes[i], i));
            }
        }
        let Some((_, root)) = pick else {
            break;
        };

        // Aggregate contacts by current root and take the strongest neighbor.
        let mut agg: BTreeMap<usize, u64> = BTreeMap::new();
        for (&other, &count) in &comps.contacts[root] {
            let other_root = find(&mut parent, other);
            if other_root != root {
                *agg.entry(other_root).or_default() += count;
            }
        }
        let Some((&target, _)) = agg.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) else {
            break; // single component image
        };

        parent[root] = target;
        comps.sizes[target] += comps.sizes[root];
        let moved = std::mem::take(&mut comps.contacts[root]);
        for (other, count) in moved {
            let other_root = find(&mut parent, other);
            if other_root != target {
                *comps.contacts[target].entry(other_root).or_default() += count;
            }
        }
    }

    // Compact relabeling in scan order.
    let mut new_label: Vec<u32> = vec![UNASSIGNED; n];
    let mut out = vec![0u32; w * h];
    let mut next = 0u32;
    for idx in 0..w * h {
        let root = find(&mut parent, comps.ids[idx]);
        if new_label[root] == UNASSIGNED {
            new_label[root] = next;
            next += 1;
        }
        out[idx] = new_label[root];
    }
    (out, next as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(w: usize, h: usize) -> ColorFrame {
        let px = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let v = (((x / 4) + (y / 4)) % 2 * 150 + 50) as u8;
                [v, v.saturating_add(20), v]
            })
            .collect();
        ColorFrame::new(w, h, px).unwrap()
    }

    fn assert_partition(lab: &SuperpixelLabeling) {
        let n = lab.region_count();
        assert!(n >= 1);
        let mut used = vec![false; n];
        for &l in lab.labels() {
            assert!((l as usize) < n);
            used[l as usize] = true;
        }
        assert!(used.iter().all(|&u| u), "every label must be used");
    }

    fn assert_connected(lab: &SuperpixelLabeling) {
        let (w, h) = lab.dims();
        let mut seen_component = vec![false; lab.region_count()];
        let mut visited = vec![false; w * h];
        let mut stack = Vec::new();
        for start in 0..w * h {
            if visited[start] {
                continue;
            }
            let lbl = lab.labels()[start];
            assert!(
                !seen_component[lbl as usize],
                "label {lbl} split into multiple components"
            );
            seen_component[lbl as usize] = true;
            visited[start] = true;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (x, y) = (idx % w, idx / w);
                let mut visit = |nidx: usize| {
                    if !visited[nidx] && lab.labels()[nidx] == lbl {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                };
                if x > 0 {
                    visit(idx - 1);
                }
                if x + 1 < w {
                    visit(idx + 1);
                }
                if y > 0 {
                    visit(idx - w);
                }
                if y + 1 < h {
                    visit(idx + w);
                }
            }
        }
    }

    #[test]
    fn adaptive_size_examples() {
        assert_eq!(adaptive_superpixel_size(640, 480, 20.0), 24);
        assert_eq!(adaptive_superpixel_size(200, 144, 20.0), 7);
        assert_eq!(adaptive_superpixel_size(100, 100, 100.0), 2);
    }

    #[test]
    fn distance_examples() {
        let p = [10.0, 2.0, 3.0, 5.0, 5.0];
        assert_eq!(slic_distance(p, p, 5.0, 10.0), 0.0);

        let a = [10.0, 0.0, 0.0, 7.0, 9.0];
        let b = [13.0, 4.0, 0.0, 7.0, 9.0];
        assert!((slic_distance(a, b, 5.0, 10.0) - 5.0).abs() < 1e-12);

        let a = [1.0, 2.0, 3.0, 0.0, 0.0];
        let b = [1.0, 2.0, 3.0, 3.0, 4.0];
        assert!((slic_distance(a, b, 5.0, 10.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_frame_keeps_seed_grid() {
        let f = ColorFrame::filled(100, 100, [90, 90, 90]);
        let params = SlicParams::default(); // L = 5, 20x20 seeds
        let lab = segment(&f, &params).unwrap();
        assert_partition(&lab);
        assert_connected(&lab);
        let expected = (100.0 * 100.0) / 25.0;
        let n = lab.region_count() as f64;
        assert!(
            (n - expected).abs() / expected <= 0.2,
            "region count {n} vs expected {expected}"
        );
    }

    #[test]
    fn halves_do_not_straddle_color_boundary() {
        let w = 64;
        let px = (0..w * 64)
            .map(|i| if i % w < w / 2 { [0, 0, 0] } else { [255, 255, 255] })
            .collect();
        let f = ColorFrame::new(w, 64, px).unwrap();
        let params = SlicParams {
            sigma_n: 8.0, // L = 8
            compactness: 10.0,
            max_iterations: 10,
        };
        let lab = segment(&f, &params).unwrap();
        assert_partition(&lab);
        assert_connected(&lab);
        // A region may reach at most 1 pixel across the black/white split.
        let split = w / 2;
        let mut black_cols: Vec<Vec<usize>> = vec![Vec::new(); lab.region_count()];
        let mut white_cols: Vec<Vec<usize>> = vec![Vec::new(); lab.region_count()];
        for (idx, &l) in lab.labels().iter().enumerate() {
            let x = idx % w;
            if x < split {
                black_cols[l as usize].push(x);
            } else {
                white_cols[l as usize].push(x);
            }
        }
        for r in 0..lab.region_count() {
            if !black_cols[r].is_empty() && !white_cols[r].is_empty() {
                let black_ok = black_cols[r].iter().all(|&x| x == split - 1);
                let white_ok = white_cols[r].iter().all(|&x| x == split);
                assert!(
                    black_ok || white_ok,
                    "region {r} straddles the boundary by more than 1 pixel"
                );
            }
        }
    }

    #[test]
    fn textured_frame_invariants_and_determinism() {
        let f = checker(80, 60);
        let params = SlicParams {
            sigma_n: 10.0, // L = 6
            compactness: 10.0,
            max_iterations: 10,
        };
        let a = segment(&f, &params).unwrap();
        let b = segment(&f, &params).unwrap();
        assert_eq!(a, b);
        assert_partition(&a);
        assert_connected(&a);
        let l = a.superpixel_size();
        let expected = (80 * 60) as f64 / (l * l) as f64;
        let n = a.region_count() as f64;
        assert!(n >= 0.5 * expected && n <= 4.0 * expected, "count {n} vs {expected}");
    }

    #[test]
    fn tiny_frame_is_rejected() {
        let f = ColorFrame::filled(3, 3, [1, 2, 3]);
        let params = SlicParams {
            sigma_n: 2.0,
            compactness: 10.0,
            max_iterations: 5,
        };
        assert!(matches!(
            segment(&f, &params),
            Err(Error::FrameTooSmall { .. })
        ));
    }

    #[test]
    fn lab_white_point() {
        let white = ColorFrame::filled(1, 1, [255, 255, 255]);
        let lab = srgb_to_lab(&white);
        let [l, a, b] = lab.pixel(0, 0);
        assert!((l - 100.0).abs() < 0.01);
        assert!(a.abs() < 0.01 && b.abs() < 0.01);

        let black = ColorFrame::filled(1, 1, [0, 0, 0]);
        let [l, a, b] = srgb_to_lab(&black).pixel(0, 0);
        assert!(l.abs() < 1e-4 && a.abs() < 1e-3 && b.abs() < 1e-3);
    }
}
