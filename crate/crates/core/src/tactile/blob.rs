//! Marker blob detection: HSV thresholding, connected components, shape
//! filters, and intensity-weighted subpixel centroids.

use serde::{Deserialize, Serialize};

use crate::img::{Mask, RgbImage};

/// Inclusive HSV acceptance window. H in degrees [0, 360], S and V in [0, 1].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HsvBounds {
    pub h_min: f64,
    pub h_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for HsvBounds {
    /// Dark markers on a light background: any hue, any saturation, low value.
    fn default() -> Self {
        Self { h_min: 0.0, h_max: 360.0, s_min: 0.0, s_max: 1.0, v_min: 0.0, v_max: 0.35 }
    }
}

impl HsvBounds {
    pub fn well_formed(&self) -> bool {
        self.h_min < self.h_max && self.s_min < self.s_max && self.v_min < self.v_max
    }

    #[inline]
    fn contains(&self, h: f64, s: f64, v: f64) -> bool {
        h >= self.h_min
            && h <= self.h_max
            && s >= self.s_min
            && s <= self.s_max
            && v >= self.v_min
            && v <= self.v_max
    }
}

/// Standard hexcone conversion. Returns (H degrees [0,360), S [0,1], V [0,1]).
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, v)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectParams {
    pub hsv: HsvBounds,
    pub min_area_px: usize,
    pub max_area_px: usize,
    pub min_circularity: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self { hsv: HsvBounds::default(), min_area_px: 10, max_area_px: 400, min_circularity: 0.6 }
    }
}

/// One detected marker: subpixel centroid plus pixel area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub area_px: usize,
}

/// Detected markers in image scan order.
#[derive(Debug, Clone, Default)]
pub struct MarkerSet {
    pub markers: Vec<Marker>,
}

impl MarkerSet {
    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }
}

/// HSV threshold mask for `params.hsv`.
pub fn hsv_mask(img: &RgbImage, bounds: &HsvBounds) -> Mask {
    let mut mask = Mask::new(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let (h, s, v) = rgb_to_hsv(img.get(x, y));
            mask.set(x, y, bounds.contains(h, s, v));
        }
    }
    mask
}

/// Detects marker blobs: HSV threshold, 8-connected components, area and
/// circularity filters, and an intensity-weighted centroid on the inverted
/// value channel (dark cores weigh most, anti-aliased rims carry the
/// subpixel signal).
pub fn detect_markers(img: &RgbImage, params: &DetectParams) -> MarkerSet {
    assert!(params.hsv.well_formed(), "HSV bounds must satisfy min < max per channel");
    let mask = hsv_mask(img, &params.hsv);
    let w = img.width;
    let h = img.height;
    let mut labels = vec![0u32; w * h];
    let mut next_label = 0u32;
    let mut stack: Vec<usize> = Vec::new();
    let mut component: Vec<usize> = Vec::new();
    let mut markers = Vec::new();

    for start in 0..w * h {
        if !mask.data[start] || labels[start] != 0 {
            continue;
        }
        next_label += 1;
        labels[start] = next_label;
        stack.clear();
        component.clear();
        stack.push(start);
        while let Some(idx) = stack.pop() {
            component.push(idx);
            let x = (idx % w) as i64;
            let y = (idx / w) as i64;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if mask.data[nidx] && labels[nidx] == 0 {
                        labels[nidx] = next_label;
                        stack.push(nidx);
                    }
                }
            }
        }

        let area = component.len();
        if area < params.min_area_px || area > params.max_area_px {
            continue;
        }
        // city-block edge count, corrected by pi/4 toward the Euclidean length
        let mut edges = 0usize;
        for &idx in &component {
            let x = (idx % w) as i64;
            let y = (idx / w) as i64;
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let nx = x + dx;
                let ny = y + dy;
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    edges += 1;
                } else if !mask.data[ny as usize * w + nx as usize] {
                    edges += 1;
                }
            }
        }
        let perimeter = edges as f64 * std::f64::consts::FRAC_PI_4;
        let circularity = 4.0 * std::f64::consts::PI * area as f64 / (perimeter * perimeter);
        if circularity < params.min_circularity {
            continue;
        }

        // component is in DFS order; sort for an order-independent centroid sum
        component.sort_unstable();
        let mut wsum = 0.0;
        let mut xsum = 0.0;
        let mut ysum = 0.0;
        for &idx in &component {
            let x = idx % w;
            let y = idx / w;
            let (_, _, v) = rgb_to_hsv(img.get(x, y));
            let weight = 1.0 - v;
            wsum += weight;
            xsum += weight * x as f64;
            ysum += weight * y as f64;
        }
        let (cx, cy) = if wsum > 0.0 {
            (xsum / wsum, ysum / wsum)
        } else {
            let n = area as f64;
            (
                component.iter().map(|i| (i % w) as f64).sum::<f64>() / n,
                component.iter().map(|i| (i / w) as f64).sum::<f64>() / n,
            )
        };
        markers.push(Marker { x: cx, y: cy, area_px: area });
    }

    MarkerSet { markers }
}

/// Test support: rasterize an anti-aliased dark disk on a light background.
#[cfg(test)]
pub(crate) mod testutil {
    use crate::img::RgbImage;

    pub fn draw_dot(img: &mut RgbImage, cx: f64, cy: f64, radius: f64, dark: u8) {
        let x0 = (cx - radius - 2.0).floor().max(0.0) as usize;
        let y0 = (cy - radius - 2.0).floor().max(0.0) as usize;
        let x1 = ((cx + radius + 2.0).ceil() as usize).min(img.width - 1);
        let y1 = ((cy + radius + 2.0).ceil() as usize).min(img.height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let alpha = (radius + 0.5 - d).clamp(0.0, 1.0);
                if alpha > 0.0 {
                    let bg = img.get(x, y)[0] as f64;
                    let v = (bg + (dark as f64 - bg) * alpha).round() as u8;
                    img.set(x, y, [v, v, v]);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::draw_dot;
    use super::*;

    #[test]
    fn single_dot_centroid_subpixel() {
        let mut img = RgbImage::filled(100, 100, [230, 230, 230]);
        draw_dot(&mut img, 50.0, 50.0, 4.0, 30);
        let set = detect_markers(&img, &DetectParams::default());
        assert_eq!(set.len(), 1);
        let m = set.markers[0];
        assert!((m.x - 50.0).abs() < 0.2, "x = {}", m.x);
        assert!((m.y - 50.0).abs() < 0.2, "y = {}", m.y);
    }

    #[test]
    fn off_center_dot_centroid_subpixel() {
        let mut img = RgbImage::filled(100, 100, [230, 230, 230]);
        draw_dot(&mut img, 41.3, 58.6, 4.0, 30);
        let set = detect_markers(&img, &DetectParams::default());
        assert_eq!(set.len(), 1);
        assert!((set.markers[0].x - 41.3).abs() < 0.2);
        assert!((set.markers[0].y - 58.6).abs() < 0.2);
    }

    #[test]
    fn pure_white_image_yields_empty_set() {
        let img = RgbImage::filled(64, 64, [255, 255, 255]);
        assert!(detect_markers(&img, &DetectParams::default()).is_empty());
    }

    #[test]
    fn dot_grid_count() {
        let mut img = RgbImage::filled(300, 240, [230, 230, 230]);
        for r in 0..6 {
            for c in 0..8 {
                draw_dot(&mut img, 30.0 + c as f64 * 34.0, 25.0 + r as f64 * 36.0, 4.0, 30);
            }
        }
        let set = detect_markers(&img, &DetectParams::default());
        assert_eq!(set.len(), 48);
    }

    #[test]
    fn thin_line_rejected_by_circularity() {
        let mut img = RgbImage::filled(64, 64, [230, 230, 230]);
        for x in 10..40 {
            img.set(x, 20, [30, 30, 30]);
        }
        assert!(detect_markers(&img, &DetectParams::default()).is_empty());
    }

    #[test]
    fn centroids_are_translation_equivariant() {
        let mut a = RgbImage::filled(80, 80, [230, 230, 230]);
        draw_dot(&mut a, 30.4, 28.7, 4.0, 30);
        let mut b = RgbImage::filled(80, 80, [230, 230, 230]);
        draw_dot(&mut b, 30.4 + 13.0, 28.7 + 9.0, 4.0, 30);
        let ma = detect_markers(&a, &DetectParams::default());
        let mb = detect_markers(&b, &DetectParams::default());
        assert_eq!(ma.len(), 1);
        assert_eq!(mb.len(), 1);
        assert_eq!(mb.markers[0].x, ma.markers[0].x + 13.0);
        assert_eq!(mb.markers[0].y, ma.markers[0].y + 9.0);
    }

    #[test]
    fn hsv_matches_known_values() {
        let (h, s, v) = rgb_to_hsv([255, 0, 0]);
        assert_eq!((h, s, v), (0.0, 1.0, 1.0));
        let (h, s, v) = rgb_to_hsv([0, 255, 0]);
        assert_eq!((h, s, v), (120.0, 1.0, 1.0));
        let (h, s, v) = rgb_to_hsv([0, 0, 128]);
        assert_eq!(h, 240.0);
        assert_eq!(s, 1.0);
        assert!((v - 128.0 / 255.0).abs() < 1e-12);
        let (_, s, v) = rgb_to_hsv([30, 30, 30]);
        assert_eq!(s, 0.0);
        assert!(v < 0.35);
    }
}
