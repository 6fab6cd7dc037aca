//! Camera models, projection, triangulation, rectification, and plane
//! fitting shared by the stereo and tactile pipelines.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::img::{Mask, RgbImage};
use crate::maps::DepthMap;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("disparity {0} is not positive")]
    InvalidDisparity(f64),
    #[error("plane fit failed: {0}")]
    PlaneFit(String),
    #[error("rectifying transform is not invertible")]
    SingularTransform,
    #[error("calibration file error: {0}")]
    Calibration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Rigid camera pose: `p_cam = rotation * (p_world - center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    /// Camera center in world coordinates, millimeters.
    pub center: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self { rotation: Matrix3::identity(), center: Vector3::zeros() }
    }
}

impl Pose {
    pub fn at(center: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), center }
    }

    pub fn world_to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.center)
    }
}

/// Pinhole camera with a two-coefficient radial distortion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub focal_px: f64,
    pub principal_point: [f64; 2],
    pub k1: f64,
    pub k2: f64,
    #[serde(default)]
    pub pose: Pose,
}

impl PinholeCamera {
    pub fn ideal(focal_px: f64, principal_point: [f64; 2]) -> Self {
        Self { focal_px, principal_point, k1: 0.0, k2: 0.0, pose: Pose::default() }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.focal_px > 0.0) {
            return Err(GeometryError::Calibration(format!(
                "focal_px must be positive, got {}",
                self.focal_px
            )));
        }
        if !self.k1.is_finite() || !self.k2.is_finite() {
            return Err(GeometryError::Calibration("distortion coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Radial distortion applied to normalized image coordinates.
    #[inline]
    pub fn distort_normalized(&self, n: Vector2<f64>) -> Vector2<f64> {
        let r2 = n.norm_squared();
        n * (1.0 + self.k1 * r2 + self.k2 * r2 * r2)
    }

    /// Inverse of [`distort_normalized`](Self::distort_normalized) by
    /// fixed-point iteration (5 rounds, tolerance 1e-8 px at this focal).
    pub fn undistort_normalized(&self, nd: Vector2<f64>) -> Vector2<f64> {
        if self.k1 == 0.0 && self.k2 == 0.0 {
            return nd;
        }
        let tol = 1e-8 / self.focal_px;
        let mut n = nd;
        for _ in 0..5 {
            let r2 = n.norm_squared();
            let next = nd / (1.0 + self.k1 * r2 + self.k2 * r2 * r2);
            let step = (next - n).norm();
            n = next;
            if step < tol {
                break;
            }
        }
        n
    }

    /// Ideal (undistorted) pixel -> distorted pixel, both in this camera.
    pub fn distort_pixel(&self, ideal: Vector2<f64>) -> Vector2<f64> {
        let pp = Vector2::new(self.principal_point[0], self.principal_point[1]);
        let n = (ideal - pp) / self.focal_px;
        pp + self.distort_normalized(n) * self.focal_px
    }

    pub fn undistort_pixel(&self, distorted: Vector2<f64>) -> Vector2<f64> {
        let pp = Vector2::new(self.principal_point[0], self.principal_point[1]);
        let n = (distorted - pp) / self.focal_px;
        pp + self.undistort_normalized(n) * self.focal_px
    }
}

/// Projects a camera-frame point (mm) to a distorted pixel coordinate.
pub fn project(camera: &PinholeCamera, point: Vector3<f64>) -> Result<Vector2<f64>, GeometryError> {
    if point.z <= 0.0 {
        return Err(GeometryError::BehindCamera(point.z));
    }
    let n = Vector2::new(point.x / point.z, point.y / point.z);
    let nd = camera.distort_normalized(n);
    let pp = Vector2::new(camera.principal_point[0], camera.principal_point[1]);
    Ok(pp + nd * camera.focal_px)
}

/// Projects a world point through the camera pose.
pub fn project_world(camera: &PinholeCamera, point: Vector3<f64>) -> Result<Vector2<f64>, GeometryError> {
    project(camera, camera.pose.world_to_camera(&point))
}

/// Stereo triangulation: depth = focal * baseline / disparity.
///
/// Units of the result follow the baseline (mm for metric rigs, pixels when
/// replaying pixel-unit calibrations).
pub fn triangulate_depth(focal_px: f64, baseline: f64, disparity_px: f64) -> Result<f64, GeometryError> {
    if disparity_px <= 0.0 {
        return Err(GeometryError::InvalidDisparity(disparity_px));
    }
    Ok(focal_px * baseline / disparity_px)
}

/// Disparity a point at `depth` produces; inverse of [`triangulate_depth`].
pub fn triangulate_inverse(focal_px: f64, baseline: f64, depth: f64) -> f64 {
    focal_px * baseline / depth
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineUnits {
    Mm,
    Px,
}

/// Rectifying transform for one camera: undistortion followed by a
/// homography on ideal pixel coordinates.
///
/// The vertical tile pairs become conventional horizontal pairs via the
/// transpose homography, so every downstream stage assumes horizontal
/// epipolar lines. An already-rectified camera carries the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectifyMap {
    pub homography: Matrix3<f64>,
    pub out_width: usize,
    pub out_height: usize,
}

impl RectifyMap {
    /// Pixel transpose: `(x, y) -> (y, x)`.
    pub fn transpose(in_width: usize, in_height: usize) -> Self {
        let mut h = Matrix3::zeros();
        h[(0, 1)] = 1.0;
        h[(1, 0)] = 1.0;
        h[(2, 2)] = 1.0;
        Self { homography: h, out_width: in_height, out_height: in_width }
    }

    pub fn identity(width: usize, height: usize) -> Self {
        Self { homography: Matrix3::identity(), out_width: width, out_height: height }
    }
}

/// A calibrated vertical stereo pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StereoRig {
    pub left: PinholeCamera,
    pub right: PinholeCamera,
    pub baseline: f64,
    pub baseline_units: BaselineUnits,
    /// Image plane to sensor-surface offset; ground-truth depth for a target
    /// at distance s from the surface is `s + flange_focal_mm`.
    pub flange_focal_mm: f64,
    pub rectify_left: RectifyMap,
    pub rectify_right: RectifyMap,
}

impl StereoRig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.baseline > 0.0) {
            return Err(GeometryError::Calibration(format!(
                "baseline must be positive, got {}",
                self.baseline
            )));
        }
        self.left.validate()?;
        self.right.validate()?;
        for m in [&self.rectify_left, &self.rectify_right] {
            if m.homography.try_inverse().is_none() {
                return Err(GeometryError::SingularTransform);
            }
        }
        Ok(())
    }

    pub fn focal_px(&self) -> f64 {
        self.left.focal_px
    }
}

/// On-disk calibration schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub focal_px: f64,
    pub baseline: f64,
    pub baseline_units: BaselineUnits,
    pub principal_point: [f64; 2],
    pub k1: f64,
    pub k2: f64,
    pub flange_focal_mm: f64,
    /// Rectified tile edge in pixels (square tiles).
    pub tile_px: usize,
    /// Free-form notes (e.g. reprojection errors of an external calibration).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl StereoRig {
    pub fn from_calibration(c: &CalibrationFile) -> Result<StereoRig, GeometryError> {
        let cam = PinholeCamera {
            focal_px: c.focal_px,
            principal_point: c.principal_point,
            k1: c.k1,
            k2: c.k2,
            pose: Pose::default(),
        };
        let rig = StereoRig {
            left: cam.clone(),
            right: cam,
            baseline: c.baseline,
            baseline_units: c.baseline_units,
            flange_focal_mm: c.flange_focal_mm,
            rectify_left: RectifyMap::transpose(c.tile_px, c.tile_px),
            rectify_right: RectifyMap::transpose(c.tile_px, c.tile_px),
        };
        rig.validate()?;
        Ok(rig)
    }

    pub fn load_calibration(path: &Path) -> Result<StereoRig, GeometryError> {
        let text = std::fs::read_to_string(path)?;
        let c: CalibrationFile = serde_json::from_str(&text)?;
        Self::from_calibration(&c)
    }
}

/// Rectifies one tile: inverse-maps each output pixel through the homography
/// and the forward distortion model, sampling bilinearly. Output pixels whose
/// source falls outside the tile are marked invalid in the returned mask
/// (their value replicates the nearest edge).
pub fn rectify_tile(
    tile: &RgbImage,
    camera: &PinholeCamera,
    map: &RectifyMap,
) -> Result<(RgbImage, Mask), GeometryError> {
    let h_inv = map.homography.try_inverse().ok_or(GeometryError::SingularTransform)?;
    let mut out = RgbImage::new(map.out_width, map.out_height);
    let mut valid = Mask::filled(map.out_width, map.out_height, true);
    let w = tile.width as f64;
    let h = tile.height as f64;
    for oy in 0..map.out_height {
        for ox in 0..map.out_width {
            let v = h_inv * Vector3::new(ox as f64, oy as f64, 1.0);
            let ideal = Vector2::new(v.x / v.z, v.y / v.z);
            let src = camera.distort_pixel(ideal);
            if src.x < 0.0 || src.y < 0.0 || src.x > w - 1.0 || src.y > h - 1.0 {
                valid.set(ox, oy, false);
            }
            out.set(ox, oy, sample_bilinear(tile, src.x, src.y));
        }
    }
    Ok((out, valid))
}

fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> [u8; 3] {
    let xc = x.clamp(0.0, img.width as f64 - 1.0);
    let yc = y.clamp(0.0, img.height as f64 - 1.0);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let p00 = img.get(x0, y0);
    let p10 = img.get(x1, y0);
    let p01 = img.get(x0, y1);
    let p11 = img.get(x1, y1);
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bot = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = (top * (1.0 - fy) + bot * fy).round() as u8;
    }
    out
}

/// Plane in depth-map coordinates: `z = a*x + b*y + c` with z in mm and
/// (x, y) in pixels, plus the unit-normal form for consumers that want it.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub normal: Vector3<f64>,
    pub offset_mm: f64,
}

impl Plane {
    fn from_coeffs(a: f64, b: f64, c: f64) -> Self {
        let n = Vector3::new(a, b, -1.0);
        let len = n.norm();
        Self { a, b, c, normal: n / len, offset_mm: -c / len }
    }

    #[inline]
    pub fn depth_at(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

/// Least-squares plane over the valid pixels of `depth` inside `roi`,
/// minimizing squared depth residual. Coordinates are centroid-shifted
/// before solving the normal equations.
pub fn best_fit_plane(depth: &DepthMap, roi: &Mask) -> Result<Plane, GeometryError> {
    assert_eq!(depth.width, roi.width);
    assert_eq!(depth.height, roi.height);
    let mut n = 0.0f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sz = 0.0;
    for y in 0..depth.height {
        for x in 0..depth.width {
            if roi.get(x, y) && depth.is_valid(x, y) {
                n += 1.0;
                sx += x as f64;
                sy += y as f64;
                sz += depth.get(x, y) as f64;
            }
        }
    }
    if n < 3.0 {
        return Err(GeometryError::PlaneFit(format!("{} valid pixels, need at least 3", n as usize)));
    }
    let (mx, my, mz) = (sx / n, sy / n, sz / n);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    let mut sxz = 0.0;
    let mut syz = 0.0;
    for y in 0..depth.height {
        for x in 0..depth.width {
            if roi.get(x, y) && depth.is_valid(x, y) {
                let dx = x as f64 - mx;
                let dy = y as f64 - my;
                let dz = depth.get(x, y) as f64 - mz;
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
                sxz += dx * dz;
                syz += dy * dz;
            }
        }
    }
    let det = sxx * syy - sxy * sxy;
    let scale = (sxx + syy).max(1e-30);
    if det.abs() < 1e-12 * scale * scale {
        return Err(GeometryError::PlaneFit("degenerate (collinear) pixel support".into()));
    }
    let a = (sxz * syy - syz * sxy) / det;
    let b = (syz * sxx - sxz * sxy) / det;
    let c = mz - a * mx - b * my;
    Ok(Plane::from_coeffs(a, b, c))
}
