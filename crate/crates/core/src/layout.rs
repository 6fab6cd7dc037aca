//! The 3x5 vision-unit grid: tile rectangles on the shared frame and the
//! role each unit plays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::img::Rect;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout error: {0}")]
    Invalid(String),
    #[error("unit rectangle {0:?} does not fit a {1}x{2} frame")]
    RectOutOfFrame(Rect, usize, usize),
}

/// Which stereo pair a unit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StereoSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitRole {
    /// Member of the left or right vertical stereo pair.
    Stereo(StereoSide),
    /// Near-focus unit imaging the marker layer.
    Tactile,
    /// Present on the sensor but not used by any pipeline.
    Unused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisionUnit {
    pub row: usize,
    pub col: usize,
    pub rect: Rect,
    pub role: UnitRole,
}

/// 3x5 grid of vision units partitioning the frame.
///
/// Corners form the two vertical stereo pairs (top/bottom of columns 0 and
/// 4), the central 3x3 block is tactile, and the two mid-row edge units are
/// unused.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorLayout {
    pub rows: usize,
    pub cols: usize,
    pub tile_px: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub units: Vec<VisionUnit>,
    /// Field-of-view overlap between adjacent tactile units, in canvas
    /// pixels. Zero means tiles already abut with nothing to deduplicate.
    pub tactile_overlap_px: usize,
}

impl SensorLayout {
    /// Standard 3x5 layout with square tiles packed edge to edge.
    pub fn standard(tile_px: usize, tactile_overlap_px: usize) -> Self {
        let rows = 3;
        let cols = 5;
        let mut units = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let role = match (r, c) {
                    (0, 0) | (2, 0) => UnitRole::Stereo(StereoSide::Left),
                    (0, 4) | (2, 4) => UnitRole::Stereo(StereoSide::Right),
                    (_, 1..=3) => UnitRole::Tactile,
                    _ => UnitRole::Unused,
                };
                units.push(VisionUnit {
                    row: r,
                    col: c,
                    rect: Rect::new(c * tile_px, r * tile_px, (c + 1) * tile_px, (r + 1) * tile_px),
                    role,
                });
            }
        }
        Self {
            rows,
            cols,
            tile_px,
            frame_width: cols * tile_px,
            frame_height: rows * tile_px,
            units,
            tactile_overlap_px,
        }
    }

    pub fn unit(&self, row: usize, col: usize) -> &VisionUnit {
        &self.units[row * self.cols + col]
    }

    pub fn unit_index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// (top, bottom) units of one stereo pair.
    pub fn stereo_pair(&self, side: StereoSide) -> (&VisionUnit, &VisionUnit) {
        let mut members: Vec<&VisionUnit> =
            self.units.iter().filter(|u| u.role == UnitRole::Stereo(side)).collect();
        members.sort_by_key(|u| u.row);
        assert_eq!(members.len(), 2, "a stereo pair has exactly two units");
        (members[0], members[1])
    }

    /// Tactile units as a row-major 2D arrangement (3x3 in the standard grid).
    pub fn tactile_grid(&self) -> Vec<Vec<&VisionUnit>> {
        let mut rows: Vec<Vec<&VisionUnit>> = Vec::new();
        for r in 0..self.rows {
            let row: Vec<&VisionUnit> = (0..self.cols)
                .map(|c| self.unit(r, c))
                .filter(|u| u.role == UnitRole::Tactile)
                .collect();
            if !row.is_empty() {
                rows.push(row);
            }
        }
        rows
    }

    pub fn count_role(&self, pred: impl Fn(UnitRole) -> bool) -> usize {
        self.units.iter().filter(|u| pred(u.role)).count()
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        if self.units.len() != self.rows * self.cols {
            return Err(LayoutError::Invalid(format!(
                "expected {} units, got {}",
                self.rows * self.cols,
                self.units.len()
            )));
        }
        for u in &self.units {
            if !u.rect.fits_in(self.frame_width, self.frame_height) {
                return Err(LayoutError::RectOutOfFrame(u.rect, self.frame_width, self.frame_height));
            }
        }
        for (i, a) in self.units.iter().enumerate() {
            for b in self.units.iter().skip(i + 1) {
                if a.rect.intersects(&b.rect) {
                    return Err(LayoutError::Invalid(format!(
                        "unit ({},{}) and ({},{}) rectangles overlap",
                        a.row, a.col, b.row, b.col
                    )));
                }
            }
        }
        let stereo = self.count_role(|r| matches!(r, UnitRole::Stereo(_)));
        let tactile = self.count_role(|r| r == UnitRole::Tactile);
        if stereo != 4 || tactile != 9 {
            return Err(LayoutError::Invalid(format!(
                "expected 4 stereo and 9 tactile units, got {stereo} and {tactile}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_layout_roles_partition() {
        let l = SensorLayout::standard(200, 20);
        l.validate().unwrap();
        assert_eq!(l.units.len(), 15);
        assert_eq!(l.count_role(|r| matches!(r, UnitRole::Stereo(_))), 4);
        assert_eq!(l.count_role(|r| r == UnitRole::Tactile), 9);
        assert_eq!(l.count_role(|r| r == UnitRole::Unused), 2);
        assert_eq!(l.frame_width, 1000);
        assert_eq!(l.frame_height, 600);
    }

    #[test]
    fn stereo_pairs_are_vertical_corners() {
        let l = SensorLayout::standard(100, 10);
        let (top, bottom) = l.stereo_pair(StereoSide::Left);
        assert_eq!((top.row, top.col), (0, 0));
        assert_eq!((bottom.row, bottom.col), (2, 0));
        let (top, bottom) = l.stereo_pair(StereoSide::Right);
        assert_eq!((top.row, top.col), (0, 4));
        assert_eq!((bottom.row, bottom.col), (2, 4));
    }

    #[test]
    fn tactile_grid_is_three_by_three() {
        let l = SensorLayout::standard(100, 10);
        let g = l.tactile_grid();
        assert_eq!(g.len(), 3);
        for row in &g {
            assert_eq!(row.len(), 3);
        }
        assert_eq!((g[1][1].row, g[1][1].col), (1, 2));
    }
}
