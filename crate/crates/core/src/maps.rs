//! Per-pixel disparity and depth maps with explicit validity.
//!
//! Invalidity is carried as a provenance flag rather than a sentinel float;
//! NaN is only an export-time representation for `.f32` rasters.

use crate::img::Raster;

/// Why a pixel is (in)valid. Every invalid pixel carries exactly one flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PixelState {
    Valid = 0,
    /// Disparity fell below the configured minimum ("set to NaN").
    BelowMin = 1,
    /// Left-right consistency check failed.
    LrFail = 2,
    /// Winner was not unique enough against the second-best candidate.
    UniquenessFail = 3,
    /// Pixel lies under the marker mask.
    MarkerMasked = 4,
}

/// Per-pixel disparity in pixels (fractional) plus validity.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    pub width: usize,
    pub height: usize,
    values: Vec<f32>,
    states: Vec<PixelState>,
}

/// Per-pixel depth in millimeters plus validity.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    values: Vec<f32>,
    states: Vec<PixelState>,
}

macro_rules! flagged_map_impl {
    ($ty:ident) => {
        impl $ty {
            /// Fresh map; every pixel starts invalid (no measurement yet).
            pub fn new(width: usize, height: usize) -> Self {
                Self {
                    width,
                    height,
                    values: vec![0.0; width * height],
                    states: vec![PixelState::BelowMin; width * height],
                }
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> f32 {
                self.values[y * self.width + x]
            }

            #[inline]
            pub fn state(&self, x: usize, y: usize) -> PixelState {
                self.states[y * self.width + x]
            }

            #[inline]
            pub fn is_valid(&self, x: usize, y: usize) -> bool {
                self.states[y * self.width + x] == PixelState::Valid
            }

            #[inline]
            pub fn set(&mut self, x: usize, y: usize, value: f32, state: PixelState) {
                let i = y * self.width + x;
                self.values[i] = value;
                self.states[i] = state;
            }

            #[inline]
            pub fn invalidate(&mut self, x: usize, y: usize, state: PixelState) {
                debug_assert!(state != PixelState::Valid);
                self.states[y * self.width + x] = state;
            }

            pub fn values(&self) -> &[f32] {
                &self.values
            }

            pub fn states(&self) -> &[PixelState] {
                &self.states
            }

            pub fn count_valid(&self) -> usize {
                self.states.iter().filter(|&&s| s == PixelState::Valid).count()
            }

            /// Export view: invalid pixels become NaN.
            pub fn to_raster(&self) -> Raster {
                let mut r = Raster::new(self.width, self.height);
                for (i, (v, s)) in self.values.iter().zip(self.states.iter()).enumerate() {
                    r.data[i] = if *s == PixelState::Valid { *v } else { f32::NAN };
                }
                r
            }
        }
    };
}

flagged_map_impl!(DisparityMap);
flagged_map_impl!(DepthMap);

impl DisparityMap {
    /// Import from a NaN-sentinel raster (NaN -> BelowMin).
    pub fn from_raster(r: &Raster) -> Self {
        let mut m = DisparityMap::new(r.width, r.height);
        for (i, &v) in r.data.iter().enumerate() {
            if v.is_nan() {
                m.values[i] = 0.0;
                m.states[i] = PixelState::BelowMin;
            } else {
                m.values[i] = v;
                m.states[i] = PixelState::Valid;
            }
        }
        m
    }
}

impl DepthMap {
    pub fn from_raster(r: &Raster) -> Self {
        let mut m = DepthMap::new(r.width, r.height);
        for (i, &v) in r.data.iter().enumerate() {
            if v.is_nan() {
                m.values[i] = 0.0;
                m.states[i] = PixelState::BelowMin;
            } else {
                m.values[i] = v;
                m.states[i] = PixelState::Valid;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn export_writes_nan_for_invalid() {
        let mut d = DisparityMap::new(3, 1);
        d.set(0, 0, 7.5, PixelState::Valid);
        d.set(1, 0, 3.0, PixelState::LrFail);
        let r = d.to_raster();
        assert_eq!(r.get(0, 0), 7.5);
        assert!(r.get(1, 0).is_nan());
        assert!(r.get(2, 0).is_nan());
        assert_eq!(d.count_valid(), 1);
    }

    #[test]
    fn raster_import_roundtrip() {
        let mut d = DepthMap::new(2, 2);
        d.set(0, 0, 35.0, PixelState::Valid);
        d.set(1, 1, 12.0, PixelState::Valid);
        let back = DepthMap::from_raster(&d.to_raster());
        assert_eq!(back.get(0, 0), 35.0);
        assert!(!back.is_valid(0, 1));
        assert_eq!(back.count_valid(), 2);
    }
}
