//! Seeded value noise for the textured target plane.
//!
//! Lattice values come from an integer hash, interpolated with a quintic
//! fade, summed over octaves. Everything is plain f64 arithmetic on hashed
//! integers, so the field is bit-reproducible for a given seed.

/// splitmix64 finalizer; the standard 64-bit avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a lane index.
pub fn derive_seed(base: u64, lane: u64) -> u64 {
    mix64(base ^ mix64(lane.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

#[derive(Debug, Clone, Copy)]
pub struct ValueNoise {
    seed: u64,
}

impl ValueNoise {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Lattice value in [-1, 1] at integer cell (xi, yi) for one octave.
    #[inline]
    fn lattice(&self, xi: i64, yi: i64, octave: u32) -> f64 {
        let h = mix64(
            self.seed
                ^ (xi as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
                ^ (yi as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
                ^ (octave as u64).wrapping_mul(0x1656_67b1_9e37_79f9),
        );
        (h >> 11) as f64 / ((1u64 << 53) as f64) * 2.0 - 1.0
    }

    /// Quintic fade, C2-continuous at lattice points.
    #[inline]
    fn fade(t: f64) -> f64 {
        t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    }

    fn octave_at(&self, x: f64, y: f64, octave: u32) -> f64 {
        let xf = x.floor();
        let yf = y.floor();
        let xi = xf as i64;
        let yi = yf as i64;
        let tx = Self::fade(x - xf);
        let ty = Self::fade(y - yf);
        let v00 = self.lattice(xi, yi, octave);
        let v10 = self.lattice(xi + 1, yi, octave);
        let v01 = self.lattice(xi, yi + 1, octave);
        let v11 = self.lattice(xi + 1, yi + 1, octave);
        let top = v00 + (v10 - v00) * tx;
        let bot = v01 + (v11 - v01) * tx;
        top + (bot - top) * ty
    }

    /// Multi-octave sample at a world position (mm). Octaves whose wavelength
    /// falls below `min_wavelength_mm` are skipped to avoid aliasing when the
    /// caller knows its sampling pitch. Output stays within [-1, 1].
    pub fn sample(
        &self,
        x_mm: f64,
        y_mm: f64,
        octaves: u32,
        base_wavelength_mm: f64,
        min_wavelength_mm: f64,
    ) -> f64 {
        let mut total = 0.0;
        let mut norm = 0.0;
        let mut wavelength = base_wavelength_mm;
        let mut amplitude = 1.0;
        for o in 0..octaves {
            norm += amplitude;
            if wavelength >= min_wavelength_mm {
                total += amplitude * self.octave_at(x_mm / wavelength, y_mm / wavelength, o);
            }
            wavelength *= 0.5;
            amplitude *= 0.5;
        }
        total / norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let n1 = ValueNoise::new(42);
        let n2 = ValueNoise::new(42);
        let n3 = ValueNoise::new(43);
        let a = n1.sample(1.25, -3.5, 4, 6.0, 0.0);
        assert_eq!(a, n2.sample(1.25, -3.5, 4, 6.0, 0.0));
        assert_ne!(a, n3.sample(1.25, -3.5, 4, 6.0, 0.0));
    }

    #[test]
    fn bounded_output() {
        let n = ValueNoise::new(9);
        for i in 0..500 {
            let v = n.sample(i as f64 * 0.37, i as f64 * -0.91, 4, 6.0, 0.0);
            assert!((-1.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn continuous_across_lattice() {
        let n = ValueNoise::new(5);
        let eps = 1e-7;
        let a = n.sample(2.0 - eps, 3.0, 1, 1.0, 0.0);
        let b = n.sample(2.0 + eps, 3.0, 1, 1.0, 0.0);
        assert!((a - b).abs() < 1e-5);
    }
}
