use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic discretization of the cube [-L, L)^n approximating R^n.
///
/// Samples sit at x = -L + m*h per axis (m = 0..N-1) with spacing h = 2L/N,
/// so the origin is a lattice point and every sample is the center of a cell
/// of volume h^n. The frequency lattice is xi = (pi/L) * k with integer k in
/// [-N/2, N/2) per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    size: usize,
    half_width: f64,
    spacing: f64,
    k_range: (i32, i32),
    j_range: (i32, i32),
}

impl Grid {
    /// Build a grid, computing the resolvable annulus (`k`) and frequency
    /// block (`j`) index ranges.
    ///
    /// An annulus A_k = {2^(k-1) <= |x| < 2^k} is resolvable when its inner
    /// radius spans at least four cells (2^(k-1) >= 4h) and it fits in the
    /// half cube (2^k <= L/2); closer to the origin the lattice quantization
    /// of level sets exceeds a few percent. A dyadic block j is resolvable
    /// when its support [3/4 * 2^j, 8/3 * 2^j] lies inside the nonzero
    /// frequency lattice: 3/4 * 2^j >= pi/L and 8/3 * 2^j <= pi/h.
    pub fn new(n: usize, size: usize, half_width: f64) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::GridConfig(format!("dimension n = {n} not in {{2, 3}}")));
        }
        if !size.is_power_of_two() {
            return Err(Error::GridConfig(format!("N = {size} is not a power of two")));
        }
        if size < 32 {
            return Err(Error::GridConfig(format!("N = {size} < 32")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::GridConfig(format!("L = {half_width} must be positive")));
        }
        let spacing = 2.0 * half_width / size as f64;

        // Smallest k with 2^(k-1) >= 4h and largest with 2^k <= L/2.
        let k_lo = (8.0 * spacing).log2().ceil() as i32;
        let k_hi = (half_width / 2.0).log2().floor() as i32;
        if k_lo > k_hi {
            return Err(Error::GridConfig(format!(
                "empty annulus range: 2^(k-1) >= 4h = {} and 2^k <= L/2 = {} admit no k",
                4.0 * spacing,
                half_width / 2.0
            )));
        }

        let nyquist = std::f64::consts::PI / spacing;
        let xi_min = std::f64::consts::PI / half_width;
        // Smallest j with (3/4) 2^j >= pi/L and largest with (8/3) 2^j <= pi/h.
        let j_lo = (xi_min / 0.75).log2().ceil() as i32;
        let j_hi = (nyquist * 3.0 / 8.0).log2().floor() as i32;
        if j_lo > j_hi {
            return Err(Error::GridConfig(format!(
                "empty block range: (3/4) 2^j >= pi/L = {xi_min} and (8/3) 2^j <= pi/h = {nyquist} admit no j"
            )));
        }

        Ok(Grid {
            n,
            size,
            half_width,
            spacing,
            k_range: (k_lo, k_hi),
            j_range: (j_lo, j_hi),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Samples per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Cell spacing h = 2L/N.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.n as i32)
    }

    /// Total number of cells N^n.
    pub fn cell_count(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    /// Resolvable annulus indices (inclusive).
    pub fn annulus_range(&self) -> (i32, i32) {
        self.k_range
    }

    /// Resolvable dyadic block indices (inclusive).
    pub fn block_range(&self) -> (i32, i32) {
        self.j_range
    }

    /// Nyquist frequency pi/h.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    /// Smallest nonzero lattice frequency pi/L.
    pub fn freq_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Per-axis indices of a flat cell index (x fastest).
    #[inline]
    pub fn decompose(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in 0..self.n {
            out[a] = idx % self.size;
            idx /= self.size;
        }
        out
    }

    /// Flat index from per-axis indices.
    #[inline]
    pub fn flatten(&self, m: [usize; 3]) -> usize {
        let mut idx = 0usize;
        for a in (0..self.n).rev() {
            idx = idx * self.size + m[a];
        }
        idx
    }

    /// Sample position of a flat index; unused trailing coordinates are 0.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let m = self.decompose(idx);
        let mut x = [0.0f64; 3];
        for a in 0..self.n {
            x[a] = -self.half_width + m[a] as f64 * self.spacing;
        }
        x
    }

    /// Signed integer frequency multi-index of a flat index.
    #[inline]
    pub fn freq_index(&self, idx: usize) -> [i64; 3] {
        let m = self.decompose(idx);
        let mut k = [0i64; 3];
        let half = (self.size / 2) as i64;
        for a in 0..self.n {
            let b = m[a] as i64;
            k[a] = if b < half { b } else { b - self.size as i64 };
        }
        k
    }

    /// Frequency vector xi = (pi/L) k of a flat index.
    #[inline]
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let k = self.freq_index(idx);
        let d = self.freq_spacing();
        let mut xi = [0.0f64; 3];
        for a in 0..self.n {
            xi[a] = d * k[a] as f64;
        }
        xi
    }

    /// Whether any axis of a flat frequency index sits on the Nyquist bin
    /// k = -N/2, which the conjugate-symmetric lattice represents with an
    /// ambiguous sign.
    #[inline]
    pub fn has_nyquist(&self, idx: usize) -> bool {
        let m = self.decompose(idx);
        (0..self.n).any(|a| m[a] == self.size / 2)
    }

    /// |x| of the sample at a flat index.
    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Annulus index k with 2^(k-1) <= |x| < 2^k, or None for the origin.
    #[inline]
    pub fn annulus_of(&self, idx: usize) -> Option<i32> {
        let r = self.radius(idx);
        if r == 0.0 {
            None
        } else {
            Some(r.log2().floor() as i32 + 1)
        }
    }

    /// Cells whose centers lie in A_k.
    pub fn annulus_cells(&self, k: i32) -> Vec<usize> {
        let lo = (2.0f64).powi(k - 1);
        let hi = (2.0f64).powi(k);
        (0..self.cell_count())
            .filter(|&i| {
                let r = self.radius(i);
                r >= lo && r < hi
            })
            .collect()
    }

    /// Cells of the union of resolvable annuli: the region the grid
    /// invariants certify, where norm claims are asserted.
    pub fn resolvable_cells(&self) -> Vec<usize> {
        let inner = (2.0f64).powi(self.k_range.0 - 1);
        let outer = (2.0f64).powi(self.k_range.1);
        (0..self.cell_count())
            .filter(|&i| {
                let r = self.radius(i);
                r >= inner && r < outer
            })
            .collect()
    }

    /// Cells whose centers lie in the ball B(center, radius).
    pub fn ball_cells(&self, center: [f64; 3], radius: f64) -> Vec<usize> {
        (0..self.cell_count())
            .filter(|&i| {
                let x = self.position(i);
                let mut d2 = 0.0;
                for a in 0..self.n {
                    let dx = x[a] - center[a];
                    d2 += dx * dx;
                }
                d2.sqrt() < radius
            })
            .collect()
    }
}
