use crate::error::{Error, Result};
use crate::fft::transform_nd;
use crate::grid::Grid;
use num_complex::Complex64;

/// Whether samples are physical-space values or Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

impl Representation {
    fn name(self) -> &'static str {
        match self {
            Representation::Physical => "physical",
            Representation::Spectral => "spectral",
        }
    }
}

/// Scalar or vector sample array on a [`Grid`].
///
/// Storage is component-major; within a component the layout is row-major
/// with x fastest. Physical fields carry exactly zero imaginary parts, and
/// spectral fields carry exact conjugate symmetry (they are transforms of
/// real data), which is enforced on construction.
///
/// The spectral coefficients follow the Riemann-sum convention
/// `F(xi) = h^n sum_m f(x_m) exp(-i xi . x_m)`, so they approximate the
/// continuum Fourier transform and the inverse is
/// `f(x) = (2L)^-n sum_xi F(xi) exp(i xi . x)`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    components: usize,
    repr: Representation,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Grid, components: usize) -> Field {
        Field {
            grid,
            components,
            repr: Representation::Physical,
            data: vec![Complex64::default(); components * grid.cell_count()],
        }
    }

    /// Scalar physical field sampled from a function of position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Field {
        let mut out = Field::zeros(grid, 1);
        for idx in 0..grid.cell_count() {
            out.data[idx] = Complex64::new(f(grid.position(idx)), 0.0);
        }
        out
    }

    /// Vector physical field sampled from a function of position.
    pub fn vector_from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Field {
        let n = grid.dim();
        let mut out = Field::zeros(grid, n);
        let cells = grid.cell_count();
        for idx in 0..cells {
            let v = f(grid.position(idx));
            for c in 0..n {
                out.data[c * cells + idx] = Complex64::new(v[c], 0.0);
            }
        }
        out
    }

    /// Assemble a vector field from scalar components on the same grid.
    pub fn from_components(parts: &[Field]) -> Result<Field> {
        let first = parts.first().ok_or(Error::ComponentCount {
            expected: 1,
            found: 0,
        })?;
        let mut data = Vec::with_capacity(parts.len() * first.grid.cell_count());
        for p in parts {
            if p.grid != first.grid {
                return Err(Error::GridMismatch);
            }
            if p.repr != first.repr || p.components != 1 {
                return Err(Error::Representation {
                    expected: first.repr.name(),
                    found: p.repr.name(),
                });
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Field {
            grid: first.grid,
            components: parts.len(),
            repr: first.repr,
            data,
        })
    }

    pub(crate) fn from_raw(
        grid: Grid,
        components: usize,
        repr: Representation,
        data: Vec<Complex64>,
    ) -> Field {
        debug_assert_eq!(data.len(), components * grid.cell_count());
        Field {
            grid,
            components,
            repr,
            data,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let cells = self.grid.cell_count();
        &self.data[c * cells..(c + 1) * cells]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let cells = self.grid.cell_count();
        &mut self.data[c * cells..(c + 1) * cells]
    }

    /// Extract one component as a scalar field.
    pub fn extract(&self, c: usize) -> Field {
        Field {
            grid: self.grid,
            components: 1,
            repr: self.repr,
            data: self.component(c).to_vec(),
        }
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Real sample values of a physical component.
    pub fn values(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.component(c).iter().map(|z| z.re)
    }

    pub fn assert_physical(&self) -> Result<()> {
        if self.repr != Representation::Physical {
            return Err(Error::Representation {
                expected: "physical",
                found: self.repr.name(),
            });
        }
        Ok(())
    }

    pub fn assert_spectral(&self) -> Result<()> {
        if self.repr != Representation::Spectral {
            return Err(Error::Representation {
                expected: "spectral",
                found: self.repr.name(),
            });
        }
        Ok(())
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Parity (-1)^(sum of bin indices) used to re-center the DFT on [-L, L).
    #[inline]
    fn bin_sign(grid: &Grid, idx: usize) -> f64 {
        let m = grid.decompose(idx);
        let s = (m[0] + m[1] + m[2]) & 1;
        if s == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Conjugate partner -k (mod N) of a flat frequency index.
    #[inline]
    pub fn conj_index(grid: &Grid, idx: usize) -> usize {
        let m = grid.decompose(idx);
        let nn = grid.size();
        let mut c = [0usize; 3];
        for a in 0..grid.dim() {
            c[a] = (nn - m[a]) % nn;
        }
        grid.flatten(c)
    }

    /// Enforce exact conjugate symmetry (spectra of real data).
    fn symmetrize(&mut self) {
        let cells = self.grid.cell_count();
        for c in 0..self.components {
            let comp = &mut self.data[c * cells..(c + 1) * cells];
            for idx in 0..cells {
                let cj = Field::conj_index(&self.grid, idx);
                if idx < cj {
                    let avg = 0.5 * (comp[idx] + comp[cj].conj());
                    comp[idx] = avg;
                    comp[cj] = avg.conj();
                } else if idx == cj {
                    comp[idx] = Complex64::new(comp[idx].re, 0.0);
                }
            }
        }
    }

    /// Forward transform. Round trips with [`Field::to_physical`] to within
    /// 1e-12 relative max norm.
    pub fn to_spectral(&self) -> Result<Field> {
        self.assert_physical()?;
        let mut out = self.clone();
        let cells = self.grid.cell_count();
        let hn = self.grid.cell_volume();
        for c in 0..self.components {
            let comp = &mut out.data[c * cells..(c + 1) * cells];
            transform_nd(comp, self.grid.dim(), self.grid.size(), false);
            for idx in 0..cells {
                comp[idx] *= hn * Field::bin_sign(&self.grid, idx);
            }
        }
        out.repr = Representation::Spectral;
        out.symmetrize();
        Ok(out)
    }

    /// Inverse transform. Imaginary parts are exact zeros on output.
    pub fn to_physical(&self) -> Result<Field> {
        self.assert_spectral()?;
        let mut out = self.clone();
        let cells = self.grid.cell_count();
        let scale = 1.0 / (2.0 * self.grid.half_width()).powi(self.grid.dim() as i32);
        for c in 0..self.components {
            let comp = &mut out.data[c * cells..(c + 1) * cells];
            for idx in 0..cells {
                comp[idx] *= scale * Field::bin_sign(&self.grid, idx);
            }
            transform_nd(comp, self.grid.dim(), self.grid.size(), true);
            for z in comp.iter_mut() {
                *z = Complex64::new(z.re, 0.0);
            }
        }
        out.repr = Representation::Physical;
        Ok(out)
    }

    /// The field in spectral representation, transforming if needed.
    pub fn spectral(&self) -> Result<Field> {
        match self.repr {
            Representation::Spectral => Ok(self.clone()),
            Representation::Physical => self.to_spectral(),
        }
    }

    /// The field in physical representation, transforming if needed.
    pub fn physical(&self) -> Result<Field> {
        match self.repr {
            Representation::Physical => Ok(self.clone()),
            Representation::Spectral => self.to_physical(),
        }
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.components != other.components {
            return Err(Error::ComponentCount {
                expected: self.components,
                found: other.components,
            });
        }
        if self.repr != other.repr {
            return Err(Error::Representation {
                expected: self.repr.name(),
                found: other.repr.name(),
            });
        }
        Ok(())
    }

    pub fn scale(&self, a: f64) -> Field {
        let mut out = self.clone();
        for z in out.data.iter_mut() {
            *z *= a;
        }
        out
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z += w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z -= w;
        }
        Ok(out)
    }

    /// Pointwise product of two physical scalar fields.
    pub fn mul_pointwise(&self, other: &Field) -> Result<Field> {
        self.assert_physical()?;
        other.assert_physical()?;
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for (z, w) in out.data.iter_mut().zip(&other.data) {
            *z = Complex64::new(z.re * w.re, 0.0);
        }
        Ok(out)
    }

    /// Max modulus over all samples and components.
    pub fn linf(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Riemann L2 norm: (h^n sum |f|^2)^(1/2), summed over components.
    pub fn l2(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Pointwise Euclidean magnitude of a (possibly vector) physical field.
    pub fn magnitude(&self) -> Result<Field> {
        self.assert_physical()?;
        let cells = self.grid.cell_count();
        let mut out = Field::zeros(self.grid, 1);
        for idx in 0..cells {
            let mut s = 0.0;
            for c in 0..self.components {
                let v = self.data[c * cells + idx].re;
                s += v * v;
            }
            out.data[idx] = Complex64::new(s.sqrt(), 0.0);
        }
        Ok(out)
    }

    /// Riemann pairing h^n sum f . g of physical fields (componentwise dot).
    pub fn pair(&self, other: &Field) -> Result<f64> {
        self.assert_physical()?;
        other.assert_physical()?;
        self.check_compatible(other)?;
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Mean value over the grid (per component zero Fourier mode / (2L)^n).
    pub fn mean(&self, c: usize) -> Result<f64> {
        self.assert_physical()?;
        let s: f64 = self.component(c).iter().map(|z| z.re).sum();
        Ok(s / self.grid.cell_count() as f64)
    }

    /// Zero the spectral modes with any |k_axis| > N/3 (2/3-rule dealiasing).
    pub fn dealias(&self) -> Result<Field> {
        let mut out = self.spectral()?;
        let cut = (self.grid.size() / 3) as i64;
        let cells = self.grid.cell_count();
        for c in 0..self.components {
            let comp = &mut out.data[c * cells..(c + 1) * cells];
            for idx in 0..cells {
                let k = self.grid.freq_index(idx);
                if k.iter().take(self.grid.dim()).any(|&ka| ka.abs() > cut) {
                    comp[idx] = Complex64::default();
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2, 64, 8.0).unwrap()
    }

    #[test]
    fn round_trip_is_tight() {
        let f = Field::from_fn(grid(), |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp());
        let back = f.to_spectral().unwrap().to_physical().unwrap();
        let err = f.sub(&back).unwrap().linf();
        assert!(err < 1e-12 * f.linf(), "round trip error {err}");
    }

    #[test]
    fn pure_mode_spectrum_support() {
        let g = grid();
        let d = g.freq_spacing();
        let xi0 = [3.0 * d, 2.0 * d, 0.0];
        let f = Field::from_fn(g, |x| (xi0[0] * x[0] + xi0[1] * x[1]).cos());
        let hat = f.to_spectral().unwrap();
        let mut supported = 0;
        for idx in 0..g.cell_count() {
            let k = g.freq_index(idx);
            let on_mode = (k[0] == 3 && k[1] == 2) || (k[0] == -3 && k[1] == -2);
            let v = hat.component(0)[idx].norm();
            if on_mode {
                supported += 1;
                let expect = 0.5 * (2.0 * g.half_width()).powi(2);
                assert!((v - expect).abs() < 1e-9 * expect);
            } else {
                assert!(v < 1e-10, "stray mode at {k:?}: {v}");
            }
        }
        assert_eq!(supported, 2);
    }

    #[test]
    fn zero_field_zero_spectrum() {
        let f = Field::zeros(grid(), 1);
        let hat = f.to_spectral().unwrap();
        assert_eq!(hat.linf(), 0.0);
    }

    #[test]
    fn wrong_representation_is_rejected() {
        let f = Field::zeros(grid(), 1);
        assert!(f.to_physical().is_err());
        let hat = f.to_spectral().unwrap();
        assert!(hat.to_spectral().is_err());
    }

    #[test]
    fn spectral_write_read_symmetry_is_exact() {
        let f = Field::from_fn(grid(), |x| (0.3 * x[0]).sin() + 0.2 * (0.7 * x[1]).cos());
        let hat = f.to_spectral().unwrap();
        for idx in 0..hat.grid().cell_count() {
            let cj = Field::conj_index(hat.grid(), idx);
            let a = hat.component(0)[idx];
            let b = hat.component(0)[cj];
            assert_eq!(a.re, b.re);
            assert_eq!(a.im, -b.im);
        }
    }
}
