//! Dyadic frequency decomposition: the smooth radial bump family phi_j,
//! block and lowpass operators, and the Bony paraproduct splitting.

use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::grid::Grid;
use crate::multiplier::{apply_multiplier, MultiplierSymbol};

/// Smooth cutoff: 1 on r <= 3/4, 0 on r >= 4/3, glued by the exponential
/// partition sigma(t)/(sigma(t) + sigma(1-t)) with sigma(t) = exp(-1/t).
fn theta(r: f64) -> f64 {
    if r <= 0.75 {
        1.0
    } else if r >= 4.0 / 3.0 {
        0.0
    } else {
        let t = (4.0 / 3.0 - r) / (4.0 / 3.0 - 0.75);
        let sigma = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        let a = sigma(t);
        let b = sigma(1.0 - t);
        a / (a + b)
    }
}

/// Mother bump phi(r) = theta(r/2) - theta(r): supported exactly in
/// (3/4, 8/3), identically 1 on [4/3, 3/2], telescoping to 1.
fn phi(r: f64) -> f64 {
    theta(r / 2.0) - theta(r)
}

/// The sampled dyadic family phi_j(xi) = phi(2^-j |xi|) on a grid.
///
/// `stored_range` covers every j whose bump meets the nonzero lattice, so
/// the truncated telescoping sum is exactly 1 at every nonzero frequency;
/// `resolvable_range` is the narrower window the grid resolves (used for
/// norm aggregation).
pub struct LpFamily {
    grid: Grid,
    stored: (i32, i32),
    symbols: Vec<Vec<f64>>,
    partition_defect: f64,
}

impl LpFamily {
    pub fn build(grid: &Grid) -> Result<LpFamily> {
        let (r_lo, r_hi) = grid.block_range();
        if r_lo > r_hi {
            return Err(Error::GridConfig("empty resolvable block range".into()));
        }
        let xi_min = grid.freq_spacing();
        let xi_max = (grid.dim() as f64).sqrt() * grid.nyquist();
        // Theta(2^-j_lo |xi|) = 0 and Theta(2^-(j_hi+1) |xi|) = 1 on the
        // whole nonzero lattice, so the telescoping sum closes exactly.
        let j_lo = (0.75 * xi_min).log2().floor() as i32;
        let j_hi = ((4.0 / 3.0) * xi_max).log2().ceil() as i32 - 1;
        let mut symbols = Vec::with_capacity((j_hi - j_lo + 1) as usize);
        for j in j_lo..=j_hi {
            let scale = (2.0f64).powi(-j);
            let mut sym = vec![0.0f64; grid.cell_count()];
            for (idx, slot) in sym.iter_mut().enumerate() {
                let xi = grid.frequency(idx);
                let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
                if r > 0.0 {
                    *slot = phi(r * scale);
                }
            }
            symbols.push(sym);
        }
        // Partition defect over the nonzero lattice.
        let mut defect = 0.0f64;
        for idx in 1..grid.cell_count() {
            let xi = grid.frequency(idx);
            let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            if r == 0.0 {
                continue;
            }
            let total: f64 = symbols.iter().map(|s| s[idx]).sum();
            defect = defect.max((1.0 - total).abs());
        }
        Ok(LpFamily {
            grid: *grid,
            stored: (j_lo, j_hi),
            symbols,
            partition_defect: defect,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Full stored index range (inclusive).
    pub fn stored_range(&self) -> (i32, i32) {
        self.stored
    }

    /// Range the grid resolves, from the grid invariants.
    pub fn resolvable_range(&self) -> (i32, i32) {
        self.grid.block_range()
    }

    /// Max over the nonzero lattice of |1 - sum_j phi_j|.
    pub fn partition_defect(&self) -> f64 {
        self.partition_defect
    }

    /// Band (4/3 2^j, 3/2 2^j) where phi_j is identically one.
    pub fn pure_band(&self, j: i32) -> (f64, f64) {
        ((4.0 / 3.0) * (2.0f64).powi(j), 1.5 * (2.0f64).powi(j))
    }

    pub fn symbol(&self, j: i32) -> Result<&[f64]> {
        let (lo, hi) = self.stored;
        if j < lo || j > hi {
            return Err(Error::BlockIndex { j, lo, hi });
        }
        Ok(&self.symbols[(j - lo) as usize])
    }

    /// Evaluate phi_j at a frequency magnitude (reference formula).
    pub fn bump_value(&self, j: i32, r: f64) -> f64 {
        phi(r * (2.0f64).powi(-j))
    }

    fn mask(&self, f: &Field, weights: &[f64]) -> Result<Field> {
        let mut hat = f.spectral()?;
        let cells = self.grid.cell_count();
        for c in 0..f.components() {
            let comp = hat.component_mut(c);
            for idx in 0..cells {
                comp[idx] *= weights[idx];
            }
        }
        match f.representation() {
            Representation::Physical => hat.to_physical(),
            Representation::Spectral => Ok(hat),
        }
    }

    /// Frequency block Delta_j f (the zero mode never belongs to a block).
    pub fn block(&self, f: &Field, j: i32) -> Result<Field> {
        let weights = self.symbol(j)?.to_vec();
        self.mask(f, &weights)
    }

    /// Lowpass S_k f = zero mode + sum_{j <= k} Delta_j f, realized by the
    /// telescoped cutoff Theta(2^-(k+1) |xi|) with the zero mode kept.
    pub fn lowpass(&self, f: &Field, k: i32) -> Result<Field> {
        let (lo, hi) = self.stored;
        if k < lo - 1 || k > hi {
            return Err(Error::BlockIndex { j: k, lo: lo - 1, hi });
        }
        let scale = (2.0f64).powi(-(k + 1));
        let mut weights = vec![0.0f64; self.grid.cell_count()];
        for (idx, slot) in weights.iter_mut().enumerate() {
            let xi = self.grid.frequency(idx);
            let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            *slot = if r == 0.0 { 1.0 } else { theta(r * scale) };
        }
        self.mask(f, &weights)
    }
}

/// Riesz potential I^s f = (|xi|^s f_hat)^v with the zero mode killed.
pub fn riesz_potential(f: &Field, s: f64) -> Result<Field> {
    apply_multiplier(f, &MultiplierSymbol::riesz_potential(s))
}

/// The three Bony paraproduct pieces of the dealiased product fg.
pub struct BonyDecomposition {
    /// T_f g = sum_j S_{j-2} f Delta_j g.
    pub low_high: Field,
    /// T_g f.
    pub high_low: Field,
    /// R(fg) = sum_j Delta_j f (Delta_{j-1} + Delta_j + Delta_{j+1}) g,
    /// plus the product of the two zero modes.
    pub remainder: Field,
}

/// Bony splitting of the (2/3-rule dealiased) pointwise product fg.
/// The sum of the three pieces reconstructs `dealiased_product(f, g)`.
pub fn bony(family: &LpFamily, f: &Field, g: &Field) -> Result<BonyDecomposition> {
    f.assert_physical()?;
    g.assert_physical()?;
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if !f.is_scalar() || !g.is_scalar() {
        return Err(Error::ComponentCount {
            expected: 1,
            found: f.components().max(g.components()),
        });
    }
    let ft = f.dealias()?.to_physical()?;
    let gt = g.dealias()?.to_physical()?;
    let (lo, hi) = family.stored_range();

    let mut blocks_f = Vec::new();
    let mut blocks_g = Vec::new();
    let mut lows_f = Vec::new();
    let mut lows_g = Vec::new();
    for j in lo..=hi {
        blocks_f.push(family.block(&ft, j)?);
        blocks_g.push(family.block(&gt, j)?);
        // S_{j-2}, clamped to the empty lowpass (zero mode only) below lo.
        let k = (j - 2).max(lo - 1);
        lows_f.push(family.lowpass(&ft, k)?);
        lows_g.push(family.lowpass(&gt, k)?);
    }

    let grid = *f.grid();
    let mut low_high = Field::zeros(grid, 1);
    let mut high_low = Field::zeros(grid, 1);
    let mut remainder = Field::zeros(grid, 1);
    for (i, _j) in (lo..=hi).enumerate() {
        low_high = low_high.add(&lows_f[i].mul_pointwise(&blocks_g[i])?)?;
        high_low = high_low.add(&lows_g[i].mul_pointwise(&blocks_f[i])?)?;
        let mut tilde = blocks_g[i].clone();
        if i > 0 {
            tilde = tilde.add(&blocks_g[i - 1])?;
        }
        if i + 1 < blocks_g.len() {
            tilde = tilde.add(&blocks_g[i + 1])?;
        }
        remainder = remainder.add(&blocks_f[i].mul_pointwise(&tilde)?)?;
    }
    // The zero-mode x zero-mode term belongs to the high-high remainder.
    let mf = ft.mean(0)?;
    let mg = gt.mean(0)?;
    let mean_term = Field::from_fn(grid, move |_| mf * mg);
    remainder = remainder.add(&mean_term)?;

    Ok(BonyDecomposition {
        low_high: low_high.dealias()?.to_physical()?,
        high_low: high_low.dealias()?.to_physical()?,
        remainder: remainder.dealias()?.to_physical()?,
    })
}

/// 2/3-rule dealiased pointwise product of two scalar physical fields.
pub fn dealiased_product(f: &Field, g: &Field) -> Result<Field> {
    let ft = f.dealias()?.to_physical()?;
    let gt = g.dealias()?.to_physical()?;
    ft.mul_pointwise(&gt)?.dealias()?.to_physical()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{preset_field, Preset};

    fn grid() -> Grid {
        Grid::new(2, 128, 16.0).unwrap()
    }

    #[test]
    fn partition_of_unity_is_exact_on_lattice() {
        let family = LpFamily::build(&grid()).unwrap();
        assert!(
            family.partition_defect() < 1e-12,
            "defect {}",
            family.partition_defect()
        );
    }

    #[test]
    fn bump_support_is_exact() {
        let family = LpFamily::build(&grid()).unwrap();
        let g = grid();
        for j in [0i32, 2] {
            let sym = family.symbol(j).unwrap();
            let lo = 0.75 * (2.0f64).powi(j);
            let hi = (8.0 / 3.0) * (2.0f64).powi(j);
            for idx in 0..g.cell_count() {
                let xi = g.frequency(idx);
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                if r <= lo || r >= hi {
                    assert_eq!(sym[idx], 0.0, "support leak at r = {r} for j = {j}");
                }
            }
        }
    }

    #[test]
    fn sampled_symbol_matches_rescaled_mother_bump() {
        let family = LpFamily::build(&grid()).unwrap();
        let g = grid();
        let sym = family.symbol(1).unwrap();
        for idx in (0..g.cell_count()).step_by(97) {
            let xi = g.frequency(idx);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if r > 0.0 {
                assert!((sym[idx] - family.bump_value(1, r)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_block_field_is_reproduced_and_neighbors_vanish() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::RandomBandlimited { j: 2, seed: 3 }, &g).unwrap();
        let same = family.block(&f, 2).unwrap();
        assert!(same.sub(&f).unwrap().linf() < 1e-12 * f.linf());
        let (lo, hi) = family.stored_range();
        for j in lo..=hi {
            if j != 2 {
                let other = family.block(&f, j).unwrap();
                assert!(
                    other.linf() < 1e-12 * f.linf(),
                    "block {j} should vanish, got {}",
                    other.linf()
                );
            }
        }
    }

    #[test]
    fn blocks_two_apart_are_orthogonal() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 0.3 }, &g).unwrap();
        for (j, k) in [(0i32, 2i32), (1, 3), (0, 3)] {
            let jk = family.block(&family.block(&f, k).unwrap(), j).unwrap();
            assert!(
                jk.linf() < 1e-12 * f.linf(),
                "Delta_{j} Delta_{k} f not zero: {}",
                jk.linf()
            );
        }
    }

    #[test]
    fn reconstruction_from_blocks_plus_zero_mode() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let (lo, hi) = family.stored_range();
        let mean = f.mean(0).unwrap();
        let mut acc = Field::from_fn(g, move |_| mean);
        for j in lo..=hi {
            acc = acc.add(&family.block(&f, j).unwrap()).unwrap();
        }
        let err = acc.sub(&f).unwrap().linf();
        assert!(err < 1e-10 * f.linf(), "reconstruction error {err}");
    }

    #[test]
    fn lowpass_matches_partial_sums() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 0.5 }, &g).unwrap();
        let (lo, _hi) = family.stored_range();
        let k = 1;
        let mean = f.mean(0).unwrap();
        let mut acc = Field::from_fn(g, move |_| mean);
        for j in lo..=k {
            acc = acc.add(&family.block(&f, j).unwrap()).unwrap();
        }
        let low = family.lowpass(&f, k).unwrap();
        assert!(acc.sub(&low).unwrap().linf() < 1e-11 * f.linf());
    }

    #[test]
    fn bony_reconstructs_dealiased_product() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::RandomBandlimited { j: 1, seed: 5 }, &g).unwrap();
        let h = preset_field(&Preset::RandomBandlimited { j: 2, seed: 9 }, &g).unwrap();
        let parts = bony(&family, &f, &h).unwrap();
        let sum = parts
            .low_high
            .add(&parts.high_low)
            .unwrap()
            .add(&parts.remainder)
            .unwrap();
        let target = dealiased_product(&f, &h).unwrap();
        let err = sum.sub(&target).unwrap().linf();
        let bound = 1e-10 * f.linf() * h.linf();
        assert!(err < bound, "Bony reconstruction error {err} vs {bound}");
    }

    #[test]
    fn bony_zero_factor_gives_zero_parts() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let z = Field::zeros(g, 1);
        let h = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let parts = bony(&family, &z, &h).unwrap();
        assert_eq!(parts.low_high.linf(), 0.0);
        assert_eq!(parts.high_low.linf(), 0.0);
        assert_eq!(parts.remainder.linf(), 0.0);
    }

    #[test]
    fn paraproduct_summand_is_frequency_localized() {
        // Delta_j (S_{k-2} g Delta_k f) = 0 for |j - k| >= 5.
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 0.25 }, &g).unwrap();
        let h = preset_field(&Preset::Power { a: 0.8 }, &g).unwrap();
        let k = 3i32;
        let sk = family.lowpass(&h.dealias().unwrap().to_physical().unwrap(), k - 2).unwrap();
        let dk = family
            .block(&f.dealias().unwrap().to_physical().unwrap(), k)
            .unwrap();
        let prod = sk
            .mul_pointwise(&dk)
            .unwrap()
            .dealias()
            .unwrap()
            .to_physical()
            .unwrap();
        let (lo, hi) = family.stored_range();
        for j in lo..=hi {
            if (j - k).abs() >= 5 {
                let piece = family.block(&prod, j).unwrap();
                assert!(
                    piece.linf() < 1e-10 * prod.linf().max(1e-300),
                    "Delta_{j} of S_{}g Delta_{}f nonzero: {}",
                    k - 2,
                    k,
                    piece.linf()
                );
            }
        }
    }

    #[test]
    fn riesz_potential_inverts_off_zero_mode() {
        let g = grid();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let back = riesz_potential(&riesz_potential(&f, 0.7).unwrap(), -0.7).unwrap();
        let mean = f.mean(0).unwrap();
        let centered = f.sub(&Field::from_fn(g, move |_| mean)).unwrap();
        assert!(back.sub(&centered).unwrap().linf() < 1e-10 * f.linf());
    }

    #[test]
    fn riesz_potential_scales_pure_modes_exactly() {
        let g = grid();
        let d = g.freq_spacing();
        let f = Field::from_fn(g, move |x| (3.0 * d * x[0] + 4.0 * d * x[1]).cos());
        let rho = (9.0f64 + 16.0).sqrt() * d;
        let out = riesz_potential(&f, 1.3).unwrap();
        let want = f.scale(rho.powf(1.3));
        assert!(out.sub(&want).unwrap().linf() < 1e-12 * want.linf());
    }
}
