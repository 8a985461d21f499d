//! Discrete weak-Lp (Lorentz) quasi-norms via decreasing rearrangement.

use crate::error::{Error, Result};
use crate::field::Field;

/// Restricted weak-Lp quasi-norm over a set of cells.
///
/// With v_(1) >= v_(2) >= ... the decreasing rearrangement of |f| over the
/// region and h^n the cell measure, this is max_m (m h^n)^(1/p) v_(m),
/// which equals sup_lambda lambda |{|f| > lambda}|^(1/p) on the sampled
/// field. `p = inf` is the restricted sup norm.
pub fn weak_lp_region(f: &Field, region: &[usize], p: f64) -> Result<f64> {
    f.assert_physical()?;
    if !f.is_scalar() {
        return Err(Error::ComponentCount {
            expected: 1,
            found: f.components(),
        });
    }
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(format!(
            "weak-Lp exponent must satisfy p > 1, got {p}"
        )));
    }
    let comp = f.component(0);
    if p.is_infinite() {
        return Ok(region.iter().map(|&i| comp[i].re.abs()).fold(0.0, f64::max));
    }
    let mut values: Vec<f64> = region.iter().map(|&i| comp[i].re.abs()).collect();
    values.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let hn = f.grid().cell_volume();
    let inv_p = 1.0 / p;
    let mut best = 0.0f64;
    for (m, v) in values.iter().enumerate() {
        let candidate = ((m + 1) as f64 * hn).powf(inv_p) * v;
        if candidate > best {
            best = candidate;
        }
    }
    Ok(best)
}

/// Restricted Riemann Lp norm over a set of cells: (h^n sum |f|^p)^(1/p);
/// `p = inf` is the restricted sup norm.
pub fn lp_region(f: &Field, region: &[usize], p: f64) -> Result<f64> {
    f.assert_physical()?;
    if !f.is_scalar() {
        return Err(Error::ComponentCount {
            expected: 1,
            found: f.components(),
        });
    }
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(format!(
            "Lp exponent must satisfy p >= 1, got {p}"
        )));
    }
    let comp = f.component(0);
    if p.is_infinite() {
        return Ok(region.iter().map(|&i| comp[i].re.abs()).fold(0.0, f64::max));
    }
    let hn = f.grid().cell_volume();
    let s: f64 = region.iter().map(|&i| comp[i].re.abs().powf(p)).sum();
    Ok((s * hn).powf(1.0 / p))
}

/// All cell indices of the grid.
pub fn whole_grid(f: &Field) -> Vec<usize> {
    (0..f.grid().cell_count()).collect()
}
