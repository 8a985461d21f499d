//! Convolution and rescaling.

use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use num_complex::Complex64;

/// Periodic convolution with Riemann-sum normalization:
/// (theta * f)(x) = h^n sum_y theta(y) f(x - y), realized spectrally as the
/// pointwise product of the two transforms. Commutative.
pub fn convolve(theta: &Field, f: &Field) -> Result<Field> {
    theta.assert_physical()?;
    f.assert_physical()?;
    if theta.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    if !theta.is_scalar() || !f.is_scalar() {
        return Err(Error::ComponentCount {
            expected: 1,
            found: theta.components().max(f.components()),
        });
    }
    let mut th = theta.to_spectral()?;
    let fh = f.to_spectral()?;
    for (a, b) in th.data_mut().iter_mut().zip(fh.data()) {
        *a *= b;
    }
    th.to_physical()
}

/// Result of [`rescale`]: the sampled field and a flag set when the dilation
/// wrapped non-negligible mass around the periodic boundary.
pub struct Rescaled {
    pub field: Field,
    pub decay_warning: bool,
}

/// Dilation f -> lambda f(lambda x), sampled on the same grid by
/// trigonometric interpolation (exact on band-limited fields).
pub fn rescale(f: &Field, lambda: f64) -> Result<Rescaled> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidExponent(format!(
            "rescale factor must be positive, got {lambda}"
        )));
    }
    let grid = *f.grid();
    let n = grid.dim();
    let nn = grid.size();
    let hat = f.spectral()?;

    // Per-axis synthesis matrix T[m][b] = exp(i xi_b lambda x_m). The
    // self-conjugate Nyquist bin is treated as a cosine mode so real fields
    // stay real.
    let d = grid.freq_spacing();
    let mut t = vec![Complex64::default(); nn * nn];
    for m in 0..nn {
        let x = -grid.half_width() + m as f64 * grid.spacing();
        for b in 0..nn {
            let k = if b < nn / 2 {
                b as i64
            } else {
                b as i64 - nn as i64
            };
            let phase = d * k as f64 * lambda * x;
            t[m * nn + b] = if b == nn / 2 {
                Complex64::new(phase.cos(), 0.0)
            } else {
                Complex64::new(phase.cos(), phase.sin())
            };
        }
    }

    let cells = grid.cell_count();
    let scale = lambda / (2.0 * grid.half_width()).powi(n as i32);
    let mut data = hat.data().to_vec();
    for c in 0..f.components() {
        let comp = &mut data[c * cells..(c + 1) * cells];
        for axis in 0..n {
            let stride = nn.pow(axis as u32);
            let lines = cells / nn;
            let mut line = vec![Complex64::default(); nn];
            for l in 0..lines {
                let block = l / stride;
                let rem = l % stride;
                let base = block * stride * nn + rem;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = comp[base + i * stride];
                }
                for m in 0..nn {
                    let mut acc = Complex64::default();
                    let row = &t[m * nn..(m + 1) * nn];
                    for b in 0..nn {
                        acc += row[b] * line[b];
                    }
                    comp[base + m * stride] = acc;
                }
            }
        }
        for z in comp.iter_mut() {
            *z = Complex64::new(z.re * scale, 0.0);
        }
    }
    let field = Field::from_raw(grid, f.components(), Representation::Physical, data);

    // Warn if the dilated sampling points reach beyond the field's decay
    // region: for lambda > 1 the points lambda x wrap around the torus, which
    // only matters when f carries mass out there.
    let mut decay_warning = false;
    if lambda > 1.0 {
        let phys = f.physical()?;
        let bound = grid.half_width() / lambda;
        let mut outside = 0.0f64;
        let mut total = 0.0f64;
        for c in 0..phys.components() {
            for (idx, v) in phys.component(c).iter().enumerate() {
                let x = grid.position(idx);
                let linf = (0..n).map(|a| x[a].abs()).fold(0.0, f64::max);
                let m = v.norm();
                total += m;
                if linf > bound {
                    outside += m;
                }
            }
        }
        if total > 0.0 && outside / total > 1e-10 {
            decay_warning = true;
        }
    }
    Ok(Rescaled {
        field,
        decay_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::new(2, 64, 8.0).unwrap()
    }

    #[test]
    fn delta_is_convolution_identity() {
        let g = grid();
        let f = Field::from_fn(g, |x| (-0.3 * (x[0] * x[0] + x[1] * x[1])).exp() * x[1]);
        let inv_vol = 1.0 / g.cell_volume();
        let delta = Field::from_fn(g, move |x| {
            if x[0] == 0.0 && x[1] == 0.0 {
                inv_vol
            } else {
                0.0
            }
        });
        let out = convolve(&delta, &f).unwrap();
        assert!(out.sub(&f).unwrap().linf() < 1e-10 * f.linf());
    }

    #[test]
    fn heat_kernel_convolution_matches_heat_operator() {
        let g = grid();
        let t = 1.0;
        let kernel = Field::from_fn(g, move |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (4.0 * std::f64::consts::PI * t).powi(-1) * (-r2 / (4.0 * t)).exp()
        });
        let f = Field::from_fn(g, |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp());
        let via_conv = convolve(&kernel, &f).unwrap();
        let via_heat = crate::multiplier::heat(&f, t).unwrap();
        let err = via_conv.sub(&via_heat).unwrap().linf();
        assert!(err < 1e-6 * f.linf(), "periodization error {err}");
    }

    #[test]
    fn convolution_commutes() {
        let g = grid();
        let a = Field::from_fn(g, |x| (-0.4 * (x[0] * x[0] + x[1] * x[1])).exp());
        let b = Field::from_fn(g, |x| (0.5 * x[0]).cos() * (-0.2 * x[1] * x[1]).exp());
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        assert!(ab.sub(&ba).unwrap().linf() < 1e-12 * ab.linf().max(1.0));
    }

    #[test]
    fn rescale_identity_and_composition() {
        let g = grid();
        // Band-limited field whose modes stay on the lattice under the
        // dilations below (k = 4 halves twice to k = 1).
        let d = g.freq_spacing();
        let f = Field::from_fn(g, move |x| {
            (4.0 * d * x[0]).cos() + 0.5 * (4.0 * d * (x[0] + x[1])).sin()
        });
        let id = rescale(&f, 1.0).unwrap().field;
        assert!(id.sub(&f).unwrap().linf() < 1e-10 * f.linf());

        let ab = rescale(&rescale(&f, 0.5).unwrap().field, 0.5).unwrap().field;
        let direct = rescale(&f, 0.25).unwrap().field;
        assert!(
            ab.sub(&direct).unwrap().linf() < 1e-8 * f.linf(),
            "composition error {}",
            ab.sub(&direct).unwrap().linf()
        );
    }
}
