use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named initial data used across experiments and tests.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// |x|^(-a), singular cell regularized (see [`singular_cell_value`]).
    Power { a: f64 },
    /// exp(-|x|^2 / (2 sigma^2)), peak normalized to 1.
    Gaussian { sigma: f64 },
    /// Indicator of the annulus A_k.
    AnnulusIndicator { k: i32 },
    /// x-perp / |x|^2 in 2-D, (-x2, x1, 0)/|x|^2 in 3-D; homogeneous of
    /// degree -1 and divergence-free away from the origin.
    Rotational,
    /// Sum of `bumps` disjoint |x - x_k|^(-n/p) spikes supported in
    /// B(x_k, 1/8) with x_k = (3/2) 2^(k-1) e_1: bounded per-annulus weak
    /// norms, unbounded global weak-Lp as bumps accumulate.
    StrictnessWitness { p: f64, bumps: usize },
    /// Real field with spectrum in the pure band (4/3, 3/2) 2^j where the
    /// dyadic bump is identically one; reproducible from the seed.
    RandomBandlimited { j: i32, seed: u64 },
}

impl Preset {
    /// Parse the CLI form, e.g. `power(1)`, `gaussian(0.5)`,
    /// `annulus_indicator(0)`, `rotational`, `strictness_witness(2,4)`,
    /// `random_bandlimited(2,42)`.
    pub fn parse(text: &str) -> Result<Preset> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(open) => {
                let close = text
                    .rfind(')')
                    .ok_or_else(|| Error::UnknownPreset(text.into()))?;
                (
                    &text[..open],
                    text[open + 1..close]
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .collect::<Vec<_>>(),
                )
            }
            None => (text, Vec::new()),
        };
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| Error::PresetParams(format!("{name}: missing argument {i}")))?
                .parse::<f64>()
                .map_err(|_| Error::PresetParams(format!("{name}: bad argument {:?}", args[i])))
        };
        match name {
            "power" => Ok(Preset::Power { a: num(0)? }),
            "gaussian" => Ok(Preset::Gaussian { sigma: num(0)? }),
            "annulus_indicator" => Ok(Preset::AnnulusIndicator { k: num(0)? as i32 }),
            "rotational" => Ok(Preset::Rotational),
            "strictness_witness" => Ok(Preset::StrictnessWitness {
                p: num(0)?,
                bumps: if args.len() > 1 { num(1)? as usize } else { 4 },
            }),
            "random_bandlimited" => Ok(Preset::RandomBandlimited {
                j: num(0)? as i32,
                seed: num(1)? as u64,
            }),
            other => Err(Error::UnknownPreset(other.into())),
        }
    }
}

/// Unit ball volume V_n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("grid dimension is 2 or 3"),
    }
}

/// Replacement value for a cell whose center coincides with a |y|^(-a)
/// singularity: the constant whose one-cell weak-L^(n/a) mass equals the
/// restricted weak norm of the true profile, V_n^(a/n) h^(-a). This keeps
/// the weak-Lp profile of the sampled field at the critical exponent.
pub fn singular_cell_value(n: usize, a: f64, h: f64) -> f64 {
    unit_ball_volume(n).powf(a / n as f64) * h.powf(-a)
}

/// Sample a preset on a grid.
pub fn preset_field(preset: &Preset, grid: &Grid) -> Result<Field> {
    let n = grid.dim();
    let h = grid.spacing();
    match *preset {
        Preset::Power { a } => {
            if !(a > 0.0) || a >= n as f64 {
                return Err(Error::PresetParams(format!(
                    "power exponent a = {a} must lie in (0, n)"
                )));
            }
            let v0 = singular_cell_value(n, a, h);
            Ok(Field::from_fn(*grid, move |x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r == 0.0 {
                    v0
                } else {
                    r.powf(-a)
                }
            }))
        }
        Preset::Gaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::PresetParams(format!("gaussian sigma = {sigma} <= 0")));
            }
            Ok(Field::from_fn(*grid, move |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                (-r2 / (2.0 * sigma * sigma)).exp()
            }))
        }
        Preset::AnnulusIndicator { k } => {
            let (lo, hi) = grid.annulus_range();
            if k < lo || k > hi {
                return Err(Error::AnnulusIndex { k, lo, hi });
            }
            let inner = (2.0f64).powi(k - 1);
            let outer = (2.0f64).powi(k);
            Ok(Field::from_fn(*grid, move |x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r >= inner && r < outer {
                    1.0
                } else {
                    0.0
                }
            }))
        }
        Preset::Rotational => Ok(Field::vector_from_fn(*grid, move |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            if r2 == 0.0 {
                [0.0, 0.0, 0.0]
            } else {
                [-x[1] / r2, x[0] / r2, 0.0]
            }
        })),
        Preset::StrictnessWitness { p, bumps } => {
            if !(p > 1.0) {
                return Err(Error::InvalidExponent(format!(
                    "strictness witness requires p > 1, got {p}"
                )));
            }
            if bumps == 0 {
                return Err(Error::PresetParams("strictness witness needs >= 1 bump".into()));
            }
            let centers: Vec<f64> = (1..=bumps)
                .map(|k| 1.5 * (2.0f64).powi(k as i32 - 1))
                .collect();
            let outermost = centers[bumps - 1];
            if outermost + 0.125 >= grid.half_width() {
                return Err(Error::PresetParams(format!(
                    "bump {bumps} at x = {outermost} does not fit inside [-L, L) with L = {}",
                    grid.half_width()
                )));
            }
            let a = n as f64 / p;
            let v0 = singular_cell_value(n, a, h);
            Ok(Field::from_fn(*grid, move |x| {
                let mut total = 0.0;
                for &c in &centers {
                    let dx = x[0] - c;
                    let r2 = dx * dx + x[1] * x[1] + x[2] * x[2];
                    let r = r2.sqrt();
                    if r < 0.125 {
                        total += if r == 0.0 { v0 } else { r.powf(-a) };
                    }
                }
                total
            }))
        }
        Preset::RandomBandlimited { j, seed } => {
            let (lo, hi) = grid.block_range();
            if j < lo || j > hi {
                return Err(Error::BlockIndex { j, lo, hi });
            }
            let band_lo = (4.0 / 3.0) * (2.0f64).powi(j);
            let band_hi = 1.5 * (2.0f64).powi(j);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (j as u64).wrapping_mul(0x9e3779b9));
            let mut hat = Field::zeros(*grid, 1);
            let mut count = 0usize;
            {
                let comp = hat.component_mut(0);
                for idx in 0..grid.cell_count() {
                    let xi = grid.frequency(idx);
                    let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
                    if r > band_lo && r < band_hi {
                        comp[idx] = Complex64::new(
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                        );
                        count += 1;
                    }
                }
            }
            if count == 0 {
                return Err(Error::PresetParams(format!(
                    "pure band of block {j} contains no lattice frequencies"
                )));
            }
            // Tag as spectral data of a real field and normalize the peak.
            let mut hat = Field::from_raw(
                *grid,
                1,
                crate::field::Representation::Spectral,
                hat.data().to_vec(),
            );
            symmetrize_spectral(&mut hat);
            let phys = hat.to_physical()?;
            let peak = phys.linf();
            Ok(phys.scale(1.0 / peak))
        }
    }
}

/// Make a raw complex lattice array conjugate-symmetric in place.
fn symmetrize_spectral(hat: &mut Field) {
    let grid = *hat.grid();
    let comp = hat.component_mut(0);
    for idx in 0..grid.cell_count() {
        let cj = Field::conj_index(&grid, idx);
        if idx < cj {
            let avg = 0.5 * (comp[idx] + comp[cj].conj());
            comp[idx] = avg;
            comp[cj] = avg.conj();
        } else if idx == cj {
            comp[idx] = Complex64::new(comp[idx].re, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{divergence_defect, leray_project};

    fn grid() -> Grid {
        Grid::new(2, 256, 16.0).unwrap()
    }

    #[test]
    fn gaussian_peak_is_one() {
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &grid()).unwrap();
        let g = grid();
        let origin = (0..g.cell_count())
            .find(|&i| g.position(i) == [0.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(f.component(0)[origin].re, 1.0);
    }

    #[test]
    fn annulus_indicator_measure_matches_area() {
        let g = grid();
        let f = preset_field(&Preset::AnnulusIndicator { k: 0 }, &g).unwrap();
        let measure: f64 = f.values(0).sum::<f64>() * g.cell_volume();
        let exact = 3.0 * std::f64::consts::PI / 4.0;
        assert!(
            (measure - exact).abs() < 0.02 * exact,
            "cell-counted measure {measure} vs {exact}"
        );
    }

    #[test]
    fn rotational_is_solenoidal_after_projection() {
        let g = grid();
        let u = preset_field(&Preset::Rotational, &g).unwrap();
        let pu = leray_project(&u).unwrap();
        let defect = divergence_defect(&pu).unwrap();
        let hat_max = pu.spectral().unwrap().linf();
        assert!(defect < 1e-10 * hat_max, "defect {defect} vs {hat_max}");
        // And the projection barely moves the sampled field away from the
        // origin cells: analytically div(x-perp / |x|^2) = 0.
        let moved = u.sub(&pu).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..g.cell_count() {
            if g.radius(idx) > 1.0 {
                for c in 0..2 {
                    worst = worst.max(moved.component(c)[idx].norm());
                }
            }
        }
        assert!(worst < 1e-2 * u.linf(), "projection displacement {worst}");
    }

    #[test]
    fn random_bandlimited_is_reproducible() {
        let g = grid();
        let p = Preset::RandomBandlimited { j: 2, seed: 7 };
        let a = preset_field(&p, &g).unwrap();
        let b = preset_field(&p, &g).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_eq!(x, y);
        }
        assert!((a.linf() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_round_trip() {
        assert_eq!(
            Preset::parse("power(1)").unwrap(),
            Preset::Power { a: 1.0 }
        );
        assert_eq!(Preset::parse("rotational").unwrap(), Preset::Rotational);
        assert_eq!(
            Preset::parse("strictness_witness(2, 3)").unwrap(),
            Preset::StrictnessWitness { p: 2.0, bumps: 3 }
        );
        assert!(Preset::parse("vortex(1)").is_err());
    }
}
