use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use num_complex::Complex64;

/// A Fourier multiplier symbol evaluated lattice-pointwise.
///
/// The zero-frequency value is always explicit; singular symbols such as
/// |xi|^s for s < 0 or i xi_i/|xi| never evaluate their formula at xi = 0.
///
/// `axis_even` declares that P is invariant under flipping the sign of any
/// single coordinate of xi (radial symbols, heat, |xi|^s, diagonal
/// xi_i^2/|xi|^2). Symbols without this property are ambiguous on Nyquist
/// bins, where the lattice identifies +N/2 and -N/2, so applying them
/// annihilates every bin with a Nyquist component.
pub struct MultiplierSymbol {
    order: f64,
    zero: Complex64,
    axis_even: bool,
    eval: Box<dyn Fn(&[f64; 3]) -> Complex64 + Send + Sync>,
}

impl MultiplierSymbol {
    pub fn new(
        order: f64,
        zero: Complex64,
        axis_even: bool,
        eval: impl Fn(&[f64; 3]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        MultiplierSymbol {
            order,
            zero,
            axis_even,
            eval: Box::new(eval),
        }
    }

    /// Declared homogeneity order m.
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn axis_even(&self) -> bool {
        self.axis_even
    }

    #[inline]
    pub fn value(&self, xi: &[f64; 3]) -> Complex64 {
        if xi[0] == 0.0 && xi[1] == 0.0 && xi[2] == 0.0 {
            self.zero
        } else {
            (self.eval)(xi)
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, Complex64::new(1.0, 0.0), true, |_| {
            Complex64::new(1.0, 0.0)
        })
    }

    /// Heat semigroup symbol exp(-t |xi|^2).
    pub fn heat(t: f64) -> Self {
        Self::new(0.0, Complex64::new(1.0, 0.0), true, move |xi| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            Complex64::new((-t * r2).exp(), 0.0)
        })
    }

    /// Riesz transform symbol i xi_a / |xi|; zero frequency maps to 0.
    pub fn riesz(axis: usize) -> Self {
        Self::new(0.0, Complex64::default(), false, move |xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            Complex64::new(0.0, xi[axis] / r)
        })
    }

    /// Riesz potential symbol |xi|^s; zero frequency maps to 0.
    pub fn riesz_potential(s: f64) -> Self {
        Self::new(s, Complex64::default(), true, move |xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            Complex64::new(r.powf(s), 0.0)
        })
    }

    /// Derivative symbol i xi_a.
    pub fn derivative(axis: usize) -> Self {
        Self::new(1.0, Complex64::default(), false, move |xi| {
            Complex64::new(0.0, xi[axis])
        })
    }

    /// Order-zero symbol xi_i xi_j / |xi|^2.
    pub fn second_riesz(i: usize, j: usize) -> Self {
        Self::new(0.0, Complex64::default(), i == j, move |xi| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            Complex64::new(xi[i] * xi[j] / r2, 0.0)
        })
    }
}

/// Apply a multiplier: returns (P f_hat)^v, in the representation of the
/// input field. Linear in f.
pub fn apply_multiplier(f: &Field, symbol: &MultiplierSymbol) -> Result<Field> {
    let mut hat = f.spectral()?;
    let grid = *f.grid();
    let cells = grid.cell_count();
    for c in 0..f.components() {
        let comp = hat.component_mut(c);
        for idx in 0..cells {
            if !symbol.axis_even() && grid.has_nyquist(idx) {
                comp[idx] = Complex64::default();
                continue;
            }
            let xi = grid.frequency(idx);
            let p = symbol.value(&xi);
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::NonFiniteSymbol(xi));
            }
            comp[idx] *= p;
        }
    }
    match f.representation() {
        Representation::Physical => hat.to_physical(),
        Representation::Spectral => Ok(hat),
    }
}

/// Heat semigroup G(t) f = (exp(-t |xi|^2) f_hat)^v for t >= 0.
pub fn heat(f: &Field, t: f64) -> Result<Field> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    apply_multiplier(f, &MultiplierSymbol::heat(t))
}

/// i-th Riesz transform of a scalar field.
pub fn riesz_transform(f: &Field, axis: usize) -> Result<Field> {
    if !f.is_scalar() {
        return Err(Error::ComponentCount {
            expected: 1,
            found: f.components(),
        });
    }
    if axis >= f.grid().dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            n: f.grid().dim(),
        });
    }
    apply_multiplier(f, &MultiplierSymbol::riesz(axis))
}

/// Leray projection onto divergence-free fields: the symbol matrix
/// delta_ij - xi_i xi_j / |xi|^2, with the zero mode left untouched.
pub fn leray_project(u: &Field) -> Result<Field> {
    let n = u.grid().dim();
    if u.components() != n {
        return Err(Error::ComponentCount {
            expected: n,
            found: u.components(),
        });
    }
    let mut hat = u.spectral()?;
    let grid = *u.grid();
    let cells = grid.cell_count();
    for idx in 0..cells {
        // Off-diagonal entries of the projector are odd in the mixed
        // coordinates, so Nyquist bins are annihilated.
        if grid.has_nyquist(idx) {
            for a in 0..n {
                hat.component_mut(a)[idx] = Complex64::default();
            }
            continue;
        }
        let xi = grid.frequency(idx);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if r2 == 0.0 {
            continue;
        }
        let mut dot = Complex64::default();
        for a in 0..n {
            dot += hat.component(a)[idx] * xi[a];
        }
        let scale = dot / r2;
        for a in 0..n {
            hat.component_mut(a)[idx] -= xi[a] * scale;
        }
    }
    match u.representation() {
        Representation::Physical => hat.to_physical(),
        Representation::Spectral => Ok(hat),
    }
}

/// Spectral divergence of a vector field, as a scalar field in the input
/// representation.
pub fn divergence(u: &Field) -> Result<Field> {
    let n = u.grid().dim();
    if u.components() != n {
        return Err(Error::ComponentCount {
            expected: n,
            found: u.components(),
        });
    }
    let hat = u.spectral()?;
    let grid = *u.grid();
    let cells = grid.cell_count();
    let mut out = vec![Complex64::default(); cells];
    for idx in 0..cells {
        if grid.has_nyquist(idx) {
            continue;
        }
        let xi = grid.frequency(idx);
        let mut d = Complex64::default();
        for a in 0..n {
            d += Complex64::new(0.0, xi[a]) * hat.component(a)[idx];
        }
        out[idx] = d;
    }
    let div = Field::from_raw(grid, 1, Representation::Spectral, out);
    match u.representation() {
        Representation::Physical => div.to_physical(),
        Representation::Spectral => Ok(div),
    }
}

/// Spectral gradient of a scalar field.
pub fn gradient(rho: &Field) -> Result<Field> {
    if !rho.is_scalar() {
        return Err(Error::ComponentCount {
            expected: 1,
            found: rho.components(),
        });
    }
    let n = rho.grid().dim();
    let parts: Result<Vec<Field>> = (0..n)
        .map(|a| apply_multiplier(rho, &MultiplierSymbol::derivative(a)))
        .collect();
    Field::from_components(&parts?)
}

/// Max over the lattice of |xi . u_hat(xi)|, the spectral divergence defect.
pub fn divergence_defect(u: &Field) -> Result<f64> {
    let hat = u.spectral()?;
    let grid = *u.grid();
    let n = grid.dim();
    let mut worst = 0.0f64;
    for idx in 0..grid.cell_count() {
        let xi = grid.frequency(idx);
        let mut d = Complex64::default();
        for a in 0..n {
            d += hat.component(a)[idx] * xi[a];
        }
        worst = worst.max(d.norm());
    }
    Ok(worst)
}
