//! Mild-solution construction for the incompressible Navier-Stokes integral
//! equation u(t) = G(t) u0 + B(u, u)(t): parameter admissibility, the
//! Duhamel bilinear operator with product-integration quadrature, the
//! two-part X norm, the Picard iteration, an integrating-factor reference
//! integrator, and self-similarity / asymptotic diagnostics.

use crate::besov::{besov_wh_norm, BesovParams};
use crate::error::{Error, Result};
use crate::field::{Field, Representation};
use crate::grid::Grid;
use crate::herz::{weak_herz_norm, HerzParams};
use crate::lp::LpFamily;
use crate::multiplier::{divergence_defect, heat, leray_project};
use crate::ops::rescale;
use crate::parallel_map;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Validated exponent bundle of the mild-solution setting, with the derived
/// critical regularity s = alpha + n/p - 1 and time weight
/// w = 1/2 - (alpha/2 + n/4p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MildParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub s: f64,
    pub weight: f64,
}

/// Check the hypotheses n/2 < p < inf, 1 <= q <= inf and
/// 0 <= alpha < min{1 - n/2p, n/2p}; each violation is a distinct error.
pub fn admissible(n: usize, p: f64, q: f64, alpha: f64) -> Result<MildParams> {
    let nf = n as f64;
    if p.is_infinite() {
        return Err(Error::MildPInfinite);
    }
    if !(p > nf / 2.0) {
        return Err(Error::MildPTooSmall { p, n });
    }
    if !(q >= 1.0) {
        return Err(Error::MildQRange { q });
    }
    if alpha < 0.0 {
        return Err(Error::MildAlphaNegative { alpha });
    }
    let bound = (1.0 - nf / (2.0 * p)).min(nf / (2.0 * p));
    if alpha >= bound {
        return Err(Error::MildAlphaWindow { alpha, bound });
    }
    Ok(MildParams {
        n,
        p,
        q,
        alpha,
        s: alpha + nf / p - 1.0,
        weight: 0.5 - (alpha / 2.0 + nf / (4.0 * p)),
    })
}

impl MildParams {
    /// Critical Besov-weak-Herz space of the solution (r = inf).
    pub fn critical_space(&self) -> BesovParams {
        BesovParams {
            herz: HerzParams {
                alpha: self.alpha,
                p: self.p,
                q: self.q,
            },
            s: self.s,
            r: f64::INFINITY,
        }
    }

    /// Doubled-exponent weak-Herz space of the weighted norm part.
    pub fn doubled_space(&self) -> HerzParams {
        HerzParams {
            alpha: self.alpha,
            p: 2.0 * self.p,
            q: 2.0 * self.q,
        }
    }

    /// Singularity exponent gamma = 1 - alpha - n/2p of the Duhamel
    /// integrand at tau = 0: the weighted norm makes ||w(tau)|| ~ tau^-gamma.
    pub fn first_panel_exponent(&self) -> f64 {
        1.0 - self.alpha - self.n as f64 / (2.0 * self.p)
    }
}

/// Geometric time points t_i = t_min * ratio^i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    ratio: f64,
}

impl TimeGrid {
    pub fn geometric(t_min: f64, ratio: f64, count: usize) -> Result<TimeGrid> {
        if !(t_min > 0.0) {
            return Err(Error::TimeGrid(format!("t_min = {t_min} must be positive")));
        }
        if !(ratio > 1.0 && ratio <= 2.0) {
            return Err(Error::TimeGrid(format!("ratio = {ratio} must lie in (1, 2]")));
        }
        if count < 2 {
            return Err(Error::TimeGrid("need at least two time points".into()));
        }
        let times = (0..count).map(|i| t_min * ratio.powi(i as i32)).collect();
        Ok(TimeGrid { times, ratio })
    }

    /// Default grid: ratio 2^(1/4), 49 points ending exactly at T = 4.
    pub fn standard() -> TimeGrid {
        TimeGrid::geometric(4.0 * (2.0f64).powi(-12), (2.0f64).powf(0.25), 49).unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&ti| (ti - t).abs() <= 1e-9 * ti.max(t))
            .ok_or(Error::TimeOutsideGrid {
                t,
                t_min: self.t_min(),
                t_max: self.t_max(),
            })
    }
}

/// Outcome of a Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convergence {
    Converged { iterations: usize },
    MaxIterations { iterations: usize },
    /// X-norm differences grew for three consecutive iterations.
    Diverged { at_iteration: usize },
}

/// A time-indexed family of divergence-free vector fields with solver
/// diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    time_grid: TimeGrid,
    fields: Vec<Field>,
    /// X norms of successive Picard differences.
    pub history: Vec<f64>,
    /// Solver outcome; trajectories not produced by the Picard iteration
    /// carry `Converged { iterations: 0 }`.
    pub convergence: Convergence,
    /// Mean tail ratio of the difference history when it decays.
    pub contraction_ratio: Option<f64>,
    /// Initial data was projected because its divergence defect was visible.
    pub projected_initial: bool,
}

impl Trajectory {
    pub fn from_fields(time_grid: TimeGrid, fields: Vec<Field>) -> Result<Trajectory> {
        let first = fields.first().ok_or_else(|| {
            Error::TimeGrid("trajectory needs at least one field".into())
        })?;
        if fields.len() != time_grid.len() {
            return Err(Error::TimeGrid(format!(
                "{} fields for {} time points",
                fields.len(),
                time_grid.len()
            )));
        }
        let grid = *first.grid();
        for f in &fields {
            if *f.grid() != grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Trajectory {
            grid,
            time_grid,
            fields,
            history: Vec::new(),
            convergence: Convergence::Converged { iterations: 0 },
            contraction_ratio: None,
            projected_initial: false,
        })
    }

    /// Heat flow t -> G(t) u0 sampled on the time grid.
    pub fn heat_flow(u0: &Field, time_grid: &TimeGrid) -> Result<Trajectory> {
        let fields: Vec<Result<Field>> = parallel_map(time_grid.times().to_vec(), |t| {
            heat(&u0.physical()?, t)
        });
        Trajectory::from_fields(time_grid.clone(), fields.into_iter().collect::<Result<_>>()?)
    }

    /// Constant-in-time trajectory (quadrature test helper).
    pub fn constant_in_time(field: &Field, time_grid: &TimeGrid) -> Result<Trajectory> {
        let fields = vec![field.physical()?; time_grid.len()];
        Trajectory::from_fields(time_grid.clone(), fields)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn field(&self, i: usize) -> &Field {
        &self.fields[i]
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Max spectral divergence defect over stored fields, relative to the
    /// largest coefficient.
    pub fn divergence_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for f in &self.fields {
            let defect = divergence_defect(f)?;
            let scale = f.spectral()?.linf().max(1e-300);
            worst = worst.max(defect / scale);
        }
        Ok(worst)
    }
}

/// Quadrature configuration for the Duhamel integral. Interior panels use
/// exact product integration of the linearly interpolated integrand against
/// the heat factor; the first panel models the integrand as
/// w(tau) ~ w(t_1) (tau/t_1)^(-gamma) and integrates that profile against
/// the exact heat factor by a Gauss-Legendre rule under the substitution
/// that removes the endpoint singularity.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Modeled singularity exponent in [0, 1).
    pub gamma: f64,
    /// Gauss-Legendre node count for the first panel.
    pub nodes: usize,
}

impl QuadratureConfig {
    pub fn for_params(mp: &MildParams) -> QuadratureConfig {
        QuadratureConfig {
            gamma: mp.first_panel_exponent(),
            nodes: 24,
        }
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev estimate.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// g1(z) = 1 - (1 + z) e^(-z), g2(z) = z - 1 + e^(-z), stable near 0.
fn panel_kernels(z: f64) -> (f64, f64) {
    if z < 1e-3 {
        let z2 = z * z;
        (
            z2 * (0.5 - z / 3.0 + z2 / 8.0),
            z2 * (0.5 - z / 6.0 + z2 / 24.0),
        )
    } else {
        let e = (-z).exp();
        (1.0 - (1.0 + z) * e, z - 1.0 + e)
    }
}

/// The projected nonlinearity P div(u o v) in spectral representation,
/// with 2/3-rule dealiasing of the tensor products.
pub fn nonlinear_term(u: &Field, v: &Field) -> Result<Field> {
    let grid = *u.grid();
    let n = grid.dim();
    if u.components() != n || v.components() != n {
        return Err(Error::ComponentCount {
            expected: n,
            found: u.components().max(v.components()),
        });
    }
    let ut = u.dealias()?.to_physical()?;
    let vt = v.dealias()?.to_physical()?;
    let cells = grid.cell_count();
    let mut out = vec![Complex64::default(); n * cells];
    let mut prod = Field::zeros(grid, 1);
    for i in 0..n {
        for j in 0..n {
            // (u o v)_{ij} = u_i v_j, then d/dx_j with dealiasing.
            {
                let slot = prod.component_mut(0);
                let ui = ut.component(i);
                let vj = vt.component(j);
                for idx in 0..cells {
                    slot[idx] = Complex64::new(ui[idx].re * vj[idx].re, 0.0);
                }
            }
            let hat = prod.to_spectral()?.dealias()?;
            let comp = hat.component(0);
            for idx in 0..cells {
                if grid.has_nyquist(idx) {
                    continue;
                }
                let xi = grid.frequency(idx);
                out[i * cells + idx] += Complex64::new(0.0, xi[j]) * comp[idx];
            }
        }
    }
    let div = Field::from_raw(grid, n, Representation::Spectral, out);
    leray_project(&div)
}

/// Duhamel bilinear term B(u, v)(t) = -int_0^t G(t - tau) P div(u o v) dtau
/// at one stored target time.
pub fn duhamel_bilinear(
    u: &Trajectory,
    v: &Trajectory,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<Field> {
    if u.time_grid() != v.time_grid() {
        return Err(Error::TimeGrid("trajectories on different time grids".into()));
    }
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let target = u.time_grid().index_of(t)?;
    let all = duhamel_all(u, v, quad, Some(target))?;
    Ok(all.into_iter().next_back().unwrap())
}

/// Duhamel term at every stored time up to `up_to` (inclusive; None = all).
/// Shares the integrand samples across targets.
pub fn duhamel_all(
    u: &Trajectory,
    v: &Trajectory,
    quad: &QuadratureConfig,
    up_to: Option<usize>,
) -> Result<Vec<Field>> {
    if !(quad.gamma >= 0.0 && quad.gamma < 1.0) {
        return Err(Error::InvalidExponent(format!(
            "first-panel exponent gamma = {} outside [0, 1)",
            quad.gamma
        )));
    }
    let grid = *u.grid();
    let n = grid.dim();
    let cells = grid.cell_count();
    let times = u.time_grid().times();
    let last = up_to.unwrap_or(times.len() - 1);

    // Integrand samples w_m = P div(u o v)(t_m), spectral.
    let samples: Vec<Result<Field>> = parallel_map(
        (0..=last).collect::<Vec<_>>(),
        |m| nonlinear_term(u.field(m), v.field(m)),
    );
    let samples: Vec<Field> = samples.into_iter().collect::<Result<_>>()?;

    // First-panel profile integral J(mu t_1) =
    // int_0^1 e^{-mu t_1 (1 - sigma)} sigma^(-gamma) dsigma via sigma = y^c.
    let c = 1.0 / (1.0 - quad.gamma);
    let (gl_nodes, gl_weights) = gauss_legendre_unit(quad.nodes.max(8));
    let t1 = times[0];
    let mut first_profile = vec![0.0f64; cells];
    for idx in 0..cells {
        let xi = grid.frequency(idx);
        let mu = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let mut j = 0.0;
        for (y, w) in gl_nodes.iter().zip(&gl_weights) {
            let sigma = y.powf(c);
            j += w * (-mu * t1 * (1.0 - sigma)).exp();
        }
        first_profile[idx] = c * j;
    }

    let mus: Vec<f64> = (0..cells)
        .map(|idx| {
            let xi = grid.frequency(idx);
            xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
        })
        .collect();

    // Target-independent panel tables: for [t_m, t_{m+1}] the product
    // integration reads c_a = e^(-mu (t - t_{m+1})) pa_m and
    // c_b = e^(-mu (t - t_{m+1})) pb_m, and the target factor is the
    // running product of decay_m = e^(-mu (t_{m+1} - t_m)).
    let mut pa = Vec::with_capacity(last);
    let mut pb = Vec::with_capacity(last);
    let mut decay = Vec::with_capacity(last);
    for m in 0..last {
        let dt = times[m + 1] - times[m];
        let mut pam = vec![0.0f64; cells];
        let mut pbm = vec![0.0f64; cells];
        let mut dm = vec![0.0f64; cells];
        for idx in 0..cells {
            let mu = mus[idx];
            if mu == 0.0 {
                pam[idx] = 0.5 * dt;
                pbm[idx] = 0.5 * dt;
                dm[idx] = 1.0;
            } else {
                let z = mu * dt;
                let (g1, g2) = panel_kernels(z);
                pam[idx] = g1 / (mu * z);
                pbm[idx] = g2 / (mu * z);
                dm[idx] = (-z).exp();
            }
        }
        pa.push(pam);
        pb.push(pbm);
        decay.push(dm);
    }

    let targets: Vec<usize> = (0..=last).collect();
    let outputs: Vec<Result<Field>> = parallel_map(targets, |it| {
        let mut acc = vec![Complex64::default(); n * cells];
        // Running e^(-mu (t_it - t_{m+1})), starting at the top panel.
        let mut eb = vec![1.0f64; cells];
        for m in (0..it).rev() {
            let pam = &pa[m];
            let pbm = &pb[m];
            let dm = &decay[m];
            for comp in 0..n {
                let wa = samples[m].component(comp);
                let wb = samples[m + 1].component(comp);
                let slot = &mut acc[comp * cells..(comp + 1) * cells];
                for idx in 0..cells {
                    let e = eb[idx];
                    slot[idx] += wa[idx] * (e * pam[idx]) + wb[idx] * (e * pbm[idx]);
                }
            }
            for idx in 0..cells {
                eb[idx] *= dm[idx];
            }
        }
        // First panel [0, t_1] against the modeled profile; after the loop
        // eb = e^(-mu (t_it - t_1)).
        {
            let w0 = &samples[0];
            for comp in 0..n {
                let w = w0.component(comp);
                let slot = &mut acc[comp * cells..(comp + 1) * cells];
                for idx in 0..cells {
                    slot[idx] += w[idx] * (eb[idx] * t1 * first_profile[idx]);
                }
            }
        }
        for z in acc.iter_mut() {
            *z = -*z;
        }
        let hat = Field::from_raw(grid, n, Representation::Spectral, acc);
        leray_project(&hat)?.to_physical()
    });
    outputs.into_iter().collect()
}

/// The two parts of the X norm and their per-time curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XNorm {
    pub total: f64,
    /// sup over stored times of the critical Besov-weak-Herz norm.
    pub critical: f64,
    /// sup over stored times of t^w times the doubled-exponent weak-Herz
    /// norm.
    pub weighted: f64,
    pub critical_curve: Vec<f64>,
    pub weighted_curve: Vec<f64>,
}

/// X norm of a trajectory: critical part plus weighted doubled-exponent
/// part.
pub fn x_norm(u: &Trajectory, mp: &MildParams, family: &LpFamily) -> Result<XNorm> {
    let critical_space = mp.critical_space();
    let doubled = mp.doubled_space();
    let times = u.time_grid().times().to_vec();
    let per_time: Vec<Result<(f64, f64)>> = parallel_map(
        (0..u.len()).collect::<Vec<_>>(),
        |i| {
            let f = u.field(i);
            let crit = besov_wh_norm(f, family, &critical_space)?.aggregate;
            let mag = f.magnitude()?;
            let weighted = times[i].powf(mp.weight) * weak_herz_norm(&mag, &doubled)?.aggregate;
            Ok((crit, weighted))
        },
    );
    let mut critical_curve = Vec::with_capacity(u.len());
    let mut weighted_curve = Vec::with_capacity(u.len());
    for r in per_time {
        let (c, w) = r?;
        critical_curve.push(c);
        weighted_curve.push(w);
    }
    let critical = critical_curve.iter().cloned().fold(0.0, f64::max);
    let weighted = weighted_curve.iter().cloned().fold(0.0, f64::max);
    Ok(XNorm {
        total: critical + weighted,
        critical,
        weighted,
        critical_curve,
        weighted_curve,
    })
}

/// First iterate of the Picard scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStart {
    /// u^(0)(t) = G(t) u0 (the usual choice).
    HeatFlow,
    /// u^(0) = 0 (uniqueness experiments).
    Zero,
}

/// Picard iteration u^(m+1) = G(t) u0 + B(u^(m), u^(m)); stops when the
/// X norm of the difference drops below `tol`. A growing history (three
/// consecutive increases) stops the iteration and marks the trajectory
/// diverged rather than failing.
pub fn picard_solve(
    u0: &Field,
    mp: &MildParams,
    tg: &TimeGrid,
    family: &LpFamily,
    tol: f64,
    max_iter: usize,
    start: PicardStart,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    if u0.components() != grid.dim() {
        return Err(Error::ComponentCount {
            expected: grid.dim(),
            found: u0.components(),
        });
    }
    let (u0, projected_initial) = prepared_initial(u0)?;

    let quad = QuadratureConfig::for_params(mp);
    let linear = Trajectory::heat_flow(&u0, tg)?;
    let mut current: Vec<Field> = match start {
        PicardStart::HeatFlow => linear.fields().to_vec(),
        PicardStart::Zero => vec![Field::zeros(grid, grid.dim()); tg.len()],
    };
    let mut history: Vec<f64> = Vec::new();
    let mut convergence = Convergence::MaxIterations {
        iterations: max_iter,
    };
    for iteration in 1..=max_iter {
        let prev = Trajectory::from_fields(tg.clone(), current.clone())?;
        let correction = duhamel_all(&prev, &prev, &quad, None)?;
        let mut next = Vec::with_capacity(tg.len());
        for (lin, b) in linear.fields().iter().zip(correction) {
            next.push(lin.add(&b)?);
        }
        let diff_fields: Vec<Field> = next
            .iter()
            .zip(&current)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        let diff = Trajectory::from_fields(tg.clone(), diff_fields)?;
        let d = x_norm(&diff, mp, family)?.total;
        history.push(d);
        current = next;
        if d < tol {
            convergence = Convergence::Converged {
                iterations: iteration,
            };
            break;
        }
        let len = history.len();
        if len >= 4
            && history[len - 1] > history[len - 2]
            && history[len - 2] > history[len - 3]
            && history[len - 3] > history[len - 4]
        {
            convergence = Convergence::Diverged {
                at_iteration: iteration,
            };
            break;
        }
    }

    // Empirical contraction ratio from the tail of a decaying history.
    let contraction_ratio = if history.len() >= 2 {
        let ratios: Vec<f64> = history
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect();
        if ratios.is_empty() {
            None
        } else {
            let tail = &ratios[ratios.len().saturating_sub(3)..];
            Some(tail.iter().sum::<f64>() / tail.len() as f64)
        }
    } else {
        None
    };

    let mut out = Trajectory::from_fields(tg.clone(), current)?;
    out.history = history;
    out.convergence = convergence;
    out.contraction_ratio = contraction_ratio;
    out.projected_initial = projected_initial;
    Ok(out)
}

/// Initial data as the solver consumes it: projected when its spectral
/// divergence defect is visible, untouched otherwise.
fn prepared_initial(u0: &Field) -> Result<(Field, bool)> {
    let defect = divergence_defect(u0)?;
    let scale = u0.spectral()?.linf().max(1e-300);
    if defect > 1e-10 * scale {
        Ok((leray_project(&u0.physical()?)?, true))
    } else {
        Ok((u0.physical()?, false))
    }
}

/// Fixed-point residual ||u - (G(t) u0 + B(u, u))||_X of a trajectory.
pub fn fixed_point_residual(
    u: &Trajectory,
    u0: &Field,
    mp: &MildParams,
    family: &LpFamily,
) -> Result<f64> {
    let quad = QuadratureConfig::for_params(mp);
    let (u0, _) = prepared_initial(u0)?;
    let linear = Trajectory::heat_flow(&u0, u.time_grid())?;
    let correction = duhamel_all(u, u, &quad, None)?;
    let mut residual_fields = Vec::with_capacity(u.len());
    for ((stored, lin), b) in u.fields().iter().zip(linear.fields()).zip(correction) {
        residual_fields.push(stored.sub(&lin.add(&b)?)?);
    }
    let residual = Trajectory::from_fields(u.time_grid().clone(), residual_fields)?;
    Ok(x_norm(&residual, mp, family)?.total)
}

/// Integrating-factor RK4 reference integrator for the same spectral
/// system, stepping u' = -|xi|^2 u + N(u) with the heat factor exact and
/// the dealiased nonlinearity explicit. Stores states at the given time
/// grid; used as an independent quadrature-free oracle.
pub fn reference_solve(
    u0: &Field,
    tg: &TimeGrid,
    dt_max: f64,
    nonlinear: bool,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    let n = grid.dim();
    if u0.components() != n {
        return Err(Error::ComponentCount {
            expected: n,
            found: u0.components(),
        });
    }
    if !(dt_max > 0.0) {
        return Err(Error::TimeGrid(format!("dt_max = {dt_max} must be positive")));
    }
    // Advective stability heuristic for the explicit nonlinearity.
    let umax = u0.physical()?.linf().max(1e-12);
    let limit = 2.0 * grid.spacing() / umax;
    if nonlinear && dt_max > limit {
        return Err(Error::CflViolation {
            dt: dt_max,
            limit,
        });
    }

    let cells = grid.cell_count();
    let mus: Vec<f64> = (0..cells)
        .map(|idx| {
            let xi = grid.frequency(idx);
            xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
        })
        .collect();
    let half_factor = |dt: f64| -> Vec<f64> { mus.iter().map(|mu| (-mu * dt / 2.0).exp()).collect() };

    let apply = |f: &Field, factor: &[f64]| -> Field {
        let mut out = f.clone();
        for c in 0..n {
            let comp = out.component_mut(c);
            for idx in 0..cells {
                comp[idx] *= factor[idx];
            }
        }
        out
    };
    let nonlin = |f: &Field| -> Result<Field> {
        if nonlinear {
            let phys = f.to_physical()?;
            Ok(nonlinear_term(&phys, &phys)?.scale(-1.0))
        } else {
            Ok(Field::from_raw(
                grid,
                n,
                Representation::Spectral,
                vec![Complex64::default(); n * cells],
            ))
        }
    };

    let mut state = u0.spectral()?;
    let mut t = 0.0f64;
    let mut stored = Vec::with_capacity(tg.len());
    for &target in tg.times() {
        let span = target - t;
        let steps = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let e_half = half_factor(dt);
        for _ in 0..steps {
            let n1 = nonlin(&state)?;
            let ua = apply(&state.add(&n1.scale(dt / 2.0))?, &e_half);
            let n2 = nonlin(&ua)?;
            let ub = apply(&state, &e_half).add(&n2.scale(dt / 2.0))?;
            let n3 = nonlin(&ub)?;
            let uc = apply(&apply(&state, &e_half).add(&n3.scale(dt))?, &e_half);
            let n4 = nonlin(&uc)?;
            let mut next = apply(&apply(&state, &e_half), &e_half);
            next = next.add(&apply(&apply(&n1, &e_half), &e_half).scale(dt / 6.0))?;
            next = next.add(&apply(&n2, &e_half).scale(dt / 3.0))?;
            next = next.add(&apply(&n3, &e_half).scale(dt / 3.0))?;
            next = next.add(&n4.scale(dt / 6.0))?;
            state = next;
        }
        t = target;
        stored.push(state.to_physical()?);
    }
    Trajectory::from_fields(tg.clone(), stored)
}

/// Per-pair relative discrepancy between u(t) and the parabolic rescaling
/// lambda u(lambda x, lambda^2 t).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarReport {
    /// (t_low, t_high, relative L2 discrepancy on the comparison annulus).
    pub pairs: Vec<(f64, f64, f64)>,
    pub max_discrepancy: f64,
}

/// Check self-similarity: for homogeneous degree -1 data the solution obeys
/// u(x, t) = lambda u(lambda x, lambda^2 t). `lambda^2` must be an integer
/// power of the time-grid ratio so matched pairs land on stored times.
pub fn self_similar_check(u: &Trajectory, lambda: f64) -> Result<SelfSimilarReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidExponent(format!("lambda = {lambda} must be positive")));
    }
    let rho = u.time_grid().ratio();
    let shift_f = (lambda * lambda).ln() / rho.ln();
    let shift = shift_f.round();
    if (shift_f - shift).abs() > 1e-6 || shift < 1.0 {
        return Err(Error::TimeGrid(format!(
            "lambda^2 = {} is not a positive integer power of the grid ratio {rho}",
            lambda * lambda
        )));
    }
    let shift = shift as usize;
    let grid = u.grid();
    let h = grid.spacing();
    let r_lo = 8.0 * h;
    let r_hi = grid.half_width() / (2.0 * lambda.max(1.0));
    let region: Vec<usize> = (0..grid.cell_count())
        .filter(|&i| {
            let r = grid.radius(i);
            r >= r_lo && r <= r_hi
        })
        .collect();
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }

    let mut pairs = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..u.len().saturating_sub(shift) {
        let low = u.field(i);
        let high = u.field(i + shift);
        let rescaled = rescale(high, lambda)?.field;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for &idx in &region {
            for c in 0..low.components() {
                let d = low.component(c)[idx].re - rescaled.component(c)[idx].re;
                num += d * d;
                let v = low.component(c)[idx].re;
                den += v * v;
            }
        }
        let rel = if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (num / den).sqrt()
        };
        worst = worst.max(rel);
        pairs.push((u.time_grid().times()[i], u.time_grid().times()[i + shift], rel));
    }
    Ok(SelfSimilarReport {
        pairs,
        max_discrepancy: worst,
    })
}

/// Critical-norm distance between two trajectories at each stored time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub final_over_initial: f64,
    /// Fraction of consecutive decreases over the last decade of times.
    pub tail_decreasing_fraction: f64,
}

pub fn asymptotic_compare(
    u: &Trajectory,
    v: &Trajectory,
    mp: &MildParams,
    family: &LpFamily,
) -> Result<DecayCurve> {
    if u.time_grid() != v.time_grid() {
        return Err(Error::TimeGrid("trajectories on different time grids".into()));
    }
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let space = mp.critical_space();
    let indices: Vec<usize> = (0..u.len()).collect();
    let values: Vec<Result<f64>> = parallel_map(indices, |i| {
        let diff = u.field(i).sub(v.field(i))?;
        Ok(besov_wh_norm(&diff, family, &space)?.aggregate)
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let times = u.time_grid().times().to_vec();
    let first = values.first().copied().unwrap_or(0.0);
    let last = values.last().copied().unwrap_or(0.0);
    let final_over_initial = if first == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        last / first
    };
    let t_max = *times.last().unwrap();
    let tail: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t_max / 10.0).collect();
    let mut dec = 0usize;
    let mut total = 0usize;
    for w in tail.windows(2) {
        total += 1;
        if values[w[1]] <= values[w[0]] {
            dec += 1;
        }
    }
    let tail_decreasing_fraction = if total == 0 {
        1.0
    } else {
        dec as f64 / total as f64
    };
    Ok(DecayCurve {
        times,
        values,
        final_over_initial,
        tail_decreasing_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_derives_exponents() {
        let mp = admissible(3, 2.0, f64::INFINITY, 0.1).unwrap();
        assert!((mp.s - 0.6).abs() < 1e-12);
        assert!((mp.weight - 0.075).abs() < 1e-12);
        assert!((mp.first_panel_exponent() - (1.0 - 0.1 - 0.75)).abs() < 1e-12);
    }

    #[test]
    fn admissible_rejects_each_hypothesis_separately() {
        match admissible(3, 1.5, f64::INFINITY, 0.1) {
            Err(Error::MildPTooSmall { .. }) => {}
            other => panic!("expected p <= n/2 rejection, got {other:?}"),
        }
        match admissible(2, 2.0, f64::INFINITY, 0.5) {
            Err(Error::MildAlphaWindow { bound, .. }) => {
                assert!((bound - 0.5).abs() < 1e-12)
            }
            other => panic!("expected alpha window rejection, got {other:?}"),
        }
        match admissible(2, f64::INFINITY, 1.0, 0.0) {
            Err(Error::MildPInfinite) => {}
            other => panic!("expected p < inf rejection, got {other:?}"),
        }
        match admissible(2, 2.0, 0.5, 0.0) {
            Err(Error::MildQRange { .. }) => {}
            other => panic!("expected q range rejection, got {other:?}"),
        }
        match admissible(2, 2.0, 2.0, -0.1) {
            Err(Error::MildAlphaNegative { .. }) => {}
            other => panic!("expected alpha >= 0 rejection, got {other:?}"),
        }
    }

    #[test]
    fn standard_time_grid_hits_four() {
        let tg = TimeGrid::standard();
        assert_eq!(tg.len(), 49);
        assert!((tg.t_max() - 4.0).abs() < 1e-12);
        assert!(tg.t_min() < 1.1e-3);
        assert!((tg.ratio() - (2.0f64).powf(0.25)).abs() < 1e-15);
        let idx = tg.index_of(tg.times()[17]).unwrap();
        assert_eq!(idx, 17);
        assert!(tg.index_of(0.777).is_err());
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::geometric(0.0, 1.2, 5).is_err());
        assert!(TimeGrid::geometric(1e-3, 2.5, 5).is_err());
        assert!(TimeGrid::geometric(1e-3, 1.2, 1).is_err());
    }

    #[test]
    fn panel_kernels_match_series_and_direct() {
        // Near the branch switch the direct form carries ~1e-9 relative
        // cancellation noise; the series side is the accurate one.
        for z in [1e-6, 5e-4, 1e-3, 2e-3, 0.1, 1.0, 10.0] {
            let (g1, g2) = panel_kernels(z);
            let e = (-z).exp();
            let d1 = 1.0 - (1.0 + z) * e;
            let d2 = z - 1.0 + e;
            assert!((g1 - d1).abs() < 1e-8 * d1.abs() + 1e-15, "g1 at {z}");
            assert!((g2 - d2).abs() < 1e-8 * d2.abs() + 1e-15, "g2 at {z}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(8);
        // int_0^1 x^k dx = 1/(k+1) for k well under 2n.
        for k in 0..10u32 {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "k = {k}: {got}");
        }
    }
}

/// Manifest of a persisted trajectory directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub ratio: f64,
    pub history: Vec<f64>,
    pub convergence: Convergence,
    pub contraction_ratio: Option<f64>,
    pub projected_initial: bool,
    pub extra: serde_json::Value,
}

/// Persist a trajectory as a directory: manifest.json, history.csv and one
/// BHF1 field file per stored time.
pub fn save_trajectory(
    dir: &std::path::Path,
    traj: &Trajectory,
    extra: serde_json::Value,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = TrajectoryManifest {
        grid: *traj.grid(),
        times: traj.time_grid().times().to_vec(),
        ratio: traj.time_grid().ratio(),
        history: traj.history.clone(),
        convergence: traj.convergence,
        contraction_ratio: traj.contraction_ratio,
        projected_initial: traj.projected_initial,
        extra,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Header(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    let mut csv = String::from("iteration,x_norm_diff\n");
    for (i, d) in traj.history.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, d));
    }
    std::fs::write(dir.join("history.csv"), csv)?;
    for (i, f) in traj.fields().iter().enumerate() {
        crate::io::write_field(f, &dir.join(format!("field_{i:04}.bhf")))?;
    }
    Ok(())
}

/// Load a trajectory saved by [`save_trajectory`].
pub fn load_trajectory(dir: &std::path::Path) -> Result<(Trajectory, serde_json::Value)> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: TrajectoryManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Header(format!("manifest parse: {e}")))?;
    let tg = TimeGrid::geometric(manifest.times[0], manifest.ratio, manifest.times.len())?;
    let mut fields = Vec::with_capacity(manifest.times.len());
    for i in 0..manifest.times.len() {
        fields.push(crate::io::read_field(&dir.join(format!("field_{i:04}.bhf")))?);
    }
    let mut traj = Trajectory::from_fields(tg, fields)?;
    traj.history = manifest.history;
    traj.convergence = manifest.convergence;
    traj.contraction_ratio = manifest.contraction_ratio;
    traj.projected_initial = manifest.projected_initial;
    Ok((traj, manifest.extra))
}
