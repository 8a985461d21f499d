//! Homogeneous weak-Herz norms over dyadic annuli, a Morrey norm for the
//! non-inclusion experiment, and the Hoelder inequality check.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::weak_lp::{lp_region, weak_lp_region};
use serde::{Deserialize, Serialize};

/// Exponent bundle (alpha, p, q) of a weak-Herz space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerzParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl HerzParams {
    pub fn new(alpha: f64, p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidExponent(format!("p = {p} must exceed 1")));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidExponent(format!("q = {q} must be >= 1")));
        }
        Ok(HerzParams { alpha, p, q })
    }

    /// Admissibility window -n/p < alpha < n(1 - 1/p) required by the
    /// convolution and multiplier operator estimates.
    pub fn check_window(&self, n: usize) -> Result<()> {
        let nf = n as f64;
        let lo = -nf / self.p;
        let hi = nf * (1.0 - 1.0 / self.p);
        if self.alpha <= lo || self.alpha >= hi {
            return Err(Error::InvalidExponent(format!(
                "alpha = {} outside the admissible window ({lo}, {hi})",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// l^q aggregate of nonnegative entries; q = inf is the sup.
pub fn ell_q(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        values.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Weighted per-annulus weak norms and their l^q aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusProfile {
    /// (k, 2^(k alpha) ||f||_{L^{p,inf}(A_k)}) over the resolvable range.
    pub entries: Vec<(i32, f64)>,
    pub aggregate: f64,
    /// Profile values at the two boundary annuli of the truncated sum.
    pub truncation_tail: (f64, f64),
    /// Both boundary entries are below 5% of the aggregate.
    pub converged: bool,
}

/// Cells of each resolvable annulus, in one pass over the grid; cached per
/// grid since the bucketing is pure geometry.
pub fn annuli_partition(grid: &Grid) -> std::rc::Rc<Vec<(i32, Vec<usize>)>> {
    use std::cell::RefCell;
    use std::collections::HashMap;
    use std::rc::Rc;
    thread_local! {
        static CACHE: RefCell<HashMap<(usize, usize, u64), Rc<Vec<(i32, Vec<usize>)>>>> =
            RefCell::new(HashMap::new());
    }
    let key = (grid.dim(), grid.size(), grid.half_width().to_bits());
    CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| {
                let (lo, hi) = grid.annulus_range();
                let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); (hi - lo + 1) as usize];
                for idx in 0..grid.cell_count() {
                    if let Some(k) = grid.annulus_of(idx) {
                        if k >= lo && k <= hi {
                            buckets[(k - lo) as usize].push(idx);
                        }
                    }
                }
                Rc::new(
                    buckets
                        .into_iter()
                        .enumerate()
                        .map(|(i, cells)| (lo + i as i32, cells))
                        .collect(),
                )
            })
            .clone()
    })
}

/// Weak-Herz norm: l^q over resolvable k of 2^(k alpha) weighted restricted
/// weak-Lp norms on the annuli A_k.
pub fn weak_herz_norm(f: &Field, hp: &HerzParams) -> Result<AnnulusProfile> {
    let mut entries = Vec::new();
    for (k, cells) in annuli_partition(f.grid()).iter() {
        let w = if cells.is_empty() {
            0.0
        } else {
            weak_lp_region(f, cells, hp.p)?
        };
        entries.push((*k, (2.0f64).powi(*k).powf(hp.alpha) * w));
    }
    let aggregate = ell_q(entries.iter().map(|e| e.1), hp.q);
    let tail = (
        entries.first().map(|e| e.1).unwrap_or(0.0),
        entries.last().map(|e| e.1).unwrap_or(0.0),
    );
    let converged = aggregate == 0.0 || (tail.0 < 0.05 * aggregate && tail.1 < 0.05 * aggregate);
    Ok(AnnulusProfile {
        entries,
        aggregate,
        truncation_tail: tail,
        converged,
    })
}

/// Result of [`morrey_norm`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorreyReport {
    pub value: f64,
    /// Ratio of the ball-restricted integral of |f|^q, with the cell nearest
    /// the ball center excluded, between this grid and its 2x coarsening.
    /// Values well above 1 flag divergence under refinement.
    pub refinement_flag: f64,
    /// Index into the ball list where the sup is attained.
    pub best_ball: usize,
}

/// Morrey norm sup over prescribed balls of |B|^(1/r - 1/q) ||f||_{L^q(B)},
/// with |B| the continuum ball volume.
pub fn morrey_norm(
    f: &Field,
    q: f64,
    r: f64,
    balls: &[([f64; 3], f64)],
) -> Result<MorreyReport> {
    f.assert_physical()?;
    if !(1.0 <= q && q <= r) || !r.is_finite() {
        return Err(Error::InvalidExponent(format!(
            "Morrey exponents need 1 <= q <= r < inf, got q = {q}, r = {r}"
        )));
    }
    if balls.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let grid = *f.grid();
    let n = grid.dim() as f64;
    let vn = crate::presets::unit_ball_volume(grid.dim());
    let mut value = 0.0f64;
    let mut best = 0usize;
    for (i, &(center, radius)) in balls.iter().enumerate() {
        let cells = grid.ball_cells(center, radius);
        if cells.is_empty() {
            continue;
        }
        let lq = lp_region(f, &cells, q)?;
        let measure = vn * radius.powf(n);
        let v = measure.powf(1.0 / r - 1.0 / q) * lq;
        if v > value {
            value = v;
            best = i;
        }
    }

    // Refinement flag on the sup-attaining ball: compare the integral of
    // |f|^q over the ball minus its center cell against the same integral on
    // the stride-2 sublattice through that cell (cell measure (2h)^n).
    let (center, radius) = balls[best];
    let comp = f.component(0);
    let center_idx = nearest_cell(&grid, center);
    let center_m = grid.decompose(center_idx);
    let hn = grid.cell_volume();
    let mut fine = 0.0f64;
    let mut coarse = 0.0f64;
    for idx in grid.ball_cells(center, radius) {
        if idx == center_idx {
            continue;
        }
        let v = comp[idx].re.abs().powf(q) * hn;
        fine += v;
        let m = grid.decompose(idx);
        let on_sublattice = (0..grid.dim()).all(|a| (m[a] + grid.size() - center_m[a]) % 2 == 0);
        if on_sublattice {
            coarse += v * (2.0f64).powi(grid.dim() as i32);
        }
    }
    let refinement_flag = if fine == 0.0 && coarse == 0.0 {
        1.0
    } else if coarse == 0.0 {
        f64::INFINITY
    } else {
        fine / coarse
    };
    Ok(MorreyReport {
        value,
        refinement_flag,
        best_ball: best,
    })
}

fn nearest_cell(grid: &Grid, point: [f64; 3]) -> usize {
    let h = grid.spacing();
    let nn = grid.size() as i64;
    let mut m = [0usize; 3];
    for a in 0..grid.dim() {
        let raw = ((point[a] + grid.half_width()) / h).round() as i64;
        m[a] = raw.rem_euclid(nn) as usize;
    }
    grid.flatten(m)
}

/// Result of [`holder_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Check ||fg||_{WK(alpha, p, q)} <= C ||f|| ||g|| for a Hoelder split with
/// 1/p = 1/p1 + 1/p2, 1/q = 1/q1 + 1/q2 and alpha = alpha1 + alpha2.
pub fn holder_check(
    f: &Field,
    g: &Field,
    full: &HerzParams,
    split1: &HerzParams,
    split2: &HerzParams,
) -> Result<HolderReport> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    if (inv(full.p) - inv(split1.p) - inv(split2.p)).abs() > 1e-9 {
        return Err(Error::InvalidExponent(format!(
            "1/p = {} but 1/p1 + 1/p2 = {}",
            inv(full.p),
            inv(split1.p) + inv(split2.p)
        )));
    }
    if (inv(full.q) - inv(split1.q) - inv(split2.q)).abs() > 1e-9 {
        return Err(Error::InvalidExponent(format!(
            "1/q = {} but 1/q1 + 1/q2 = {}",
            inv(full.q),
            inv(split1.q) + inv(split2.q)
        )));
    }
    if (full.alpha - split1.alpha - split2.alpha).abs() > 1e-9 {
        return Err(Error::InvalidExponent(format!(
            "alpha = {} but alpha1 + alpha2 = {}",
            full.alpha,
            split1.alpha + split2.alpha
        )));
    }
    let product = f.mul_pointwise(g)?;
    let lhs = weak_herz_norm(&product, full)?.aggregate;
    let nf = weak_herz_norm(f, split1)?.aggregate;
    let ng = weak_herz_norm(g, split2)?.aggregate;
    let rhs = nf * ng;
    let ratio = if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    };
    Ok(HolderReport { lhs, rhs, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{preset_field, Preset};
    use crate::weak_lp::whole_grid;

    fn grid() -> Grid {
        Grid::new(2, 256, 16.0).unwrap()
    }

    fn params(alpha: f64, p: f64, q: f64) -> HerzParams {
        HerzParams::new(alpha, p, q).unwrap()
    }

    #[test]
    fn power_profile_is_flat_across_annuli() {
        // |x|^(-n/p) restricted weak norms are invariant under the dyadic
        // shift, so the alpha = 0 profile is constant over resolvable k.
        let g = grid();
        let f = preset_field(&Preset::Power { a: 1.0 }, &g).unwrap();
        let profile = weak_herz_norm(&f, &params(0.0, 2.0, f64::INFINITY)).unwrap();
        let values: Vec<f64> = profile.entries.iter().map(|e| e.1).collect();
        let mid = values[values.len() / 2];
        for (k, v) in &profile.entries {
            assert!(
                (v - mid).abs() < 0.05 * mid,
                "profile not flat at k = {k}: {v} vs {mid}"
            );
        }
    }

    #[test]
    fn indicator_profile_has_single_entry() {
        let g = grid();
        let f = preset_field(&Preset::AnnulusIndicator { k: 0 }, &g).unwrap();
        let profile = weak_herz_norm(&f, &params(1.0, 2.0, f64::INFINITY)).unwrap();
        let anchor = (3.0 * std::f64::consts::PI / 4.0f64).sqrt();
        for (k, v) in &profile.entries {
            if *k == 0 {
                assert!((v - anchor).abs() < 0.02 * anchor, "entry {v} vs {anchor}");
            } else {
                assert_eq!(*v, 0.0, "unexpected mass at k = {k}");
            }
        }
        assert!((profile.aggregate - anchor).abs() < 0.02 * anchor);
    }

    #[test]
    fn ell_infinity_below_ell_one() {
        let g = grid();
        let f = preset_field(&Preset::Gaussian { sigma: 2.0 }, &g).unwrap();
        let sup = weak_herz_norm(&f, &params(0.3, 2.0, f64::INFINITY)).unwrap();
        let sum = weak_herz_norm(&f, &params(0.3, 2.0, 1.0)).unwrap();
        assert!(sup.aggregate <= sum.aggregate * (1.0 + 1e-12));
    }

    #[test]
    fn embedding_chain_weak_herz_below_weak_lp_below_lp() {
        let g = grid();
        for preset in [Preset::Gaussian { sigma: 1.0 }, Preset::Power { a: 0.7 }] {
            let f = preset_field(&preset, &g).unwrap();
            let all = whole_grid(&f);
            let wk = weak_herz_norm(&f, &params(0.0, 2.0, f64::INFINITY)).unwrap();
            let weak_global = weak_lp_region(&f, &all, 2.0).unwrap();
            let lp_global = lp_region(&f, &all, 2.0).unwrap();
            assert!(wk.aggregate <= weak_global * (1.0 + 1e-12));
            assert!(weak_global <= lp_global * (1.0 + 1e-12));
        }
    }

    #[test]
    fn quasi_norm_homogeneity_is_exact() {
        let g = grid();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let hp = params(0.5, 3.0, 2.0);
        let base = weak_herz_norm(&f, &hp).unwrap().aggregate;
        let scaled = weak_herz_norm(&f.scale(4.0), &hp).unwrap().aggregate;
        assert!((scaled - 4.0 * base).abs() < 1e-12 * scaled);
    }

    #[test]
    fn strictness_witness_grows_globally_but_not_per_annulus() {
        let g = grid();
        let p = 2.0;
        let single = preset_field(&Preset::StrictnessWitness { p, bumps: 1 }, &g).unwrap();
        let all = whole_grid(&single);
        let base_global = weak_lp_region(&single, &all, p).unwrap();
        let base_profile = weak_herz_norm(&single, &params(0.0, p, f64::INFINITY)).unwrap();
        let mut last = 0.0;
        for m in 1..=4usize {
            let f = preset_field(&Preset::StrictnessWitness { p, bumps: m }, &g).unwrap();
            let global = weak_lp_region(&f, &all, p).unwrap();
            assert!(global >= last, "global weak norm not monotone");
            last = global;
            assert!(
                global >= 0.5 * (m as f64).powf(1.0 / p) * base_global,
                "m = {m}: {global} vs base {base_global}"
            );
            let profile = weak_herz_norm(&f, &params(0.0, p, f64::INFINITY)).unwrap();
            assert!(
                profile.aggregate <= base_profile.aggregate * 1.05,
                "per-annulus profile should stay bounded"
            );
        }
    }

    #[test]
    fn morrey_detects_critical_divergence() {
        let g = grid();
        let f = preset_field(&Preset::Power { a: 1.0 }, &g).unwrap();
        let report = morrey_norm(&f, 2.0, 2.0, &[([0.0; 3], 1.0)]).unwrap();
        assert!(
            report.refinement_flag >= 1.2,
            "refinement flag {} below 1.2",
            report.refinement_flag
        );
    }

    #[test]
    fn morrey_indicator_is_finite_and_stable() {
        let g = grid();
        let f = preset_field(&Preset::AnnulusIndicator { k: 0 }, &g).unwrap();
        let report = morrey_norm(&f, 2.0, 2.0, &[([0.0; 3], 1.0)]).unwrap();
        // B(0,1) covers A_0 entirely: restricted L2 norm = |A_0|^(1/2).
        let anchor = (3.0 * std::f64::consts::PI / 4.0f64).sqrt();
        assert!((report.value - anchor).abs() < 0.02 * anchor);
        assert!((report.refinement_flag - 1.0).abs() < 0.25);
    }

    #[test]
    fn morrey_zero_field() {
        let g = grid();
        let f = Field::zeros(g, 1);
        let report = morrey_norm(&f, 2.0, 2.0, &[([0.0; 3], 1.0)]).unwrap();
        assert_eq!(report.value, 0.0);
        assert_eq!(report.refinement_flag, 1.0);
    }

    #[test]
    fn holder_exact_on_indicators() {
        let g = grid();
        let f = preset_field(&Preset::AnnulusIndicator { k: 0 }, &g).unwrap();
        let report = holder_check(
            &f,
            &f,
            &params(0.0, 2.0, f64::INFINITY),
            &params(0.0, 4.0, f64::INFINITY),
            &params(0.0, 4.0, f64::INFINITY),
        )
        .unwrap();
        assert!(
            (report.ratio - 1.0).abs() < 1e-10,
            "indicator Hoelder ratio {}",
            report.ratio
        );
    }

    #[test]
    fn holder_disjoint_supports_gives_zero() {
        let g = grid();
        let f = preset_field(&Preset::AnnulusIndicator { k: 0 }, &g).unwrap();
        let h = preset_field(&Preset::AnnulusIndicator { k: 2 }, &g).unwrap();
        let report = holder_check(
            &f,
            &h,
            &params(0.0, 2.0, f64::INFINITY),
            &params(0.0, 4.0, f64::INFINITY),
            &params(0.0, 4.0, f64::INFINITY),
        )
        .unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.ratio, 0.0);
    }

    #[test]
    fn holder_rejects_bad_arithmetic() {
        let g = grid();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let err = holder_check(
            &f,
            &f,
            &params(0.0, 2.0, f64::INFINITY),
            &params(0.0, 3.0, f64::INFINITY),
            &params(0.0, 4.0, f64::INFINITY),
        )
        .unwrap_err();
        assert!(err.to_string().contains("1/p"));
    }

    #[test]
    fn holder_with_sup_factor_is_pointwise_bound() {
        let g = grid();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        let rot = preset_field(&Preset::Power { a: 0.5 }, &g).unwrap();
        let full = params(0.4, 2.0, 2.0);
        let report = holder_check(
            &rot,
            &f,
            &full,
            &params(0.4, 2.0, 2.0),
            &params(0.0, f64::INFINITY, f64::INFINITY),
        )
        .unwrap();
        assert!(report.ratio <= 1.0 + 1e-12, "ratio {}", report.ratio);
    }
}
