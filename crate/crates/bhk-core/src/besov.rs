//! Sobolev- and Besov-type norms built on weak-Herz norms of dyadic blocks.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::herz::{ell_q, weak_herz_norm, HerzParams};
use crate::lp::{riesz_potential, LpFamily};
use crate::weak_lp::lp_region;
use serde::{Deserialize, Serialize};

/// Exponents (alpha, p, q, s, r) of a Besov-weak-Herz space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub herz: HerzParams,
    /// Regularity exponent.
    pub s: f64,
    /// Block summability in [1, inf].
    pub r: f64,
}

impl BesovParams {
    pub fn new(alpha: f64, p: f64, q: f64, s: f64, r: f64) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(Error::InvalidExponent(format!("r = {r} must be >= 1")));
        }
        Ok(BesovParams {
            herz: HerzParams::new(alpha, p, q)?,
            s,
            r,
        })
    }
}

/// Weighted per-block norms 2^(js) ||Delta_j f||_{WK} and their l^r
/// aggregate over the resolvable range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockProfile {
    pub entries: Vec<(i32, f64)>,
    pub aggregate: f64,
    pub truncation_tail: (f64, f64),
    pub converged: bool,
}

/// Weak-Herz norm of a block, reducing vector fields through the pointwise
/// Euclidean magnitude.
fn block_norm(block: &Field, hp: &HerzParams) -> Result<f64> {
    let scalar = if block.is_scalar() {
        block.clone()
    } else {
        block.magnitude()?
    };
    Ok(weak_herz_norm(&scalar, hp)?.aggregate)
}

/// Besov-weak-Herz norm: l^r over resolvable j of 2^(js) weighted weak-Herz
/// norms of the blocks Delta_j f.
pub fn besov_wh_norm(f: &Field, family: &LpFamily, bp: &BesovParams) -> Result<BlockProfile> {
    // Transform once; blocks are then pure spectral masks.
    let hat = f.spectral()?;
    let (lo, hi) = family.resolvable_range();
    let mut entries = Vec::new();
    for j in lo..=hi {
        let block = family.block(&hat, j)?.to_physical()?;
        let w = block_norm(&block, &bp.herz)?;
        entries.push((j, (2.0f64).powi(j).powf(bp.s) * w));
    }
    let aggregate = ell_q(entries.iter().map(|e| e.1), bp.r);
    let tail = (
        entries.first().map(|e| e.1).unwrap_or(0.0),
        entries.last().map(|e| e.1).unwrap_or(0.0),
    );
    let converged = aggregate == 0.0 || (tail.0 < 0.05 * aggregate && tail.1 < 0.05 * aggregate);
    Ok(BlockProfile {
        entries,
        aggregate,
        truncation_tail: tail,
        converged,
    })
}

/// Sobolev-weak-Herz norm ||I^s f||_{WK(alpha, p, q)}.
pub fn sobolev_wh_norm(f: &Field, hp: &HerzParams, s: f64) -> Result<f64> {
    let pot = riesz_potential(&f.physical()?, s)?;
    block_norm(&pot, hp)
}

/// Classical homogeneous Besov surrogate: same blocks, global Riemann Lp
/// norm in place of the weak-Herz norm.
pub fn besov_classical(f: &Field, family: &LpFamily, s: f64, p: f64, r: f64) -> Result<f64> {
    let phys = f.physical()?;
    let (lo, hi) = family.resolvable_range();
    let all: Vec<usize> = (0..f.grid().cell_count()).collect();
    let mut entries = Vec::new();
    for j in lo..=hi {
        let block = family.block(&phys, j)?;
        let scalar = if block.is_scalar() {
            block
        } else {
            block.magnitude()?
        };
        entries.push((2.0f64).powi(j).powf(s) * lp_region(&scalar, &all, p)?);
    }
    Ok(ell_q(entries.into_iter(), r))
}

/// Result of [`sobolev_embedding_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// The intermediate exponent solved from the alpha relation.
    pub p1: f64,
}

/// Check the Sobolev-type embedding: the norm in `dst` (weaker space, larger
/// integrability p) is controlled by the norm in `src` (p2 < p, higher
/// regularity), where the exponents must satisfy
/// alpha_src = alpha + n (1/p - 1/p1) and s_src = s + n (1/p2 - 1/p1)
/// for some p1 with p <= p1 < inf, p2 <= p1, and
/// -n/p < alpha < n (1 + 1/p1 - 1/p2 - 1/p).
pub fn sobolev_embedding_check(
    f: &Field,
    family: &LpFamily,
    dst: &BesovParams,
    src: &BesovParams,
) -> Result<EmbeddingReport> {
    let n = family.grid().dim() as f64;
    let (p, alpha, s) = (dst.herz.p, dst.herz.alpha, dst.s);
    let (p2, alpha2, s2) = (src.herz.p, src.herz.alpha, src.s);
    if dst.r != src.r || dst.herz.q != src.herz.q {
        return Err(Error::InvalidExponent(
            "q and r must agree between the two spaces".into(),
        ));
    }
    let inv_p1 = 1.0 / p - (alpha2 - alpha) / n;
    if inv_p1 <= 0.0 {
        return Err(Error::InvalidExponent(format!(
            "hypothesis p1 < inf fails: 1/p1 = {inv_p1} <= 0"
        )));
    }
    let p1 = 1.0 / inv_p1;
    if p1 + 1e-9 < p {
        return Err(Error::InvalidExponent(format!(
            "hypothesis p <= p1 fails: p1 = {p1} < p = {p}"
        )));
    }
    if p2 > p1 + 1e-9 {
        return Err(Error::InvalidExponent(format!(
            "hypothesis p2 <= p1 fails: p2 = {p2} > p1 = {p1}"
        )));
    }
    let s_expected = s + n * (1.0 / p2 - 1.0 / p1);
    if (s2 - s_expected).abs() > 1e-9 {
        return Err(Error::InvalidExponent(format!(
            "regularity relation fails: s_src = {s2}, expected {s_expected}"
        )));
    }
    let hi = n * (1.0 + 1.0 / p1 - 1.0 / p2 - 1.0 / p);
    if alpha <= -n / p || alpha >= hi {
        return Err(Error::InvalidExponent(format!(
            "hypothesis -n/p < alpha < {hi} fails: alpha = {alpha}"
        )));
    }
    let lhs = besov_wh_norm(f, family, dst)?.aggregate;
    let rhs = besov_wh_norm(f, family, src)?.aggregate;
    let ratio = if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    };
    Ok(EmbeddingReport { lhs, rhs, ratio, p1 })
}

/// Parameters of the doubling special case: dst = (alpha, s) at 2p, src =
/// (2 alpha, alpha + s + n/2p) at p.
pub fn doubling_pair(n: usize, p: f64, alpha: f64, s: f64, q: f64, r: f64) -> Result<(BesovParams, BesovParams)> {
    let nf = n as f64;
    let dst = BesovParams::new(alpha, 2.0 * p, q, s, r)?;
    let src = BesovParams::new(2.0 * alpha, p, q, alpha + s + nf / (2.0 * p), r)?;
    Ok((dst, src))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::ops::rescale;
    use crate::presets::{preset_field, Preset};

    fn grid() -> Grid {
        Grid::new(2, 128, 16.0).unwrap()
    }

    fn inf() -> f64 {
        f64::INFINITY
    }

    #[test]
    fn pure_block_profile_is_single_entry() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::RandomBandlimited { j: 2, seed: 11 }, &g).unwrap();
        let bp = BesovParams::new(0.0, 2.0, inf(), 0.7, inf()).unwrap();
        let profile = besov_wh_norm(&f, &family, &bp).unwrap();
        let hp = HerzParams::new(0.0, 2.0, inf()).unwrap();
        let base = weak_herz_norm(&f, &hp).unwrap().aggregate;
        for (j, v) in &profile.entries {
            if *j == 2 {
                let want = (2.0f64).powf(2.0 * 0.7) * base;
                assert!((v - want).abs() < 1e-10 * want, "entry {v} vs {want}");
            } else {
                assert!(*v < 1e-12 * base);
            }
        }
        assert!((profile.aggregate - (2.0f64).powf(1.4) * base).abs() < 1e-10 * base);
    }

    #[test]
    fn ell_one_dominates_ell_infinity() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 0.7 }, &g).unwrap();
        let sup = besov_wh_norm(&f, &family, &BesovParams::new(0.2, 2.0, inf(), 0.5, inf()).unwrap())
            .unwrap();
        let sum = besov_wh_norm(&f, &family, &BesovParams::new(0.2, 2.0, inf(), 0.5, 1.0).unwrap())
            .unwrap();
        assert!(sup.aggregate <= sum.aggregate * (1.0 + 1e-12));
    }

    #[test]
    fn sobolev_at_zero_regularity_matches_weak_herz_on_mean_zero_fields() {
        let g = grid();
        let d = g.freq_spacing();
        let f = Field::from_fn(g, move |x| {
            (3.0 * d * x[0]).cos() * (-0.1 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        let mean = f.mean(0).unwrap();
        let f = f.sub(&Field::from_fn(g, move |_| mean)).unwrap();
        let hp = HerzParams::new(0.0, 2.0, inf()).unwrap();
        let a = sobolev_wh_norm(&f, &hp, 0.0).unwrap();
        let b = weak_herz_norm(&f, &hp).unwrap().aggregate;
        assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
    }

    #[test]
    fn sobolev_scales_exactly_on_a_single_shell() {
        // Spectrum on one radius class: I^s is multiplication by rho^s, and
        // rho / 2^j lies in the pure band window (4/3, 3/2).
        let g = grid();
        let d = g.freq_spacing();
        // k = (11, 8) and (8, -11): rho = sqrt(185) d, and rho / 2 ~ 1.336
        // lies in the pure band (4/3, 3/2) of j = 1.
        let f = Field::from_fn(g, move |x| {
            (11.0 * d * x[0] + 8.0 * d * x[1]).cos() + (8.0 * d * x[0] - 11.0 * d * x[1]).sin()
        });
        let rho = (185.0f64).sqrt() * d;
        let hp = HerzParams::new(0.0, 2.0, inf()).unwrap();
        for s in [0.8, -0.6] {
            let a = sobolev_wh_norm(&f, &hp, s).unwrap();
            let b = weak_herz_norm(&f, &hp).unwrap().aggregate;
            let ratio = a / (b * rho.powf(s));
            assert!(
                (ratio - 1.0).abs() < 1e-9,
                "s = {s}: sobolev/whk = {}, rho^s = {}",
                a / b,
                rho.powf(s)
            );
            let scaled = rho.powf(s) / (2.0f64).powf(s);
            assert!(
                scaled >= (4.0f64 / 3.0).powf(s).min((1.5f64).powf(s)) - 1e-9
                    && scaled <= (4.0f64 / 3.0).powf(s).max((1.5f64).powf(s)) + 1e-9,
                "shell sits in the pure band window"
            );
        }
    }

    #[test]
    fn besov_sandwich_holds_with_loose_constants() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let hp = HerzParams::new(0.2, 2.0, inf()).unwrap();
        let s = 0.4;
        for seed in 0..5u64 {
            let mut f = Field::zeros(g, 1);
            let (lo, hi) = family.resolvable_range();
            for j in lo..=hi {
                let b = preset_field(
                    &Preset::RandomBandlimited { j, seed: seed * 31 + (j + 16) as u64 },
                    &g,
                )
                .unwrap();
                f = f.add(&b.scale(1.0 / (1.0 + j.abs() as f64))).unwrap();
            }
            let r1 = besov_wh_norm(&f, &family, &BesovParams { herz: hp, s, r: 1.0 })
                .unwrap()
                .aggregate;
            let rinf = besov_wh_norm(&f, &family, &BesovParams { herz: hp, s, r: inf() })
                .unwrap()
                .aggregate;
            let sob = sobolev_wh_norm(&f, &hp, s).unwrap();
            assert!(rinf <= r1 * (1.0 + 1e-12));
            assert!(sob <= 10.0 * r1, "sobolev {sob} vs l1 {r1}");
            assert!(rinf <= 10.0 * sob, "l-inf {rinf} vs sobolev {sob}");
        }
    }

    #[test]
    fn classical_besov_dominates_weak_herz_blocks() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 0.5 }, &g).unwrap();
        let bwk = besov_wh_norm(
            &f,
            &family,
            &BesovParams::new(0.0, 2.0, inf(), 0.3, 2.0).unwrap(),
        )
        .unwrap()
        .aggregate;
        let classical = besov_classical(&f, &family, 0.3, 2.0, 2.0).unwrap();
        assert!(bwk <= classical * (1.0 + 1e-12), "{bwk} vs {classical}");
    }

    #[test]
    fn doubling_embedding_accepts_and_reports() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let (dst, src) = doubling_pair(2, 2.0, 0.2, 0.0, inf(), inf()).unwrap();
        let f = preset_field(&Preset::RandomBandlimited { j: 1, seed: 2 }, &g).unwrap();
        let report = sobolev_embedding_check(&f, &family, &dst, &src).unwrap();
        assert!(report.ratio.is_finite() && report.ratio > 0.0);
        assert!((report.p1 - 1.0 / (1.0 / 4.0 - 0.1)).abs() < 1e-9);

        let zero = Field::zeros(g, 1);
        let zr = sobolev_embedding_check(&zero, &family, &dst, &src).unwrap();
        assert_eq!(zr.ratio, 0.0);
    }

    #[test]
    fn embedding_rejects_bad_hypotheses() {
        let g = grid();
        let family = LpFamily::build(&g).unwrap();
        let f = preset_field(&Preset::Gaussian { sigma: 1.0 }, &g).unwrap();
        // alpha decreasing from dst to src forces p1 < p.
        let dst = BesovParams::new(0.5, 4.0, inf(), 0.0, inf()).unwrap();
        let src = BesovParams::new(0.1, 2.0, inf(), 0.9, inf()).unwrap();
        let err = sobolev_embedding_check(&f, &family, &dst, &src).unwrap_err();
        assert!(err.to_string().contains("p <= p1"), "{err}");
    }

    #[test]
    fn critical_norm_is_rescale_invariant_for_rotational_data() {
        let g = Grid::new(2, 256, 16.0).unwrap();
        let family = LpFamily::build(&g).unwrap();
        let u = preset_field(&Preset::Rotational, &g).unwrap();
        // Critical exponents: alpha = 0, p = 2, s = alpha + n/p - 1 = 0.
        let bp = BesovParams::new(0.0, 2.0, inf(), 0.0, inf()).unwrap();
        let base = besov_wh_norm(&u, &family, &bp).unwrap().aggregate;
        for lambda in [0.5, 2.0] {
            let scaled = rescale(&u, lambda).unwrap().field;
            let norm = besov_wh_norm(&scaled, &family, &bp).unwrap().aggregate;
            let drift = (norm / base).ln().abs();
            assert!(
                drift < 0.1,
                "critical norm drift {drift} at lambda = {lambda}"
            );
        }
    }
}
