//! Property tests for the core algebraic invariants, on small grids.

use bhk_core::field::Field;
use bhk_core::grid::Grid;
use bhk_core::herz::{weak_herz_norm, HerzParams};
use bhk_core::multiplier::heat;
use bhk_core::weak_lp::{lp_region, weak_lp_region, whole_grid};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_grid() -> Grid {
    Grid::new(2, 32, 4.0).unwrap()
}

/// Random smooth-ish field from a handful of random low modes.
fn field_from(coeffs: &[(i64, i64, f64, f64)]) -> Field {
    let g = small_grid();
    let d = g.freq_spacing();
    let coeffs = coeffs.to_vec();
    Field::from_fn(g, move |x| {
        coeffs
            .iter()
            .map(|&(kx, ky, a, b)| {
                let phase = d * (kx as f64 * x[0] + ky as f64 * x[1]);
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    })
}

fn coeff_strategy() -> impl Strategy<Value = Vec<(i64, i64, f64, f64)>> {
    prop::collection::vec(
        (-8i64..=8, -8i64..=8, -2.0f64..2.0, -2.0f64..2.0),
        1..6,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(coeffs in coeff_strategy()) {
        let f = field_from(&coeffs);
        let back = f.to_spectral().unwrap().to_physical().unwrap();
        let err = f.sub(&back).unwrap().linf();
        prop_assert!(err <= 1e-12 * f.linf().max(1e-12));
    }

    #[test]
    fn heat_semigroup_property(coeffs in coeff_strategy(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let f = field_from(&coeffs);
        let a = heat(&heat(&f, s).unwrap(), t).unwrap();
        let b = heat(&f, s + t).unwrap();
        let err = a.sub(&b).unwrap().linf();
        prop_assert!(err <= 1e-12 * f.linf().max(1e-12));
    }

    #[test]
    fn weak_norm_scaling_and_order(coeffs in coeff_strategy(), c in -4.0f64..4.0, p in 1.1f64..6.0) {
        let f = field_from(&coeffs);
        let region = whole_grid(&f);
        let base = weak_lp_region(&f, &region, p).unwrap();
        let scaled = weak_lp_region(&f.scale(c), &region, p).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * scaled.max(1e-12));
        // Dominated by the strong norm.
        let strong = lp_region(&f, &region, p).unwrap();
        prop_assert!(base <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn weak_norm_monotone_in_region(coeffs in coeff_strategy(), cut in 1usize..1023) {
        let f = field_from(&coeffs);
        let all = whole_grid(&f);
        let part: Vec<usize> = all.iter().copied().take(cut).collect();
        let small = weak_lp_region(&f, &part, 2.0).unwrap();
        let big = weak_lp_region(&f, &all, 2.0).unwrap();
        prop_assert!(small <= big * (1.0 + 1e-12));
    }

    #[test]
    fn herz_aggregate_orders(coeffs in coeff_strategy(), alpha in -0.5f64..0.5) {
        let f = field_from(&coeffs);
        let sup = weak_herz_norm(&f, &HerzParams::new(alpha, 2.0, f64::INFINITY).unwrap()).unwrap();
        let sum = weak_herz_norm(&f, &HerzParams::new(alpha, 2.0, 1.0).unwrap()).unwrap();
        prop_assert!(sup.aggregate <= sum.aggregate * (1.0 + 1e-12));
    }

    #[test]
    fn multiplier_linearity(coeffs in coeff_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        use bhk_core::multiplier::{apply_multiplier, MultiplierSymbol};
        let f = field_from(&coeffs);
        let g = field_from(&[(2, 1, 0.8, -0.4)]);
        let sym = MultiplierSymbol::riesz_potential(0.5);
        let combo = f.scale(a).add(&g.scale(b)).unwrap();
        let lhs = apply_multiplier(&combo, &sym).unwrap();
        let rhs = apply_multiplier(&f, &sym).unwrap().scale(a)
            .add(&apply_multiplier(&g, &sym).unwrap().scale(b)).unwrap();
        let err = lhs.sub(&rhs).unwrap().linf();
        prop_assert!(err <= 1e-11 * lhs.linf().max(1e-9));
    }

    #[test]
    fn spectral_symmetry_survives_symbols(coeffs in coeff_strategy(), t in 0.0f64..1.0) {
        let f = field_from(&coeffs);
        let hat = heat(&f, t).unwrap().to_spectral().unwrap();
        let g = small_grid();
        for idx in 0..g.cell_count() {
            let cj = Field::conj_index(&g, idx);
            let a: Complex64 = hat.component(0)[idx];
            let b: Complex64 = hat.component(0)[cj];
            prop_assert!((a - b.conj()).norm() == 0.0);
        }
    }
}
