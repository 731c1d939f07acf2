use proptest::prelude::*;
use rug::Float;

use jacobi_jost::coeffs::{CoefficientModel, Table};
use jacobi_jost::dediag::{dediagonalize, polynomial_identity_check, section_consistency, Sign};
use jacobi_jost::spectral::{section_eigs_hp, sturm_count};
use jacobi_jost::Cplx;

const P: u32 = 192;

fn table_model(a: &[f64], b: &[f64]) -> CoefficientModel {
    let t = Table {
        a: a.iter().map(|&x| Float::with_val(P, x)).collect(),
        b: b.iter().map(|&x| Float::with_val(P, x)).collect(),
        meta: None,
        label: "prop".into(),
    };
    CoefficientModel::table(t, P).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dediag_identities_hold_for_any_positive_table(
        a in prop::collection::vec(0.05f64..5.0, 70),
        re in -3.0f64..3.0,
        im in 0.1f64..2.0,
    ) {
        let pair = dediagonalize(&table_model(&a, &vec![0.0; a.len()]), 30).unwrap();
        let z = Cplx::from_f64(P, re, im);
        for s in [Sign::Plus, Sign::Minus] {
            let r = polynomial_identity_check(&pair, s, &z, 24).unwrap();
            prop_assert!(r.max_residual < 1e-40, "{:?}: {}", s, r.max_residual);
        }
        let (dev, inter) = section_consistency(&pair, 6, P).unwrap();
        prop_assert!(dev < 1e-20 && inter);
    }

    #[test]
    fn sturm_count_is_monotone_and_matches_eigenvalues(
        a in prop::collection::vec(0.1f64..3.0, 12),
        b in prop::collection::vec(-4.0f64..4.0, 12),
        x in -12.0f64..12.0,
    ) {
        let af: Vec<Float> = a.iter().map(|&v| Float::with_val(P, v)).collect();
        let bf: Vec<Float> = b.iter().map(|&v| Float::with_val(P, v)).collect();
        let ev = section_eigs_hp(&af, &bf, -20.0, 20.0, P);
        prop_assert_eq!(ev.len(), 12);
        let below = ev.iter().filter(|e| e.to_f64() < x).count();
        let k = sturm_count(&af, &bf, x);
        // eigenvalues within rounding of x may land either way
        let near = ev.iter().any(|e| (e.to_f64() - x).abs() < 1e-12);
        prop_assert!(near || k == below, "count {} vs {}", k, below);
        prop_assert!(sturm_count(&af, &bf, x + 1.0) >= k);
        prop_assert!(ev.windows(2).all(|w| w[0] < w[1]));
    }
}
