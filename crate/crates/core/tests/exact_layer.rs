//! Exact-arithmetic properties of the polynomial enumeration and the `Φ_δ` forms.

use std::sync::OnceLock;

use grassdyn::construction::{
    admissible_for_p, enumerate_s, model_product, orbit_vector_coords, q_coordinates, q_index, rational,
    ConstructionParams, ControlSpec, SEnumeration,
};
use grassdyn::functionals::{m_l_bound_with, FunctionalTable};
use grassdyn::{AdmissibleSource, IndexScheme, Polynomial};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn params(p: u32) -> ConstructionParams {
    ConstructionParams::new(p, IndexScheme::Pow5, AdmissibleSource::Triangular)
}

fn table(p: u32, delta: u64) -> &'static FunctionalTable {
    static TABLES: OnceLock<Vec<Vec<FunctionalTable>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (2..=3u32).map(|p| (0..2 * p as u64).map(|d| FunctionalTable::new(&params(p), d).unwrap()).collect()).collect()
    });
    &tables[p as usize - 2][delta as usize]
}

fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((-9i64..=9, 1i64..=4), 0..12)
        .prop_map(|cs| Polynomial::from_coeffs(cs.into_iter().map(|(n, d)| rational(n, d))))
}

fn ratio() -> impl Strategy<Value = BigRational> {
    (-20i64..=20, 1i64..=7).prop_map(|(n, d)| rational(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn phi_is_linear(p in 2u32..=3, d in 0u64..4, a in poly(), b in poly(), x in ratio(), y in ratio()) {
        let t = table(p, d);
        let combo = &a.scale(&x) + &b.scale(&y);
        let lhs = t.phi_on_polynomial(&combo).unwrap();
        let rhs = x * t.phi_on_polynomial(&a).unwrap() + y * t.phi_on_polynomial(&b).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn phi_respects_products(p in 2u32..=3, d in 0u64..4, a in 0usize..400, b in 0usize..400) {
        let t = table(p, d);
        let prod = model_product(&Polynomial::x_pow(a), &Polynomial::x_pow(b));
        prop_assert_eq!(t.phi_on_polynomial(&prod).unwrap(), t.phi_value((a + b) as u64).unwrap());
    }

    #[test]
    fn y_values_within_m_l(p in 2u32..=3, d in 0u64..4, l in 0u64..=3, k_seed in any::<u64>(), u_seed in any::<u64>(), v_seed in any::<u64>()) {
        let t = table(p, d);
        let c = t.construction();
        let k = k_seed % (l + 1);
        let u = u_seed % (c.b(k + 1) - c.b(k));
        let v = v_seed % (c.b(l + 1) - c.b(l));
        let y = t.y_value(k, u, l, v).unwrap();
        prop_assert!(y.abs() <= m_l_bound_with(c, l).unwrap());
    }

    #[test]
    fn s_tuples_obey_caps(i in 0u64..4, r in 0u64..400) {
        let s = enumerate_s(i, r).unwrap();
        prop_assert_eq!(s.len() as u64, i + 1);
        // Zero up to r = b_{i+1} = 5^{i+1}.
        if r <= 5u64.pow(i as u32 + 1) {
            prop_assert!(s.iter().all(Polynomial::is_zero));
        }
        let cap = params(2).control_value(r).unwrap();
        let cap_q = BigRational::from_integer(cap.into());
        for component in &s {
            prop_assert!(component.degree_signed() < cap as i64);
            prop_assert!(component.l1_norm() <= cap_q);
        }
    }

    #[test]
    fn triangle_indexing_is_bijective(n in 0u64..1_000_000) {
        let (i, r) = q_coordinates(n);
        prop_assert_eq!(q_index(i, r), n);
    }

    #[test]
    fn admissible_is_a_q_component(p in 2u32..6, n in 0u64..300) {
        let (i, r) = q_coordinates(n);
        let expected = enumerate_s(i, r).unwrap().get(p as usize - 2).cloned().unwrap_or_default();
        prop_assert_eq!(admissible_for_p(p, n).unwrap(), if n == 0 { Polynomial::zero() } else { expected });
    }
}

#[test]
fn explicit_caps_share_the_enumeration_rules() {
    let mut controls = params(2);
    controls.control = ControlSpec::Explicit(vec![3, 3, 4, 6, 9]);
    let s = SEnumeration::new(&controls);
    for r in 0..200 {
        let cap = controls.control_value(r).unwrap() as i64;
        assert!(s.s(1, r).unwrap().iter().all(|c| c.degree_signed() < cap));
    }
}

#[test]
fn orbit_coordinates_are_triangular() {
    for p in [2, 3] {
        for i in 0..=200u64 {
            let v = orbit_vector_coords(&params(p), i).unwrap();
            assert!(v.coords().iter().all(|(&j, z)| j as u64 <= i && !z.is_zero()), "p = {p}, i = {i}");
            assert!(!v.get(i as usize).is_zero());
        }
    }
}
