//! Property tests for structural invariants.

use proptest::prelude::*;
use qloop::cartan::build_cartan;
use qloop::checks::family;
use qloop::linalg::{ptrace, ptranspose, rel_diff, CMat};
use qloop::{Algebra, Tensor, C64};

fn cplx() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn mat(n: usize) -> impl Strategy<Value = CMat> {
    proptest::collection::vec(cplx(), n * n).prop_map(move |v| CMat::from_row_slice(n, n, &v))
}

fn spectral() -> impl Strategy<Value = C64> {
    (0.5f64..2.0, -0.6f64..0.6).prop_map(|(r, p)| C64::from_polar(r, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tensor_composition_is_associative(a in mat(4), b in mat(4), c in mat(4)) {
        let sp = [("x", 2), ("y", 2)];
        let (ta, tb, tc) = (
            Tensor::operator(&sp, &a).unwrap(),
            Tensor::operator(&sp, &b).unwrap(),
            Tensor::operator(&sp, &c).unwrap(),
        );
        let left = Tensor::mul(&Tensor::mul(&ta, &tb).unwrap(), &tc).unwrap();
        let right = Tensor::mul(&ta, &Tensor::mul(&tb, &tc).unwrap()).unwrap();
        prop_assert!(left.rel_diff(&right).unwrap() <= 1e-12);
        let direct = Tensor::operator(&sp, &(&a * &b * &c)).unwrap();
        prop_assert!(left.rel_diff(&direct).unwrap() <= 1e-12);
    }

    #[test]
    fn partial_transpose_is_an_involution(m in mat(6), site in 0usize..2) {
        let dims = [2, 3];
        let twice = ptranspose(&ptranspose(&m, &dims, &[site]), &dims, &[site]);
        prop_assert_eq!(twice, m);
    }

    #[test]
    fn partial_trace_preserves_trace(m in mat(12), site in 0usize..3) {
        let dims = [2, 3, 2];
        let t = ptrace(&m, &dims, site);
        prop_assert!((t.trace() - m.trace()).norm() <= 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn tensor_json_roundtrip(m in mat(4)) {
        let t = Tensor::operator(&[("a", 2), ("b", 2)], &m).unwrap();
        prop_assert_eq!(Tensor::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn x_coefficients_invariant_under_grading_scaling(g0 in 1i64..4, g1 in 0i64..4, g2 in 0i64..4, k in 1i64..5) {
        let c = build_cartan(Algebra::A2);
        let a = c.clone().with_grading(&[g0, g1, g2]).unwrap();
        let b = c.with_grading(&[k * g0, k * g1, k * g2]).unwrap();
        prop_assert_eq!(a.x_coefficients().unwrap(), b.x_coefficients().unwrap());
        prop_assert_eq!(a.crossing_shift().unwrap().0, b.crossing_shift().unwrap().0 * k);
    }

    #[test]
    fn twist_is_a_homomorphism(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
        let f = family(Algebra::A2, C64::new(1.3, 0.0), None).unwrap();
        let (n1, n2) = ([C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(c, 0.0), C64::new(d, 0.0)]);
        let sum = [n1[0] + n2[0], n1[1] + n2[1]];
        for rep in [&f.v, &f.vstar] {
            let prod = rep.group_like_twist(&n1) * rep.group_like_twist(&n2);
            prop_assert!(rel_diff(&prod, &rep.group_like_twist(&sum)) <= 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn r_and_d_depend_on_the_ratio_only(z in spectral(), w in spectral(), s in spectral()) {
        prop_assume!((z / w - C64::new(1.0, 0.0)).norm() > 0.05);
        let f = family(Algebra::A1, C64::new(1.3, 0.0), None).unwrap();
        prop_assert!(rel_diff(&f.r_vv(s * z, s * w).unwrap(), &f.r_vv(z, w).unwrap()) <= 1e-10);
        let (d0, d1) = (f.d_scalar(z, w).unwrap(), f.d_scalar(s * z, s * w).unwrap());
        prop_assert!((d0 - d1).norm() <= 1e-10 * d0.norm());
    }

    #[test]
    fn unitarity_and_initial_condition(z in spectral(), w in spectral()) {
        let f = family(Algebra::A1, C64::new(1.3, 0.0), None).unwrap();
        let p = f.rcheck_vv(z, w).unwrap() * f.rcheck_vv(w, z).unwrap();
        prop_assert!(rel_diff(&p, &qloop::linalg::eye(4)) <= 1e-10);
        prop_assert!(rel_diff(&f.r_vv(z, z).unwrap(), &qloop::linalg::swap(2, 2)) <= 1e-12);
    }
}
