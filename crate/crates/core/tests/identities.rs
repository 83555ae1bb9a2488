//! Seeded identity suites across modules.

use qloop::checks::{self, family, generic_config};
use qloop::lattice::{gibbs_density, horizontal_monodromy, trotter_density};
use qloop::linalg::{eye, rel_diff, swap};
use qloop::rqkz::{apply_a_n, apply_b_n};
use qloop::{Algebra, Error, Tag, C64};

const SEED: u64 = 7;

fn q() -> C64 {
    C64::new(1.3, 0.0)
}

fn assert_rows(rows: &[checks::CheckRow]) {
    for r in rows {
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn rmatrix_identities_at_seeded_pairs() {
    for a in [Algebra::A1, Algebra::A2] {
        let f = family(a, q(), None).unwrap();
        assert_rows(&checks::rmatrix_checks(&f, SEED, 20, 1e-10).unwrap());
        assert_rows(&checks::scaling_checks(&f, SEED, 5, 1e-10).unwrap());
    }
}

#[test]
fn relations_hold_for_both_modules() {
    for a in [Algebra::A1, Algebra::A2] {
        assert_rows(&checks::relation_checks(&family(a, q(), None).unwrap(), 1e-10));
    }
}

#[test]
fn complex_deformation_parameter() {
    let f = family(Algebra::A1, C64::new(1.1, 0.2), None).unwrap();
    assert_rows(&checks::rmatrix_checks(&f, SEED, 5, 1e-10).unwrap());
}

#[test]
fn monodromy_at_equal_parameters_is_a_chain_of_swaps() {
    let f = family(Algebra::A1, q(), None).unwrap();
    let z = C64::new(0.9, 0.1);
    let m = horizontal_monodromy(&f, Tag::V, z, &[(Tag::V, z), (Tag::V, z)]).unwrap();
    // P_{02} P_{01}
    let dims = [2, 2, 2];
    let p01 = qloop::linalg::embed(&swap(2, 2), &[0, 1], &dims);
    let p02 = qloop::linalg::embed(&swap(2, 2), &[0, 2], &dims);
    assert!(rel_diff(&m, &(p02 * p01)) < 1e-12);
}

#[test]
fn transfer_and_locality() {
    let f = family(Algebra::A1, q(), None).unwrap();
    assert_rows(&checks::transfer_checks(&f, 4, SEED).unwrap());
    assert_rows(&[checks::locality_check(&f, 3).unwrap()]);
}

#[test]
fn trotter_density_is_normalized_and_converges() {
    let f = family(Algebra::A1, q(), None).unwrap();
    let d = trotter_density(&f, 3, 4, 0.5).unwrap();
    assert!((d.trace() - C64::new(1.0, 0.0)).norm() < 1e-13);
    let zero = trotter_density(&f, 3, 2, 0.0).unwrap();
    assert!(rel_diff(&zero, &(eye(8) / C64::new(8.0, 0.0))) < 1e-12);
    let s = checks::trotter_convergence(&f, 3, 0.5, &[4, 8, 16]).unwrap();
    assert!(s.points.windows(2).all(|w| w[1].1 < w[0].1));
    let g = gibbs_density(&f, 3, 0.5).unwrap();
    assert!((g.trace() - C64::new(1.0, 0.0)).norm() < 1e-13);
}

#[test]
fn vertical_identities() {
    let f = family(Algebra::A1, q(), None).unwrap();
    for n in [1, 2] {
        assert_rows(&checks::vertical_checks(&f, &generic_config(1.3, 2, n, 0.05, 0.1, 1)).unwrap());
    }
}

#[test]
fn finite_m_density_converges() {
    let f = family(Algebra::A1, q(), None).unwrap();
    let mut cfg = generic_config(1.3, 1, 1, 0.05, 0.1, 1);
    cfg.zeta = vec![C64::new(1.3f64.powf(-0.5), 0.0)];
    cfg.xi = vec![C64::new(1.3f64.powf(0.5), 0.0)];
    let dc = checks::density_convergence(&f, &cfg, &[2, 4, 8]).unwrap();
    assert!(dc.errors.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(dc.rates.iter().all(|r| *r <= dc.rho), "{dc:?}");
}

#[test]
fn reduced_density_has_unit_trace() {
    let f = family(Algebra::A1, q(), None).unwrap();
    let cfg = generic_config(1.3, 2, 1, 0.05, 0.1, 1);
    let v = qloop::Vertical::from_config(&f, &cfg).unwrap();
    let w = v.wings(&cfg.kappa, &cfg.alpha, cfg.eta_ref).unwrap();
    let sites: Vec<(Tag, C64)> = cfg.eta.iter().map(|e| (Tag::V, *e)).collect();
    let d = v.reduced_density(&sites, &cfg.kappa, &w).unwrap();
    assert!((d.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
}

#[test]
fn first_and_second_equations() {
    let a1 = family(Algebra::A1, q(), None).unwrap();
    for n in [1, 2] {
        for (k, a) in [(0.0, 0.0), (0.05, 0.1)] {
            let rows = checks::rqkz_checks(&a1, &generic_config(1.3, 2, n, k, a, 1), 1e-8).unwrap();
            assert_rows(&rows[..2]);
        }
    }
    let a2 = family(Algebra::A2, q(), None).unwrap();
    let rows = checks::rqkz_checks(&a2, &generic_config(1.3, 2, 1, 0.05, 0.1, 2), 1e-7).unwrap();
    assert_rows(&rows[..2]);
}

#[test]
fn zero_twist_prefactor_is_one() {
    let a1 = family(Algebra::A1, q(), None).unwrap();
    let r = qloop::verify_first_equation(&a1, &generic_config(1.3, 2, 1, 0.05, 0.0, 1)).unwrap();
    assert!((r.prefactor - C64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn residuals_invariant_under_global_rescaling() {
    let a1 = family(Algebra::A1, q(), None).unwrap();
    let cfg = generic_config(1.3, 2, 1, 0.05, 0.1, 1);
    let s = C64::from_polar(1.7, 0.4);
    let mut scaled = cfg.clone();
    for z in scaled.zeta.iter_mut().chain(scaled.xi.iter_mut()).chain(scaled.eta.iter_mut()) {
        *z *= s;
    }
    scaled.eta_ref *= s;
    let a = qloop::verify_first_equation(&a1, &cfg).unwrap();
    let b = qloop::verify_first_equation(&a1, &scaled).unwrap();
    assert!(a.residual < 1e-8 && b.residual < 1e-8);
    assert!((a.prefactor - b.prefactor).norm() < 1e-9);
}

#[test]
fn superoperators_check_tags() {
    let a1 = family(Algebra::A1, q(), None).unwrap();
    let one = C64::new(1.0, 0.0);
    let star = qloop::DensityState { sites: vec![(Tag::VStar, one)], matrix: eye(2), provenance: String::new() };
    let plain = qloop::DensityState { sites: vec![(Tag::V, one)], matrix: eye(2), provenance: String::new() };
    assert!(matches!(apply_a_n(&a1, &star, &[C64::new(0.0, 0.0)]), Err(Error::TagError(_))));
    assert!(matches!(apply_b_n(&a1, &plain, &[C64::new(0.0, 0.0)]), Err(Error::TagError(_))));
}
