use hslab::bvp::{self, BvpSetup, Component, Problem};
use hslab::calculus::{dirac_symbol, mat_vec, to_freq, CoefficientMatrix};
use hslab::exponents::Exponent;
use hslab::grid::{random_boundary, BoundaryField};
use hslab::linalg::c;
use hslab::quasinorms::downward_shift;
use hslab::verify::cauchy_grid;
use hslab::C64;
use std::f64::consts::FRAC_1_SQRT_2;

fn setup(a: CoefficientMatrix) -> BvpSetup {
    let (m, n) = (a.m, a.n);
    BvpSetup::new(a, cauchy_grid(n, m), Problem::Regularity, Exponent::finite(n, 2.0, 0.0)).unwrap()
}

fn chi_datum(s: &BvpSetup, seed: u64) -> BoundaryField {
    let raw = random_boundary(&s.boundary(), s.channels(), seed);
    let (f0, _) = bvp::project_to_range(s, &raw).unwrap();
    s.op.apply_field(&f0, |q| s.op.chi(q, true)).unwrap()
}

fn level(f: &hslab::grid::Field, k: usize) -> BoundaryField {
    BoundaryField::new(f.spec().boundary(), f.channels(), f.level(k).to_vec()).unwrap()
}

fn rel(a: &BoundaryField, b: &BoundaryField) -> f64 {
    a.sub(b).l2() / b.l2()
}

#[test]
fn solution_is_a_semigroup_orbit() {
    for a in [CoefficientMatrix::identity(1, 1), CoefficientMatrix::random_accretive(1, 1, 4, 0.5)] {
        let s = setup(a);
        let f0 = chi_datum(&s, 1);
        let (f, _) = bvp::cauchy_solve(&s, &f0).unwrap();
        let g = s.grid;
        for (k0, k1) in [(0, 40), (60, 100), (100, 101)] {
            let tau = g.t(k1 as i64) - g.t(k0 as i64);
            let moved = s.op.apply_field(&level(&f, k0), |q| s.op.semigroup(q, tau)).unwrap();
            let want = level(&f, k1);
            assert!(moved.sub(&want).l2() <= 1e-10 * f0.l2(), "{k0}->{k1}");
        }
    }
}

#[test]
fn shifted_trace_is_semigroup_of_trace() {
    let s = setup(CoefficientMatrix::random_accretive(1, 1, 9, 0.5));
    let f0 = chi_datum(&s, 2);
    let (f, _) = bvp::cauchy_solve(&s, &f0).unwrap();
    let g = s.grid;
    let r = g.t(80) - g.t(0);
    let shifted = downward_shift(&f, r).unwrap();
    let want = s.op.apply_field(&f0, |q| s.op.semigroup(q, r)).unwrap();
    assert!(rel(&level(&shifted, 0), &want) < 1e-6);
}

#[test]
fn identity_u_is_poisson_extension() {
    let s = setup(CoefficientMatrix::identity(1, 1));
    let g0 = chi_datum(&s, 3);
    let (u, _) = bvp::recover_u(&s, &g0).unwrap();
    let grid = s.grid;
    let u0 = to_freq(&level(&u, 0));
    let xis = hslab::fourier::lattice(1, grid.nx, grid.l);
    let scale = level(&u, 0).l2();
    for k in [10usize, 80, 120] {
        let dt = grid.t(k as i64) - grid.t(0);
        let got = to_freq(&level(&u, k));
        for ((a, b), xi) in got.iter().zip(&u0).zip(&xis) {
            let want = b[0] * (-dt * xi[0].abs()).exp();
            assert!((a[0] - want).norm() <= 1e-8 * scale.max(1.0), "k={k} ξ={}", xi[0]);
        }
    }
}

#[test]
fn intermediate_inverts_d() {
    for a in [CoefficientMatrix::identity(1, 2), CoefficientMatrix::random_accretive(1, 2, 5, 0.5)] {
        let s = setup(a);
        let g0 = chi_datum(&s, 4);
        let ft = bvp::intermediate(&s, &g0).unwrap();
        let hat = to_freq(&ft);
        let want = to_freq(&g0);
        let xis = hslab::fourier::lattice(2, s.grid.nx, s.grid.l);
        for ((h, w), xi) in hat.iter().zip(&want).zip(&xis) {
            if xi.iter().all(|x| *x == 0.0) {
                continue;
            }
            let d = mat_vec(&dirac_symbol(xi, 1), h);
            for (p, q) in d.iter().zip(w) {
                assert!((p - q).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn positive_subspace_for_identity() {
    let s = setup(CoefficientMatrix::identity(1, 1));
    for q in 0..s.op.freqs.len() {
        let xi = s.op.freqs[q].xi[0];
        if xi == 0.0 {
            continue;
        }
        let v = bvp::positive_subspace(&s.op, q).unwrap();
        assert_eq!(v.ncols(), 1);
        let w = [c(FRAC_1_SQRT_2), C64::new(0.0, -xi.signum() * FRAC_1_SQRT_2)];
        let overlap = (v[(0, 0)].conj() * w[0] + v[(1, 0)].conj() * w[1]).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
        for comp in [Component::Perp, Component::Par] {
            let nm = bvp::boundary_map(&s.op, q, comp).unwrap();
            assert!((nm[(0, 0)].norm() - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }
}
