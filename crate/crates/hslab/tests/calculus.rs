use hslab::calculus::{
    dirac_projector, dirac_symbol, n_matrix, q_extend, s_contract, CoefficientMatrix, MultiplierOp, OpKind,
};
use hslab::grid::{random_boundary, random_field, GridSpec};
use hslab::holo::{bisector_samples, calderon_sibling, pair_integral, psi_growth, psi_norm, HoloFn};
use hslab::linalg::{c, max_abs, CMat};
use hslab::quasinorms::pairing;
use hslab::C64;
use std::f64::consts::PI;

fn sorted_re(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn dirac_eigenvalues_and_square() {
    for (m, n) in [(1, 1), (1, 2), (2, 2), (1, 3)] {
        let xi: Vec<f64> = (0..n).map(|k| 0.7 - 1.3 * k as f64).collect();
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let d = dirac_symbol(&xi, m);
        let ev = sorted_re(d.clone().symmetric_eigenvalues().iter().copied().collect());
        let mut want = vec![-r; m];
        want.extend(vec![0.0; m * (n - 1)]);
        want.extend(vec![r; m]);
        assert!(ev.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12), "{ev:?}");
        let p = dirac_projector(m, n, &xi);
        assert!(max_abs(&(&d * &d - &p * c(r * r))) < 1e-12);
    }
}

#[test]
fn hat_transform_properties() {
    for seed in 0..20 {
        let a = CoefficientMatrix::random_accretive(2, 2, seed, 0.5);
        let h = a.hat().unwrap();
        assert!(h.kappa(64) > 0.0);
        assert!(max_abs(&(&h.hat().unwrap().a - &a.a)) < 1e-12);
        let nm = n_matrix(2, 2);
        let lhs = a.adjoint().hat().unwrap().a;
        let rhs = &nm * h.a.adjoint() * &nm;
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }
}

#[test]
fn sign_and_angle_random_b() {
    let b = CoefficientMatrix::random_accretive(1, 2, 8, 0.5).hat().unwrap();
    let op = MultiplierOp::build(OpKind::DB, &b, 2.0 * PI, 8).unwrap();
    assert!(op.omega() < PI / 2.0);
    for q in 0..op.freqs.len() {
        let s = op.sign(q).unwrap();
        assert!(max_abs(&(&s * &s - op.projector(q))) < 1e-10);
        assert!(max_abs(&(op.sign_newton(q).unwrap() - &s)) < 1e-8);
    }
}

#[test]
fn semigroup_of_d_is_poisson() {
    let op = MultiplierOp::dirac(1, 2, 2.0 * PI, 8).unwrap();
    for q in 0..op.freqs.len() {
        let xi = &op.freqs[q].xi;
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let p = op.projector(q);
        let want = &p * c((-0.6 * r).exp());
        assert!(max_abs(&(op.semigroup(q, 0.6).unwrap() * &p - want)) < 1e-12);
    }
}

#[test]
fn homomorphism_on_products() {
    let b = CoefficientMatrix::random_accretive(1, 1, 5, 0.5).hat().unwrap();
    let op = MultiplierOp::build(OpKind::DB, &b, 2.0 * PI, 16).unwrap();
    let f = HoloFn::bump(1.0, 0.0);
    let g = HoloFn::Resolvent(2.0).dilate(0.3);
    for q in 0..op.freqs.len() {
        let lhs = op.apply(q, &f.clone().mul(g.clone())).unwrap();
        let rhs = op.apply(q, &f).unwrap() * op.apply(q, &g).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }
}

#[test]
fn dunford_independent_of_nu() {
    let op = MultiplierOp::dirac(1, 1, 2.0 * PI, 16).unwrap();
    let f = HoloFn::bump(1.0, 1.0);
    let qs: Vec<usize> = (1..16).collect();
    let a = hslab::calculus::dunford_check(&op, &f, 0.1, &qs).unwrap();
    let b = hslab::calculus::dunford_check(&op, &f, 0.2, &qs).unwrap();
    assert!(a < 1e-8 && b < 1e-8);
}

#[test]
fn q_and_s_are_adjoint() {
    let b = CoefficientMatrix::random_accretive(1, 1, 6, 0.5).hat().unwrap();
    let op = MultiplierOp::build(OpKind::DB, &b, 2.0 * PI, 16).unwrap();
    let adj = op.adjoint().unwrap();
    let spec = GridSpec::new(1, 1, 2.0 * PI, 16, 0.01, 5.0, 24).unwrap();
    let f = random_boundary(&op.boundary(), op.channels(), 1);
    let g = random_field(&spec, op.channels(), 2, 0.0);
    for psi in [HoloFn::bump(1.0, 0.0), HoloFn::bump(2.0, 1.0).dilate(0.5)] {
        let lhs = pairing(&q_extend(&psi, &op, &f, &spec).unwrap(), &g).unwrap();
        let (sg, _) = s_contract(&psi.clone().involute(), &adj, &g).unwrap();
        let rhs = f.inner(&sg);
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn psi_norm_dilation_and_divergence() {
    let f = HoloFn::bump(1.0, 0.0);
    let mu = PI / 4.0;
    let base = psi_norm(&f, 0.5, -0.5, mu, 241).unwrap();
    // dilation by a whole number of log-sample steps keeps the sample set aligned
    let t = (10.0 * 1e12f64.ln() / 240.0).exp();
    let dil = psi_norm(&f.clone().dilate(t), 0.5, -0.5, mu, 241).unwrap();
    assert!((dil - t.powf(0.5) * base).abs() < 1e-10 * dil, "{dil} vs {}", t.powf(0.5) * base);
    assert!(psi_norm(&f, 1.0, 0.0, mu, 241).unwrap().is_finite());
    assert!(psi_growth(&f, 2.0, 0.0, mu).unwrap() > 1e2);
}

#[test]
fn sibling_pairings_equal_one() {
    for z in bisector_samples(PI / 4.0, 32) {
        let a = pair_integral(&HoloFn::bump(1.0, 0.0).scale(2.0), &HoloFn::Sgp, z).unwrap().value;
        let b = pair_integral(&HoloFn::bump(1.0, 0.0), &HoloFn::bump(1.0, 0.0), z).unwrap().value;
        assert!((a - 1.0).norm() < 1e-8 && (b - 0.25).norm() < 1e-8, "{z}: {a} {b}");
    }
    for (n, want) in [(1.0, 2.0), (2.0, 4.0), (3.0, 4.0)] {
        let s = calderon_sibling(&HoloFn::Sgp, n).unwrap();
        let v = s.psi.eval(C64::new(1.0, 0.0)).unwrap() / HoloFn::bump(n, 0.0).eval(C64::new(1.0, 0.0)).unwrap();
        assert!((v.re - want).abs() < 1e-12);
    }
    let s = calderon_sibling(&HoloFn::bump(1.0, 0.0), 1.0).unwrap();
    let v = s.psi.eval(C64::new(0.5, 0.2)).unwrap() / HoloFn::bump(1.0, 0.0).eval(C64::new(0.5, 0.2)).unwrap();
    assert!((v - 4.0).norm() < 1e-12);
}

#[test]
fn block_diagonal_coefficients_detected() {
    let a = CoefficientMatrix::random_accretive(1, 2, 3, 0.5);
    let z1 = CMat::zeros(1, 2);
    let z2 = CMat::zeros(2, 1);
    let bd = CoefficientMatrix::from_blocks(1, 2, &a.pp(), &z1, &z2, &a.tt()).unwrap();
    assert!(bd.is_block_diagonal(0.0) && !a.is_block_diagonal(1e-12));
}
