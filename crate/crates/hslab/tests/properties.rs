use hslab::atoms::{validate_z_atom, z_decompose};
use hslab::calculus::{from_freq, to_freq, CoefficientMatrix, MultiplierOp, OpKind};
use hslab::exponents::Exponent;
use hslab::grid::{random_boundary, random_field, BoundarySpec, Field, GridSpec, WhitneyParam};
use hslab::holo::HoloFn;
use hslab::io::{field_to_bytes, parse_hsf};
use hslab::linalg::max_abs;
use hslab::overlap::{ball_fractions, unit_ball_volume};
use hslab::quasinorms::{tent_norm, z_norm};
use hslab::region::region_imax;
use hslab::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn small_grid() -> GridSpec {
    GridSpec::new(1, 1, 8.0, 32, 0.1, 1.0, 12).unwrap()
}

fn roll(f: &Field, shift: usize) -> Field {
    let spec = *f.spec();
    let (sl, ch) = (spec.spatial_len(), f.channels());
    let mut v = f.values().to_vec();
    for k in 0..spec.k {
        for i in 0..sl {
            for c in 0..ch {
                v[(k * sl + (i + shift) % sl) * ch + c] = f.values()[(k * sl + i) * ch + c];
            }
        }
    }
    Field::new(spec, ch, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn dual_and_heart_are_reflections(n in 1usize..5, j in -3.0f64..3.0, th in -3.0f64..3.0) {
        let p = Exponent::from_views(n, j, th);
        let d = p.dual();
        let h = p.heart();
        prop_assert!((d.j + p.j - 1.0).abs() < 1e-12 && (d.theta + p.theta).abs() < 1e-12);
        prop_assert!((h.j + p.j - 1.0).abs() < 1e-12 && (h.theta + p.theta + 1.0).abs() < 1e-12);
        prop_assert!(d.dual().approx_eq(&p, 1e-12) && h.heart().approx_eq(&p, 1e-12));
    }

    #[test]
    fn embedding_matches_slope_rule(n in 1usize..4, j in -1.0f64..2.0, th in -2.0f64..1.0, d in 0.0f64..2.0, bend in -0.5f64..0.5) {
        let p = Exponent::from_views(n, j, th);
        let on_line = Exponent::from_views(n, j - d / n as f64, th - d);
        prop_assert!(p.embeds(&on_line));
        if d > 1e-6 {
            prop_assert!(!on_line.embeds(&p));
        }
        if bend.abs() > 1e-6 {
            let off = Exponent::from_views(n, j - d / n as f64 + bend, th - d);
            prop_assert!(!p.embeds(&off));
        }
    }

    #[test]
    fn interpolation_is_affine(j0 in -2.0f64..2.0, t0 in -2.0f64..2.0, j1 in -2.0f64..2.0, t1 in -2.0f64..2.0, eta in -1.0f64..2.0) {
        let p = Exponent::from_views(2, j0, t0);
        let q = Exponent::from_views(2, j1, t1);
        let r = p.interp(&q, eta);
        prop_assert!((r.j - ((1.0 - eta) * j0 + eta * j1)).abs() < 1e-12);
        prop_assert!((r.theta - ((1.0 - eta) * t0 + eta * t1)).abs() < 1e-12);
    }

    #[test]
    fn ball_fractions_sum_to_volume(n in 1usize..3, r in 0.01f64..1.9, cx in 0.0f64..4.0, cy in 0.0f64..4.0) {
        let (nx, l) = (32usize, 4.0f64);
        let c = [cx, cy];
        let fr = ball_fractions(n, nx, l, &c[..n], r).unwrap();
        let dx = l / nx as f64;
        let total: f64 = fr.iter().sum::<f64>() * dx.powi(n as i32);
        prop_assert!((total / (unit_ball_volume(n) * r.powi(n as i32)) - 1.0).abs() < 1e-10);
        prop_assert!(fr.iter().all(|&w| (0.0..=1.0).contains(&w)));
    }

    #[test]
    fn fourier_round_trip(seed in any::<u64>(), n in 1usize..3) {
        let spec = BoundarySpec { n, l: 3.0, nx: 8 };
        let g = random_boundary(&spec, 2, seed);
        let back = from_freq(spec, 2, &to_freq(&g)).unwrap();
        prop_assert!(back.sub(&g).l2() <= 1e-13 * g.l2());
    }

    #[test]
    fn hsf_round_trip(seed in any::<u64>(), gamma in -1.0f64..1.0) {
        let f = random_field(&small_grid(), 2, seed, gamma);
        let back = parse_hsf(&field_to_bytes(&f)).unwrap().into_field().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn chi_partition_of_unity(re in 1e-3f64..5.0, im in -5.0f64..5.0, sign in prop::bool::ANY) {
        let z = C64::new(if sign { re } else { -re }, im);
        let a = HoloFn::ChiPlus.eval(z).unwrap();
        let b = HoloFn::ChiMinus.eval(z).unwrap();
        prop_assert_eq!(a + b, C64::new(1.0, 0.0));
        prop_assert_eq!(a * b, C64::new(0.0, 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn imax_slice_at_energy_line(n in 1usize..5) {
        let s = region_imax(n).slice_theta(-0.5);
        let nf = n as f64;
        prop_assert_eq!(s.len(), 1);
        prop_assert!((s[0].lo + 1.0 / (2.0 * nf)).abs() < 1e-12);
        prop_assert!((s[0].hi - (2.0 * nf + 1.0) / (2.0 * nf)).abs() < 1e-12);
        prop_assert!(s[0].lo_open && s[0].hi_open);
    }

    #[test]
    fn quasinorm_homogeneity(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0, pv in 0.5f64..4.0, s in -1.0f64..0.5) {
        let f = random_field(&small_grid(), 1, seed, 0.0);
        let c = C64::new(re, im);
        prop_assume!(c.norm() > 1e-3);
        let p = Exponent::finite(1, pv, s);
        let (a, b) = (tent_norm(&f, &p, 1.0).unwrap().value, tent_norm(&f.scale(c), &p, 1.0).unwrap().value);
        prop_assert!((b - c.norm() * a).abs() <= 1e-12 * b.max(1.0));
        let w = WhitneyParam::standard();
        let (a, b) = (z_norm(&f, &p, w).unwrap().value, z_norm(&f.scale(c), &p, w).unwrap().value);
        prop_assert!((b - c.norm() * a).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn quasi_triangle(s1 in any::<u64>(), s2 in any::<u64>(), pv in 0.5f64..4.0) {
        let f = random_field(&small_grid(), 1, s1, 0.0);
        let g = random_field(&small_grid(), 1, s2, 0.3);
        let p = Exponent::finite(1, pv, -0.5);
        let cp = 1f64.max(2f64.powf(1.0 / pv.min(1.0 / p.j) - 1.0));
        let cp = cp.max(2f64.powf(p.j - 1.0));
        let n = |h: &Field| tent_norm(h, &p, 1.0).unwrap().value;
        prop_assert!(n(&f.add(&g).unwrap()) <= cp * (n(&f) + n(&g)) * (1.0 + 1e-12));
        let z = |h: &Field| z_norm(h, &p, WhitneyParam::standard()).unwrap().value;
        prop_assert!(z(&f.add(&g).unwrap()) <= cp * (z(&f) + z(&g)) * (1.0 + 1e-12));
    }

    #[test]
    fn kappa_shift_reindexes(seed in any::<u64>(), r in -1.0f64..1.0, pv in 0.5f64..4.0) {
        let f = random_field(&small_grid(), 1, seed, 0.0);
        let p = Exponent::finite(1, pv, -0.25);
        let a = tent_norm(&f, &p, 1.0).unwrap().value;
        let b = tent_norm(&f.kappa(r), &p.shift(r), 1.0).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn norms_are_translation_invariant(seed in any::<u64>(), shift in 1usize..32) {
        let f = random_field(&small_grid(), 1, seed, 0.0);
        let g = roll(&f, shift);
        let p = Exponent::finite(1, 1.0, -0.5);
        let (a, b) = (tent_norm(&f, &p, 1.0).unwrap().value, tent_norm(&g, &p, 1.0).unwrap().value);
        prop_assert!((a - b).abs() <= 1e-12 * a);
        let w = WhitneyParam::standard();
        let (a, b) = (z_norm(&f, &p, w).unwrap().value, z_norm(&g, &p, w).unwrap().value);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn atoms_reconstruct_and_rescale(seed in any::<u64>(), re in 0.1f64..3.0, im in -3.0f64..3.0) {
        let spec = GridSpec::new(1, 1, 8.0, 32, 0.05, 4.0, 24).unwrap();
        let f = random_field(&spec, 1, seed, 0.0);
        let p = Exponent::finite(1, 1.0, -0.5);
        let w = WhitneyParam::standard();
        let d = z_decompose(&f, &p, 1, w).unwrap();
        prop_assert!(d.reconstruct(&spec).unwrap().sub(&f).unwrap().max_abs() <= 1e-13 * f.max_abs());
        let i = (0..d.atoms.len()).find(|&i| d.atoms[i].lambda > 0.0).unwrap();
        let a = d.atom_field(&spec, i).unwrap();
        let (t, x) = (d.atoms[i].t, d.atoms[i].x.clone());
        prop_assert!(validate_z_atom(&a, &p, w, t, &x, 1e-9).unwrap().is_valid());
        let c = C64::new(re, im);
        let scaled = validate_z_atom(&a.scale(c), &p, w, t, &x, 1e-9).unwrap().is_valid();
        let unit = validate_z_atom(&a.scale(c / c.norm()), &p, w, t, &x, 1e-9).unwrap().is_valid();
        prop_assert!(unit);
        prop_assert_eq!(scaled, c.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn spectral_identities_random_b(seed in any::<u64>(), n in 1usize..3, m in 1usize..3) {
        let b = CoefficientMatrix::random_accretive(m, n, seed, 0.5).hat().unwrap();
        let op = MultiplierOp::build(OpKind::DB, &b, 2.0 * PI, if n == 1 { 8 } else { 4 }).unwrap();
        for q in 0..op.freqs.len() {
            let p = op.projector(q);
            let cp = op.chi(q, true).unwrap();
            let cm = op.chi(q, false).unwrap();
            let s = op.sign(q).unwrap();
            let sc = max_abs(&p).max(1.0);
            prop_assert!(max_abs(&(&cp * &cp - &cp)) / sc < 1e-10);
            prop_assert!(max_abs(&(&cm * &cm - &cm)) / sc < 1e-10);
            prop_assert!(max_abs(&(&s * &p - &s)) / sc < 1e-10);
            prop_assert!(max_abs(&(&cp + &cm - &p)) / sc < 1e-10);
        }
    }

    #[test]
    fn eta_regularisation_composes(seed in any::<u64>(), delta in 0.2f64..2.0) {
        let b = CoefficientMatrix::random_accretive(1, 1, seed, 0.5).hat().unwrap();
        let op = MultiplierOp::build(OpKind::DB, &b, 2.0 * PI, 16).unwrap();
        let g = HoloFn::Power(0.5);
        let outer = HoloFn::Eta(delta);
        let inner = HoloFn::Eta(-delta).mul(g.clone());
        for q in 1..op.freqs.len() {
            let lhs = op.apply(q, &outer).unwrap() * op.apply(q, &inner).unwrap();
            let rhs = op.apply(q, &g).unwrap();
            prop_assert!(max_abs(&(lhs - &rhs)) <= 1e-10 * max_abs(&rhs).max(1.0));
        }
    }
}
