use hslab::exponents::Exponent;
use hslab::region::{closure_contains, region_decay, region_heart, region_imax, region_imin, Membership};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn infinite_exponent_views() {
    let p = Exponent::infinite(2, 0.3, 0.5);
    let v = p.views();
    assert!(close(v.j, -0.25) && close(v.theta, 0.3) && v.i.is_infinite() && close(v.r, 0.8));
}

#[test]
fn dual_of_4_minus_half() {
    let d = Exponent::finite(1, 4.0, -0.5).dual();
    assert!(close(1.0 / d.j, 4.0 / 3.0) && close(d.theta, 0.5));
}

#[test]
fn dual_of_l1_is_carleson_order_zero() {
    let d = Exponent::finite(3, 1.0, 0.0).dual();
    assert!(!d.is_finite());
    assert!(close(d.alpha(), 0.0) && close(d.theta, 0.0));
}

#[test]
fn heart_sends_six_fifths_to_six() {
    let h = Exponent::finite(3, 1.2, 0.0).heart();
    assert!(close(1.0 / h.j, 6.0) && close(h.theta, -1.0));
    for n in 1..6 {
        assert_eq!(Exponent::energy(n).heart(), Exponent::energy(n));
    }
}

#[test]
fn embedding_rules() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let n = rng.random_range(1..4usize);
        let nf = n as f64;
        let p = Exponent::from_views(n, rng.random_range(-1.0..1.5), rng.random_range(-2.0..1.0));
        assert!(p.embeds(&p));
        let (d1, d2): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let q = Exponent::from_views(n, p.j - d1 / nf, p.theta - d1);
        let r = Exponent::from_views(n, q.j - d2 / nf, q.theta - d2);
        assert!(p.embeds(&q) && q.embeds(&r) && p.embeds(&r));
        assert_eq!(p.embeds(&q), q.dual().embeds(&p.dual()));
        let e0: f64 = rng.random_range(0.0..1.0);
        let e1: f64 = rng.random_range(e0..=1.0);
        assert!(p.interp(&q, e0).embeds(&p.interp(&q, e1)));
    }
}

#[test]
fn interpolation_endpoints_and_reiteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..500 {
        let p = Exponent::from_views(2, rng.random_range(-1.0..1.0), rng.random_range(-2.0..1.0));
        let q = Exponent::from_views(2, rng.random_range(-1.0..1.0), rng.random_range(-2.0..1.0));
        assert!(p.interp(&q, 0.0).approx_eq(&p, 1e-15) && p.interp(&q, 1.0).approx_eq(&q, 1e-15));
        let (a, b, l): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let lhs = p.interp(&q, a).interp(&p.interp(&q, b), l);
        assert!(lhs.approx_eq(&p.interp(&q, (1.0 - l) * a + l * b), 1e-12));
    }
}

#[test]
fn imax_vertices_n1() {
    let mut v: Vec<(f64, f64)> = region_imax(1).vertices().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(v, vec![(-1.0, -1.0), (0.0, 0.0), (1.0, -1.0), (2.0, 0.0)]);
}

/// Point-in-polygon by the defining inequalities of I_max.
fn imax_oracle(n: usize, j: f64, th: f64) -> bool {
    let nf = n as f64;
    th > -1.0 && th < 0.0 && j > th / nf && j < th / nf + (nf + 1.0) / nf
}

#[test]
fn imax_membership_matches_raster_oracle() {
    for n in 1..=3 {
        let r = region_imax(n);
        let mut mismatches = 0;
        for a in 0..200 {
            for b in 0..200 {
                let j = -1.5 + 4.0 * (a as f64 + 0.37) / 200.0;
                let th = -1.5 + 2.0 * (b as f64 + 0.41) / 200.0;
                let got = matches!(r.classify((j, th)), Membership::Inside);
                if got != imax_oracle(n, j, th) && !matches!(r.classify((j, th)), Membership::Boundary { .. }) {
                    mismatches += 1;
                }
            }
        }
        assert_eq!(mismatches, 0, "n = {n}");
    }
}

#[test]
fn decay_at_top_parameter_is_lower_edge_of_imax() {
    for n in 1..=3 {
        let nf = n as f64;
        let d = region_decay(n, nf + 1.0).unwrap();
        assert!(d.contains((0.5, 0.0)) && !d.contains((-0.5, 0.0)));
        // lower edge of I_max lies on j = θ/n
        let th = -0.4;
        assert!(!d.contains((th / nf - 1e-6, th)) && d.contains((th / nf + 1e-6, th)));
        assert!(region_decay(n, nf + 1.5).is_err());
    }
}

#[test]
fn imin_heart_segment_n3() {
    let top = region_imin(3, 0.0, 0.0).unwrap();
    let s = top.slice_theta(-1.0);
    assert_eq!(s.len(), 1);
    assert!(close(s[0].lo, 1.0 / 6.0) && close(s[0].hi, 0.5));
    let back = region_heart(&region_heart(&top));
    assert!(back.vertices().zip(top.vertices()).all(|(a, b)| close(a.0, b.0) && close(a.1, b.1)));
}

#[test]
fn imin_inside_imax() {
    for n in 1..=4 {
        assert!(closure_contains(&region_imax(n), &region_imin(n, 0.0, 0.0).unwrap()), "n = {n}");
    }
}
