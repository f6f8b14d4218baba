//! Regions of the (j, θ)-plane: finite unions of convex polygons whose edges
//! carry open/closed flags.  Two-vertex polygons are segments; for those the
//! flags mark open endpoints.

use crate::exponents::Exponent;
use crate::{precond, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const TOL: f64 = 1e-12;

pub type Pt = (f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    /// Vertices (j, θ) in counterclockwise order.
    pub verts: Vec<Pt>,
    /// `open[i]` flags the edge verts[i] → verts[i+1] (segments: endpoint i).
    pub open: Vec<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub n: usize,
    pub lambda: Option<f64>,
    pub eps: Option<f64>,
    pub eps_prime: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub polygons: Vec<Polygon>,
    pub params: Option<RegionParams>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    /// Within the tolerance band of the boundary; `included` tells whether the
    /// touching edges are all closed.
    Boundary { included: bool },
    Outside,
}

impl Membership {
    pub fn is_member(self) -> bool {
        matches!(self, Membership::Inside | Membership::Boundary { included: true })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn dist(a: Pt, b: Pt) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl Polygon {
    pub fn new(verts: Vec<Pt>, open: Vec<bool>) -> Self {
        assert_eq!(verts.len(), open.len(), "one flag per edge");
        assert!(verts.len() >= 2, "degenerate polygon");
        Polygon { verts, open }
    }

    pub fn segment(a: Pt, b: Pt, a_open: bool, b_open: bool) -> Self {
        Polygon { verts: vec![a, b], open: vec![a_open, b_open] }
    }

    pub fn is_segment(&self) -> bool {
        self.verts.len() == 2
    }

    pub fn area(&self) -> f64 {
        let k = self.verts.len();
        (0..k).map(|i| cross((0.0, 0.0), self.verts[i], self.verts[(i + 1) % k])).sum::<f64>() / 2.0
    }

    /// Signed distance of `p` from the supporting line of edge i (positive inside).
    fn edge_dist(&self, i: usize, p: Pt) -> f64 {
        let a = self.verts[i];
        let b = self.verts[(i + 1) % self.verts.len()];
        cross(a, b, p) / dist(a, b)
    }

    pub fn classify(&self, p: Pt) -> Membership {
        if self.is_segment() {
            return self.classify_segment(p);
        }
        let k = self.verts.len();
        let mut on_open = false;
        let mut on_any = false;
        for i in 0..k {
            let d = self.edge_dist(i, p);
            if d < -TOL {
                return Membership::Outside;
            }
            if d <= TOL {
                on_any = true;
                on_open |= self.open[i];
            }
        }
        if on_any {
            Membership::Boundary { included: !on_open }
        } else {
            Membership::Inside
        }
    }

    fn classify_segment(&self, p: Pt) -> Membership {
        let (a, b) = (self.verts[0], self.verts[1]);
        let len = dist(a, b);
        if (cross(a, b, p) / len).abs() > TOL {
            return Membership::Outside;
        }
        let s = ((p.0 - a.0) * (b.0 - a.0) + (p.1 - a.1) * (b.1 - a.1)) / len;
        if s < -TOL || s > len + TOL {
            return Membership::Outside;
        }
        let at_a = dist(p, a) <= TOL;
        let at_b = dist(p, b) <= TOL;
        let excluded = (at_a && self.open[0]) || (at_b && self.open[1]);
        Membership::Boundary { included: !excluded }
    }

    pub fn map(&self, f: impl Fn(Pt) -> Pt) -> Polygon {
        Polygon { verts: self.verts.iter().map(|&v| f(v)).collect(), open: self.open.clone() }
    }

    /// Keep the part where a·j + b·θ + c ≥ 0; the cut edge gets flag `cut_open`.
    pub fn clip(&self, a: f64, b: f64, c: f64, cut_open: bool) -> Option<Polygon> {
        let g = |p: Pt| a * p.0 + b * p.1 + c;
        let k = self.verts.len();
        let mut verts = Vec::new();
        let mut open = Vec::new();
        for i in 0..k {
            let p = self.verts[i];
            let q = self.verts[(i + 1) % k];
            let (gp, gq) = (g(p), g(q));
            if gp >= 0.0 {
                verts.push(p);
                if gq >= 0.0 {
                    open.push(self.open[i]);
                } else {
                    let s = gp / (gp - gq);
                    open.push(self.open[i]);
                    verts.push((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)));
                    open.push(cut_open);
                }
            } else if gq >= 0.0 {
                let s = gp / (gp - gq);
                verts.push((p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1)));
                open.push(self.open[i]);
            }
        }
        if verts.len() < 3 {
            None
        } else {
            Some(Polygon { verts, open })
        }
    }
}

impl Region {
    pub fn empty() -> Self {
        Region::default()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn classify(&self, p: Pt) -> Membership {
        let mut best = Membership::Outside;
        for poly in &self.polygons {
            match poly.classify(p) {
                Membership::Inside => return Membership::Inside,
                Membership::Boundary { included: true } => best = Membership::Boundary { included: true },
                m @ Membership::Boundary { included: false } => {
                    if best == Membership::Outside {
                        best = m;
                    }
                }
                Membership::Outside => {}
            }
        }
        best
    }

    pub fn contains(&self, p: Pt) -> bool {
        self.classify(p).is_member()
    }

    pub fn contains_exponent(&self, e: &Exponent) -> bool {
        self.contains((e.j, e.theta))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Pt> + '_ {
        self.polygons.iter().flat_map(|p| p.verts.iter().copied())
    }

    /// Intersection with the horizontal line θ = c, as j-intervals per polygon.
    pub fn slice_theta(&self, c: f64) -> Vec<Interval> {
        let mut out = Vec::new();
        for poly in &self.polygons {
            let k = poly.verts.len();
            let mut pts: Vec<(f64, bool)> = Vec::new();
            let edges = if poly.is_segment() { 1 } else { k };
            for i in 0..edges {
                let a = poly.verts[i];
                let b = poly.verts[(i + 1) % k];
                let (da, db) = (a.1 - c, b.1 - c);
                let flag = if poly.is_segment() { false } else { poly.open[i] };
                if da.abs() <= TOL && db.abs() <= TOL {
                    let fa = if poly.is_segment() { poly.open[0] } else { flag };
                    let fb = if poly.is_segment() { poly.open[1] } else { flag };
                    pts.push((a.0, fa));
                    pts.push((b.0, fb));
                } else if (da <= TOL && db >= -TOL) || (da >= -TOL && db <= TOL) {
                    let s = if (da - db).abs() > 0.0 { da / (da - db) } else { 0.0 };
                    let j = a.0 + s.clamp(0.0, 1.0) * (b.0 - a.0);
                    pts.push((j, flag));
                }
            }
            if pts.is_empty() {
                continue;
            }
            let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            let lo_open = pts.iter().any(|p| (p.0 - lo).abs() <= 1e-9 && p.1);
            let hi_open = pts.iter().any(|p| (p.0 - hi).abs() <= 1e-9 && p.1);
            out.push(Interval { lo, hi, lo_open, hi_open });
        }
        out
    }

    /// Vertex CSV: columns j, theta, polygon_id, open (flag of the edge leaving the vertex).
    pub fn vertex_csv(&self) -> String {
        let mut s = String::from("j,theta,polygon_id,open\n");
        for (id, poly) in self.polygons.iter().enumerate() {
            for (v, o) in poly.verts.iter().zip(&poly.open) {
                let _ = writeln!(s, "{},{},{},{}", v.0, v.1, id, u8::from(*o));
            }
        }
        s
    }

    /// Dense membership grid CSV over [j0, j1] × [θ0, θ1].
    pub fn grid_csv(&self, j_range: (f64, f64), theta_range: (f64, f64), nj: usize, nt: usize) -> String {
        let mut s = String::from("j,theta,member\n");
        for a in 0..nt {
            let th = lerp(theta_range, a, nt);
            for b in 0..nj {
                let j = lerp(j_range, b, nj);
                let _ = writeln!(s, "{},{},{}", j, th, u8::from(self.contains((j, th))));
            }
        }
        s
    }
}

fn lerp(r: (f64, f64), i: usize, n: usize) -> f64 {
    if n <= 1 {
        r.0
    } else {
        r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64
    }
}

/// I_max: θ ∈ [−1, 0], θ/n < j < (n+1+θ)/n; top and bottom closed, sides open.
pub fn region_imax(n: usize) -> Region {
    assert!(n >= 1, "dimension must be positive");
    let nf = n as f64;
    let poly = Polygon::new(
        vec![(-1.0 / nf, -1.0), (1.0, -1.0), ((nf + 1.0) / nf, 0.0), (0.0, 0.0)],
        vec![false, true, false, true],
    );
    Region { polygons: vec![poly], params: Some(RegionParams { n, ..Default::default() }) }
}

/// Open half-plane j > θ/n − (n+1−λ)/(2n), clipped to a bounding box.
pub fn region_decay(n: usize, lambda: f64) -> Result<Region> {
    let nf = n as f64;
    if !(0.0..=nf + 1.0).contains(&lambda) {
        return precond(format!("decay parameter λ = {lambda} outside [0, {}]", nf + 1.0));
    }
    region_decay_in_box(n, lambda, (-4.0, 4.0), (-4.0, 3.0))
}

pub fn region_decay_in_box(n: usize, lambda: f64, jb: (f64, f64), tb: (f64, f64)) -> Result<Region> {
    let nf = n as f64;
    let bx = Polygon::new(
        vec![(jb.0, tb.0), (jb.1, tb.0), (jb.1, tb.1), (jb.0, tb.1)],
        vec![false; 4],
    );
    // j − θ/n + (n+1−λ)/(2n) > 0
    let clipped = bx.clip(1.0, -1.0 / nf, (nf + 1.0 - lambda) / (2.0 * nf), true);
    Ok(Region {
        polygons: clipped.into_iter().collect(),
        params: Some(RegionParams { n, lambda: Some(lambda), ..Default::default() }),
    })
}

/// Vertex-wise image under (j, θ) ↦ (1 − j, −1 − θ).
pub fn region_heart(r: &Region) -> Region {
    Region {
        polygons: r.polygons.iter().map(|p| p.map(|(j, t)| (1.0 - j, -1.0 - t))).collect(),
        params: r.params.clone(),
    }
}

/// Convex hull of two regions.  A hull edge is closed when its midpoint or
/// both of its endpoints belong to one of the inputs.
pub fn region_hull(a: &Region, b: &Region) -> Region {
    let pts: Vec<Pt> = a.vertices().chain(b.vertices()).collect();
    if pts.is_empty() {
        return Region::empty();
    }
    let hull = convex_hull(&pts);
    let member = |p: Pt| a.contains(p) || b.contains(p);
    let k = hull.len();
    let open = (0..k)
        .map(|i| {
            let p = hull[i];
            let q = hull[(i + 1) % k];
            let mid = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
            let closed = member(mid) || (member(p) && member(q));
            !closed
        })
        .collect();
    let params = a.params.clone().or_else(|| b.params.clone());
    if k == 2 {
        let (p, q) = (hull[0], hull[1]);
        return Region { polygons: vec![Polygon::segment(p, q, !member(p), !member(q))], params };
    }
    Region { polygons: vec![Polygon { verts: hull, open }], params }
}

/// Monotone-chain hull, counterclockwise, collinear points dropped.
pub fn convex_hull(pts: &[Pt]) -> Vec<Pt> {
    let mut p: Vec<Pt> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).expect("finite vertices"));
    p.dedup_by(|a, b| dist(*a, *b) <= TOL);
    if p.len() <= 2 {
        return p;
    }
    let mut lower: Vec<Pt> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= TOL {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Pt> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= TOL {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Hull of {θ=0, j ∈ (1/(2+ε′), (n+2)/(2n)+ε)} and its ♥-image on θ = −1.
pub fn region_imin(n: usize, eps: f64, eps_prime: f64) -> Result<Region> {
    if n < 1 {
        return precond("dimension must be positive");
    }
    if eps < 0.0 || eps_prime < 0.0 {
        return precond("ε and ε′ must be nonnegative");
    }
    let nf = n as f64;
    let top = Region {
        polygons: vec![Polygon::segment(
            (1.0 / (2.0 + eps_prime), 0.0),
            ((nf + 2.0) / (2.0 * nf) + eps, 0.0),
            true,
            true,
        )],
        params: None,
    };
    let mut r = region_hull(&top, &region_heart(&top));
    r.params = Some(RegionParams { n, eps: Some(eps), eps_prime: Some(eps_prime), ..Default::default() });
    Ok(r)
}

/// Closure containment of convex pieces: every vertex of `inner` lies in the
/// closure of some polygon of `outer`.
pub fn closure_contains(outer: &Region, inner: &Region) -> bool {
    inner.polygons.iter().all(|p| {
        outer.polygons.iter().any(|q| p.verts.iter().all(|&v| q.classify(v) != Membership::Outside))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imax_n1_vertices() {
        let r = region_imax(1);
        let mut v: Vec<Pt> = r.vertices().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![(-1.0, -1.0), (0.0, 0.0), (1.0, -1.0), (2.0, 0.0)]);
    }

    #[test]
    fn imax_edges_flags() {
        let r = region_imax(2);
        assert!(r.contains((0.5, 0.0)));
        assert!(r.contains((0.5, -1.0)));
        assert!(!r.contains((0.0, 0.0)));
        assert!(!r.contains((-0.25, -0.5)));
        assert!(r.contains((-0.2, -0.5)));
    }

    #[test]
    fn decay_endpoint_lambda() {
        let r = region_decay(1, 0.0).unwrap();
        assert!(r.contains((0.5, -0.5)));
        assert!(region_decay(1, 2.5).is_err());
        assert!(region_decay(1, -0.1).is_err());
    }

    #[test]
    fn hull_of_segments_is_imax() {
        for n in 1..5 {
            let nf = n as f64;
            let top = Region {
                polygons: vec![Polygon::segment((0.0, 0.0), ((nf + 1.0) / nf, 0.0), true, true)],
                params: None,
            };
            let bot = Region {
                polygons: vec![Polygon::segment((-1.0 / nf, -1.0), (1.0, -1.0), true, true)],
                params: None,
            };
            let h = region_hull(&top, &bot);
            let m = region_imax(n);
            for a in 0..41 {
                for b in 0..41 {
                    let p = (-1.5 + 4.0 * a as f64 / 40.0, -1.25 + 1.5 * b as f64 / 40.0);
                    assert_eq!(h.contains(p), m.contains(p), "n={n} p={p:?}");
                }
            }
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(region_heart(&Region::empty()).is_empty());
        assert!(region_hull(&Region::empty(), &Region::empty()).is_empty());
    }
}
