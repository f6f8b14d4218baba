//! Exact box–ball intersection volumes on the periodic torus.
//!
//! n = 1 and n = 2 are closed form.  For n = 3 the area of the disk slice is
//! integrated over the third axis with Gauss–Legendre panels split at every
//! point where the slice radius crosses an edge or corner distance.

use crate::fourier::{bin_to_k, fft_nd};
use crate::{precond, Result, C64};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

pub fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// ∫_0^x √(r² − u²) du.
fn circ_prim(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    let s = (r * r - x * x).max(0.0).sqrt();
    0.5 * (x * s + r * r * (x / r).clamp(-1.0, 1.0).asin())
}

/// Area of [x0, x1] × [y0, y1] ∩ B(0, r).
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b || y0 >= y1 {
        return 0.0;
    }
    let mut br = vec![a, b];
    for v in [y0, y1] {
        if v.abs() < r {
            let c = (r * r - v * v).sqrt();
            for q in [-c, c] {
                if q > a && q < b {
                    br.push(q);
                }
            }
        }
    }
    br.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut area = 0.0;
    for w in br.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let m = 0.5 * (u + v);
        let s = (r * r - m * m).max(0.0).sqrt();
        // tangency at the midpoint still means the arc bounds the piece
        let top_is_s = s <= y1;
        let bot_is_s = -s >= y0;
        let top = if top_is_s { s } else { y1 };
        let bot = if bot_is_s { -s } else { y0 };
        if top <= bot {
            continue;
        }
        let arc = circ_prim(v, r) - circ_prim(u, r);
        let mut piece = 0.0;
        piece += if top_is_s { arc } else { y1 * (v - u) };
        piece -= if bot_is_s { -arc } else { y0 * (v - u) };
        area += piece;
    }
    area.max(0.0)
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

fn box_ball_3d(lo: &[f64], hi: &[f64], r: f64) -> f64 {
    let a = lo[2].max(-r);
    let b = hi[2].min(r);
    if a >= b {
        return 0.0;
    }
    let mut crit = vec![lo[0].abs(), hi[0].abs(), lo[1].abs(), hi[1].abs()];
    for x in [lo[0], hi[0]] {
        for y in [lo[1], hi[1]] {
            crit.push((x * x + y * y).sqrt());
        }
    }
    let mut br = vec![a, b];
    for c in crit {
        if c < r {
            let z = (r * r - c * c).sqrt();
            for q in [-z, z] {
                if q > a && q < b {
                    br.push(q);
                }
            }
        }
    }
    br.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut vol = 0.0;
    for w in br.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        // substitute z = u + (v−u)·(1−cos φ)/2 style panels would help near |z| = r;
        // four sub-panels keep the square-root edge behaviour under control
        let parts = 4;
        for p in 0..parts {
            let pu = u + (v - u) * p as f64 / parts as f64;
            let pv = u + (v - u) * (p + 1) as f64 / parts as f64;
            let h = 0.5 * (pv - pu);
            let m = 0.5 * (pv + pu);
            for (x, wgt) in GL8 {
                let z = m + h * x;
                let rr = (r * r - z * z).max(0.0).sqrt();
                vol += wgt * h * rect_disk_area(lo[0], hi[0], lo[1], hi[1], rr);
            }
        }
    }
    vol
}

/// |box ∩ B(0, r)| for an axis-aligned box given by its corners.
pub fn box_ball_volume(lo: &[f64], hi: &[f64], r: f64) -> f64 {
    match lo.len() {
        1 => interval_overlap(lo[0], hi[0], -r, r),
        2 => rect_disk_area(lo[0], hi[0], lo[1], hi[1], r),
        3 => box_ball_3d(lo, hi, r),
        n => panic!("unsupported dimension {n}"),
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_int(n + 2),
    }
}

/// Γ(k/2) for integer k ≥ 1.
fn gamma_half_int(k: usize) -> f64 {
    if k == 1 {
        PI.sqrt()
    } else if k == 2 {
        1.0
    } else {
        (k as f64 / 2.0 - 1.0) * gamma_half_int(k - 2)
    }
}

/// Fraction of every torus cell covered by B(center, r) (summed over periodic images).
pub fn ball_fractions(n: usize, nx: usize, l: f64, center: &[f64], r: f64) -> Result<Vec<f64>> {
    if r >= l / 2.0 {
        return precond(format!("aperture exceeds torus injectivity radius (radius {r}, period {l})"));
    }
    let dx = l / nx as f64;
    let cell = dx.powi(n as i32);
    let total = nx.pow(n as u32);
    let mut out = vec![0.0; total];
    if r <= 0.0 {
        return Ok(out);
    }
    let half = 0.5 * dx;
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut off = vec![0.0; n];
    let images = 3usize.pow(n as u32);
    for (idx, o) in out.iter_mut().enumerate() {
        let mut rem = idx;
        for a in (0..n).rev() {
            let i = rem % nx;
            rem /= nx;
            let mut d = i as f64 * dx - center[a];
            d -= l * (d / l).round();
            off[a] = d;
        }
        let mut acc = 0.0;
        for img in 0..images {
            let mut code = img;
            let mut near2 = 0.0;
            let mut far2 = 0.0;
            for a in 0..n {
                let s = (code % 3) as f64 - 1.0;
                code /= 3;
                lo[a] = off[a] + s * l - half;
                hi[a] = off[a] + s * l + half;
                let nd = if lo[a] > 0.0 {
                    lo[a]
                } else if hi[a] < 0.0 {
                    -hi[a]
                } else {
                    0.0
                };
                near2 += nd * nd;
                let fd = lo[a].abs().max(hi[a].abs());
                far2 += fd * fd;
            }
            if near2 >= r * r {
                continue;
            }
            if far2 <= r * r {
                acc += cell;
            } else {
                acc += box_ball_volume(&lo, &hi, r);
            }
        }
        *o = (acc / cell).min(1.0);
    }
    Ok(out)
}

type Key = (usize, usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<Key, Arc<Vec<C64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<C64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Transform of the kernel d ↦ |box_d ∩ B(0, r)| / Δxⁿ (cell fractions), cached.
pub fn ball_kernel_hat(n: usize, nx: usize, l: f64, r: f64) -> Result<Arc<Vec<C64>>> {
    let key = (n, nx, l.to_bits(), r.to_bits());
    if let Some(k) = cache().lock().unwrap().get(&key) {
        return Ok(k.clone());
    }
    let frac = ball_fractions(n, nx, l, &vec![0.0; n], r)?;
    let mut buf: Vec<C64> = frac.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft_nd(&mut buf, n, nx, false);
    let arc = Arc::new(buf);
    let mut c = cache().lock().unwrap();
    if c.len() > 4096 {
        c.clear();
    }
    c.insert(key, arc.clone());
    Ok(arc)
}

/// Minimal-image integer offsets of bin `idx`.
pub fn bin_offsets(idx: usize, n: usize, nx: usize) -> Vec<i64> {
    let mut rem = idx;
    let mut k = vec![0; n];
    for a in (0..n).rev() {
        k[a] = bin_to_k(rem % nx, nx);
        rem /= nx;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_disk_full_and_partial() {
        assert!((rect_disk_area(-2.0, 2.0, -2.0, 2.0, 1.0) - PI).abs() < 1e-14);
        assert!((rect_disk_area(0.0, 2.0, 0.0, 2.0, 1.0) - PI / 4.0).abs() < 1e-14);
        assert!((rect_disk_area(-0.5, 0.5, -0.5, 0.5, 1.0) - 1.0).abs() < 1e-14);
        // strip |y| < 1/2 through the unit disk: 2(√3/4 + π/6)
        let strip = 2.0 * (3f64.sqrt() / 4.0 + PI / 6.0);
        assert!((rect_disk_area(-2.0, 2.0, -0.5, 0.5, 1.0) - strip).abs() < 1e-13);
    }

    #[test]
    fn tangent_disk_in_square() {
        let r = 0.25;
        let a = rect_disk_area(-r, r, -r, r, r);
        assert!((a - std::f64::consts::PI * r * r).abs() < 1e-15);
    }

    #[test]
    fn ball_3d_volume() {
        let v = box_ball_volume(&[-2.0; 3], &[2.0; 3], 1.0);
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-9);
        let oct = box_ball_volume(&[0.0; 3], &[2.0; 3], 1.0);
        assert!((oct - PI / 6.0).abs() < 1e-9);
    }

    #[test]
    fn fractions_sum_to_ball_volume() {
        for n in 1..=2 {
            let nx = 32;
            let l = 8.0;
            let dx = l / nx as f64;
            let r = 1.37;
            let f = ball_fractions(n, nx, l, &vec![0.3; n], r).unwrap();
            let s: f64 = f.iter().sum::<f64>() * dx.powi(n as i32);
            assert!((s - unit_ball_volume(n) * r.powi(n as i32)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn guard_on_large_radius() {
        assert!(ball_fractions(1, 16, 4.0, &[0.0], 2.0).is_err());
    }
}
