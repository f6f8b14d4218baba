//! Tent, Z and slice quasinorms on the discretised half-space.
//!
//! Integrals over ℝⁿ are torus sums times Δxⁿ and dt/t integrals are level sums
//! times log ρ.  Balls enter through exact cell-overlap fractions, so the L²
//! cases reproduce the weighted L² norm exactly (up to rounding).

use crate::exponents::Exponent;
use crate::fourier::fft_nd;
use crate::grid::{whitney_grid, BoundaryField, Field, GridSpec, WhitneyGrid, WhitneyParam};
use crate::overlap::{ball_fractions, ball_kernel_hat, unit_ball_volume};
use crate::{precond, Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub op: String,
    pub exponent: Exponent,
    pub value: f64,
    pub truncation_estimate: f64,
    pub method: String,
}

impl NormReport {
    fn new(op: &str, p: &Exponent, value: f64, trunc: f64, method: &str) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Numeric(format!("{op}: non-finite norm (degenerate weights or overflow)")));
        }
        Ok(NormReport {
            op: op.to_string(),
            exponent: *p,
            value,
            truncation_estimate: trunc.max(0.0),
            method: method.to_string(),
        })
    }
}

fn check_dim(f: &Field, p: &Exponent) -> Result<()> {
    if f.spec().n != p.n {
        return precond(format!("exponent dimension {} does not match grid dimension {}", p.n, f.spec().n));
    }
    Ok(())
}

/// Channel-summed |t^{−s} f|², one spatial array per level.
fn weighted_energy(f: &Field, s: f64) -> Vec<Vec<f64>> {
    let spec = f.spec();
    let e = f.energy();
    let sl = spec.spatial_len();
    (0..spec.k)
        .map(|k| {
            let w = spec.t(k as i64).powf(-2.0 * s);
            e[k * sl..(k + 1) * sl].iter().map(|v| v * w).collect()
        })
        .collect()
}

/// Share of the weighted energy carried by the two end levels.
fn edge_fraction(levels: &[Vec<f64>]) -> f64 {
    let tot: f64 = levels.iter().map(|l| l.iter().sum::<f64>()).sum();
    if tot == 0.0 {
        return 0.0;
    }
    let ends = levels.first().map_or(0.0, |l| l.iter().sum::<f64>())
        + levels.last().map_or(0.0, |l| l.iter().sum::<f64>());
    ends / tot
}

fn fft_real(v: &[f64], n: usize, nx: usize) -> Vec<C64> {
    let mut b: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    fft_nd(&mut b, n, nx, false);
    b
}

fn ifft_real(mut b: Vec<C64>, n: usize, nx: usize) -> Vec<f64> {
    fft_nd(&mut b, n, nx, true);
    let s = 1.0 / b.len() as f64;
    b.iter().map(|v| (v.re * s).max(0.0)).collect()
}

/// ∥g∥_{L^q(ℝⁿ)} of a nonnegative array (q = ∞ gives the max).
fn lq(values: &[f64], q: f64, cell: f64) -> f64 {
    if q.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        (values.iter().map(|v| v.powf(q)).sum::<f64>() * cell).powf(1.0 / q)
    }
}

/// ∥f∥_{L²_s} = ∥κ^{−s} f∥_{L²(dy dt/t)}.
pub fn l2s_norm(f: &Field, s: f64) -> f64 {
    let spec = f.spec();
    let w = spec.log_rho() * spec.cell_volume();
    weighted_energy(f, s).iter().map(|l| l.iter().sum::<f64>()).sum::<f64>().sqrt() * w.sqrt()
}

/// Squared Lusin function A_β(κ^{−s}f)² at every grid point.
pub fn lusin_squared(f: &Field, s: f64, beta: f64) -> Result<Vec<f64>> {
    let spec = *f.spec();
    if beta <= 0.0 {
        return precond("aperture must be positive");
    }
    if beta * spec.t_max >= spec.l / 2.0 {
        return precond("aperture exceeds torus injectivity radius");
    }
    let energy = weighted_energy(f, s);
    let (n, nx) = (spec.n, spec.nx);
    let parts: Vec<Vec<C64>> = (0..spec.k)
        .into_par_iter()
        .map(|k| {
            let t = spec.t(k as i64);
            let kh = ball_kernel_hat(n, nx, spec.l, beta * t)?;
            let w = spec.log_rho() * t.powi(-(n as i32)) * spec.cell_volume();
            let mut g = fft_real(&energy[k], n, nx);
            for (a, b) in g.iter_mut().zip(kh.iter()) {
                *a *= b * w;
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![C64::new(0.0, 0.0); spec.spatial_len()];
    for p in parts {
        for (a, b) in acc.iter_mut().zip(p) {
            *a += b;
        }
    }
    Ok(ifft_real(acc, n, nx))
}

/// Carleson functional sup_{c, r} r^{−α}(r^{−n} ∬_{T(B(c,r))} |κ^{−s}f|² dy dt/t)^{1/2};
/// centres range over grid points and radii over t-levels below L/2.
pub fn carleson_sup(f: &Field, s: f64, alpha: f64) -> Result<f64> {
    let spec = *f.spec();
    let energy = weighted_energy(f, s);
    let (n, nx) = (spec.n, spec.nx);
    let hats: Vec<Vec<C64>> = energy.par_iter().map(|e| fft_real(e, n, nx)).collect();
    let radii: Vec<f64> = spec.levels().into_iter().filter(|&r| r < spec.l / 2.0).collect();
    let best: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let mut acc = vec![C64::new(0.0, 0.0); spec.spatial_len()];
            for (l, h) in hats.iter().enumerate() {
                let t = spec.t(l as i64);
                if t >= r {
                    break;
                }
                let frac = ball_fractions(n, nx, spec.l, &vec![0.0; n], r - t)?;
                let kh = fft_real(&frac, n, nx);
                let w = spec.log_rho() * spec.cell_volume();
                for ((a, b), k) in acc.iter_mut().zip(h).zip(&kh) {
                    *a += b * k * w;
                }
            }
            let vals = ifft_real(acc, n, nx);
            let m = vals.iter().copied().fold(0.0, f64::max);
            Ok(r.powf(-alpha) * (m * r.powi(-(n as i32))).sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(best.into_iter().fold(0.0, f64::max))
}

/// ∥f∥_{T^p} with aperture β (β = 1 is the standard cone).
pub fn tent_norm(f: &Field, p: &Exponent, beta: f64) -> Result<NormReport> {
    check_dim(f, p)?;
    let trunc = edge_fraction(&weighted_energy(f, p.theta));
    if p.is_finite() {
        let a2 = lusin_squared(f, p.theta, beta)?;
        let q = p.i();
        let a: Vec<f64> = a2.iter().map(|v| v.sqrt()).collect();
        let v = lq(&a, q, f.spec().cell_volume());
        NormReport::new("tent_norm", p, v, trunc, "continuous")
    } else {
        let v = carleson_sup(f, p.theta, p.alpha())?;
        NormReport::new("tent_norm", p, v, trunc, "continuous")
    }
}

/// (1/log ρ)∫_{cell k} T_l(t) dt/t with d = k − l, where
/// T_l(t) = |[a_l,b_l] ∩ (t/c1, c1 t)| / ((c1 − 1/c1) t).
pub fn whitney_time_kernel(log_rho: f64, c1: f64, d: i64) -> f64 {
    let h = 0.5 * log_rho;
    let (a, b) = ((-h).exp(), h.exp());
    let centre = (d as f64 * log_rho).exp();
    let (lo, hi) = (centre * (-h).exp(), centre * h.exp());
    let mut cuts = vec![lo, hi, a / c1, b / c1, a * c1, b * c1];
    cuts.retain(|&x| x >= lo && x <= hi);
    cuts.sort_by(f64::total_cmp);
    let norm = c1 - 1.0 / c1;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let m = 0.5 * (u + v);
        let (ua, ub) = if b < c1 * m { (b, 0.0) } else { (0.0, c1) };
        let (la, lb) = if a > m / c1 { (a, 0.0) } else { (0.0, 1.0 / c1) };
        if ua + ub * m <= la + lb * m {
            continue;
        }
        let (al, be) = (ua - la, ub - lb);
        // ∫ (α + βt)/t² dt = −α/t + β log t
        total += al * (1.0 / u - 1.0 / v) + be * (v / u).ln();
    }
    total / (norm * log_rho)
}

/// Number of ghost levels needed on either side for the Whitney time kernel.
pub fn ghost_levels(log_rho: f64, c1: f64) -> i64 {
    (c1.ln() / log_rho).ceil() as i64 + 1
}

/// W_c(κ^{−r}f)² at every level (ghost levels included) and grid point.
/// Returns (first level index, rows).
pub fn whitney_squared(f: &Field, r: f64, c: WhitneyParam, ghosts: bool) -> Result<(i64, Vec<Vec<f64>>)> {
    let c = WhitneyParam::new(c.c0, c.c1)?;
    let spec = *f.spec();
    let (n, nx) = (spec.n, spec.nx);
    let lr = spec.log_rho();
    let g = ghost_levels(lr, c.c1);
    let (k0, k1) = if ghosts { (-g, spec.k as i64 + g) } else { (0, spec.k as i64) };
    if c.c0 * spec.t(k1 - 1) >= spec.l / 2.0 {
        return precond("aperture exceeds torus injectivity radius");
    }
    let energy = weighted_energy(f, r);
    let hats: Vec<Vec<C64>> = energy.par_iter().map(|e| fft_real(e, n, nx)).collect();
    let tau: Vec<f64> = (-g..=g).map(|d| whitney_time_kernel(lr, c.c1, d)).collect();
    let omega = unit_ball_volume(n);
    let rows: Vec<Vec<f64>> = (k0..k1)
        .into_par_iter()
        .map(|k| {
            let t = spec.t(k);
            let rad = c.c0 * t;
            let kh = ball_kernel_hat(n, nx, spec.l, rad)?;
            let scale = spec.cell_volume() / (omega * rad.powi(n as i32));
            let mut acc = vec![C64::new(0.0, 0.0); spec.spatial_len()];
            for d in -g..=g {
                let l = k - d;
                if l < 0 || l >= spec.k as i64 {
                    continue;
                }
                let w = tau[(d + g) as usize];
                if w == 0.0 {
                    continue;
                }
                for (a, b) in acc.iter_mut().zip(&hats[l as usize]) {
                    *a += b * w;
                }
            }
            for (a, b) in acc.iter_mut().zip(kh.iter()) {
                *a *= b * scale;
            }
            Ok(ifft_real(acc, n, nx))
        })
        .collect::<Result<_>>()?;
    Ok((k0, rows))
}

/// ∥f∥_{Z^p_c}: L^{i(p)}(dx dt/t) norm of the Whitney averages of κ^{−r(p)}f,
/// or their supremum for infinite p.
pub fn z_norm(f: &Field, p: &Exponent, c: WhitneyParam) -> Result<NormReport> {
    check_dim(f, p)?;
    let spec = *f.spec();
    let trunc = edge_fraction(&weighted_energy(f, p.r()));
    let (_, rows) = whitney_squared(f, p.r(), c, true)?;
    let v = if p.is_finite() {
        let q = p.i();
        let cell = spec.cell_volume() * spec.log_rho();
        rows.iter().flat_map(|r| r.iter()).map(|v| v.powf(q / 2.0)).sum::<f64>().mul_add(cell, 0.0).powf(1.0 / q)
    } else {
        rows.iter().flat_map(|r| r.iter()).copied().fold(0.0, f64::max).sqrt()
    };
    NormReport::new("z_norm", p, v, trunc, "continuous")
}

/// [|f|^q]_{Q̄} = ∬_{Q̄} |f|^q dτ dξ/τ^{1+n} per cube (q = ∞ gives the cellwise max).
pub fn cube_integrals(f: &Field, grid: &WhitneyGrid, q: f64) -> Vec<f64> {
    let spec = f.spec();
    let ch = f.channels();
    let w = spec.log_rho() * spec.cell_volume();
    grid.cubes
        .iter()
        .map(|cube| {
            let mut acc = 0.0f64;
            for &(l, i) in &cube.cells {
                let a: f64 = (0..ch).map(|c| f.get(l, i, c).norm_sqr()).sum::<f64>().sqrt();
                if q.is_infinite() {
                    acc = acc.max(a);
                } else {
                    acc += a.powf(q) * w * spec.t(l as i64).powi(-(spec.n as i32));
                }
            }
            acc
        })
        .collect()
}

/// Z^{p,q}_s dyadic quasinorm ∥ℓ(Q)^{−s}[|f|^q]^{1/q}_{Q̄}∥_{ℓ^p(G, ℓ(Q)ⁿ)}.
pub fn zpq_dyadic(f: &Field, grid: &WhitneyGrid, p: f64, q: f64, s: f64) -> f64 {
    let n = f.spec().n as i32;
    let ints = cube_integrals(f, grid, q);
    let terms = grid.cubes.iter().zip(&ints).map(|(cube, &v)| {
        let m = if q.is_infinite() { v } else { v.powf(1.0 / q) };
        (cube.side, cube.side.powf(-s) * m)
    });
    if p.is_infinite() {
        terms.map(|(_, v)| v).fold(0.0, f64::max)
    } else {
        terms.map(|(side, v)| side.powi(n) * v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Dyadic Z-norm ∥ℓ(Q)^{−r}[|f|²]^{1/2}_{Q̄^k}∥_{ℓ^p(G^k, ℓ(Q)ⁿ)}, finite p only.
pub fn z_norm_dyadic(f: &Field, p: &Exponent, k: i32) -> Result<NormReport> {
    check_dim(f, p)?;
    if !p.is_finite() {
        return precond("dyadic Z-norm is only defined here for finite exponents");
    }
    let grid = whitney_grid(f.spec(), k);
    let v = zpq_dyadic(f, &grid, p.i(), 2.0, p.r());
    let e = f.energy();
    let sl = f.spec().spatial_len();
    let lost: f64 = grid.uncovered.iter().map(|&(l, i)| e[l * sl + i]).sum();
    let tot: f64 = e.iter().sum();
    let trunc = if tot > 0.0 { lost / tot } else { 0.0 };
    NormReport::new("z_norm_dyadic", p, v, trunc, "dyadic")
}

fn check_slice_t(spec_nx: usize, l: f64, t: f64) -> Result<()> {
    if !(t > 0.0) || t >= l / 2.0 || spec_nx == 0 {
        return precond(format!("slice radius {t} outside (0, L/2)"));
    }
    Ok(())
}

/// ∥g∥_{E^p(t)} = t^{−r}∥x ↦ ∥g∥_{L²(B(x,t), dy/tⁿ)}∥_{L^{i(p)}}.
pub fn slice_norm(g: &BoundaryField, p: &Exponent, t: f64) -> Result<NormReport> {
    let sp = g.spec;
    check_slice_t(sp.nx, sp.l, t)?;
    let e: Vec<f64> = g.values.chunks(g.channels).map(|c| c.iter().map(|v| v.norm_sqr()).sum()).collect();
    let kh = ball_kernel_hat(sp.n, sp.nx, sp.l, t)?;
    let mut b = fft_real(&e, sp.n, sp.nx);
    let w = sp.cell_volume() * t.powi(-(sp.n as i32));
    for (a, k) in b.iter_mut().zip(kh.iter()) {
        *a *= k * w;
    }
    let local: Vec<f64> = ifft_real(b, sp.n, sp.nx).into_iter().map(f64::sqrt).collect();
    let v = t.powf(-p.r()) * lq(&local, p.i(), sp.cell_volume());
    NormReport::new("slice_norm", p, v, 0.0, "continuous")
}

/// Dyadic slice quasinorm t^{−r} ℓ^{n/p − n/2} ∥(∥g∥_{L²(Q)})_Q∥_{ℓ^p} with ℓ the
/// largest dyadic side L/2^m not exceeding t.
pub fn slice_norm_dyadic(g: &BoundaryField, p: &Exponent, t: f64) -> Result<NormReport> {
    let sp = g.spec;
    check_slice_t(sp.nx, sp.l, t)?;
    let mut m = 0u32;
    while sp.l / 2f64.powi(m as i32) > t && (1usize << m) < sp.nx {
        m += 1;
    }
    let side = sp.l / 2f64.powi(m as i32);
    let per = sp.nx >> m;
    let cubes_per_axis = 1usize << m;
    let mut acc = vec![0.0; cubes_per_axis.pow(sp.n as u32)];
    for i in 0..sp.len() {
        let mut rem = i;
        let mut q = 0;
        let mut stride = 1;
        for _ in 0..sp.n {
            q += ((rem % sp.nx) / per) * stride;
            stride *= cubes_per_axis;
            rem /= sp.nx;
        }
        let e: f64 = g.values[i * g.channels..(i + 1) * g.channels].iter().map(|v| v.norm_sqr()).sum();
        acc[q] += e * sp.cell_volume();
    }
    let n = sp.n as f64;
    let q = p.i();
    let loc: Vec<f64> = acc.iter().map(|v| v.sqrt()).collect();
    let seq = if q.is_infinite() {
        loc.iter().copied().fold(0.0, f64::max)
    } else {
        loc.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    let scale = if q.is_infinite() { side.powf(-n / 2.0) } else { side.powf(n / q - n / 2.0) };
    NormReport::new("slice_norm_dyadic", p, t.powf(-p.r()) * scale * seq, 0.0, "dyadic")
}

fn slice_levels(spec: &GridSpec, t: f64, h: f64) -> Result<Vec<usize>> {
    if h <= 1.5 {
        return precond(format!("slice parameter h = {h} must exceed 3/2"));
    }
    let lv: Vec<usize> = (0..spec.k).filter(|&k| {
        let s = spec.t(k as i64);
        s >= t * (1.0 - 1e-12) && s <= h * t * (1.0 + 1e-12)
    }).collect();
    if lv.is_empty() || t < spec.t_min * (1.0 - 1e-12) || h * t > spec.t_max * (1.0 + 1e-12) {
        return precond(format!("slice [{t}, {}] outside the grid range", h * t));
    }
    Ok(lv)
}

/// ι_{t,h}: g placed on the levels with t ≤ t_k ≤ ht.
pub fn slice_embed(spec: &GridSpec, g: &BoundaryField, t: f64, h: f64) -> Result<Field> {
    if g.spec != spec.boundary() {
        return precond("boundary field does not match grid");
    }
    let lv = slice_levels(spec, t, h)?;
    let per = spec.spatial_len() * g.channels;
    let mut values = vec![C64::new(0.0, 0.0); spec.k * per];
    for k in lv {
        values[k * per..(k + 1) * per].copy_from_slice(&g.values);
    }
    Field::new(*spec, g.channels, values)
}

/// π_{t,h}: dt/t-average over the levels in [t, ht].
pub fn slice_project(f: &Field, t: f64, h: f64) -> Result<BoundaryField> {
    let spec = f.spec();
    let lv = slice_levels(spec, t, h)?;
    let per = spec.spatial_len() * f.channels();
    let mut out = vec![C64::new(0.0, 0.0); per];
    for &k in &lv {
        for (o, v) in out.iter_mut().zip(f.level(k)) {
            *o += v;
        }
    }
    let s = 1.0 / lv.len() as f64;
    for o in &mut out {
        *o *= s;
    }
    BoundaryField::new(spec.boundary(), f.channels(), out)
}

/// Σ_cells (f, g) log ρ Δxⁿ.
pub fn pairing(f: &Field, g: &Field) -> Result<C64> {
    f.same_shape(g)?;
    let w = f.spec().log_rho() * f.spec().cell_volume();
    Ok(f.values().iter().zip(g.values()).map(|(a, b)| a * b.conj()).sum::<C64>() * w)
}

/// Σ_cells |(f, g)| log ρ Δxⁿ with the inner product taken per cell.
pub fn abs_pairing(f: &Field, g: &Field) -> Result<f64> {
    f.same_shape(g)?;
    let w = f.spec().log_rho() * f.spec().cell_volume();
    let ch = f.channels();
    Ok(f.values()
        .chunks(ch)
        .zip(g.values().chunks(ch))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<C64>().norm())
        .sum::<f64>()
        * w)
}

/// (S_r f)(t, y) = f(t + r, y), linear in log t between levels, zero above t_max.
pub fn downward_shift(f: &Field, r: f64) -> Result<Field> {
    if r < 0.0 {
        return precond("shift must be nonnegative");
    }
    if r == 0.0 {
        return Ok(f.clone());
    }
    let spec = *f.spec();
    let per = spec.spatial_len() * f.channels();
    let lr = spec.log_rho();
    let mut values = vec![C64::new(0.0, 0.0); spec.k * per];
    for k in 0..spec.k {
        let target = spec.t(k as i64) + r;
        if target > spec.t_max {
            continue;
        }
        let u = (target / spec.t_min).ln() / lr;
        let lo = (u.floor() as usize).min(spec.k - 1);
        let hi = (lo + 1).min(spec.k - 1);
        let w = (u - lo as f64).clamp(0.0, 1.0);
        let (a, b) = (f.level(lo), f.level(hi));
        for (q, v) in values[k * per..(k + 1) * per].iter_mut().enumerate() {
            *v = a[q] * (1.0 - w) + b[q] * w;
        }
    }
    Field::new(spec, f.channels(), values)
}

/// Non-tangential maximal function: N_*F(x) = sup over cone cells of |F|, or,
/// when `modified`, Ñ_*F(x) = sup over (t, y) ∈ Γ(x) of W_{(1,2)}F(t, y).
pub fn nt_max(f: &Field, modified: bool) -> Result<BoundaryField> {
    let spec = *f.spec();
    let (n, nx, sl) = (spec.n, spec.nx, spec.spatial_len());
    let values: Vec<Vec<f64>> = if modified {
        whitney_squared(f, 0.0, WhitneyParam::standard(), false)?.1.into_iter().map(|r| r.into_iter().map(f64::sqrt).collect()).collect()
    } else {
        let e = f.energy();
        (0..spec.k).map(|k| e[k * sl..(k + 1) * sl].iter().map(|v| v.sqrt()).collect()).collect()
    };
    let mut out = vec![0.0f64; sl];
    for (k, row) in values.iter().enumerate() {
        let t = spec.t(k as i64);
        if t >= spec.l / 2.0 {
            continue;
        }
        let frac = ball_fractions(n, nx, spec.l, &vec![0.0; n], t)?;
        let offs: Vec<usize> = (0..sl).filter(|&d| frac[d] > 0.0).collect();
        out.par_iter_mut().enumerate().for_each(|(x, o)| {
            for &d in &offs {
                let y = add_index(x, d, n, nx);
                if row[y] > *o {
                    *o = row[y];
                }
            }
        });
    }
    BoundaryField::new(spec.boundary(), 1, out.into_iter().map(|v| C64::new(v, 0.0)).collect())
}

fn add_index(a: usize, b: usize, n: usize, nx: usize) -> usize {
    let (mut ra, mut rb, mut out, mut stride) = (a, b, 0, 1);
    for _ in 0..n {
        out += ((ra % nx + rb % nx) % nx) * stride;
        ra /= nx;
        rb /= nx;
        stride *= nx;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zpq {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub f: Field,
    pub g: Field,
    pub norm_h: f64,
    pub norm_f: f64,
    pub norm_g: f64,
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn cube_of_cells(grid: &WhitneyGrid, spec: &GridSpec) -> Vec<Option<usize>> {
    let mut owner = vec![None; spec.k * spec.spatial_len()];
    for (c, cube) in grid.cubes.iter().enumerate() {
        for &(l, i) in &cube.cells {
            owner[l * spec.spatial_len() + i] = Some(c);
        }
    }
    owner
}

/// Z^{p,q}_s → Z^{∞,q}_{s0} · Z^{p,∞}_{s − s0}: F = ℓ^{s0} h/[|h|^q]^{1/q}, G = ℓ^{−s0}[|h|^q]^{1/q}.
fn infinity_step(h: &Field, grid: &WhitneyGrid, q: f64, s0: f64) -> (Field, Field) {
    let spec = *h.spec();
    let owner = cube_of_cells(grid, &spec);
    let ints = cube_integrals(h, grid, q);
    let avg: Vec<f64> = ints.iter().map(|&v| if q.is_infinite() { v } else { v.powf(1.0 / q) }).collect();
    let sl = spec.spatial_len();
    let f = h.map_cells(|k, i, _, v| match owner[k * sl + i] {
        Some(c) if avg[c] > 0.0 => v * (grid.cubes[c].side.powf(s0) / avg[c]),
        Some(_) => C64::new(0.0, 0.0),
        None => v,
    });
    let g = h.map_cells(|k, i, _, _| match owner[k * sl + i] {
        Some(c) => C64::new(grid.cubes[c].side.powf(-s0) * avg[c], 0.0),
        None => C64::new(1.0, 0.0),
    });
    (f, g)
}

/// Single-exponent split of a field whose cube norms are taken with exponent `a`:
/// F = ℓ^{−s a/a0 + s0}|f|^{a/a0}·phase, G = ℓ^{s a/a0 − s0}|f|^{1 − a/a0}.
fn single_step(f: &Field, grid: &WhitneyGrid, a: f64, a0: f64, s: f64, s0: f64) -> (Field, Field) {
    let spec = *f.spec();
    let owner = cube_of_cells(grid, &spec);
    let sl = spec.spatial_len();
    let e = if a.is_infinite() { 0.0 } else { a * inv(a0) };
    let ff = f.map_cells(|k, i, _, v| match owner[k * sl + i] {
        Some(c) => {
            let side = grid.cubes[c].side;
            let m = v.norm();
            if m == 0.0 {
                C64::new(if e == 0.0 { side.powf(-s * e + s0) } else { 0.0 }, 0.0)
            } else {
                (v / m) * side.powf(-s * e + s0) * m.powf(e)
            }
        }
        None => v,
    });
    let gg = f.map_cells(|k, i, _, v| match owner[k * sl + i] {
        Some(c) => {
            let side = grid.cubes[c].side;
            let m = v.norm();
            let pw = if m == 0.0 && (1.0 - e) == 0.0 { 1.0 } else { m.powf(1.0 - e) };
            C64::new(side.powf(s * e - s0) * pw, 0.0)
        }
        None => C64::new(1.0, 0.0),
    });
    (ff, gg)
}

fn mul_fields(a: &Field, b: &Field) -> Field {
    let bv = b.values();
    a.map_cells(|k, i, c, v| {
        let idx = (k * a.spec().spatial_len() + i) * a.channels() + c;
        v * bv[idx]
    })
}

/// Constructive factorisation h = F·G with F ∈ Z^{p0,q0}_{s0}, G ∈ Z^{p1,q1}_{s1}
/// on the Whitney grid G^k.  Cells outside the grid keep F = h, G = 1.
pub fn z_factorize(h: &Field, k: i32, target: Zpq, part0: Zpq, part1: Zpq) -> Result<Factorization> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
    if !close(inv(target.p), inv(part0.p) + inv(part1.p))
        || !close(inv(target.q), inv(part0.q) + inv(part1.q))
        || !close(target.s, part0.s + part1.s)
    {
        return precond("exponent mismatch: need 1/p = 1/p0 + 1/p1, 1/q = 1/q0 + 1/q1, s = s0 + s1");
    }
    let grid = whitney_grid(h.spec(), k);
    let (f, g) = if part0.p.is_infinite() && close(part0.q, target.q) && part1.q.is_infinite() {
        infinity_step(h, &grid, target.q, part0.s)
    } else {
        let half = target.s / 2.0;
        let (f1, g1) = infinity_step(h, &grid, target.q, half);
        // g1 ∈ Z^{p,∞}_{s/2}, f1 ∈ Z^{∞,q}_{s/2}
        let (ga, gb) = single_step(&g1, &grid, target.p, part0.p, half, part0.s / 2.0);
        let (fa, fb) = single_step(&f1, &grid, target.q, part0.q, half, part0.s / 2.0);
        // fa carries the phase of h, the other three factors are nonnegative
        (mul_fields(&fa, &ga), mul_fields(&gb, &fb))
    };
    Ok(Factorization {
        norm_h: zpq_dyadic(h, &grid, target.p, target.q, target.s),
        norm_f: zpq_dyadic(&f, &grid, part0.p, part0.q, part0.s),
        norm_g: zpq_dyadic(&g, &grid, part1.p, part1.q, part1.s),
        f,
        g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_field, sample};

    #[test]
    fn time_kernel_sums_to_one() {
        for &(lr, c1) in &[(0.1, 2.0), (0.37, 1.6), (0.05, 3.0)] {
            let g = ghost_levels(lr, c1);
            let s: f64 = (-g - 3..=g + 3).map(|d| whitney_time_kernel(lr, c1, d)).sum();
            assert!((s - 1.0).abs() < 1e-13, "{s}");
            assert_eq!(whitney_time_kernel(lr, c1, g + 1), 0.0);
        }
    }

    #[test]
    fn tent_and_z_match_l2_at_p2() {
        let spec = GridSpec::new(1, 1, 64.0, 64, 0.05, 4.0, 24).unwrap();
        let f = random_field(&spec, 2, 7, 0.3);
        let p = Exponent::finite(1, 2.0, 0.3);
        let l2 = l2s_norm(&f, 0.3);
        let t = tent_norm(&f, &p, 1.0).unwrap().value;
        let z = z_norm(&f, &p, WhitneyParam::standard()).unwrap().value;
        assert!((t / (2f64.sqrt() * l2) - 1.0).abs() < 1e-11);
        assert!((z / l2 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn box_indicator_value() {
        let spec = GridSpec::new(1, 1, 16.0, 256, 2f64.powf(-4.0), 4.0, 193).unwrap();
        let f = sample(&spec, 1, |t, x| {
            let inside = t >= 1.0 - 1e-9 && t <= 2.0 + 1e-9 && x[0] < 1.0 - 1e-9;
            vec![C64::new(if inside { 1.0 } else { 0.0 }, 0.0)]
        })
        .unwrap();
        // 33 levels in [1, 2] with log ρ = ln 2/32, and 16 cells of width 1/16
        let got = tent_norm(&f, &Exponent::finite(1, 2.0, 0.0), 1.0).unwrap().value;
        let lr = spec.log_rho();
        let exact = (2.0 * lr * 33.0).sqrt();
        assert!((got - exact).abs() < 1e-10);
    }

    #[test]
    fn slice_roundtrip() {
        let spec = GridSpec::new(1, 1, 8.0, 16, 0.1, 10.0, 41).unwrap();
        let g = crate::grid::random_boundary(&spec.boundary(), 2, 3);
        let t = spec.t(5);
        let back = slice_project(&slice_embed(&spec, &g, t, 2.0).unwrap(), t, 2.0).unwrap();
        for (a, b) in back.values.iter().zip(&g.values) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
