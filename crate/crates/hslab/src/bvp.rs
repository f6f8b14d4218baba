//! Constant-coefficient boundary value problems through Cauchy operators.
//!
//! Everything is evaluated per frequency: a boundary datum is transformed,
//! multiplied by the matrix symbol of the relevant operator and transformed back.

use crate::calculus::{dirac_projector, dirac_symbol, from_freq, mat_vec, s_contract, to_freq, CoefficientMatrix, MultiplierOp, OpKind};
use crate::exponents::Exponent;
use crate::grid::{whitney_cells, BoundaryField, BoundarySpec, Field, GridSpec, WhitneyParam};
use crate::holo::{calderon_sibling, HoloFn};
use crate::linalg::{c, max_abs, singular_values, CMat};
use crate::quasinorms::slice_norm;
use crate::region::region_imax;
use crate::{precond, Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Regularity,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "perp")]
    Perp,
    #[serde(rename = "par")]
    Par,
}

impl Problem {
    pub fn component(self) -> Component {
        match self {
            Problem::Regularity => Component::Par,
            Problem::Neumann => Component::Perp,
        }
    }
}

pub struct BvpSetup {
    pub a: CoefficientMatrix,
    pub b: CoefficientMatrix,
    pub op: MultiplierOp,
    pub op_bd: MultiplierOp,
    pub grid: GridSpec,
    pub problem: Problem,
    pub p: Exponent,
    pub warnings: Vec<String>,
}

impl BvpSetup {
    pub fn new(a: CoefficientMatrix, grid: GridSpec, problem: Problem, p: Exponent) -> Result<Self> {
        grid.validate()?;
        if a.n != grid.n {
            return precond("coefficient dimension does not match the grid");
        }
        let kappa = a.kappa(48);
        if kappa <= 0.0 {
            return precond(format!("coefficients are not accretive (κ = {kappa:.3e})"));
        }
        let mut warnings = Vec::new();
        if !region_imax(grid.n).contains_exponent(&p) {
            warnings.push(format!("exponent (j={}, θ={}) lies outside I_max; results are exploratory", p.j, p.theta));
        }
        let b = a.hat()?;
        let op = MultiplierOp::build(OpKind::DB, &b, grid.l, grid.nx)?;
        let op_bd = MultiplierOp::build(OpKind::BD, &b, grid.l, grid.nx)?;
        Ok(BvpSetup { a, b, op, op_bd, grid, problem, p, warnings })
    }

    pub fn m(&self) -> usize {
        self.a.m
    }

    pub fn channels(&self) -> usize {
        self.op.channels()
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.grid.boundary()
    }
}

/// e^{−|t|z}χ^±(z), or χ^±(z) at t = 0.
fn cauchy_symbol(op: &MultiplierOp, q: usize, t: f64, plus: bool) -> Result<CMat> {
    if t == 0.0 {
        return op.chi(q, plus);
    }
    op.cauchy(q, if plus { t.abs() } else { -t.abs() })
}

/// e^{−tz}χ⁺(z), zero off the right half-plane (where the exponential would overflow).
fn damped(z: C64, t: f64) -> Result<C64> {
    let chi = HoloFn::ChiPlus.eval(z)?;
    if chi == C64::new(0.0, 0.0) {
        return Ok(chi);
    }
    Ok((-(z * t)).exp() * chi)
}

/// Per-level, per-frequency vectors → Field.
pub fn assemble(spec: &GridSpec, bspec: BoundarySpec, ch: usize, levels: Vec<Vec<Vec<C64>>>) -> Result<Field> {
    let mut values = Vec::with_capacity(spec.k * bspec.len() * ch);
    for lv in levels {
        values.extend(from_freq(bspec, ch, &lv)?.values);
    }
    Field::new(*spec, ch, values)
}

/// Fraction of f₀ outside range(DB), and the projected datum.
pub fn project_to_range(setup: &BvpSetup, f0: &BoundaryField) -> Result<(BoundaryField, f64)> {
    let proj = setup.op.apply_field(f0, |q| Ok(setup.op.projector(q)))?;
    let rel = proj.sub(f0).l2() / f0.l2().max(1e-300);
    Ok((proj, rel))
}

#[derive(Clone, Debug, Serialize)]
pub struct CauchyReport {
    pub residual: f64,
    pub curl: f64,
    pub warnings: Vec<String>,
}

/// F(t) = e^{−tDB}χ⁺(DB)f₀ on every level of the grid.
pub fn cauchy_solve(setup: &BvpSetup, f0: &BoundaryField) -> Result<(Field, CauchyReport)> {
    let (f0, off) = project_to_range(setup, f0)?;
    let mut warnings = Vec::new();
    if off > 1e-12 {
        warnings.push(format!("datum had a nullspace component (relative size {off:.3e}); projected"));
    }
    let hat = to_freq(&f0);
    let op = &setup.op;
    let levels: Vec<Vec<Vec<C64>>> = setup
        .grid
        .levels()
        .par_iter()
        .map(|&t| hat.iter().enumerate().map(|(q, v)| Ok(mat_vec(&cauchy_symbol(op, q, t, true)?, v))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let residual = cauchy_residual(op, &hat, &setup.grid.levels())?;
    let curl = curl_defect(setup, &levels);
    let field = assemble(&setup.grid, setup.boundary(), setup.channels(), levels)?;
    Ok((field, CauchyReport { residual, curl, warnings }))
}

/// max over ξ and t of |∂_tF̂ + M(ξ)F̂| / |f̂₀|, with ∂_t taken analytically.
pub fn cauchy_residual(op: &MultiplierOp, hat: &[Vec<C64>], levels: &[f64]) -> Result<f64> {
    let rows = levels
        .par_iter()
        .map(|&t| {
            let mut worst = 0.0f64;
            for (q, v) in hat.iter().enumerate() {
                let scale = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if scale == 0.0 {
                    continue;
                }
                let g = |z: C64| -> Result<C64> { Ok(-z * damped(z, t)?) };
                let dt = mat_vec(&op.apply_scalar(q, &g, c(0.0))?, v);
                let f = mat_vec(&cauchy_symbol(op, q, t, true)?, v);
                let mf = mat_vec(&op.freqs[q].symbol, &f);
                let r = dt.iter().zip(&mf).map(|(a, b)| (a + b).norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(r / scale);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Largest tangential component orthogonal to span(ξ) in any m-block.
fn curl_defect(setup: &BvpSetup, levels: &[Vec<Vec<C64>>]) -> f64 {
    let (m, n) = (setup.m(), setup.grid.n);
    let xis = crate::fourier::lattice(n, setup.grid.nx, setup.grid.l);
    let mut worst = 0.0f64;
    for lv in levels {
        for (v, xi) in lv.iter().zip(&xis) {
            let p = dirac_projector(m, n, xi);
            let pv = mat_vec(&p, v);
            for a in 0..m * n {
                worst = worst.max((v[m + a] - pv[m + a]).norm());
            }
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    /// relative ∥cauchy_solve(f₀) − F∥
    pub mismatch: f64,
    pub truncation_estimate: f64,
}

/// f₀ = S_{ψ,DB}F with ψ the sibling of the semigroup generator of order `order`.
pub fn trace_recover(setup: &BvpSetup, f: &Field, order: f64) -> Result<(BoundaryField, TraceReport)> {
    let sib = calderon_sibling(&HoloFn::Sgp, order)?;
    if sib.residual > 1e-8 {
        return Err(Error::Numeric(format!("sibling quadrature residual {:.3e}", sib.residual)));
    }
    let (f0, trunc) = s_contract(&sib.psi, &setup.op, f)?;
    let (again, _) = cauchy_solve(setup, &f0)?;
    let mismatch = again.sub(f)?.l2_dt_over_t() / f.l2_dt_over_t().max(1e-300);
    Ok((f0, TraceReport { mismatch, truncation_estimate: trunc }))
}

/// F̃₀ = D⁻¹g on range(D); zero at ξ = 0.
pub fn intermediate(setup: &BvpSetup, g: &BoundaryField) -> Result<BoundaryField> {
    let m = setup.m();
    setup.op.apply_field(g, |q| {
        let xi = &setup.op.freqs[q].xi;
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        if r2 == 0.0 {
            let s = setup.channels();
            return Ok(CMat::zeros(s, s));
        }
        Ok(dirac_symbol(xi, m) / c(r2))
    })
}

pub fn perp(v: &BoundaryField, m: usize) -> BoundaryField {
    let ch = v.channels;
    let vals = v.values.chunks(ch).flat_map(|x| x[..m].to_vec()).collect();
    BoundaryField::new(v.spec, m, vals).expect("finite slice of a finite field")
}

/// [f; 0] in the transversal/tangential splitting.
pub fn lift(f: &BoundaryField, n: usize) -> BoundaryField {
    let m = f.channels;
    let ch = m * (1 + n);
    let mut vals = Vec::with_capacity(f.spec.len() * ch);
    for x in f.values.chunks(m) {
        vals.extend_from_slice(x);
        vals.extend(std::iter::repeat_n(c(0.0), m * n));
    }
    BoundaryField::new(f.spec, ch, vals).expect("finite lift")
}

/// u(t) = −(ℙ_D C⁺_{BD}(t) ℙ_{BD} D⁻¹g)_⊥ and its conormal gradient, both per level.
/// g is the trace of a Cauchy-type solution (in the χ⁺ range).
pub fn recover_u(setup: &BvpSetup, g: &BoundaryField) -> Result<(Field, Field)> {
    let (m, n) = (setup.m(), setup.grid.n);
    let ch = setup.channels();
    let ft = intermediate(setup, g)?;
    let hat = to_freq(&ft);
    let bd = &setup.op_bd;
    let a = &setup.a;
    let (app, apt) = (a.pp(), a.pt());
    let levels = setup.grid.levels();
    let rows: Vec<(Vec<Vec<C64>>, Vec<Vec<C64>>)> = levels
        .par_iter()
        .map(|&t| {
            let mut us = Vec::with_capacity(hat.len());
            let mut gs = Vec::with_capacity(hat.len());
            for (q, v) in hat.iter().enumerate() {
                let fd = &bd.freqs[q];
                if fd.rank() == 0 {
                    us.push(vec![c(0.0); m]);
                    gs.push(vec![c(0.0); ch]);
                    continue;
                }
                let pd = dirac_projector(m, n, &fd.xi);
                let pb = fd.projector();
                let sg = bd.cauchy(q, t)?;
                let dg = |z: C64| -> Result<C64> { Ok(z * damped(z, t)?) };
                let dsg = bd.apply_scalar(q, &dg, c(0.0))?;
                let u_full = mat_vec(&(-(&pd * sg * &pb)), v);
                let dt_full = mat_vec(&(&pd * dsg * &pb), v);
                let u: Vec<C64> = u_full[..m].to_vec();
                let ut: Vec<C64> = dt_full[..m].to_vec();
                // ∇_∥u = iξ ⊗ u
                let mut grad_par = vec![c(0.0); m * n];
                for j in 0..n {
                    for k in 0..m {
                        grad_par[j * m + k] = C64::new(0.0, fd.xi[j]) * u[k];
                    }
                }
                let conormal: Vec<C64> = (0..m)
                    .map(|r| (0..m).map(|k| app[(r, k)] * ut[k]).sum::<C64>() + (0..m * n).map(|k| apt[(r, k)] * grad_par[k]).sum::<C64>())
                    .collect();
                let mut gv = conormal;
                gv.extend(grad_par);
                us.push(u);
                gs.push(gv);
            }
            Ok((us, gs))
        })
        .collect::<Result<_>>()?;
    let (ul, gl): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut uspec = setup.grid;
    uspec.m = m;
    Ok((assemble(&uspec, setup.boundary(), m, ul)?, assemble(&setup.grid, setup.boundary(), ch, gl)?))
}

/// ∇_A S_t f = ±C^±_{DB}(t)[f; 0] for t ≷ 0 (t = ±0 gives the boundary limits).
pub fn grad_single_layer(setup: &BvpSetup, f: &BoundaryField, t: f64, upper: bool) -> Result<BoundaryField> {
    check_scalar(setup, f)?;
    let h = lift(f, setup.grid.n);
    let sign = if upper { 1.0 } else { -1.0 };
    setup.op.apply_field(&h, |q| Ok(cauchy_symbol(&setup.op, q, t, upper)? * c(sign)))
}

/// S_t f = ∓(D⁻¹C^±_{DB}(t)[f; 0])_⊥.
pub fn single_layer(setup: &BvpSetup, f: &BoundaryField, t: f64) -> Result<BoundaryField> {
    if t == 0.0 {
        return precond("layer potentials need t ≠ 0; use the jump relations at the boundary");
    }
    let upper = t > 0.0;
    let g = grad_single_layer(setup, f, t, upper)?;
    // the sign is already folded into g: S = −(D⁻¹ ∇_A S)_⊥
    let dinv = intermediate(setup, &g)?;
    Ok(perp(&dinv.scale(c(-1.0)), setup.m()))
}

/// 𝒟_t f = ∓(ℙ_D C^±_{BD}(t) ℙ_{BD}[f; 0])_⊥ (t = ±0 gives the boundary limits).
pub fn double_layer_side(setup: &BvpSetup, f: &BoundaryField, t: f64, upper: bool) -> Result<BoundaryField> {
    check_scalar(setup, f)?;
    let (m, n) = (setup.m(), setup.grid.n);
    let h = lift(f, n);
    let bd = &setup.op_bd;
    let sign = if upper { -1.0 } else { 1.0 };
    let out = bd.apply_field(&h, |q| {
        let fd = &bd.freqs[q];
        let pd = dirac_projector(m, n, &fd.xi);
        Ok(pd * cauchy_symbol(bd, q, t, upper)? * fd.projector() * c(sign))
    })?;
    Ok(perp(&out, m))
}

pub fn double_layer(setup: &BvpSetup, f: &BoundaryField, t: f64) -> Result<BoundaryField> {
    if t == 0.0 {
        return precond("layer potentials need t ≠ 0; use the jump relations at the boundary");
    }
    double_layer_side(setup, f, t, t > 0.0)
}

fn check_scalar(setup: &BvpSetup, f: &BoundaryField) -> Result<()> {
    if f.channels != setup.m() || f.spec != setup.boundary() {
        return precond("layer potential input must be a ℂ^m field on the setup's boundary grid");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JumpReport {
    /// max over ξ of |∇_A S_{0+}f − ∇_A S_{0−}f − [f; 0]|
    pub single: f64,
    /// max over ξ of |𝒟_{0+}f − 𝒟_{0−}f + f|
    pub double: f64,
}

/// Both jump relations evaluated per frequency (ξ = 0 excluded).
pub fn layer_jumps(setup: &BvpSetup, f: &BoundaryField) -> Result<JumpReport> {
    check_scalar(setup, f)?;
    let (m, n) = (setup.m(), setup.grid.n);
    let hat = to_freq(&lift(f, n));
    let (op, bd) = (&setup.op, &setup.op_bd);
    let rows: Vec<(f64, f64)> = (1..hat.len())
        .into_par_iter()
        .map(|q| {
            let v = &hat[q];
            let scale = v.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
            let js = op.chi(q, true)? + op.chi(q, false)?;
            let sj = mat_vec(&js, v);
            let single = sj.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
            let fd = &bd.freqs[q];
            let pd = dirac_projector(m, n, &fd.xi);
            let pb = fd.projector();
            let up = &pd * bd.chi(q, true)? * &pb * c(-1.0);
            let dn = &pd * bd.chi(q, false)? * &pb;
            let dj = mat_vec(&(up - dn), v);
            let double = (0..m).map(|k| (dj[k] + v[k]).norm()).fold(0.0, f64::max) / scale;
            Ok((single, double))
        })
        .collect::<Result<_>>()?;
    Ok(JumpReport {
        single: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        double: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// Orthonormal basis of the χ⁺(ξ) range.
pub fn positive_subspace(op: &MultiplierOp, q: usize) -> Result<CMat> {
    let chi = op.chi(q, true)?;
    let svd = chi.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD failed".into()))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-8 * smax.max(1e-300)).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut v = CMat::zeros(chi.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        v.set_column(k, &u.column(i));
    }
    Ok(v)
}

/// Boundary map N_⊥ or N_∥ restricted to V⁺(ξ), in orthonormal bases (m×dim V⁺).
pub fn boundary_map(op: &MultiplierOp, q: usize, component: Component) -> Result<CMat> {
    let (m, n) = (op.m, op.n);
    let v = positive_subspace(op, q)?;
    Ok(match component {
        Component::Perp => v.rows(0, m).into_owned(),
        Component::Par => {
            let xi = &op.freqs[q].xi;
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut t = CMat::zeros(m, m * (1 + n));
            for a in 0..m {
                for j in 0..n {
                    t[(a, m + j * m + a)] = c(xi[j] / r);
                }
            }
            t * v
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WpReport {
    pub component: Component,
    pub label: String,
    pub per_freq: Vec<(usize, f64, f64)>,
    pub min_singular: f64,
    pub max_condition: f64,
    /// frequencies where dim V⁺(ξ) ≠ m
    pub obstructions: Vec<usize>,
}

/// Smallest singular values of the boundary map per frequency. At i(p) = 2 the
/// regularity weight |ξ|^{θ} is the same on both sides, so the symbol-level
/// numbers are exact for every θ; other integrability indices are exploratory.
pub fn wp_probe(setup: &BvpSetup, component: Component, freqs: Option<&[usize]>) -> Result<WpReport> {
    let op = &setup.op;
    let all: Vec<usize> = (1..op.freqs.len()).collect();
    let qs = freqs.unwrap_or(&all);
    let rows: Vec<(usize, Option<(f64, f64)>)> = qs
        .par_iter()
        .map(|&q| {
            if op.freqs[q].rank() == 0 {
                return Ok((q, None));
            }
            let nm = boundary_map(op, q, component)?;
            if nm.ncols() != setup.m() {
                return Ok((q, None));
            }
            let sv = singular_values(&nm);
            let smin = sv[0];
            let smax = *sv.last().unwrap();
            Ok((q, Some((smin, smax / smin.max(1e-300)))))
        })
        .collect::<Result<_>>()?;
    let mut per_freq = Vec::new();
    let mut obstructions = Vec::new();
    for (q, r) in rows {
        match r {
            Some((s, k)) => per_freq.push((q, s, k)),
            None => obstructions.push(q),
        }
    }
    let label = if (setup.p.i() - 2.0).abs() < 1e-12 { "plancherel-exact" } else { "exploratory" };
    Ok(WpReport {
        component,
        label: label.into(),
        min_singular: per_freq.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        max_condition: per_freq.iter().map(|r| r.2).fold(0.0, f64::max),
        per_freq,
        obstructions,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub problem: Problem,
    pub min_singular: f64,
    pub boundary_residual: f64,
    pub cauchy: CauchyReport,
}

/// Solve the regularity (datum ∇_∥u, m·n channels) or Neumann (datum ∂_{ν_A}u,
/// m channels) problem: invert the boundary map on V⁺(ξ) and extend by Cauchy.
pub fn solve(setup: &BvpSetup, datum: &BoundaryField) -> Result<(BoundaryField, Field, SolveReport)> {
    let (m, n) = (setup.m(), setup.grid.n);
    let expect = match setup.problem {
        Problem::Regularity => m * n,
        Problem::Neumann => m,
    };
    if datum.channels != expect || datum.spec != setup.boundary() {
        return precond(format!("datum must have {expect} channels on the setup's boundary grid"));
    }
    let comp = setup.problem.component();
    let hat = to_freq(datum);
    let op = &setup.op;
    let ch = setup.channels();
    let rows: Vec<(Vec<C64>, f64, f64)> = hat
        .par_iter()
        .enumerate()
        .map(|(q, v)| {
            let fd = &op.freqs[q];
            if fd.rank() == 0 {
                return Ok((vec![c(0.0); ch], f64::INFINITY, 0.0));
            }
            let target: Vec<C64> = match comp {
                Component::Perp => v.clone(),
                Component::Par => {
                    let r = fd.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (0..m).map(|a| (0..n).map(|j| v[j * m + a] * (fd.xi[j] / r)).sum()).collect()
                }
            };
            let nm = boundary_map(op, q, comp)?;
            if nm.ncols() != m {
                return Err(Error::Numeric(format!("structural obstruction at frequency {q}: dim V⁺ = {}", nm.ncols())));
            }
            let smin = singular_values(&nm)[0];
            let inv = nm.clone().try_inverse().ok_or_else(|| Error::Numeric(format!("boundary map singular at frequency {q}")))?;
            let coef = mat_vec(&inv, &target);
            let vplus = positive_subspace(op, q)?;
            let f0 = mat_vec(&vplus, &coef);
            let back = mat_vec(&nm, &coef);
            let res = back.iter().zip(&target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            Ok((f0, smin, res))
        })
        .collect::<Result<_>>()?;
    let f0hat: Vec<Vec<C64>> = rows.iter().map(|r| r.0.clone()).collect();
    let f0 = from_freq(setup.boundary(), ch, &f0hat)?;
    let (field, cauchy) = cauchy_solve(setup, &f0)?;
    let rep = SolveReport {
        problem: setup.problem,
        min_singular: rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        boundary_residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        cauchy,
    };
    Ok((f0, field, rep))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub t: Vec<f64>,
    pub norms: Vec<f64>,
    /// fitted rate a in ∥F(t)∥ ≈ C e^{−a t} over the upper levels
    pub rate: f64,
}

/// ∥F(t_k)∥_{E^p(1)} at every level plus an exponential-rate fit over the
/// levels where the norm is still well above round-off.
pub fn decay_probe(f: &Field, p: &Exponent) -> Result<DecayReport> {
    let spec = *f.spec();
    let bspec = spec.boundary();
    let scale = (spec.l / 4.0).min(1.0);
    let mut norms = Vec::with_capacity(spec.k);
    for k in 0..spec.k {
        let g = BoundaryField::new(bspec, f.channels(), f.level(k).to_vec())?;
        norms.push(slice_norm(&g, p, scale)?.value);
    }
    let t = spec.levels();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    let usable: Vec<usize> = (0..spec.k).filter(|&k| norms[k] > 1e-10 * peak && t[k] >= 1.0).collect();
    let take: Vec<usize> = usable.iter().rev().take(8).rev().copied().collect();
    let rate = if take.len() >= 2 {
        let xs: Vec<f64> = take.iter().map(|&k| t[k]).collect();
        let ys: Vec<f64> = take.iter().map(|&k| norms[k].ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        -sxy / sxx
    } else {
        f64::NAN
    };
    Ok(DecayReport { t, norms, rate })
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyTrace {
    #[serde(skip)]
    pub v: Option<BoundaryField>,
    /// ∥v_k − v_{k+1}∥_∞ over the smallest levels
    pub rates: Vec<f64>,
    /// max over neighbouring grid points of |v(x) − v(y)|/|x − y|^{1+θ}
    pub holder: f64,
}

/// Whitney averages of u over Ω_c(t_k, x) at the smallest levels; the average
/// at the bottom level is returned as the boundary trace.
pub fn whitney_trace(u: &Field, c: WhitneyParam, theta: f64, levels: usize) -> Result<WhitneyTrace> {
    let spec = *u.spec();
    let bspec = spec.boundary();
    let ch = u.channels();
    let lv = levels.clamp(1, spec.k);
    let avgs: Vec<Vec<C64>> = (0..lv)
        .map(|k| {
            let t = spec.t(k as i64);
            (0..bspec.len())
                .into_par_iter()
                .map(|i| {
                    let x = bspec.coords(i);
                    let w = whitney_cells(&spec, t, &x, c)?;
                    let mut acc = vec![c_zero(); ch];
                    let mut tot = 0.0;
                    for (kk, ii) in w.support() {
                        let wt = w.get(kk, ii);
                        tot += wt;
                        for (a, slot) in acc.iter_mut().enumerate() {
                            *slot += u.get(kk, ii, a) * wt;
                        }
                    }
                    if tot == 0.0 {
                        return Err(Error::Numeric("empty Whitney region".into()));
                    }
                    Ok(acc.into_iter().map(|v| v / tot).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()
                .map(|rows| rows.into_iter().flatten().collect())
        })
        .collect::<Result<_>>()?;
    let rates = avgs
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    let v = BoundaryField::new(bspec, ch, avgs[0].clone())?;
    let dx = bspec.dx();
    let mut holder = 0.0f64;
    for i in 0..bspec.len() {
        let x = bspec.coords(i);
        for a in 0..bspec.n {
            let mut y = x.clone();
            y[a] = (y[a] + dx) % bspec.l;
            let j = index_of(&bspec, &y);
            let d = (0..ch).map(|k| (v.values[i * ch + k] - v.values[j * ch + k]).norm_sqr()).sum::<f64>().sqrt();
            holder = holder.max(d / dx.powf(1.0 + theta));
        }
    }
    Ok(WhitneyTrace { v: Some(v), rates, holder })
}

fn c_zero() -> C64 {
    c(0.0)
}

fn index_of(sp: &BoundarySpec, x: &[f64]) -> usize {
    let mut idx = 0;
    for &xa in x {
        let i = ((xa / sp.dx()).round() as usize) % sp.nx;
        idx = idx * sp.nx + i;
    }
    idx
}

/// Relative max deviation of per-frequency similarity D·f(BD)·ℙ_{BD} = f(DB)·D.
pub fn similarity_defect(op_db: &MultiplierOp, op_bd: &MultiplierOp, f: &HoloFn) -> Result<f64> {
    let rows: Vec<f64> = (0..op_db.freqs.len())
        .into_par_iter()
        .map(|q| {
            let d = dirac_symbol(&op_db.freqs[q].xi, op_db.m);
            let lhs = &d * op_bd.apply(q, f)? * op_bd.projector(q);
            let rhs = op_db.apply(q, f)? * &d;
            Ok(max_abs(&(lhs - rhs)) / max_abs(&d).max(1.0))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::random_boundary;
    use std::f64::consts::PI;

    fn setup(a: CoefficientMatrix, nx: usize) -> BvpSetup {
        let n = a.n;
        let grid = GridSpec::new(n, a.m, 2.0 * PI, nx, 1e-3, 10.0, 24).unwrap();
        BvpSetup::new(a, grid, Problem::Regularity, Exponent::finite(n, 2.0, 0.0)).unwrap()
    }

    #[test]
    fn jumps_random_a() {
        let s = setup(CoefficientMatrix::random_accretive(1, 2, 3, 0.5), 8);
        let f = random_boundary(&s.boundary(), 1, 5);
        let j = layer_jumps(&s, &f).unwrap();
        assert!(j.single < 1e-10 && j.double < 1e-10, "{j:?}");
    }

    #[test]
    fn wp_identity_half() {
        let s = setup(CoefficientMatrix::identity(1, 1), 16);
        for comp in [Component::Perp, Component::Par] {
            let r = wp_probe(&s, comp, None).unwrap();
            assert!(r.obstructions.is_empty());
            for (_, smin, _) in r.per_freq {
                assert!((smin - 0.5f64.sqrt()).abs() < 1e-10);
            }
        }
    }
}
