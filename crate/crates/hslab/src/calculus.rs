//! Fourier-symbol functional calculus for D and DB with constant B.
//!
//! Channels are ordered (⊥ first, then ∥): index a for the transversal
//! component a < m, and m + j·m + a for the tangential direction j.
//! Per frequency, M(ξ) = D̂(ξ)B (or BD̂(ξ)) is split as range ⊕ nullspace and
//! f(M) = Ra·f(T)·La + f(0)·(nullspace projector), with T the Schur form of M
//! restricted to its range.

use crate::fourier::{fft_nd, lattice};
use crate::grid::{BoundaryField, BoundarySpec, Field, GridSpec};
use crate::holo::{log_quadrature, HoloFn};
use crate::linalg::{c, fun_upper_tri, max_abs, newton_sign, orth_complement, schur, spectral_norm, CMat};
use crate::overlap::unit_ball_volume;
use crate::quasinorms::{tent_norm, z_norm, NormReport};
use crate::exponents::Exponent;
use crate::grid::WhitneyParam;
use crate::{precond, Error, Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

static FLIP_CHI_PLUS: AtomicBool = AtomicBool::new(false);

/// Test hook: negate χ⁺ everywhere (used to check that verification fails).
pub fn set_chi_plus_fault(on: bool) {
    FLIP_CHI_PLUS.store(on, Ordering::SeqCst);
}

pub fn chi_plus_fault() -> bool {
    FLIP_CHI_PLUS.load(Ordering::SeqCst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    pub m: usize,
    pub n: usize,
    pub a: CMat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blocks {
    pub pp: Vec<[f64; 2]>,
    pub pt: Vec<[f64; 2]>,
    pub tp: Vec<[f64; 2]>,
    pub tt: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub m: usize,
    pub n: usize,
    pub blocks: Blocks,
}

pub fn sphere_samples(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0]],
        2 => (0..count).map(|k| {
            let a = PI * k as f64 / count as f64;
            vec![a.cos(), a.sin()]
        }).collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    let mut v = vec![r * th.cos(), r * th.sin(), z];
                    v.resize(n, 0.0);
                    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / nv).collect()
                })
                .collect()
        }
    }
}

impl CoefficientMatrix {
    pub fn new(m: usize, n: usize, a: CMat) -> Result<Self> {
        let size = m * (1 + n);
        if a.nrows() != size || a.ncols() != size {
            return precond(format!("coefficient matrix must be {size}×{size}"));
        }
        if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return precond("coefficient matrix has non-finite entries");
        }
        Ok(CoefficientMatrix { m, n, a })
    }

    pub fn identity(m: usize, n: usize) -> Self {
        let s = m * (1 + n);
        CoefficientMatrix { m, n, a: CMat::identity(s, s) }
    }

    pub fn size(&self) -> usize {
        self.m * (1 + self.n)
    }

    /// A = I + s·G with G complex Gaussian scaled by 1/√N, redrawn until κ > 0.05.
    pub fn random_accretive(m: usize, n: usize, seed: u64, s: f64) -> Self {
        let size = m * (1 + n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let g = CMat::from_fn(size, size, |_, _| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                C64::new(a, b) / (2.0 * size as f64).sqrt()
            });
            let a = CoefficientMatrix { m, n, a: CMat::identity(size, size) + g * c(s) };
            if a.kappa(32) > 0.05 {
                if let Ok(h) = a.hat() {
                    if h.kappa(32) > 0.05 {
                        return a;
                    }
                }
            }
        }
    }

    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CMat {
        self.a.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
    }

    pub fn pp(&self) -> CMat {
        self.block(0..self.m, 0..self.m)
    }
    pub fn pt(&self) -> CMat {
        self.block(0..self.m, self.m..self.size())
    }
    pub fn tp(&self) -> CMat {
        self.block(self.m..self.size(), 0..self.m)
    }
    pub fn tt(&self) -> CMat {
        self.block(self.m..self.size(), self.m..self.size())
    }

    pub fn from_blocks(m: usize, n: usize, pp: &CMat, pt: &CMat, tp: &CMat, tt: &CMat) -> Result<Self> {
        let s = m * (1 + n);
        let mut a = CMat::zeros(s, s);
        a.view_mut((0, 0), (m, m)).copy_from(pp);
        a.view_mut((0, m), (m, s - m)).copy_from(pt);
        a.view_mut((m, 0), (s - m, m)).copy_from(tp);
        a.view_mut((m, m), (s - m, s - m)).copy_from(tt);
        CoefficientMatrix::new(m, n, a)
    }

    pub fn from_file(f: &CoefficientFile) -> Result<Self> {
        let (m, n) = (f.m, f.n);
        let t = m * n;
        let mk = |v: &[[f64; 2]], r: usize, cc: usize, name: &str| -> Result<CMat> {
            if v.len() != r * cc {
                return Err(Error::Format(format!("block {name} has {} entries, expected {}", v.len(), r * cc)));
            }
            Ok(CMat::from_row_iterator(r, cc, v.iter().map(|p| C64::new(p[0], p[1]))))
        };
        CoefficientMatrix::from_blocks(
            m,
            n,
            &mk(&f.blocks.pp, m, m, "pp")?,
            &mk(&f.blocks.pt, m, t, "pt")?,
            &mk(&f.blocks.tp, t, m, "tp")?,
            &mk(&f.blocks.tt, t, t, "tt")?,
        )
    }

    pub fn to_file(&self) -> CoefficientFile {
        let flat = |b: CMat| -> Vec<[f64; 2]> {
            let mut v = Vec::with_capacity(b.len());
            for i in 0..b.nrows() {
                for j in 0..b.ncols() {
                    v.push([b[(i, j)].re, b[(i, j)].im]);
                }
            }
            v
        };
        CoefficientFile {
            m: self.m,
            n: self.n,
            blocks: Blocks { pp: flat(self.pp()), pt: flat(self.pt()), tp: flat(self.tp()), tt: flat(self.tt()) },
        }
    }

    pub fn adjoint(&self) -> Self {
        CoefficientMatrix { m: self.m, n: self.n, a: self.a.adjoint() }
    }

    /// min over sampled unit ξ of the smallest eigenvalue of the Hermitian part
    /// compressed to the curl-free subspace {(v_⊥, ξ⊗w)}.
    pub fn kappa(&self, samples: usize) -> f64 {
        let h = (&self.a + self.a.adjoint()) * c(0.5);
        sphere_samples(self.n, samples)
            .iter()
            .map(|xi| {
                let v = range_basis(self.m, self.n, xi);
                let comp = v.adjoint() * &h * &v;
                comp.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Â = [[A⊥⊥⁻¹, −A⊥⊥⁻¹A⊥∥], [A∥⊥A⊥⊥⁻¹, A∥∥ − A∥⊥A⊥⊥⁻¹A⊥∥]].
    pub fn hat(&self) -> Result<Self> {
        let p = self.pp().try_inverse().ok_or_else(|| Error::Precondition("A⊥⊥ is singular".into()))?;
        let (pt, tp, tt) = (self.pt(), self.tp(), self.tt());
        CoefficientMatrix::from_blocks(self.m, self.n, &p, &(-(&p * &pt)), &(&tp * &p), &(&tt - &tp * &p * &pt))
    }

    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        max_abs(&self.pt()) <= tol && max_abs(&self.tp()) <= tol
    }
}

/// N = diag(I, −I) in the ⊥/∥ splitting.
pub fn n_matrix(m: usize, n: usize) -> CMat {
    let s = m * (1 + n);
    CMat::from_fn(s, s, |i, j| if i != j { c(0.0) } else if i < m { c(1.0) } else { c(-1.0) })
}

/// D̂(ξ) = [[0, iξᵀ⊗I], [−iξ⊗I, 0]].
pub fn dirac_symbol(xi: &[f64], m: usize) -> CMat {
    let n = xi.len();
    let s = m * (1 + n);
    let mut d = CMat::zeros(s, s);
    for (j, &x) in xi.iter().enumerate() {
        for a in 0..m {
            d[(a, m + j * m + a)] = C64::new(0.0, x);
            d[(m + j * m + a, a)] = C64::new(0.0, -x);
        }
    }
    d
}

/// Orthonormal basis of range(D̂(ξ)) = ℂ^m ⊕ (ξ̂ ⊗ ℂ^m).
pub fn range_basis(m: usize, n: usize, xi: &[f64]) -> CMat {
    let s = m * (1 + n);
    let nx = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut r = CMat::zeros(s, 2 * m);
    for a in 0..m {
        r[(a, a)] = c(1.0);
        for j in 0..n {
            r[(m + j * m + a, m + a)] = c(xi[j] / nx);
        }
    }
    r
}

/// Orthonormal basis of null(D̂(ξ)) = ξ^⊥ ⊗ ℂ^m (all of ℂ^N at ξ = 0).
pub fn null_basis(m: usize, n: usize, xi: &[f64]) -> CMat {
    let s = m * (1 + n);
    let nx = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nx == 0.0 {
        return CMat::identity(s, s);
    }
    let u: Vec<f64> = xi.iter().map(|x| x / nx).collect();
    let comp = orth_complement(&u);
    let mut r = CMat::zeros(s, comp.len() * m);
    for (q, v) in comp.iter().enumerate() {
        for a in 0..m {
            for j in 0..n {
                r[(m + j * m + a, q * m + a)] = c(v[j]);
            }
        }
    }
    r
}

/// ℙ_D(ξ) = diag(I_m, (ξξᵀ/|ξ|²) ⊗ I_m).
pub fn dirac_projector(m: usize, n: usize, xi: &[f64]) -> CMat {
    if xi.iter().all(|&x| x == 0.0) {
        let s = m * (1 + n);
        return CMat::zeros(s, s);
    }
    let r = range_basis(m, n, xi);
    &r * r.adjoint()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    /// symbol D̂(ξ)B
    DB,
    /// symbol BD̂(ξ)
    BD,
}

#[derive(Clone, Debug)]
pub struct FreqData {
    pub xi: Vec<f64>,
    pub symbol: CMat,
    /// range basis R and nullspace basis, with the matching rows of [R | Nul]⁻¹
    pub r: CMat,
    pub lr: CMat,
    pub rn: CMat,
    pub ln: CMat,
    /// C = R⁺MR = Z T Z*
    pub cmat: CMat,
    pub z: CMat,
    pub t: CMat,
}

impl FreqData {
    pub fn rank(&self) -> usize {
        self.t.nrows()
    }
    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.rank()).map(|i| self.t[(i, i)]).collect()
    }
    pub fn projector(&self) -> CMat {
        &self.r * &self.lr
    }
    pub fn null_projector(&self) -> CMat {
        &self.rn * &self.ln
    }
}

#[derive(Clone, Debug)]
pub struct MultiplierOp {
    pub kind: OpKind,
    pub b: CMat,
    pub m: usize,
    pub n: usize,
    pub l: f64,
    pub nx: usize,
    pub freqs: Vec<FreqData>,
}

pub fn freq_data(kind: OpKind, b: &CMat, m: usize, n: usize, xi: &[f64]) -> Result<FreqData> {
    let s = m * (1 + n);
    let d = dirac_symbol(xi, m);
    let symbol = match kind {
        OpKind::DB => &d * b,
        OpKind::BD => b * &d,
    };
    let zero = xi.iter().all(|&x| x == 0.0);
    if zero {
        let e = CMat::zeros(s, 0);
        return Ok(FreqData {
            xi: xi.to_vec(),
            symbol,
            r: e.clone(),
            lr: CMat::zeros(0, s),
            rn: CMat::identity(s, s),
            ln: CMat::identity(s, s),
            cmat: CMat::zeros(0, 0),
            z: CMat::zeros(0, 0),
            t: CMat::zeros(0, 0),
        });
    }
    let rng = range_basis(m, n, xi);
    let nul0 = null_basis(m, n, xi);
    let binv = || b.clone().try_inverse().ok_or_else(|| Error::Precondition("coefficient matrix is singular".into()));
    let (r, nul) = match kind {
        OpKind::DB => (rng.clone(), binv()? * &nul0),
        OpKind::BD => (b * &rng, nul0),
    };
    let cmat = rng.adjoint() * &d * b * &rng;
    let mut w = CMat::zeros(s, s);
    w.view_mut((0, 0), (s, 2 * m)).copy_from(&r);
    w.view_mut((0, 2 * m), (s, s - 2 * m)).copy_from(&nul);
    let winv = w.try_inverse().ok_or_else(|| Error::Numeric("range and nullspace are not complementary".into()))?;
    let lr = winv.view((0, 0), (2 * m, s)).into_owned();
    let ln = winv.view((2 * m, 0), (s - 2 * m, s)).into_owned();
    let (z, t) = schur(&cmat)?;
    Ok(FreqData { xi: xi.to_vec(), symbol, r, lr, rn: nul, ln, cmat, z, t })
}

impl MultiplierOp {
    pub fn build(kind: OpKind, b: &CoefficientMatrix, l: f64, nx: usize) -> Result<Self> {
        if b.kappa(48) <= 0.0 {
            return precond("coefficient matrix is not accretive on curl-free fields");
        }
        let (m, n) = (b.m, b.n);
        let freqs = lattice(n, nx, l)
            .par_iter()
            .map(|xi| freq_data(kind, &b.a, m, n, xi))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiplierOp { kind, b: b.a.clone(), m, n, l, nx, freqs })
    }

    /// The operator D itself (B = I).
    pub fn dirac(m: usize, n: usize, l: f64, nx: usize) -> Result<Self> {
        Self::build(OpKind::DB, &CoefficientMatrix::identity(m, n), l, nx)
    }

    pub fn channels(&self) -> usize {
        self.m * (1 + self.n)
    }

    pub fn boundary(&self) -> BoundarySpec {
        BoundarySpec { n: self.n, l: self.l, nx: self.nx }
    }

    /// (DB)* = B*D and (BD)* = DB*.
    pub fn adjoint(&self) -> Result<Self> {
        let kind = match self.kind {
            OpKind::DB => OpKind::BD,
            OpKind::BD => OpKind::DB,
        };
        let b = CoefficientMatrix::new(self.m, self.n, self.b.adjoint())?;
        let freqs = self.freqs.par_iter().map(|fd| freq_data(kind, &b.a, self.m, self.n, &fd.xi)).collect::<Result<Vec<_>>>()?;
        Ok(MultiplierOp { kind, b: b.a, m: self.m, n: self.n, l: self.l, nx: self.nx, freqs })
    }

    /// f(M(ξ)) for a scalar function; `at_zero` is applied on the nullspace.
    pub fn apply_scalar(&self, q: usize, f: &dyn Fn(C64) -> Result<C64>, at_zero: C64) -> Result<CMat> {
        let fd = &self.freqs[q];
        let mut out = if fd.rank() > 0 {
            let ft = fun_upper_tri(f, &fd.t)?;
            &fd.r * &fd.z * ft * fd.z.adjoint() * &fd.lr
        } else {
            CMat::zeros(self.channels(), self.channels())
        };
        if at_zero != c(0.0) {
            out += fd.null_projector() * at_zero;
        }
        Ok(out)
    }

    /// f(M(ξ)) for a catalogue function: spectral on the range, f(0) on the
    /// nullspace when f is defined at 0 and zero otherwise.
    pub fn apply(&self, q: usize, f: &HoloFn) -> Result<CMat> {
        let at_zero = f.eval(c(0.0)).unwrap_or(c(0.0));
        let flip = chi_plus_fault();
        let g = |z: C64| -> Result<C64> {
            let v = f.eval(z)?;
            Ok(if flip && matches!(f, HoloFn::ChiPlus) { -v } else { v })
        };
        self.apply_scalar(q, &g, at_zero)
    }

    pub fn chi(&self, q: usize, plus: bool) -> Result<CMat> {
        self.apply(q, if plus { &HoloFn::ChiPlus } else { &HoloFn::ChiMinus })
    }

    pub fn sign(&self, q: usize) -> Result<CMat> {
        Ok(self.chi(q, true)? - self.chi(q, false)?)
    }

    /// Sign via scaled Newton iteration on the range block.
    pub fn sign_newton(&self, q: usize) -> Result<CMat> {
        let fd = &self.freqs[q];
        if fd.rank() == 0 {
            return Ok(CMat::zeros(self.channels(), self.channels()));
        }
        Ok(&fd.r * newton_sign(&fd.cmat)? * &fd.lr)
    }

    pub fn projector(&self, q: usize) -> CMat {
        self.freqs[q].projector()
    }

    /// Largest |arg [λ]| over all range eigenvalues.
    pub fn omega(&self) -> f64 {
        self.freqs
            .iter()
            .flat_map(|fd| fd.eigenvalues())
            .map(|l| if l.re >= 0.0 { l.arg().abs() } else { (-l).arg().abs() })
            .fold(0.0, f64::max)
    }

    pub fn zero_index(&self) -> usize {
        0
    }

    /// e^{−t[M]}.
    pub fn semigroup(&self, q: usize, t: f64) -> Result<CMat> {
        self.apply(q, &HoloFn::Sgp.dilate(t))
    }

    /// Cauchy operator e^{−|t|[M]}χ^{sgn t}(M).
    pub fn cauchy(&self, q: usize, t: f64) -> Result<CMat> {
        if t == 0.0 {
            return precond("Cauchy operator needs t ≠ 0");
        }
        let chi = if t > 0.0 { HoloFn::ChiPlus } else { HoloFn::ChiMinus };
        let flip = chi_plus_fault() && t > 0.0;
        let f = HoloFn::Sgp.dilate(t.abs());
        let g = |z: C64| -> Result<C64> {
            let v = f.eval(z)? * chi.eval(z)?;
            Ok(if flip { -v } else { v })
        };
        self.apply_scalar(q, &g, c(0.0))
    }

    /// Apply a per-frequency matrix family to a boundary field.
    pub fn apply_field(&self, g: &BoundaryField, mat: impl Fn(usize) -> Result<CMat> + Sync) -> Result<BoundaryField> {
        let spec = self.check_boundary(g)?;
        let hat = to_freq(g);
        let out = hat
            .par_iter()
            .enumerate()
            .map(|(q, v)| Ok(mat_vec(&mat(q)?, v)))
            .collect::<Result<Vec<_>>>()?;
        from_freq(spec, g.channels, &out)
    }

    pub fn apply_fn_field(&self, f: &HoloFn, g: &BoundaryField) -> Result<BoundaryField> {
        self.apply_field(g, |q| self.apply(q, f))
    }

    pub fn check_boundary(&self, g: &BoundaryField) -> Result<BoundarySpec> {
        if g.spec.n != self.n || g.spec.nx != self.nx || (g.spec.l - self.l).abs() > 1e-12 * self.l || g.channels != self.channels() {
            return precond("boundary field does not match the operator's lattice or channel count");
        }
        Ok(g.spec)
    }
}

fn apply_sparse(op: &MultiplierOp, q: usize, f: &HoloFn, v: &[C64]) -> Result<Vec<C64>> {
    if v.iter().all(|x| *x == c(0.0)) {
        return Ok(v.to_vec());
    }
    Ok(mat_vec(&op.apply(q, f)?, v))
}

pub fn mat_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// Per-frequency channel vectors of a boundary field.
pub fn to_freq(g: &BoundaryField) -> Vec<Vec<C64>> {
    let sp = g.spec;
    let len = sp.len();
    let ch = g.channels;
    let cols: Vec<Vec<C64>> = (0..ch)
        .into_par_iter()
        .map(|cc| {
            let mut b = g.channel(cc);
            fft_nd(&mut b, sp.n, sp.nx, false);
            let w = sp.cell_volume();
            b.iter().map(|v| v * w).collect()
        })
        .collect();
    (0..len).map(|q| (0..ch).map(|cc| cols[cc][q]).collect()).collect()
}

pub fn from_freq(spec: BoundarySpec, ch: usize, hat: &[Vec<C64>]) -> Result<BoundaryField> {
    let len = spec.len();
    let cols: Vec<Vec<C64>> = (0..ch)
        .into_par_iter()
        .map(|cc| {
            let mut b: Vec<C64> = (0..len).map(|q| hat[q][cc]).collect();
            fft_nd(&mut b, spec.n, spec.nx, true);
            let w = 1.0 / (spec.l.powi(spec.n as i32));
            b.iter().map(|v| v * w).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(len * ch);
    for i in 0..len {
        for col in &cols {
            values.push(col[i]);
        }
    }
    BoundaryField::new(spec, ch, values)
}

/// (1/2πi)∮_{∂S_ν} f(z)(z − M)⁻¹ dz on the four boundary rays, trapezoid in log|z|.
pub fn dunford(op: &MultiplierOp, f: &HoloFn, q: usize, nu: f64, h: f64) -> Result<CMat> {
    let s = op.channels();
    let m = &op.freqs[q].symbol;
    let mut acc = CMat::zeros(s, s);
    // (direction, orientation): counterclockwise around each sector
    let rays = [(-nu, 1.0), (nu, -1.0), (PI - nu, 1.0), (PI + nu, -1.0)];
    for (phi, orient) in rays {
        let e = C64::from_polar(1.0, phi);
        let integrand = |u: f64| -> Result<CMat> {
            let z = e * u.exp();
            let fz = f.eval(z)?;
            if fz == c(0.0) {
                return Ok(CMat::zeros(s, s));
            }
            let res = (CMat::identity(s, s) * z - m)
                .try_inverse()
                .ok_or_else(|| Error::Numeric("contour passes through an eigenvalue".into()))?;
            Ok(res * (fz * z * orient))
        };
        let scalar = |u: f64| -> Result<C64> { Ok(f.eval(e * u.exp())? * u.exp()) };
        // window from the scalar envelope |f(z)|·|z|·|z|⁻¹
        let win = log_window(&scalar)?;
        let count = ((win.1 - win.0) / h).ceil() as usize;
        let hh = (win.1 - win.0) / count as f64;
        for k in 0..=count {
            let w = if k == 0 || k == count { 0.5 } else { 1.0 };
            acc += integrand(win.0 + k as f64 * hh)? * c(w * hh);
        }
    }
    Ok(acc / C64::new(0.0, 2.0 * PI))
}

fn log_window(g: &dyn Fn(f64) -> Result<C64>) -> Result<(f64, f64)> {
    let peak = (-80..=80).map(|u| g(u as f64 * 0.5).map(|v| v.norm())).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let find = |dir: f64| -> Result<f64> {
        let mut u: f64 = 0.0;
        let mut quiet = 0;
        while u.abs() < 400.0 {
            u += dir * 0.5;
            if g(u)?.norm() / u.exp().max(1e-300) * u.exp() < 1e-19 * peak.max(1e-300) {
                quiet += 1;
                if quiet >= 4 {
                    return Ok(u);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::Numeric("contour integrand does not decay".into()))
    };
    Ok((find(-1.0)?, find(1.0)?))
}

/// max over the sampled frequencies of |Dunford integral − f(M)|.
pub fn dunford_check(op: &MultiplierOp, f: &HoloFn, nu: f64, freqs: &[usize]) -> Result<f64> {
    let d = f.decay();
    if !d.is_psi_plus() {
        return precond("Dunford check needs decay at both 0 and ∞");
    }
    let mut worst = 0.0f64;
    for &q in freqs {
        let a = dunford(op, f, q, nu, 0.005)?;
        let b = op.apply(q, f)?;
        worst = worst.max(max_abs(&(a - b)));
    }
    Ok(worst)
}

/// (Q_{ψ,M} f)(t_k) = ψ(t_k M) f at every level of `spec`.
pub fn q_extend(psi: &HoloFn, op: &MultiplierOp, f: &BoundaryField, spec: &GridSpec) -> Result<Field> {
    let bspec = op.check_boundary(f)?;
    if spec.boundary() != bspec {
        return precond("grid does not match the operator's lattice");
    }
    let hat = to_freq(f);
    let levels: Vec<f64> = spec.levels();
    let ch = f.channels;
    let per_level: Vec<Vec<Vec<C64>>> = levels
        .par_iter()
        .map(|&t| {
            let g = psi.clone().dilate(t);
            hat.iter().enumerate().map(|(q, v)| apply_sparse(op, q, &g, v)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(spec.k * bspec.len() * ch);
    for lv in per_level {
        values.extend(from_freq(bspec, ch, &lv)?.values);
    }
    Field::new(*spec, ch, values)
}

/// S_{φ,M}F = Σ_k log ρ φ(t_k M)F(t_k), with a tail estimate from the end terms.
pub fn s_contract(phi: &HoloFn, op: &MultiplierOp, f: &Field) -> Result<(BoundaryField, f64)> {
    let spec = *f.spec();
    let bspec = spec.boundary();
    if bspec != op.boundary() || f.channels() != op.channels() {
        return precond("field does not match the operator");
    }
    let ch = f.channels();
    let sl = spec.spatial_len();
    let lr = spec.log_rho();
    let terms: Vec<Vec<Vec<C64>>> = (0..spec.k)
        .into_par_iter()
        .map(|k| {
            let lvl = BoundaryField::new(bspec, ch, f.level(k).to_vec())?;
            let hat = to_freq(&lvl);
            let g = phi.clone().dilate(spec.t(k as i64));
            hat.iter().enumerate().map(|(q, v)| apply_sparse(op, q, &g, v)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![vec![c(0.0); ch]; sl];
    for t in &terms {
        for (s, v) in sum.iter_mut().zip(t) {
            for (a, b) in s.iter_mut().zip(v) {
                *a += b * lr;
            }
        }
    }
    let norm = |t: &[Vec<C64>]| t.iter().flat_map(|v| v.iter()).map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let total = norm(&sum).max(1e-300);
    let d = phi.decay();
    let lo = norm(&terms[0]) / d.sigma.max(lr);
    let hi = norm(&terms[spec.k - 1]) / d.tau.min(1.0 / lr).max(lr);
    Ok((from_freq(bspec, ch, &sum)?, (lo + hi) / total))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothSpace {
    /// Hardy–Sobolev: tent norm of the extension
    Hardy,
    /// Besov: Z norm of the extension
    Besov,
}

/// C_φ(s) = ∫₀^∞ u^{−2s}|φ(u)|² du/u.
pub fn lp_constant(phi: &HoloFn, s: f64) -> Result<f64> {
    let q = log_quadrature(|v| Ok(c((-2.0 * s * v).exp() * phi.eval(c(v.exp()))?.norm_sqr())), 0.01)?;
    Ok(q.value.re)
}

/// Littlewood–Paley extension F(t) = (φ(t|ξ|) f̂)^∨ on the levels of `spec`.
pub fn lp_extension(f: &BoundaryField, phi: &HoloFn, spec: &GridSpec) -> Result<Field> {
    if spec.boundary() != f.spec {
        return precond("grid does not match the boundary field");
    }
    let hat = to_freq(f);
    let xis = lattice(spec.n, spec.nx, spec.l);
    let mut values = Vec::with_capacity(spec.k * f.values.len());
    for t in spec.levels() {
        let lv: Vec<Vec<C64>> = hat
            .iter()
            .zip(&xis)
            .map(|(v, xi)| {
                let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                let w = if r == 0.0 { phi.eval(c(0.0)).unwrap_or(c(0.0)) } else { phi.eval(c(t * r))? };
                Ok(v.iter().map(|x| x * w).collect())
            })
            .collect::<Result<_>>()?;
        values.extend(from_freq(f.spec, f.channels, &lv)?.values);
    }
    Field::new(*spec, f.channels, values)
}

/// Smoothness quasinorm via the Littlewood–Paley extension, normalised so that
/// at i(p) = 2 it equals the homogeneous Sobolev norm L^{−n}Σ|ξ|^{2θ}|f̂|².
pub fn smoothness_norm(f: &BoundaryField, p: &Exponent, phi: &HoloFn, space: SmoothSpace, spec: &GridSpec) -> Result<NormReport> {
    if !phi.is_even() {
        return precond("smoothness norms need an even auxiliary function");
    }
    let ext = lp_extension(f, phi, spec)?;
    let cphi = lp_constant(phi, p.theta)?;
    let mut rep = match space {
        SmoothSpace::Hardy => {
            let mut r = tent_norm(&ext, p, 1.0)?;
            r.value /= (unit_ball_volume(spec.n) * cphi).sqrt();
            r
        }
        SmoothSpace::Besov => {
            let mut r = z_norm(&ext, p, WhitneyParam::standard())?;
            r.value /= cphi.sqrt();
            r
        }
    };
    rep.op = "smoothness_norm".into();
    Ok(rep)
}

/// Riesz potential: f̂ ↦ |ξ|^{−α}f̂ with the zero mode set to zero.
pub fn riesz(f: &BoundaryField, alpha: f64) -> Result<BoundaryField> {
    let hat = to_freq(f);
    let xis = lattice(f.spec.n, f.spec.nx, f.spec.l);
    let scale = hat.iter().map(|v| v.iter().map(|x| x.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
    let nonzero = hat.iter().skip(1).any(|v| v.iter().any(|x| x.norm() > 1e-14 * scale));
    if alpha != 0.0 && !nonzero {
        return precond("undefined modulo polynomials: input has only a zero mode");
    }
    let out: Vec<Vec<C64>> = hat
        .iter()
        .zip(&xis)
        .map(|(v, xi)| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let w = if r == 0.0 { 0.0 } else { r.powf(-alpha) };
            v.iter().map(|x| x * w).collect()
        })
        .collect();
    from_freq(f.spec, f.channels, &out)
}

/// c_{n,α} = ∫(1 − cos(e₁·y))|y|^{−n−2α} dy.
pub fn difference_constant(n: usize, alpha: f64) -> f64 {
    use crate::holo::gamma;
    PI.powf(n as f64 / 2.0) * gamma(1.0 - alpha) / (alpha * 4f64.powf(alpha) * gamma(n as f64 / 2.0 + alpha))
}

/// D^q_α f(x) = (∫|f(x+y) − f(x)|^q |y|^{−n−qα} dy)^{1/q} at every grid point.
/// q = 2 uses the exact multiplier identity D² = L|f|² − 2Re(f̄·Lf) with
/// L̂(ξ) = −c_{n,α}|ξ|^{2α}; other q use a direct lattice sum over offsets
/// |y| < L/2 plus a mean tail beyond.
pub fn difference_function(f: &BoundaryField, alpha: f64, q: f64) -> Result<Vec<f64>> {
    if !(0.0 < alpha && alpha < 1.0) {
        return precond("difference norms need 0 < α < 1");
    }
    let sp = f.spec;
    let n = sp.n;
    let ch = f.channels;
    if q == 2.0 {
        let cst = difference_constant(n, alpha);
        let xis = lattice(n, sp.nx, sp.l);
        let mult: Vec<f64> = xis.iter().map(|xi| -cst * xi.iter().map(|x| x * x).sum::<f64>().powf(alpha)).collect();
        let apply = |g: &BoundaryField| -> Result<BoundaryField> {
            let hat = to_freq(g);
            let out: Vec<Vec<C64>> = hat.iter().zip(&mult).map(|(v, m)| v.iter().map(|x| x * m).collect()).collect();
            from_freq(g.spec, g.channels, &out)
        };
        let abs2 = BoundaryField::new(sp, 1, f.values.chunks(ch).map(|v| c(v.iter().map(|x| x.norm_sqr()).sum())).collect())?;
        let l_abs = apply(&abs2)?;
        let lf = apply(f)?;
        return Ok((0..sp.len())
            .map(|i| {
                let cross: f64 = (0..ch).map(|k| (f.values[i * ch + k].conj() * lf.values[i * ch + k]).re).sum();
                (l_abs.values[i].re - 2.0 * cross).max(0.0).sqrt()
            })
            .collect());
    }
    let dx = sp.dx();
    let half = sp.l / 2.0;
    let nx = sp.nx as i64;
    let offsets: Vec<(Vec<i64>, f64)> = {
        let mut v = Vec::new();
        let r = (sp.nx / 2) as i64;
        let total = (2 * r).pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut o = vec![0i64; n];
            for a in 0..n {
                o[a] = rem % (2 * r) - r;
                rem /= 2 * r;
            }
            let d = o.iter().map(|&x| (x as f64 * dx).powi(2)).sum::<f64>().sqrt();
            if d > 0.0 && d < half {
                v.push((o, d.powf(-(n as f64) - q * alpha) * sp.cell_volume()));
            }
        }
        v
    };
    let tail_w = n as f64 * unit_ball_volume(n) * half.powf(-q * alpha) / (q * alpha);
    let idx = |base: usize, o: &[i64]| -> usize {
        let mut rem = base;
        let mut out = 0usize;
        let mut stride = 1usize;
        for a in (0..n).rev() {
            let i = (rem % sp.nx) as i64;
            rem /= sp.nx;
            out += (((i + o[a]) % nx + nx) % nx) as usize * stride;
            stride *= sp.nx;
        }
        out
    };
    let diff = |i: usize, j: usize| -> f64 { (0..ch).map(|k| (f.values[j * ch + k] - f.values[i * ch + k]).norm_sqr()).sum::<f64>().sqrt() };
    Ok((0..sp.len())
        .into_par_iter()
        .map(|i| {
            let near: f64 = offsets.iter().map(|(o, w)| diff(i, idx(i, o)).powf(q) * w).sum();
            let mean: f64 = (0..sp.len()).map(|j| diff(i, j).powf(q)).sum::<f64>() / sp.len() as f64;
            (near + mean * tail_w).powf(1.0 / q)
        })
        .collect())
}

/// ∥D^q_α f∥_{L^{i(p)}}.
pub fn difference_norm(f: &BoundaryField, alpha: f64, q: f64, p: &Exponent) -> Result<NormReport> {
    let d = difference_function(f, alpha, q)?;
    let i = p.i();
    let v = if i.is_infinite() {
        d.iter().copied().fold(0.0, f64::max)
    } else {
        (d.iter().map(|x| x.powf(i)).sum::<f64>() * f.spec.cell_volume()).powf(1.0 / i)
    };
    Ok(NormReport {
        op: "difference_norm".into(),
        exponent: *p,
        value: v,
        truncation_estimate: 0.0,
        method: if q == 2.0 { "spectral".into() } else { "lattice".into() },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OffDiag {
    pub ratio: f64,
    pub distance: f64,
}

/// ∥1_F f(M) 1_E g∥₂/∥1_E g∥₂ for index sets E, F on the torus.
pub fn offdiag_probe(op: &MultiplierOp, f: &HoloFn, g: &BoundaryField, e: &[usize], fset: &[usize]) -> Result<OffDiag> {
    let sp = op.check_boundary(g)?;
    let ch = g.channels;
    let mut ge = BoundaryField::zeros(sp, ch);
    for &i in e {
        ge.values[i * ch..(i + 1) * ch].copy_from_slice(&g.values[i * ch..(i + 1) * ch]);
    }
    let h = op.apply_fn_field(f, &ge)?;
    let num: f64 = fset.iter().map(|&i| h.values[i * ch..(i + 1) * ch].iter().map(|x| x.norm_sqr()).sum::<f64>()).sum();
    let den: f64 = ge.values.iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        return precond("off-diagonal probe needs a nonzero input on E");
    }
    let dist = set_distance(&sp, e, fset);
    Ok(OffDiag { ratio: (num / den).sqrt(), distance: dist })
}

/// Torus distance between two sets of grid cells (closed cells).
pub fn set_distance(sp: &BoundarySpec, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &i in a {
        let x = sp.coords(i);
        for &j in b {
            let y = sp.coords(j);
            let d2: f64 = x
                .iter()
                .zip(&y)
                .map(|(p, q)| {
                    let mut d = p - q;
                    d -= sp.l * (d / sp.l).round();
                    let d = (d.abs() - sp.dx()).max(0.0);
                    d * d
                })
                .sum();
            best = best.min(d2.sqrt());
        }
    }
    best
}

/// (sup_ξ ∥χ⁺(D̂B₁) − χ⁺(D̂B₀)∥, ∥B₁ − B₀∥).
pub fn perturb_probe(b0: &CoefficientMatrix, b1: &CoefficientMatrix, l: f64, nx: usize) -> Result<(f64, f64)> {
    let o0 = MultiplierOp::build(OpKind::DB, b0, l, nx)?;
    let o1 = MultiplierOp::build(OpKind::DB, b1, l, nx)?;
    let mut worst = 0.0f64;
    for q in 0..o0.freqs.len() {
        worst = worst.max(spectral_norm(&(o1.chi(q, true)? - o0.chi(q, true)?)));
    }
    Ok((worst, spectral_norm(&(&b1.a - &b0.a))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_symbol_square() {
        let xi = [0.7, -1.3];
        let d = dirac_symbol(&xi, 2);
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        assert!(max_abs(&(&d * &d - dirac_projector(2, 2, &xi) * c(r2))) < 1e-14);
    }

    #[test]
    fn hat_involution() {
        let a = CoefficientMatrix::random_accretive(2, 2, 4, 0.5);
        let hh = a.hat().unwrap().hat().unwrap();
        assert!(max_abs(&(hh.a - &a.a)) < 1e-12);
        assert!((CoefficientMatrix::identity(1, 1).kappa(8) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_identities_random_b() {
        let b = CoefficientMatrix::random_accretive(1, 2, 9, 0.5).hat().unwrap();
        let op = MultiplierOp::build(OpKind::DB, &b, 2.0 * PI, 8).unwrap();
        for q in 0..op.freqs.len() {
            let p = op.projector(q);
            let s = op.sign(q).unwrap();
            assert!(max_abs(&(&s * &s - &p)) < 1e-10);
            assert!(max_abs(&(op.chi(q, true).unwrap() + op.chi(q, false).unwrap() - &p)) < 1e-10);
            assert!(max_abs(&(op.sign_newton(q).unwrap() - &s)) < 1e-8);
        }
    }

    #[test]
    fn dunford_matches_spectral() {
        let op = MultiplierOp::dirac(1, 1, 2.0 * PI, 16).unwrap();
        let f = HoloFn::bump(1.0, 1.0);
        let dev = dunford_check(&op, &f, 0.1, &[1, 2, 5, 9]).unwrap();
        assert!(dev < 1e-8, "{dev}");
    }
}
