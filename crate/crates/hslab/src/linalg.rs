//! Small dense complex linear algebra: functions of triangular matrices via
//! divided differences, a scaled Newton sign iteration, and helpers.

use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::f64::consts::PI;

pub type CMat = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Complex Schur form C = Z T Z* with T upper triangular.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let s = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let (z, mut t) = s.unpack();
    for j in 0..t.ncols() {
        for i in j + 1..t.nrows() {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((z, t))
}

type ScalarFn<'a> = &'a dyn Fn(C64) -> Result<C64>;

struct DividedDifferences<'a> {
    f: ScalarFn<'a>,
    pts: Vec<C64>,
    memo: HashMap<u64, C64>,
}

impl DividedDifferences<'_> {
    fn get(&mut self, mask: u64) -> Result<C64> {
        if let Some(v) = self.memo.get(&mask) {
            return Ok(*v);
        }
        let idx: Vec<usize> = (0..self.pts.len()).filter(|i| mask >> i & 1 == 1).collect();
        let v = if idx.len() == 1 {
            (self.f)(self.pts[idx[0]])?
        } else {
            let (mut a, mut b, mut far) = (idx[0], idx[1], -1.0);
            for (p, &i) in idx.iter().enumerate() {
                for &j in &idx[p + 1..] {
                    let d = (self.pts[i] - self.pts[j]).norm();
                    if d > far {
                        (a, b, far) = (i, j, d);
                    }
                }
            }
            let centre = idx.iter().map(|&i| self.pts[i]).sum::<C64>() / idx.len() as f64;
            if far > 1e-2 * centre.norm().max(1e-300) {
                let fa = self.get(mask & !(1 << a))?;
                let fb = self.get(mask & !(1 << b))?;
                (fa - fb) / (self.pts[b] - self.pts[a])
            } else {
                self.contour(&idx, centre, far)?
            }
        };
        self.memo.insert(mask, v);
        Ok(v)
    }

    /// (1/2πi)∮ f(z)/Π(z − x_i) dz on a circle around a tight cluster.
    fn contour(&self, idx: &[usize], centre: C64, spread: f64) -> Result<C64> {
        let r = (3.0 * spread).max(0.05 * centre.norm());
        let q = 64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..q {
            let w = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / q as f64);
            let z = centre + w * r;
            let mut den = C64::new(1.0, 0.0);
            for &i in idx {
                den *= z - self.pts[i];
            }
            acc += (self.f)(z)? * w * r / den;
        }
        Ok(acc / q as f64)
    }
}

/// f(T) for upper triangular T, by the path-sum formula
/// f(T)_{ij} = Σ_{i=s₀<…<s_k=j} T_{s₀s₁}⋯T_{s_{k−1}s_k} f[λ_{s₀},…,λ_{s_k}].
pub fn fun_upper_tri(f: ScalarFn, t: &CMat) -> Result<CMat> {
    let d = t.nrows();
    assert!(d <= 20, "triangular function only for small blocks");
    let mut dd = DividedDifferences { f, pts: (0..d).map(|i| t[(i, i)]).collect(), memo: HashMap::new() };
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let inner = (j - i).saturating_sub(1);
            let count = if j == i { 1 } else { 1u64 << inner };
            let mut acc = C64::new(0.0, 0.0);
            for sub in 0..count {
                let mut path = vec![i];
                if j > i {
                    for b in 0..inner {
                        if sub >> b & 1 == 1 {
                            path.push(i + 1 + b);
                        }
                    }
                    path.push(j);
                }
                let mut w = C64::new(1.0, 0.0);
                for s in path.windows(2) {
                    w *= t[(s[0], s[1])];
                }
                if w.norm() == 0.0 {
                    continue;
                }
                let mask = path.iter().fold(0u64, |m, &p| m | 1 << p);
                acc += w * dd.get(mask)?;
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Matrix sign by the Newton iteration S ← (μS + (μS)⁻¹)/2 with determinant scaling.
pub fn newton_sign(m: &CMat) -> Result<CMat> {
    let d = m.nrows();
    if d == 0 {
        return Ok(m.clone());
    }
    let mut s = m.clone();
    for _ in 0..50 {
        let inv = s.clone().try_inverse().ok_or_else(|| Error::Numeric("sign iteration hit a singular matrix".into()))?;
        let det = s.determinant().norm();
        let mu = if det > 0.0 && det.is_finite() { det.powf(-1.0 / d as f64) } else { 1.0 };
        let next = (s.scale(mu) + inv.scale(1.0 / mu)).scale(0.5);
        let diff = (&next - &s).norm() / next.norm();
        s = next;
        if diff < 1e-12 {
            // one unscaled step to polish
            let inv = s.clone().try_inverse().ok_or_else(|| Error::Numeric("sign iteration hit a singular matrix".into()))?;
            return Ok((&s + inv).scale(0.5));
        }
    }
    Err(Error::Numeric("sign iteration did not converge in 50 steps".into()))
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    let mut v: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Orthonormal basis of the orthogonal complement of a unit vector in ℝⁿ.
pub fn orth_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut basis: Vec<Vec<f64>> = vec![u.to_vec()];
    for e in 0..n {
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-8 {
            basis.push(v.iter().map(|x| x / nv).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_mat(d: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(d, d, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
    }

    #[test]
    fn schur_is_triangular_and_unitary() {
        let m = rand_mat(5, 1);
        let (z, t) = schur(&m).unwrap();
        assert!(max_abs(&(&z * &t * z.adjoint() - &m)) < 1e-12);
        assert!(max_abs(&(z.adjoint() * &z - CMat::identity(5, 5))) < 1e-12);
    }

    #[test]
    fn exp_of_triangular_matches_series() {
        let mut t = rand_mat(4, 2);
        for j in 0..4 {
            for i in j + 1..4 {
                t[(i, j)] = c(0.0);
            }
        }
        // repeated eigenvalue
        t[(2, 2)] = t[(0, 0)];
        let e = fun_upper_tri(&|z: C64| Ok(z.exp()), &t).unwrap();
        let mut s = CMat::identity(4, 4);
        let mut term = CMat::identity(4, 4);
        for k in 1..40 {
            term = &term * &t / c(k as f64);
            s += &term;
        }
        let err = max_abs(&(e - s));
        assert!(err < 1e-12, "{err} {t}");
    }

    #[test]
    fn newton_sign_squares_to_identity() {
        let m = rand_mat(4, 3) + CMat::identity(4, 4) * c(2.0);
        let s = newton_sign(&m).unwrap();
        assert!(max_abs(&(&s * &s - CMat::identity(4, 4))) < 1e-10);
    }
}
