//! Atom validators for tent and Z spaces, and the Whitney-grid decomposition
//! of Z-space functions.

use crate::exponents::{delta, Exponent};
use crate::grid::{tent_cells, whitney_grid, Field, WhitneyParam};
use crate::overlap::unit_ball_volume;
use crate::quasinorms::{cube_integrals, l2s_norm};
use crate::{precond, Result, C64};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum AtomCheck {
    Valid,
    Support { outside_mass: f64 },
    Size { norm: f64, bound: f64 },
}

impl AtomCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, AtomCheck::Valid)
    }
}

/// Number of grid points in B(c, r) times Δxⁿ.
pub fn discrete_ball_measure(spec: &crate::grid::GridSpec, c: &[f64], r: f64) -> f64 {
    let l = spec.l;
    let count = (0..spec.spatial_len())
        .filter(|&i| {
            let x = spec.coords(i);
            x.iter()
                .zip(c)
                .map(|(a, b)| {
                    let mut d = a - b;
                    d -= l * (d / l).round();
                    d * d
                })
                .sum::<f64>()
                < r * r
        })
        .count();
    count as f64 * spec.cell_volume()
}

/// T^p-atom test: mass outside T(B) at most `tol` of the total, and
/// ∥a∥_{T²_s} ≤ |B|^{δ_{p,2}}(1 + tol).
pub fn validate_tent_atom(a: &Field, p: &Exponent, center: &[f64], radius: f64, tol: f64) -> Result<AtomCheck> {
    if !p.is_finite() || p.i() > 1.0 + 1e-12 {
        return precond("tent atoms are defined for i(p) ≤ 1");
    }
    let spec = a.spec();
    let w = tent_cells(spec, center, radius)?;
    let e = a.energy();
    let total: f64 = e.iter().sum();
    let outside: f64 = e.iter().zip(&w.w).map(|(v, f)| v * (1.0 - f)).sum();
    if total > 0.0 && outside > tol * total {
        return Ok(AtomCheck::Support { outside_mass: outside / total });
    }
    let norm = unit_ball_volume(spec.n).sqrt() * l2s_norm(a, p.theta);
    let bound = discrete_ball_measure(spec, center, radius).powf(delta(p.i(), 2.0));
    if norm > bound * (1.0 + tol) {
        return Ok(AtomCheck::Size { norm, bound });
    }
    Ok(AtomCheck::Valid)
}

/// Cells (level, spatial) lying wholly inside Ω_c(t, x).
fn in_whitney_region(spec: &crate::grid::GridSpec, l: usize, i: usize, t: f64, x: &[f64], c: WhitneyParam) -> bool {
    let (a, b) = spec.cell_t_bounds(l as i64);
    if a < t / c.c1 * (1.0 - 1e-12) || b > c.c1 * t * (1.0 + 1e-12) {
        return false;
    }
    let y = spec.coords(i);
    let h = 0.5 * spec.dx();
    let far2: f64 = y
        .iter()
        .zip(x)
        .map(|(ya, xa)| {
            let mut d = ya - xa;
            d -= spec.l * (d / spec.l).round();
            let f = d.abs() + h;
            f * f
        })
        .sum();
    far2 < (c.c0 * t).powi(2)
}

/// Z^p_c-atom test at the point (t, x): support in Ω_c(t, x) and
/// ∥κ^{−s}a∥_{L²(dx dt/t)} ≤ t^{nδ_{p,2}}(1 + tol).
pub fn validate_z_atom(a: &Field, p: &Exponent, c: WhitneyParam, t: f64, x: &[f64], tol: f64) -> Result<AtomCheck> {
    let c = WhitneyParam::new(c.c0, c.c1)?;
    if !p.is_finite() {
        return precond("Z atoms need a finite exponent");
    }
    let spec = a.spec();
    let sl = spec.spatial_len();
    let e = a.energy();
    let total: f64 = e.iter().sum();
    let mut outside = 0.0;
    for (q, v) in e.iter().enumerate() {
        if *v > 0.0 && !in_whitney_region(spec, q / sl, q % sl, t, x, c) {
            outside += v;
        }
    }
    if total > 0.0 && outside > tol * total {
        return Ok(AtomCheck::Support { outside_mass: outside / total });
    }
    let norm = l2s_norm(a, p.theta);
    let bound = t.powf(spec.n as f64 * delta(p.i(), 2.0));
    if norm > bound * (1.0 + tol) {
        return Ok(AtomCheck::Size { norm, bound });
    }
    Ok(AtomCheck::Valid)
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub lambda: f64,
    /// Dyadic coefficient ℓ(Q)^{n/p − r}[|f|²]^{1/2}_{Q̄}.
    pub mu: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub cube: usize,
    /// Cells as (level, spatial) with the atom's values, channel-minor.
    pub cells: Vec<(usize, usize)>,
    pub values: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct AtomicDecomposition {
    pub exponent: Exponent,
    pub k: i32,
    pub c: WhitneyParam,
    pub channels: usize,
    pub atoms: Vec<Atom>,
    /// Cells outside every Whitney cube, kept verbatim.
    pub remainder: Vec<((usize, usize), Vec<C64>)>,
}

/// Smallest admissible scale offset ceil(log₂(√n/(3c₀)) + 1).
pub fn min_scale(n: usize, c0: f64) -> i32 {
    (((n as f64).sqrt() / (3.0 * c0)).log2() + 1.0).ceil() as i32
}

/// f = Σ λ_Q a_Q over the Whitney grid G^k, with
/// λ_Q = t_Q^{−nδ_{p,2}}∥κ^{−s}1_{Q̄}f∥_{L²(dx dt/t)} and t_Q the midpoint of the cube's t-range.
pub fn z_decompose(f: &Field, p: &Exponent, k: i32, c: WhitneyParam) -> Result<AtomicDecomposition> {
    let c = WhitneyParam::new(c.c0, c.c1)?;
    if !p.is_finite() {
        return precond("Z decomposition needs a finite exponent");
    }
    let spec = *f.spec();
    if k < min_scale(spec.n, c.c0) {
        return precond(format!("support condition unobtainable: k = {k} below {}", min_scale(spec.n, c.c0)));
    }
    let grid = whitney_grid(&spec, k);
    let ints = cube_integrals(f, &grid, 2.0);
    let ch = f.channels();
    let n = spec.n as f64;
    let dl = delta(p.i(), 2.0);
    let w = spec.log_rho() * spec.cell_volume();
    let atoms = grid
        .cubes
        .iter()
        .enumerate()
        .map(|(ci, cube)| {
            let t = cube.t_mid();
            let mut mass = 0.0;
            for &(l, i) in &cube.cells {
                let tw = spec.t(l as i64).powf(-2.0 * p.theta);
                for cc in 0..ch {
                    mass += f.get(l, i, cc).norm_sqr() * tw;
                }
            }
            let lambda = t.powf(-n * dl) * (mass * w).sqrt();
            let mu = cube.side.powf(n / p.i() - p.r()) * ints[ci].sqrt();
            let mut values = Vec::with_capacity(cube.cells.len() * ch);
            for &(l, i) in &cube.cells {
                for cc in 0..ch {
                    let v = f.get(l, i, cc);
                    values.push(if lambda > 0.0 { v / lambda } else { C64::new(0.0, 0.0) });
                }
            }
            Atom { lambda, mu, t, x: cube.center.clone(), cube: ci, cells: cube.cells.clone(), values }
        })
        .collect();
    let remainder = grid
        .uncovered
        .iter()
        .map(|&(l, i)| ((l, i), (0..ch).map(|cc| f.get(l, i, cc)).collect()))
        .collect();
    Ok(AtomicDecomposition { exponent: *p, k, c, channels: ch, atoms, remainder })
}

impl AtomicDecomposition {
    pub fn atom_field(&self, spec: &crate::grid::GridSpec, idx: usize) -> Result<Field> {
        let a = &self.atoms[idx];
        let ch = self.channels;
        let sl = spec.spatial_len();
        let mut v = vec![C64::new(0.0, 0.0); spec.k * sl * ch];
        for (q, &(l, i)) in a.cells.iter().enumerate() {
            v[(l * sl + i) * ch..(l * sl + i + 1) * ch].copy_from_slice(&a.values[q * ch..(q + 1) * ch]);
        }
        Field::new(*spec, ch, v)
    }

    /// Σ λ a plus the uncovered remainder.
    pub fn reconstruct(&self, spec: &crate::grid::GridSpec) -> Result<Field> {
        let ch = self.channels;
        let sl = spec.spatial_len();
        let mut v = vec![C64::new(0.0, 0.0); spec.k * sl * ch];
        for a in &self.atoms {
            for (q, &(l, i)) in a.cells.iter().enumerate() {
                for cc in 0..ch {
                    v[(l * sl + i) * ch + cc] += a.values[q * ch + cc] * a.lambda;
                }
            }
        }
        for ((l, i), vals) in &self.remainder {
            for cc in 0..ch {
                v[(l * sl + i) * ch + cc] += vals[cc];
            }
        }
        Field::new(*spec, ch, v)
    }

    fn lp(&self, it: impl Iterator<Item = f64>) -> f64 {
        let q = self.exponent.i();
        it.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }

    pub fn lambda_norm(&self) -> f64 {
        self.lp(self.atoms.iter().map(|a| a.lambda))
    }

    /// ℓ^p norm of the dyadic coefficients; equals z_norm_dyadic at the same k.
    pub fn mu_norm(&self) -> f64 {
        self.lp(self.atoms.iter().map(|a| a.mu))
    }

    pub fn nonzero(&self) -> usize {
        self.atoms.iter().filter(|a| a.lambda > 0.0).count()
    }

    /// Coefficient table: cube, t, x…, lambda, mu.
    pub fn coefficient_csv(&self) -> String {
        let mut s = String::from("cube,t,x,lambda,mu\n");
        for a in &self.atoms {
            let xs: Vec<String> = a.x.iter().map(|v| format!("{v}")).collect();
            s.push_str(&format!("{},{},{},{},{}\n", a.cube, a.t, xs.join(" "), a.lambda, a.mu));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_field, GridSpec};
    use crate::quasinorms::z_norm_dyadic;

    #[test]
    fn threshold() {
        assert_eq!(min_scale(1, 1.0), 0);
        assert!(z_decompose(
            &random_field(&GridSpec::new(1, 1, 8.0, 32, 0.1, 4.0, 20).unwrap(), 1, 1, 0.0),
            &Exponent::finite(1, 1.0, -0.5),
            -1,
            WhitneyParam::standard()
        )
        .is_err());
    }

    #[test]
    fn exact_reconstruction_and_mu() {
        let spec = GridSpec::new(1, 1, 8.0, 32, 0.05, 6.0, 48).unwrap();
        let f = random_field(&spec, 2, 5, 0.0);
        let p = Exponent::finite(1, 0.5, -0.5);
        let d = z_decompose(&f, &p, 1, WhitneyParam::standard()).unwrap();
        let r = d.reconstruct(&spec).unwrap();
        let err = r.sub(&f).unwrap().max_abs();
        assert!(err <= 1e-13 * f.max_abs());
        let dy = z_norm_dyadic(&f, &p, 1).unwrap().value;
        assert!((d.mu_norm() / dy - 1.0).abs() < 1e-12);
    }
}
