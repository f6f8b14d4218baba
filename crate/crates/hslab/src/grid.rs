//! Discretised upper half-space: geometric t-levels over a periodic torus.
//!
//! Level k sits at t_k = t_min ρ^k and stands for the log-cell
//! [t_k ρ^{−1/2}, t_k ρ^{1/2}], which carries dt/t-mass log ρ.  Spatial cell i
//! is the box of side Δx centred at x_i = iΔx.

use crate::overlap::{ball_fractions, unit_ball_volume};
use crate::{precond, Error, Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl GridSpec {
    pub fn new(n: usize, m: usize, l: f64, nx: usize, t_min: f64, t_max: f64, k: usize) -> Result<Self> {
        let g = GridSpec { n, m, l, nx, t_min, t_max, k };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return precond(format!("spatial dimension {} not in 1..=3", self.n));
        }
        if self.m < 1 {
            return precond("system size must be positive");
        }
        if !self.nx.is_power_of_two() || self.nx < 2 {
            return precond(format!("Nx = {} is not a power of two ≥ 2", self.nx));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return precond("period must be positive");
        }
        if self.k < 2 {
            return precond("need at least two t-levels");
        }
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return precond("need 0 < t_min < t_max");
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.m * (1 + self.n)
    }

    pub fn dx(&self) -> f64 {
        self.l / self.nx as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    pub fn rho(&self) -> f64 {
        (self.t_max / self.t_min).powf(1.0 / (self.k - 1) as f64)
    }

    /// dt/t quadrature weight of one level.
    pub fn log_rho(&self) -> f64 {
        (self.t_max / self.t_min).ln() / (self.k - 1) as f64
    }

    /// t-level k (any integer, so ghost levels outside 0..K are available).
    pub fn t(&self, k: i64) -> f64 {
        if k == self.k as i64 - 1 {
            return self.t_max;
        }
        self.t_min * (k as f64 * self.log_rho()).exp()
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.k as i64).map(|k| self.t(k)).collect()
    }

    /// Lebesgue t-extent of the log-cell of level k.
    pub fn cell_t_bounds(&self, k: i64) -> (f64, f64) {
        let h = 0.5 * self.log_rho();
        let t = self.t(k);
        (t * (-h).exp(), t * h.exp())
    }

    pub fn spatial_len(&self) -> usize {
        self.nx.pow(self.n as u32)
    }

    pub fn len(&self) -> usize {
        self.k * self.spatial_len() * self.channels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        spatial_coords(idx, self.n, self.nx, self.dx())
    }

    pub fn boundary(&self) -> BoundarySpec {
        BoundarySpec { n: self.n, l: self.l, nx: self.nx }
    }
}

pub fn spatial_coords(idx: usize, n: usize, nx: usize, dx: f64) -> Vec<f64> {
    let mut rem = idx;
    let mut x = vec![0.0; n];
    for a in (0..n).rev() {
        x[a] = (rem % nx) as f64 * dx;
        rem /= nx;
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub n: usize,
    pub l: f64,
    pub nx: usize,
}

impl BoundarySpec {
    pub fn dx(&self) -> f64 {
        self.l / self.nx as f64
    }
    pub fn len(&self) -> usize {
        self.nx.pow(self.n as u32)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        spatial_coords(idx, self.n, self.nx, self.dx())
    }
}

fn check_finite(values: &[C64]) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric(format!("non-finite sample at flat index {pos}")));
    }
    Ok(())
}

/// Samples on the half-space grid, laid out (level, spatial, channel).
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    spec: GridSpec,
    channels: usize,
    values: Vec<C64>,
}

impl Field {
    pub fn new(spec: GridSpec, channels: usize, values: Vec<C64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.k * spec.spatial_len() * channels {
            return Err(Error::Format(format!(
                "field payload has {} values, grid needs {}",
                values.len(),
                spec.k * spec.spatial_len() * channels
            )));
        }
        check_finite(&values)?;
        Ok(Field { spec, channels, values })
    }

    pub fn zeros(spec: GridSpec, channels: usize) -> Self {
        Field { spec, channels, values: vec![C64::new(0.0, 0.0); spec.k * spec.spatial_len() * channels] }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn level(&self, k: usize) -> &[C64] {
        let s = self.spec.spatial_len() * self.channels;
        &self.values[k * s..(k + 1) * s]
    }

    pub fn get(&self, k: usize, i: usize, c: usize) -> C64 {
        self.values[(k * self.spec.spatial_len() + i) * self.channels + c]
    }

    /// Channel-summed |f|² per cell, level-major.
    pub fn energy(&self) -> Vec<f64> {
        self.values.chunks(self.channels).map(|c| c.iter().map(|v| v.norm_sqr()).sum()).collect()
    }

    /// Pointwise multiplication by t^s (the operator κ^s).
    pub fn kappa(&self, s: f64) -> Field {
        let per = self.spec.spatial_len() * self.channels;
        let mut values = self.values.clone();
        for k in 0..self.spec.k {
            let w = self.spec.t(k as i64).powf(s);
            for v in &mut values[k * per..(k + 1) * per] {
                *v *= w;
            }
        }
        Field { spec: self.spec, channels: self.channels, values }
    }

    pub fn scale(&self, c: C64) -> Field {
        Field { spec: self.spec, channels: self.channels, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_shape(other)?;
        Ok(Field {
            spec: self.spec,
            channels: self.channels,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        other.scale(C64::new(-1.0, 0.0)).add(self)
    }

    pub fn same_shape(&self, other: &Field) -> Result<()> {
        if self.spec != other.spec || self.channels != other.channels {
            return precond("fields live on different grids");
        }
        Ok(())
    }

    /// ∥f∥ in L²(dy dt/t) with level weights log ρ.
    pub fn l2_dt_over_t(&self) -> f64 {
        let w = self.spec.log_rho() * self.spec.cell_volume();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map_cells(&self, f: impl Fn(usize, usize, usize, C64) -> C64) -> Field {
        let sl = self.spec.spatial_len();
        let ch = self.channels;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(p, &v)| {
                let c = p % ch;
                let i = (p / ch) % sl;
                let k = p / (ch * sl);
                f(k, i, c, v)
            })
            .collect();
        Field { spec: self.spec, channels: ch, values }
    }

    pub fn from_levels(spec: GridSpec, channels: usize, levels: Vec<Vec<C64>>) -> Result<Field> {
        let values: Vec<C64> = levels.into_iter().flatten().collect();
        Field::new(spec, channels, values)
    }
}

/// Samples on the boundary torus, laid out (spatial, channel).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField {
    pub spec: BoundarySpec,
    pub channels: usize,
    pub values: Vec<C64>,
}

impl BoundaryField {
    pub fn new(spec: BoundarySpec, channels: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.len() * channels {
            return Err(Error::Format(format!(
                "boundary payload has {} values, grid needs {}",
                values.len(),
                spec.len() * channels
            )));
        }
        check_finite(&values)?;
        Ok(BoundaryField { spec, channels, values })
    }

    pub fn zeros(spec: BoundarySpec, channels: usize) -> Self {
        BoundaryField { spec, channels, values: vec![C64::new(0.0, 0.0); spec.len() * channels] }
    }

    pub fn from_fn(spec: BoundarySpec, channels: usize, f: impl Fn(&[f64]) -> Vec<C64>) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.len() * channels);
        for i in 0..spec.len() {
            let v = f(&spec.coords(i));
            if v.len() != channels {
                return precond("sampler returned the wrong channel count");
            }
            values.extend(v);
        }
        BoundaryField::new(spec, channels, values)
    }

    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spec.cell_volume()).sqrt()
    }

    pub fn channel(&self, c: usize) -> Vec<C64> {
        self.values.iter().skip(c).step_by(self.channels).copied().collect()
    }

    pub fn sub(&self, other: &BoundaryField) -> BoundaryField {
        assert_eq!(self.values.len(), other.values.len(), "boundary fields of different shape");
        BoundaryField {
            spec: self.spec,
            channels: self.channels,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> BoundaryField {
        BoundaryField { spec: self.spec, channels: self.channels, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn inner(&self, other: &BoundaryField) -> C64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<C64>() * self.spec.cell_volume()
    }
}

/// Deterministic sampling at cell centres (t_k, x_i).
pub fn sample(spec: &GridSpec, channels: usize, f: impl Fn(f64, &[f64]) -> Vec<C64>) -> Result<Field> {
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.k * spec.spatial_len() * channels);
    for k in 0..spec.k {
        let t = spec.t(k as i64);
        for i in 0..spec.spatial_len() {
            let v = f(t, &spec.coords(i));
            if v.len() != channels {
                return precond("sampler returned the wrong channel count");
            }
            values.extend(v);
        }
    }
    Field::new(*spec, channels, values)
}

fn gauss(rng: &mut ChaCha8Rng) -> C64 {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Gaussian per cell, scaled by t^γ.
pub fn random_field(spec: &GridSpec, channels: usize, seed: u64, gamma: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = spec.spatial_len() * channels;
    let mut values = Vec::with_capacity(spec.k * per);
    for k in 0..spec.k {
        let w = spec.t(k as i64).powf(gamma);
        for _ in 0..per {
            values.push(gauss(&mut rng) * w);
        }
    }
    Field { spec: *spec, channels, values }
}

pub fn random_boundary(spec: &BoundarySpec, channels: usize, seed: u64) -> BoundaryField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.len() * channels).map(|_| gauss(&mut rng)).collect();
    BoundaryField { spec: *spec, channels, values }
}

/// Per-cell coverage fractions in [0, 1], laid out (level, spatial).
#[derive(Clone, Debug, PartialEq)]
pub struct CellWeights {
    pub spec: GridSpec,
    pub w: Vec<f64>,
}

impl CellWeights {
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.w[k * self.spec.spatial_len() + i]
    }

    /// Lebesgue measure (dt dy) of the covered set.
    pub fn lebesgue(&self) -> f64 {
        let sl = self.spec.spatial_len();
        (0..self.spec.k)
            .map(|k| {
                let (a, b) = self.spec.cell_t_bounds(k as i64);
                (b - a) * self.w[k * sl..(k + 1) * sl].iter().sum::<f64>()
            })
            .sum::<f64>()
            * self.spec.cell_volume()
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let sl = self.spec.spatial_len();
        self.w.iter().enumerate().filter(|(_, &w)| w > 0.0).map(move |(p, _)| (p / sl, p % sl))
    }
}

/// Cone Γ_β(x) = {(t, y): |y − x| < βt}, level by level.
pub fn cone_weights(spec: &GridSpec, x: &[f64], beta: f64) -> Result<CellWeights> {
    if beta <= 0.0 {
        return precond("aperture must be positive");
    }
    if beta * spec.t_max >= spec.l / 2.0 {
        return precond("aperture exceeds torus injectivity radius");
    }
    let mut w = Vec::with_capacity(spec.k * spec.spatial_len());
    for k in 0..spec.k {
        w.extend(ball_fractions(spec.n, spec.nx, spec.l, x, beta * spec.t(k as i64))?);
    }
    Ok(CellWeights { spec: *spec, w })
}

/// Tent T(B(c, r)) = {(t, y): |y − c| + t ≤ r}; levels with t ≥ r are empty.
pub fn tent_cells(spec: &GridSpec, c: &[f64], r: f64) -> Result<CellWeights> {
    let sl = spec.spatial_len();
    let mut w = Vec::with_capacity(spec.k * sl);
    for k in 0..spec.k {
        let t = spec.t(k as i64);
        if t < r {
            w.extend(ball_fractions(spec.n, spec.nx, spec.l, c, r - t)?);
        } else {
            w.extend(std::iter::repeat_n(0.0, sl));
        }
    }
    Ok(CellWeights { spec: *spec, w })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyParam {
    pub c0: f64,
    pub c1: f64,
}

impl WhitneyParam {
    pub fn new(c0: f64, c1: f64) -> Result<Self> {
        if c0 <= 0.0 {
            return precond("Whitney parameter needs c0 > 0");
        }
        if c1 <= 1.5 {
            return precond(format!("Whitney parameter needs c1 > 3/2, got {c1}"));
        }
        Ok(WhitneyParam { c0, c1 })
    }

    pub fn standard() -> Self {
        WhitneyParam { c0: 1.0, c1: 2.0 }
    }

    /// Lebesgue volume of Ω_c(t, x).
    pub fn region_volume(&self, n: usize, t: f64) -> f64 {
        (self.c1 - 1.0 / self.c1) * t * unit_ball_volume(n) * (self.c0 * t).powi(n as i32)
    }
}

/// Fraction of the Lebesgue t-extent of level `k` inside (lo, hi).
pub fn time_fraction(spec: &GridSpec, k: i64, lo: f64, hi: f64) -> f64 {
    let (a, b) = spec.cell_t_bounds(k);
    crate::overlap::interval_overlap(a, b, lo, hi) / (b - a)
}

/// Whitney region Ω_c(t, x) = (t/c1, c1 t) × B(x, c0 t).
pub fn whitney_cells(spec: &GridSpec, t: f64, x: &[f64], c: WhitneyParam) -> Result<CellWeights> {
    WhitneyParam::new(c.c0, c.c1)?;
    let sl = spec.spatial_len();
    let space = ball_fractions(spec.n, spec.nx, spec.l, x, c.c0 * t)?;
    let mut w = Vec::with_capacity(spec.k * sl);
    for k in 0..spec.k {
        let tf = time_fraction(spec, k as i64, t / c.c1, c.c1 * t);
        w.extend(space.iter().map(|s| s * tf));
    }
    Ok(CellWeights { spec: *spec, w })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyCube {
    /// Dyadic generation: ℓ(Q) = L / 2^gen.
    pub gen: u32,
    pub q: Vec<usize>,
    pub side: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub center: Vec<f64>,
    /// Covered cells as (level, spatial index).
    pub cells: Vec<(usize, usize)>,
}

impl WhitneyCube {
    pub fn t_mid(&self) -> f64 {
        0.5 * (self.t_lo + self.t_hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyGrid {
    pub k: i32,
    pub spec: GridSpec,
    pub cubes: Vec<WhitneyCube>,
    /// Cells whose level falls outside every admissible cube generation.
    pub uncovered: Vec<(usize, usize)>,
}

/// Whitney cubes Q̄^k = (2^k ℓ(Q), 2^{k+1} ℓ(Q)) × Q over the dyadic torus
/// partition.  Cells are assigned by their centre, so the cubes partition the
/// covered cells exactly.
pub fn whitney_grid(spec: &GridSpec, k: i32) -> WhitneyGrid {
    let sl = spec.spatial_len();
    let max_gen = spec.nx.trailing_zeros();
    let scale = 2f64.powi(k);
    let mut by_cube: BTreeMap<(u32, Vec<usize>), Vec<(usize, usize)>> = BTreeMap::new();
    let mut uncovered = Vec::new();
    for lev in 0..spec.k {
        let t = spec.t(lev as i64);
        let gen = (0..=max_gen).find(|&g| {
            let side = spec.l / 2f64.powi(g as i32);
            scale * side < t && t <= 2.0 * scale * side
        });
        let Some(g) = gen else {
            uncovered.extend((0..sl).map(|i| (lev, i)));
            continue;
        };
        let per = spec.nx >> g;
        for i in 0..sl {
            let mut rem = i;
            let mut q = vec![0; spec.n];
            for a in (0..spec.n).rev() {
                q[a] = (rem % spec.nx) / per;
                rem /= spec.nx;
            }
            by_cube.entry((g, q)).or_default().push((lev, i));
        }
    }
    let dx = spec.dx();
    let cubes = by_cube
        .into_iter()
        .map(|((gen, q), cells)| {
            let side = spec.l / 2f64.powi(gen as i32);
            let per = (spec.nx >> gen) as f64;
            let center = q.iter().map(|&qa| (qa as f64 * per + (per - 1.0) / 2.0) * dx).collect();
            WhitneyCube { gen, q, side, t_lo: scale * side, t_hi: 2.0 * scale * side, center, cells }
        })
        .collect();
    WhitneyGrid { k, spec: *spec, cubes, uncovered }
}

impl WhitneyGrid {
    pub fn covered(&self) -> usize {
        self.cubes.iter().map(|c| c.cells.len()).sum()
    }

    fn cube_distance(&self, a: &WhitneyCube, b: &WhitneyCube) -> f64 {
        let l = self.spec.l;
        a.center
            .iter()
            .zip(&b.center)
            .map(|(x, y)| {
                let mut d = x - y;
                d -= l * (d / l).round();
                (d.abs() - 0.5 * (a.side + b.side)).max(0.0)
            })
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }

    /// G_c(Q̄): cubes meeting Ω_c(t, x) for some (t, x) ∈ Q̄.
    pub fn neighbors(&self, cube: usize, c: WhitneyParam) -> Vec<usize> {
        let q = &self.cubes[cube];
        self.cubes
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                let lo = q.t_lo.max(r.t_lo / c.c1);
                let hi = q.t_hi.min(c.c1 * r.t_hi);
                lo < hi && self.cube_distance(q, r) < c.c0 * hi
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Explicit upper bound for |G_c(Q̄^k)| depending only on (c, k, n).
pub fn neighbor_bound(c: WhitneyParam, k: i32, n: usize) -> usize {
    let reach = c.c0 * 2f64.powi(k + 1) * c.c1;
    let mut total = 0usize;
    for d in -8i32..=8 {
        let ratio = 2f64.powi(d);
        if ratio >= 2.0 * c.c1 || ratio <= 1.0 / (2.0 * c.c1) {
            continue;
        }
        let per_axis = ((1.0 + 2.0 * reach) / ratio).ceil() as usize + 1;
        total += per_axis.pow(n as u32);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec1() -> GridSpec {
        GridSpec::new(1, 1, 16.0, 64, 0.1, 4.0, 32).unwrap()
    }

    #[test]
    fn levels_are_geometric() {
        let s = spec1();
        let f = sample(&s, 1, |t, _| vec![C64::new(t, 0.0)]).unwrap();
        for k in 0..s.k {
            assert_eq!(f.get(k, 3, 0).re, s.t(k as i64));
        }
        assert_eq!(s.t(0), s.t_min);
        assert_eq!(s.t(s.k as i64 - 1), s.t_max);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let s = spec1();
        assert!(sample(&s, 1, |t, _| vec![C64::new(1.0 / (t - s.t_min), 0.0)]).is_err());
    }

    #[test]
    fn whitney_param_guard() {
        assert!(WhitneyParam::new(1.0, 1.5).is_err());
        assert!(WhitneyParam::new(1.0, 1.6).is_ok());
    }

    #[test]
    fn tent_has_no_cells_above_radius() {
        let s = spec1();
        let w = tent_cells(&s, &[3.0], 1.0).unwrap();
        for (k, _) in w.support() {
            assert!(s.t(k as i64) < 1.0);
        }
    }
}
