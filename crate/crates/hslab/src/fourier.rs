//! n-dimensional FFTs on the periodic torus, done axis by axis.
//!
//! Convention: f̂(ξ) = Σ_x f(x) e^{−iξ·x} Δxⁿ with ξ = 2πk/L, and the inverse
//! f(x) = L^{−n} Σ_ξ f̂(ξ) e^{iξ·x}.

use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((len, inverse))
            .or_insert_with(|| if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) })
            .clone()
    })
}

/// Unnormalised in-place transform of an `nx^n` array in row-major order.
pub fn fft_nd(data: &mut [C64], n: usize, nx: usize, inverse: bool) {
    assert_eq!(data.len(), nx.pow(n as u32), "array size does not match grid");
    let f = plan(nx, inverse);
    let mut line = vec![C64::new(0.0, 0.0); nx];
    for axis in 0..n {
        let stride = nx.pow((n - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_mut(nx) {
                f.process(chunk);
            }
            continue;
        }
        let block = stride * nx;
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (q, v) in line.iter_mut().enumerate() {
                    *v = data[base + off + q * stride];
                }
                f.process(&mut line);
                for (q, v) in line.iter().enumerate() {
                    data[base + off + q * stride] = *v;
                }
            }
        }
    }
}

/// Signed integer frequency of FFT bin `i`.
pub fn bin_to_k(i: usize, nx: usize) -> i64 {
    if i < nx / 2 {
        i as i64
    } else {
        i as i64 - nx as i64
    }
}

/// Frequency vectors ξ = 2πk/L for every bin of an `nx^n` lattice.
pub fn lattice(n: usize, nx: usize, l: f64) -> Vec<Vec<f64>> {
    let total = nx.pow(n as u32);
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            let mut xi = vec![0.0; n];
            for a in (0..n).rev() {
                xi[a] = 2.0 * PI * bin_to_k(rem % nx, nx) as f64 / l;
                rem /= nx;
            }
            xi
        })
        .collect()
}

/// Cyclic convolution of a real array with a kernel given by its transform.
pub fn convolve_with(data: &[f64], kernel_hat: &[C64], n: usize, nx: usize) -> Vec<f64> {
    let mut buf: Vec<C64> = data.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft_nd(&mut buf, n, nx, false);
    for (b, k) in buf.iter_mut().zip(kernel_hat) {
        *b *= k;
    }
    fft_nd(&mut buf, n, nx, true);
    let s = 1.0 / buf.len() as f64;
    buf.iter().map(|v| v.re * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let n = 2;
        let nx = 8;
        let orig: Vec<C64> = (0..64).map(|i| C64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut d = orig.clone();
        fft_nd(&mut d, n, nx, false);
        fft_nd(&mut d, n, nx, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / 64.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_lands_in_one_bin() {
        let nx = 16;
        let l = 2.0 * PI;
        let mut d: Vec<C64> = (0..nx * nx)
            .map(|idx| {
                let (i, j) = (idx / nx, idx % nx);
                let x = [i as f64 * l / nx as f64, j as f64 * l / nx as f64];
                C64::from_polar(1.0, 3.0 * x[0] - 2.0 * x[1])
            })
            .collect();
        fft_nd(&mut d, 2, nx, false);
        let xi = lattice(2, nx, l);
        for (v, x) in d.iter().zip(&xi) {
            if (x[0] - 3.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12 {
                assert!((v.re - 256.0).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }
}
