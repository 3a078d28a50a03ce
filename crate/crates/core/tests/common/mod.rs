//! Reference computations that do not share code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + simpson_recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature with local tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson_step(f, a, fa, b, fb);
    simpson_recurse(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Mass of the semicircle law below `e`, by quadrature.
pub fn n_sc_quadrature(e: f64) -> f64 {
    if e <= -2.0 {
        return 0.0;
    }
    adaptive_simpson(&semicircle_density, -2.0, e.min(2.0), 1e-12)
}

/// `gamma` with quadrature mass `alpha/n`, by bisection.
pub fn classical_location_oracle(n: usize, alpha: usize) -> f64 {
    let target = alpha as f64 / n as f64;
    let (mut lo, mut hi) = (-2.0, 2.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if n_sc_quadrature(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fixed point of `m = -1/(z + m)` on the imaginary axis for `z = i eta`,
/// found by bisection on `t` in `m = i t`.
pub fn msc_on_imaginary_axis(eta: f64) -> f64 {
    // t = 1/(eta + t)  <=>  t^2 + eta t - 1 = 0
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid + eta * mid - 1.0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss-Jordan inverse of a row-major complex matrix with partial pivoting.
pub fn invert(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut work = a.to_vec();
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| work[x * n + col].norm().total_cmp(&work[y * n + col].norm()))
            .unwrap();
        if pivot != col {
            for k in 0..n {
                work.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = work[col * n + col];
        for k in 0..n {
            work[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = work[row * n + col];
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                let w = work[col * n + k];
                let v = inv[col * n + k];
                work[row * n + k] -= factor * w;
                inv[row * n + k] -= factor * v;
            }
        }
    }
    inv
}

/// `(H^(T) - z)^{-1}` with `T` given as 0-based indices; returns the inverse
/// and the surviving indices in ascending order.
pub fn minor_resolvent(h: &[Complex64], n: usize, removed: &[usize], z: Complex64) -> (Vec<Complex64>, Vec<usize>) {
    let keep: Vec<usize> = (0..n).filter(|i| !removed.contains(i)).collect();
    let m = keep.len();
    let mut shifted = vec![Complex64::new(0.0, 0.0); m * m];
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            shifted[a * m + b] = h[i * n + j] - if i == j { z } else { Complex64::new(0.0, 0.0) };
        }
    }
    (invert(&shifted, m), keep)
}

/// Random Hermitian matrix with entries of size about `1/sqrt(n)`.
pub fn random_hermitian(n: usize, seed: u64) -> Vec<Complex64> {
    let mut r = rng(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        h[i * n + i] = Complex64::new(r.random_range(-1.5..1.5) * scale, 0.0);
        for j in i + 1..n {
            let v = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)) * scale;
            h[i * n + j] = v;
            h[j * n + i] = v.conj();
        }
    }
    h
}

/// `sup_E |n(E) - n_sc(E)|` over an equispaced grid of `points` energies
/// starting at `lo <= -2`; `n_sc` is accumulated with the trapezoid rule.
pub fn counting_on_grid(eigenvalues: &[f64], lo: f64, hi: f64, points: usize) -> f64 {
    assert!(lo <= -2.0);
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let step = (hi - lo) / (points - 1) as f64;
    let mut below = 0usize;
    let mut best = 0.0_f64;
    let mut cdf = 0.0;
    let mut previous_density = semicircle_density(lo);
    for p in 0..points {
        let e = lo + step * p as f64;
        let density = semicircle_density(e);
        if p > 0 {
            cdf += 0.5 * step * (density + previous_density);
        }
        previous_density = density;
        while below < sorted.len() && sorted[below] <= e {
            below += 1;
        }
        best = best.max((below as f64 / n - cdf).abs());
    }
    best
}
