#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use toda_core::sampling::{random_jacobi, random_spectral, trial_rng};
use toda_core::{JacobiMatrix, SpectralData};

pub fn rng(seed: u64) -> ChaCha8Rng {
    trial_rng(seed, 0)
}

pub fn jacobi(rng: &mut ChaCha8Rng, n: usize) -> JacobiMatrix {
    random_jacobi(rng, n, (-3.0, 3.0), (0.1, 3.0))
}

pub fn spectral(rng: &mut ChaCha8Rng, n: usize) -> SpectralData {
    random_spectral(rng, n, -3.0, 3.0)
}

pub fn positive_spectral(rng: &mut ChaCha8Rng, n: usize) -> SpectralData {
    random_spectral(rng, n, 0.5, 6.0)
}

/// A real point at distance at least `gap` from each of `avoid`.
pub fn point_off(rng: &mut ChaCha8Rng, avoid: &[f64], lo: f64, hi: f64, gap: f64) -> f64 {
    loop {
        let x = rng.random_range(lo..hi);
        if avoid.iter().all(|a| (a - x).abs() >= gap) {
            return x;
        }
    }
}

/// `(1/2 pi i) \oint g` over the counterclockwise circle of radius `r` about `c`,
/// by the trapezoid rule on `m` nodes.
pub fn contour_residue(g: impl Fn(Complex64) -> Complex64, c: f64, r: f64, m: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let w = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
        acc += g(Complex64::new(c, 0.0) + w) * w;
    }
    acc / m as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
