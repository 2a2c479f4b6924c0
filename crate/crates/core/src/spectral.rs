//! Weyl-function data `(z, rho)` and the transforms to and from Jacobi matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tridiag::JacobiMatrix;

/// Tolerance on `sum rho = 1` for membership in the normalized class.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Poles `z` (ascending) and residues `rho` of `chi(z) = sum rho_k / (z_k - z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub rat_n: bool,
    pub rat_n_prime: bool,
    pub interlaces: bool,
}

impl SpectralData {
    pub fn new(z: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidSpectral("N must be at least 1".into()));
        }
        if z.len() != rho.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                got: rho.len(),
            });
        }
        if z.iter().chain(&rho).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpectral("non-finite entry".into()));
        }
        Ok(Self { z, rho })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Flattened `(z_0..z_{N-1}, rho_0..rho_{N-1})`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.z.iter().chain(&self.rho).copied().collect()
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(Error::InvalidSpectral(format!("length {} is not 2N", x.len())));
        }
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn q0(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// First index pair whose poles coincide within the relative pole tolerance.
    pub fn check_distinct(&self) -> Result<()> {
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let scale = self.z[i].abs().max(self.z[j].abs()).max(1.0);
                if (self.z[i] - self.z[j]).abs() <= 1e-12 * scale {
                    return Err(Error::CoincidentPoles(i, j));
                }
            }
        }
        Ok(())
    }

    fn is_strictly_increasing(&self) -> bool {
        self.z.windows(2).all(|w| {
            let scale = w[0].abs().max(w[1].abs()).max(1.0);
            w[1] - w[0] > 1e-12 * scale
        })
    }

    /// `p(z) = prod (z - z_k)`, monic.
    pub fn p_poly(&self) -> Polynomial {
        Polynomial::from_roots(&self.z, 1.0)
    }

    /// `q(z) = sum_k rho_k prod_{m != k} (z - z_m)`, so that `chi = -q/p`.
    pub fn q_poly(&self) -> Polynomial {
        (0..self.n()).fold(Polynomial::zero(), |acc, k| {
            let others: Vec<f64> = self
                .z
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, &z)| z)
                .collect();
            &acc + &Polynomial::from_roots(&others, self.rho[k])
        })
    }

    /// `p'(z_k)` in product form.
    pub fn p_prime_at_poles(&self) -> Vec<f64> {
        (0..self.n())
            .map(|k| {
                (0..self.n())
                    .filter(|&m| m != k)
                    .map(|m| self.z[k] - self.z[m])
                    .product()
            })
            .collect()
    }

    /// `q(z_k) = p'(z_k) rho_k`.
    pub fn q_at_poles(&self) -> Vec<f64> {
        self.p_prime_at_poles()
            .iter()
            .zip(&self.rho)
            .map(|(d, r)| d * r)
            .collect()
    }

    fn min_gap(&self) -> f64 {
        self.z
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn pole_hit(s: &SpectralData, x: Complex64) -> Result<()> {
    for &zk in &s.z {
        if (x - zk).norm() <= f64::EPSILON * zk.abs().max(1.0) {
            return Err(Error::PoleEvaluation(format!("{x}")));
        }
    }
    Ok(())
}

/// `chi(x) = sum rho_k / (z_k - x)`.
pub fn weyl_eval(s: &SpectralData, x: Complex64) -> Result<Complex64> {
    pole_hit(s, x)?;
    Ok(s
        .z
        .iter()
        .zip(&s.rho)
        .map(|(&z, &r)| r / (z - x))
        .sum())
}

pub fn weyl_eval_real(s: &SpectralData, x: f64) -> Result<f64> {
    weyl_eval(s, Complex64::new(x, 0.0)).map(|c| c.re)
}

/// `chi(x) = -q0 prod (x - gamma_s) / prod (x - z_n)`.
pub fn weyl_factored(s: &SpectralData, x: f64) -> Result<f64> {
    pole_hit(s, Complex64::new(x, 0.0))?;
    let (gamma, q0) = gammas(s)?;
    let num: f64 = gamma.iter().map(|g| x - g).product();
    let den: f64 = s.z.iter().map(|z| x - z).product();
    Ok(-q0 * num / den)
}

/// Roots `gamma` and leading coefficient `q0` of the numerator `q`.
pub fn gammas(s: &SpectralData) -> Result<(Vec<f64>, f64)> {
    s.check_distinct()?;
    let q0 = s.q0();
    let n = s.n();
    if n == 1 {
        return Ok((Vec::new(), q0));
    }
    let gamma = if s.is_strictly_increasing() && s.rho.iter().all(|&r| r > 0.0) {
        // -chi has exactly one zero between consecutive poles
        s.z.windows(2)
            .map(|w| bisect_between_poles(s, w[0], w[1]))
            .collect()
    } else {
        let roots = s.q_poly().real_roots()?;
        if roots.len() != n - 1 {
            return Err(Error::NonRealOrMultipleRoots(format!(
                "numerator has {} roots, expected {}",
                roots.len(),
                n - 1
            )));
        }
        roots
    };
    Ok((gamma, q0))
}

fn bisect_between_poles(s: &SpectralData, a: f64, b: f64) -> f64 {
    let g = |x: f64| -> f64 { s.z.iter().zip(&s.rho).map(|(z, r)| r / (x - z)).sum() };
    let (mut lo, mut hi) = (a, b);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `s_p = sum z_k^p rho_k` for `p = 0..count-1`.
pub fn moments(s: &SpectralData, count: usize) -> Moments {
    let mut pw = vec![1.0; s.n()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(pw.iter().zip(&s.rho).map(|(a, r)| a * r).sum());
        for (p, z) in pw.iter_mut().zip(&s.z) {
            *p *= z;
        }
    }
    Moments { s: out }
}

/// Eigenvalues and squared first eigenvector components.
pub fn direct_transform(j: &JacobiMatrix) -> Result<SpectralData> {
    let e = j.eigen()?;
    Ok(SpectralData {
        z: e.z,
        rho: e.first_components.iter().map(|u| u * u).collect(),
    })
}

pub fn validate(s: &SpectralData) -> Membership {
    let finite = s.z.iter().chain(&s.rho).all(|x| x.is_finite()) && s.z.len() == s.rho.len();
    let rat_n = finite && !s.z.is_empty() && s.is_strictly_increasing() && s.rho.iter().all(|&r| r != 0.0);
    let rat_n_prime =
        rat_n && s.rho.iter().all(|&r| r > 0.0) && (s.q0() - 1.0).abs() <= NORMALIZATION_TOL;
    let interlaces = rat_n
        && match gammas(s) {
            Ok((g, _)) => g
                .iter()
                .enumerate()
                .all(|(k, &gk)| s.z[k] < gk && gk < s.z[k + 1]),
            Err(_) => false,
        };
    Membership {
        rat_n,
        rat_n_prime,
        interlaces,
    }
}

fn require_normalized(s: &SpectralData) -> Result<()> {
    if s.z.len() != s.rho.len() || s.z.is_empty() {
        return Err(Error::NotInRatNPrime("inconsistent lengths".into()));
    }
    if !s.is_strictly_increasing() {
        return Err(Error::NotInRatNPrime("poles are not strictly increasing".into()));
    }
    if let Some((k, r)) = s.rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        return Err(Error::NotInRatNPrime(format!("rho[{k}] = {r} is not positive")));
    }
    if (s.q0() - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotInRatNPrime(format!("sum rho = {} != 1", s.q0())));
    }
    Ok(())
}

/// Lanczos tridiagonalization of `diag(z)` from the start vector `sqrt(rho)`,
/// with two passes of full reorthogonalization per step.
pub fn inverse_transform(s: &SpectralData) -> Result<JacobiMatrix> {
    require_normalized(s)?;
    let n = s.n();
    let start = DVector::from_iterator(n, s.rho.iter().map(|r| r.sqrt()));
    let mut basis: Vec<DVector<f64>> = vec![&start / start.norm()];
    let zdiag = DVector::from_column_slice(&s.z);
    let mut v = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let u = &basis[k];
        let mut w = zdiag.component_mul(u);
        let alpha = u.dot(&w);
        v.push(alpha);
        if k + 1 == n {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let h = b.dot(&w);
                w -= b * h;
            }
        }
        let beta = w.norm();
        if !(beta > 0.0) {
            return Err(Error::NotInRatNPrime(format!("Lanczos breakdown at step {k}")));
        }
        c.push(beta);
        basis.push(w / beta);
    }
    JacobiMatrix::new(v, c)
}

/// Stieltjes continued-fraction inversion by polynomial division of `p` by `q`.
pub fn stieltjes_inverse(s: &SpectralData) -> Result<JacobiMatrix> {
    require_normalized(s)?;
    let mut num = s.p_poly();
    let mut den = s.q_poly();
    let mut v = Vec::with_capacity(s.n());
    let mut c = Vec::new();
    for k in 0..s.n() {
        let (quot, rem) = num.div_rem(&den)?;
        if quot.degree() != 1 {
            return Err(Error::NotInRatNPrime(format!(
                "continued fraction quotient of degree {} at step {k}",
                quot.degree()
            )));
        }
        v.push(-quot.coeffs()[0] / quot.coeffs()[1]);
        if k + 1 == s.n() {
            break;
        }
        let c2 = -rem.leading();
        if !(c2 > 0.0) || rem.degree() != den.degree() - 1 {
            return Err(Error::NotInRatNPrime(format!(
                "non-positive continued fraction coefficient at step {k}"
            )));
        }
        c.push(c2.sqrt());
        num = den;
        den = rem.scale(-1.0 / c2);
    }
    JacobiMatrix::new(v, c)
}

/// Recovers `(z, rho)` from `s_0..s_{2N-1}` by solving the Hankel system for
/// the monic denominator, then a Vandermonde system for the residues.
pub fn from_moments(m: &Moments, n: usize) -> Result<SpectralData> {
    if n == 0 || m.s.len() < 2 * n {
        return Err(Error::InvalidArgument(format!(
            "need {} moments for N = {n}, got {}",
            2 * n,
            m.s.len()
        )));
    }
    let hankel = DMatrix::from_fn(n, n, |i, j| m.s[i + j]);
    let rhs = DVector::from_fn(n, |i, _| -m.s[i + n]);
    let a = hankel
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix(0.0))?;
    let mut coeffs: Vec<f64> = a.iter().copied().collect();
    coeffs.push(1.0);
    let z = Polynomial::new(coeffs).real_roots()?;
    if z.len() != n {
        return Err(Error::NonRealOrMultipleRoots(format!("{} poles for N = {n}", z.len())));
    }
    let vander = DMatrix::from_fn(n, n, |i, j| z[j].powi(i as i32));
    let rho = vander
        .lu()
        .solve(&DVector::from_column_slice(&m.s[..n]))
        .ok_or(Error::SingularMatrix(0.0))?;
    SpectralData::new(z, rho.iter().copied().collect())
}

/// Smallest pole spacing, or infinity for `N = 1`.
pub fn min_pole_gap(s: &SpectralData) -> f64 {
    s.min_gap()
}
