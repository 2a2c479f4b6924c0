//! The residue brackets `{chi(p), chi(q)}^f` and their z-rho tensors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Chart, PoissonStructure, ScalarFn, WeightFn};
use crate::coords::AntiderivativeF;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, RationalFunction};
use crate::spectral::{weyl_eval, SpectralData};

fn check_points(s: &SpectralData, p: Complex64, q: Complex64) -> Result<()> {
    let scale = p.norm().max(q.norm()).max(1.0);
    if (p - q).norm() <= f64::EPSILON * scale {
        return Err(Error::CoincidentPoints(format!("p = q = {p}")));
    }
    for (k, &zk) in s.z.iter().enumerate() {
        for (name, x) in [("p", p), ("q", q)] {
            if (x - zk).norm() <= f64::EPSILON * zk.abs().max(1.0) {
                return Err(Error::CoincidentPoints(format!("{name} = {x} hits pole z[{k}]")));
            }
        }
    }
    Ok(())
}

/// The factor multiplying `f(z) chi(z) / ((z - p)(z - q))` in the integrand.
fn integrand_factor(s: &SpectralData, p: Complex64, q: Complex64, restricted: bool) -> Result<(Complex64, Complex64, Complex64)> {
    check_points(s, p, q)?;
    let cp = weyl_eval(s, p)?;
    let cq = weyl_eval(s, q)?;
    let mut k = cp - cq;
    if restricted {
        k -= (p - q) * cp * cq / s.q0();
    }
    Ok((k, cp, cq))
}

fn pole_terms(s: &SpectralData, p: Complex64, q: Complex64, f: &WeightFn, restricted: bool) -> Result<Vec<Complex64>> {
    s.check_distinct()?;
    let (k, _, _) = integrand_factor(s, p, q, restricted)?;
    Ok(s.z
        .iter()
        .zip(&s.rho)
        .map(|(&z, &r)| r * f.eval(z) * k / ((z - p) * (z - q)))
        .collect())
}

/// Per-pole contributions of the clockwise contour integrals around each `z_k`.
pub fn analytic_bracket_terms(s: &SpectralData, p: Complex64, q: Complex64, f: &WeightFn) -> Result<Vec<Complex64>> {
    pole_terms(s, p, q, f, false)
}

pub fn analytic_bracket(s: &SpectralData, p: Complex64, q: Complex64, f: &WeightFn) -> Result<Complex64> {
    Ok(analytic_bracket_terms(s, p, q, f)?.iter().sum())
}

pub fn restricted_bracket_terms(s: &SpectralData, p: Complex64, q: Complex64, f: &WeightFn) -> Result<Vec<Complex64>> {
    pole_terms(s, p, q, f, true)
}

/// The bracket of the modified differential, with `e^{-c_2} = 1/q0`.
pub fn restricted_bracket(s: &SpectralData, p: Complex64, q: Complex64, f: &WeightFn) -> Result<Complex64> {
    Ok(restricted_bracket_terms(s, p, q, f)?.iter().sum())
}

/// Residues at `p` and `q` only:
/// `(f(p)chi(p) - f(q)chi(q)) (chi(p) - chi(q))/(p - q)` and its restricted analogue.
/// Equals the bracket exactly when the residue at infinity vanishes.
pub fn closed_form(s: &SpectralData, p: Complex64, q: Complex64, f: &WeightFn, restricted: bool) -> Result<Complex64> {
    let (k, cp, cq) = integrand_factor(s, p, q, restricted)?;
    Ok((f.eval_complex(p) * cp - f.eval_complex(q) * cq) * k / (p - q))
}

/// The rational integrand `f(z) chi(z) K / ((z - p)(z - q))` for `f = z^n` and real `p, q`.
pub fn omega_differential(s: &SpectralData, p: f64, q: f64, f: &WeightFn, restricted: bool) -> Result<RationalFunction> {
    let WeightFn::Power(n) = f else {
        return Err(Error::InvalidArgument("rational integrand needs f = z^n".into()));
    };
    let (k, _, _) = integrand_factor(s, Complex64::new(p, 0.0), Complex64::new(q, 0.0), restricted)?;
    let mut mono = vec![0.0; *n as usize + 1];
    mono[*n as usize] = -k.re;
    let num = &s.q_poly() * &Polynomial::new(mono);
    let den = &s.p_poly() * &Polynomial::from_roots(&[p, q], 1.0);
    RationalFunction::new(num, den)
}

/// Gradient of `chi(p)` in the `(z, rho)` chart.
pub fn weyl_gradient(s: &SpectralData, p: f64) -> DVector<f64> {
    let n = s.n();
    let mut g = DVector::zeros(2 * n);
    for k in 0..n {
        let d = s.z[k] - p;
        g[k] = -s.rho[k] / (d * d);
        g[n + k] = 1.0 / d;
    }
    g
}

fn split_state(n: usize, x: &[f64]) -> Result<SpectralData> {
    let s = SpectralData::new(x[..n].to_vec(), x[n..].to_vec())?;
    s.check_distinct()?;
    Ok(s)
}

/// `{rho_k, rho_n} = (f_k + f_n) rho_k rho_n / (z_n - z_k)`, `{rho_k, z_n} = rho_k f_n delta`, `{z, z} = 0`.
pub fn zrho_tensor(f: WeightFn, n: usize) -> PoissonStructure {
    let w = f.clone();
    PoissonStructure::new(
        Chart::ZRHO,
        n,
        format!("z-rho f={}", f.label()),
        Some(f),
        false,
        Arc::new(move |x| {
            let s = split_state(n, x)?;
            let fz: Vec<f64> = s.z.iter().map(|&z| w.eval(z)).collect();
            let mut t = DMatrix::zeros(2 * n, 2 * n);
            for k in 0..n {
                for m in k + 1..n {
                    let val = (fz[k] + fz[m]) * s.rho[k] * s.rho[m] / (s.z[m] - s.z[k]);
                    t[(n + k, n + m)] = val;
                    t[(n + m, n + k)] = -val;
                }
                t[(n + k, k)] = s.rho[k] * fz[k];
                t[(k, n + k)] = -s.rho[k] * fz[k];
            }
            Ok(t)
        }),
    )
}

/// The Dirac reduction of [`zrho_tensor`] to the level sets of `sum F(z_k)` and `log q0`, in closed form.
pub fn zrho_restricted_tensor(f: WeightFn, n: usize) -> PoissonStructure {
    let w = f.clone();
    PoissonStructure::new(
        Chart::ZRHO,
        n,
        format!("restricted z-rho f={}", f.label()),
        Some(f),
        true,
        Arc::new(move |x| {
            let s = split_state(n, x)?;
            let (z, r) = (&s.z, &s.rho);
            let q0 = s.q0();
            let fz: Vec<f64> = z.iter().map(|&v| w.eval(v)).collect();
            let a: Vec<f64> = (0..n)
                .map(|k| {
                    (0..n)
                        .filter(|&m| m != k)
                        .map(|m| (fz[k] + fz[m]) * r[m] / (z[m] - z[k]))
                        .sum()
                })
                .collect();
            let mut t = DMatrix::zeros(2 * n, 2 * n);
            for k in 0..n {
                for m in 0..n {
                    if k < m {
                        let val = (fz[k] + fz[m]) * r[k] * r[m] / (z[m] - z[k])
                            + r[k] * r[m] * (a[m] - a[k]) / q0;
                        t[(n + k, n + m)] = val;
                        t[(n + m, n + k)] = -val;
                    }
                    let delta = if k == m { r[k] * fz[m] } else { 0.0 };
                    let val = delta - fz[m] * r[k] * r[m] / q0;
                    t[(n + k, m)] = val;
                    t[(m, n + k)] = -val;
                }
            }
            Ok(t)
        }),
    )
}

/// `Phi1 = sum F(z_k)` with `F' = 1/f`.
pub fn phi1(f: WeightFn, n: usize) -> ScalarFn {
    let anti = AntiderivativeF::new(f.clone());
    ScalarFn::new(
        format!("Phi1[{}]", f.label()),
        move |x| x[..n].iter().map(|&z| anti.eval(z)).sum(),
        move |x| {
            let mut g = DVector::zeros(2 * n);
            for k in 0..n {
                g[k] = 1.0 / f.eval(x[k]);
            }
            Ok(g)
        },
    )
}

/// `Phi2 = log q0`.
pub fn phi2(n: usize) -> ScalarFn {
    ScalarFn::new(
        "Phi2",
        move |x| {
            let q0: f64 = x[n..].iter().sum();
            if q0 > 0.0 {
                Ok(q0.ln())
            } else {
                Err(Error::SignViolation(format!("q0 = {q0}")))
            }
        },
        move |x| {
            let q0: f64 = x[n..].iter().sum();
            let mut g = DVector::zeros(2 * n);
            g.rows_mut(n, n).fill(1.0 / q0);
            Ok(g)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::{antisymmetry_defect, casimir_residual, dirac_restrict};
    use crate::poly::Point;
    use approx::assert_abs_diff_eq;

    fn example() -> SpectralData {
        SpectralData::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn unrestricted_examples() {
        let s = example();
        let b = analytic_bracket(&s, c(2.0), c(3.0), &WeightFn::Power(0)).unwrap();
        assert_abs_diff_eq!(b.re, -49.0 / 576.0, epsilon = 1e-15);
        let swapped = analytic_bracket(&s, c(3.0), c(2.0), &WeightFn::Power(0)).unwrap();
        assert_eq!(swapped.re, -b.re);
        let bz = analytic_bracket(&s, c(2.0), c(3.0), &WeightFn::Power(1)).unwrap();
        assert_abs_diff_eq!(bz.re, -35.0 / 576.0, epsilon = 1e-15);
    }

    #[test]
    fn restricted_examples() {
        let s = example();
        let b = restricted_bracket(&s, c(2.0), c(3.0), &WeightFn::Power(0)).unwrap();
        assert_abs_diff_eq!(b.re, -7.0 / 576.0, epsilon = 1e-15);
        let swapped = restricted_bracket(&s, c(3.0), c(2.0), &WeightFn::Power(0)).unwrap();
        assert_abs_diff_eq!(swapped.re, -b.re, epsilon = 1e-17);
        let bz = restricted_bracket(&s, c(2.0), c(3.0), &WeightFn::Power(1)).unwrap();
        assert_abs_diff_eq!(bz.re, -5.0 / 576.0, epsilon = 1e-15);
    }

    #[test]
    fn coincident_points_rejected() {
        let s = example();
        assert!(matches!(
            analytic_bracket(&s, c(2.0), c(2.0), &WeightFn::Power(0)),
            Err(Error::CoincidentPoints(_))
        ));
        assert!(matches!(
            restricted_bracket(&s, c(1.0), c(2.0), &WeightFn::Power(0)),
            Err(Error::CoincidentPoints(_))
        ));
    }

    #[test]
    fn residue_at_infinity_by_power() {
        let s = SpectralData::new(vec![-0.5, 0.7, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        for n in 0..3u32 {
            let r = omega_differential(&s, 2.5, -1.5, &WeightFn::Power(n), false).unwrap();
            let inf = r.residue_at(Point::Infinity).unwrap().re;
            if n < 2 {
                assert_abs_diff_eq!(inf, 0.0, epsilon = 1e-14);
            } else {
                assert!(inf.abs() > 1e-3);
            }
        }
    }

    #[test]
    fn zrho_examples() {
        let t = zrho_tensor(WeightFn::Power(0), 2).tensor(&[-1.0, 1.0, 0.5, 0.5]).unwrap();
        assert_eq!(t[(2, 0)], 0.5);
        assert_eq!(t[(2, 3)], 0.25);
        assert_eq!(t[(0, 1)], 0.0);
    }

    #[test]
    fn restricted_zrho_examples() {
        let t = zrho_restricted_tensor(WeightFn::Power(0), 2)
            .tensor(&[-1.0, 1.0, 0.5, 0.5])
            .unwrap();
        assert_eq!(t[(2, 0)], 0.25);
        // sum rho is a Casimir, so on N = 2 the rho-rho entry vanishes
        assert_abs_diff_eq!(t[(2, 3)], 0.0, epsilon = 1e-16);
        let t = zrho_restricted_tensor(WeightFn::Power(2), 2)
            .tensor(&[-1.0, 1.0, 0.5, 0.5])
            .unwrap();
        assert_eq!(t[(0, 1)], 0.0);
    }

    #[test]
    fn coincident_poles_rejected() {
        assert!(matches!(
            zrho_tensor(WeightFn::Power(0), 2).tensor(&[1.0, 1.0, 0.5, 0.5]),
            Err(Error::CoincidentPoles(0, 1))
        ));
    }

    #[test]
    fn dirac_reduction_matches_closed_form() {
        let x = [0.6, 1.1, 2.3, 4.0, 0.1, 0.2, 0.3, 0.4];
        for n in 0..4 {
            let f = WeightFn::Power(n);
            let reduced = dirac_restrict(&zrho_tensor(f.clone(), 4), &phi2(4), &phi1(f.clone(), 4));
            let a = reduced.tensor(&x).unwrap();
            let b = zrho_restricted_tensor(f.clone(), 4).tensor(&x).unwrap();
            assert!((&a - &b).amax() < 1e-12, "f = z^{n}: {}", (a - b).amax());
            assert!(antisymmetry_defect(&b) == 0.0);
            assert!(casimir_residual(&reduced, &phi1(f.clone(), 4), &x).unwrap() < 1e-12);
            assert!(casimir_residual(&reduced, &phi2(4), &x).unwrap() < 1e-12);
        }
    }
}
