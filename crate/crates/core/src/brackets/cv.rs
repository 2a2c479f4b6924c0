//! Closed-form brackets in the canonical and Flaschka charts.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Chart, PoissonStructure, ScalarFn};
use crate::error::{Error, Result};
use crate::tridiag::JacobiMatrix;

/// Canonical bracket `{q_k, p_k} = 1`.
pub fn pi0_qp(n: usize) -> PoissonStructure {
    PoissonStructure::new(
        Chart::QP,
        n,
        "pi0 (q, p)",
        None,
        false,
        Arc::new(move |_x| {
            let mut t = DMatrix::zeros(2 * n, 2 * n);
            for k in 0..n {
                t[(k, n + k)] = 1.0;
                t[(n + k, k)] = -1.0;
            }
            Ok(t)
        }),
    )
}

struct CvTensor {
    n: usize,
    t: DMatrix<f64>,
}

impl CvTensor {
    fn new(n: usize) -> Self {
        Self {
            n,
            t: DMatrix::zeros(2 * n - 1, 2 * n - 1),
        }
    }

    fn v(&self, k: usize) -> usize {
        k
    }

    fn c(&self, k: usize) -> usize {
        self.n + k
    }

    fn set(&mut self, i: usize, j: usize, val: f64) {
        self.t[(i, j)] += val;
        self.t[(j, i)] -= val;
    }
}

fn split(x: &[f64]) -> (&[f64], &[f64]) {
    let n = (x.len() + 1) / 2;
    (&x[..n], &x[n..])
}

fn cv_structure(n: usize, label: &str, fill: fn(&mut CvTensor, &[f64], &[f64])) -> PoissonStructure {
    PoissonStructure::new(
        Chart::CV,
        n,
        label,
        None,
        false,
        Arc::new(move |x| {
            let (v, c) = split(x);
            let mut t = CvTensor::new(n);
            fill(&mut t, v, c);
            Ok(t.t)
        }),
    )
}

/// `{c_k, v_k} = -c_k/2`, `{c_k, v_{k+1}} = c_k/2`.
pub fn pi0_cv(n: usize) -> PoissonStructure {
    cv_structure(n, "pi0 (v, c)", |t, _v, c| {
        for k in 0..c.len() {
            t.set(t.c(k), t.v(k), -c[k] / 2.0);
            t.set(t.c(k), t.v(k + 1), c[k] / 2.0);
        }
    })
}

/// The quadratic bracket, normalized so that `{., H_0}` generates the first flow.
pub fn pi1_cv(n: usize) -> PoissonStructure {
    cv_structure(n, "pi1 (v, c)", |t, v, c| {
        for k in 0..c.len() {
            if k + 1 < c.len() {
                t.set(t.c(k), t.c(k + 1), c[k] * c[k + 1] / 4.0);
            }
            t.set(t.c(k), t.v(k), -c[k] * v[k] / 2.0);
            t.set(t.c(k), t.v(k + 1), c[k] * v[k + 1] / 2.0);
            t.set(t.v(k), t.v(k + 1), c[k] * c[k]);
        }
    })
}

/// The cubic bracket, normalized so that `{., H_{k-2}}` generates the k-th flow.
pub fn pi2_cv(n: usize) -> PoissonStructure {
    cv_structure(n, "pi2 (v, c)", |t, v, c| {
        for k in 0..c.len() {
            let ck = c[k];
            if k + 1 < c.len() {
                let c1 = c[k + 1];
                t.set(t.c(k), t.c(k + 1), ck * c1 * v[k + 1] / 2.0);
                t.set(t.c(k + 1), t.v(k), -ck * ck * c1 / 2.0);
                t.set(t.c(k), t.v(k + 2), ck * c1 * c1 / 2.0);
            }
            t.set(t.c(k), t.v(k), -(ck * v[k] * v[k] + ck.powi(3)) / 2.0);
            t.set(t.c(k), t.v(k + 1), (ck * v[k + 1] * v[k + 1] + ck.powi(3)) / 2.0);
            t.set(t.v(k), t.v(k + 1), ck * ck * (v[k] + v[k + 1]));
        }
    })
}

pub fn pi_cv(p: usize, n: usize) -> Result<PoissonStructure> {
    match p {
        0 => Ok(pi0_cv(n)),
        1 => Ok(pi1_cv(n)),
        2 => Ok(pi2_cv(n)),
        _ => Err(Error::InvalidArgument(format!("no closed form for pi_{p}"))),
    }
}

/// `tr L` on the `(v, c)` chart.
pub fn trace_gradient(n: usize) -> ScalarFn {
    ScalarFn::new(
        "tr L",
        |x| Ok(split(x).0.iter().sum()),
        move |x| {
            let mut g = DVector::zeros(x.len());
            g.rows_mut(0, n).fill(1.0);
            Ok(g)
        },
    )
}

/// `det L` with the analytic gradient from truncated determinants.
pub fn det_gradient() -> ScalarFn {
    ScalarFn::new(
        "det L",
        |x| {
            let j = JacobiMatrix::from_slice(x)?;
            Ok(j.truncated_charpoly(0, j.n() - 1, 0.0))
        },
        |x| {
            let j = JacobiMatrix::from_slice(x)?;
            let n = j.n();
            let d = |k: isize, p: isize| -> f64 {
                if k > p || p < 0 || k >= n as isize {
                    1.0
                } else {
                    j.truncated_charpoly(k as usize, p as usize, 0.0)
                }
            };
            let mut g = DVector::zeros(x.len());
            for i in 0..n {
                let i = i as isize;
                g[i as usize] = d(0, i - 1) * d(i + 1, n as isize - 1);
            }
            for (i, &c) in j.c().iter().enumerate() {
                let ii = i as isize;
                g[n + i] = -2.0 * c * d(0, ii - 1) * d(ii + 2, n as isize - 1);
            }
            Ok(g)
        },
    )
}

/// `tr L^{-1}` with gradient `-(L^{-2})_{ii}` and `-2 (L^{-2})_{i,i+1}`.
pub fn trace_inverse_gradient() -> ScalarFn {
    fn inverse(x: &[f64]) -> Result<DMatrix<f64>> {
        let j = JacobiMatrix::from_slice(x)?;
        j.to_matrix()
            .try_inverse()
            .ok_or(Error::SingularMatrix(0.0))
    }
    ScalarFn::new(
        "tr L^-1",
        |x| Ok(inverse(x)?.trace()),
        |x| {
            let inv = inverse(x)?;
            let sq = &inv * &inv;
            let n = inv.nrows();
            let mut g = DVector::zeros(x.len());
            for i in 0..n {
                g[i] = -sq[(i, i)];
                if i + 1 < n {
                    g[n + i] = -2.0 * sq[(i, i + 1)];
                }
            }
            Ok(g)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::{casimir_residual, fd_jacobian};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pi0_qp_examples() {
        let t = pi0_qp(2).tensor(&[0.3, 0.1, -1.0, 2.0]).unwrap();
        assert_eq!(t[(0, 2)], 1.0);
        assert_eq!(t[(0, 1)], 0.0);
        assert_eq!(t[(0, 3)], 0.0);
    }

    #[test]
    fn pi0_cv_examples() {
        // state (v0, v1, c0)
        let t = pi0_cv(2).tensor(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(t[(2, 0)], -0.5);
        assert_eq!(t[(0, 1)], 0.0);
        let t = pi0_cv(2).tensor(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(t[(2, 1)], 1.0);
    }

    #[test]
    fn pi1_cv_examples() {
        // half of the printed list: -c0 v0 / 2 and c0 c1 / 4
        let t = pi1_cv(3).tensor(&[2.0, 0.0, 0.0, 1.0, 3.0]).unwrap();
        assert_eq!(t[(3, 0)], -1.0);
        assert_eq!(t[(3, 4)], 0.75);
        assert_eq!(t[(3, 2)], 0.0);
    }

    #[test]
    fn pi2_cv_examples() {
        let t = pi2_cv(2).tensor(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(t[(2, 0)], -0.5);
        let t = pi2_cv(2).tensor(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t[(0, 1)], 2.0);
        let t = pi2_cv(3).tensor(&[0.0, 0.0, 0.0, 2.0, 1.0]).unwrap();
        assert_eq!(t[(3, 4)], 0.0);
    }

    #[test]
    fn trace_is_pi0_casimir() {
        let x = [0.3, -1.2, 0.8, 0.7, 1.9];
        assert_eq!(casimir_residual(&pi0_cv(3), &trace_gradient(3), &x).unwrap(), 0.0);
    }

    #[test]
    fn analytic_gradients_match_fd() {
        let x = [0.3, -1.2, 0.8, 1.7, 0.7, 1.9, 0.4];
        for phi in [det_gradient(), trace_inverse_gradient()] {
            let g = phi.gradient(&x).unwrap();
            let fd = fd_jacobian(&|y| Ok(vec![phi.value(y)?]), &x).unwrap();
            for i in 0..x.len() {
                assert_abs_diff_eq!(g[i], fd[(0, i)], epsilon = 1e-8 * (1.0 + g[i].abs()));
            }
        }
    }
}
