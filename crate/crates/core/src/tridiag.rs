//! Jacobi matrices, the Flaschka map and the three-term recurrence.

use nalgebra::DMatrix;
use crate::error::{Error, Result};

const QL_MAX_SWEEPS: usize = 60;

/// Positions and momenta of the N-particle lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidPhasePoint("N must be at least 1".into()));
        }
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                got: p.len(),
            });
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPhasePoint("non-finite entry".into()));
        }
        Ok(Self { q, p })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Symmetric tridiagonal matrix with diagonal `v` and positive off-diagonal `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    v: Vec<f64>,
    c: Vec<f64>,
}

/// Eigenvalues in ascending order and the first component of each unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub z: Vec<f64>,
    pub first_components: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(v: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidJacobi("N must be at least 1".into()));
        }
        if c.len() + 1 != v.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len() - 1,
                got: c.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidJacobi("non-finite diagonal entry".into()));
        }
        if let Some((k, &ck)) = c.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidJacobi(format!("c[{k}] = {ck} is not positive")));
        }
        Ok(Self { v, c })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// The closure coefficient `c_{N-1} = prod c_k^{-1}`.
    pub fn c_closure(&self) -> f64 {
        self.c.iter().map(|c| 1.0 / c).product()
    }

    /// Largest entry magnitude over `v` and `c`.
    pub fn max_abs(&self) -> f64 {
        self.v.iter().chain(&self.c).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Flattened `(v_0..v_{N-1}, c_0..c_{N-2})`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.v.iter().chain(&self.c).copied().collect()
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() % 2 == 0 {
            return Err(Error::InvalidJacobi(format!("length {} is not 2N-1", x.len())));
        }
        let n = (x.len() + 1) / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.v));
        for (k, &c) in self.c.iter().enumerate() {
            m[(k, k + 1)] = c;
            m[(k + 1, k)] = c;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    /// Implicit QL with Wilkinson shifts, accumulating only the first row of
    /// the eigenvector matrix.
    pub fn eigen(&self) -> Result<Eigen> {
        let n = self.n();
        let mut d = self.v.clone();
        let mut e: Vec<f64> = self.c.iter().copied().chain(std::iter::once(0.0)).collect();
        let mut row = vec![0.0; n];
        row[0] = 1.0;

        for l in 0..n {
            let mut sweeps = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() + dd == dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                sweeps += 1;
                if sweeps > QL_MAX_SWEEPS {
                    return Err(Error::ConvergenceFailure(sweeps - 1));
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    let t = row[i + 1];
                    row[i + 1] = s * row[i] + c * t;
                    row[i] = c * row[i] - s * t;
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        Ok(Eigen {
            z: order.iter().map(|&i| d[i]).collect(),
            first_components: order.iter().map(|&i| row[i].abs()).collect(),
        })
    }

    /// `det(L_{[k,p]} - z I)` by the three-term determinant recurrence; 1 when `k > p`.
    pub fn truncated_charpoly(&self, k: usize, p: usize, z: f64) -> f64 {
        if k > p {
            return 1.0;
        }
        let mut prev = 1.0;
        let mut cur = self.v[k] - z;
        for j in k + 1..=p {
            let next = (self.v[j] - z) * cur - self.c[j - 1] * self.c[j - 1] * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// `(P_0..P_N, Q_0..Q_N)` at `z`, closing the recurrence with `c_{N-1} = prod c_k^{-1}`.
    pub fn pq_polynomials(&self, z: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let closure = self.c_closure();
        let coef = |k: usize| if k + 1 < n { self.c[k] } else { closure };
        let mut p = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        p[0] = 1.0;
        q[1] = 1.0 / coef(0);
        p[1] = (z - self.v[0]) / coef(0);
        for k in 1..n {
            p[k + 1] = ((z - self.v[k]) * p[k] - coef(k - 1) * p[k - 1]) / coef(k);
            q[k + 1] = ((z - self.v[k]) * q[k] - coef(k - 1) * q[k - 1]) / coef(k);
        }
        (p, q)
    }

    /// `-Q_N(z)/P_N(z)`.
    pub fn weyl_ratio(&self, z: f64) -> f64 {
        let (p, q) = self.pq_polynomials(z);
        -q[self.n()] / p[self.n()]
    }

    /// `tr L^m` from the eigenvalues, for `m >= -1`.
    pub fn trace_power(&self, m: i32) -> Result<f64> {
        if m < -1 {
            return Err(Error::InvalidArgument(format!("power {m} < -1")));
        }
        if m == 0 {
            return Ok(self.n() as f64);
        }
        let z = self.eigen()?.z;
        if m == -1 {
            if let Some(&zk) = z.iter().find(|x| x.abs() <= 1e-12) {
                return Err(Error::SingularMatrix(zk));
            }
        }
        Ok(z.iter().map(|x| x.powi(m)).sum())
    }
}

/// `v_k = -p_k`, `c_k = exp((q_k - q_{k+1})/2)`.
pub fn flaschka(pt: &PhasePoint) -> Result<JacobiMatrix> {
    let v = pt.p.iter().map(|p| -p).collect();
    let c = pt.q.windows(2).map(|w| ((w[0] - w[1]) / 2.0).exp()).collect();
    JacobiMatrix::new(v, c)
}

/// Inverse of the Flaschka map with the gauge `q_0 = q0`.
pub fn unflaschka(j: &JacobiMatrix, q0: f64) -> PhasePoint {
    let mut q = Vec::with_capacity(j.n());
    q.push(q0);
    for (k, &c) in j.c.iter().enumerate() {
        q.push(q[k] - 2.0 * c.ln());
    }
    PhasePoint {
        q,
        p: j.v.iter().map(|v| -v).collect(),
    }
}
