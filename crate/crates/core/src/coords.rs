//! Darboux charts on spectral data and their canonicity check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::brackets::{fd_jacobian, pushforward_with_jacobian, PoissonStructure, WeightFn};
use crate::error::{Error, Result};
use crate::spectral::{gammas, SpectralData};

/// `F` with `F' = 1/f`: `z` for `f = 1`, `ln z` for `f = z`, `-1/(n z^n)` for `f = z^{n+1}`.
/// Powers beyond the constant are defined on `z > 0`.
#[derive(Debug, Clone)]
pub struct AntiderivativeF {
    f: WeightFn,
}

impl AntiderivativeF {
    pub fn new(f: WeightFn) -> Self {
        Self { f }
    }

    pub fn weight(&self) -> &WeightFn {
        &self.f
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        match &self.f {
            WeightFn::Power(0) => Ok(z),
            WeightFn::Power(_) if z <= 0.0 => Err(Error::DomainViolation(z)),
            WeightFn::Power(1) => Ok(z.ln()),
            WeightFn::Power(m) => {
                let n = (*m - 1) as i32;
                Ok(-1.0 / (n as f64 * z.powi(n)))
            }
            WeightFn::Custom {
                inv_antiderivative: Some(anti),
                ..
            } => Ok(anti(z)),
            WeightFn::Custom { label, .. } => Err(Error::InvalidArgument(format!(
                "weight {label} has no antiderivative of 1/f"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChartId {
    Zq,
    Iy,
    ActionAngle,
    GammaPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartValues {
    pub chart: ChartId,
    pub values: Vec<f64>,
    pub casimirs: Option<(f64, f64)>,
}

/// `(z_k, q(z_k))` with `q(z_k) = p'(z_k) rho_k`.
pub fn zq_chart(s: &SpectralData) -> Result<ChartValues> {
    s.check_distinct()?;
    Ok(ChartValues {
        chart: ChartId::Zq,
        values: s.z.iter().copied().chain(s.q_at_poles()).collect(),
        casimirs: None,
    })
}

/// `I_k = F(z_k)`.
pub fn action_coords(s: &SpectralData, f: &WeightFn) -> Result<Vec<f64>> {
    let anti = AntiderivativeF::new(f.clone());
    s.z.iter().map(|&z| anti.eval(z)).collect()
}

/// `theta_k = ln((-1)^k q(z_k) / q(z_0))`, `k = 1..N-1`.
pub fn angle_coords(s: &SpectralData) -> Result<Vec<f64>> {
    s.check_distinct()?;
    let q = s.q_at_poles();
    (1..s.n())
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let arg = sign * q[k] / q[0];
            if arg > 0.0 {
                Ok(arg.ln())
            } else {
                Err(Error::SignViolation(format!("theta_{k} argument {arg}")))
            }
        })
        .collect()
}

/// `(Phi1, Phi2) = (sum F(z_k), log q0)`.
pub fn casimir_values(s: &SpectralData, f: &WeightFn) -> Result<(f64, f64)> {
    let phi1 = action_coords(s, f)?.iter().sum();
    let q0 = s.q0();
    if q0 <= 0.0 {
        return Err(Error::SignViolation(format!("q0 = {q0}")));
    }
    Ok((phi1, q0.ln()))
}

/// `(gamma_1..gamma_{N-1}, pi_1..pi_{N-1})` with `pi_k = log((-1)^{N+k} p(gamma_k))`, plus `(Phi1, Phi2)`.
pub fn gamma_pi_chart(s: &SpectralData, f: &WeightFn) -> Result<ChartValues> {
    let (gamma, _) = gammas(s)?;
    let n = s.n();
    let mut pis = Vec::with_capacity(n - 1);
    for (j, &g) in gamma.iter().enumerate() {
        let k = j + 1;
        let sign = if (n + k) % 2 == 0 { 1.0 } else { -1.0 };
        let arg = sign * s.z.iter().map(|z| g - z).product::<f64>();
        if !(arg > 0.0) {
            return Err(Error::SignViolation(format!("pi_{k} argument {arg}")));
        }
        pis.push(arg.ln());
    }
    Ok(ChartValues {
        chart: ChartId::GammaPi,
        values: gamma.into_iter().chain(pis).collect(),
        casimirs: Some(casimir_values(s, f)?),
    })
}

/// A coordinate change out of the `(z, rho)` chart with an analytic Jacobian
/// and the bracket it is expected to produce.
pub trait ChartMap: Send + Sync {
    fn id(&self) -> ChartId;
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>>;
    fn expected(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

fn state(x: &[f64]) -> Result<SpectralData> {
    let s = SpectralData::from_slice(x)?;
    s.check_distinct()?;
    Ok(s)
}

/// Rows of `d ln|q(z_k)|` in the `(z, rho)` chart.
fn log_q_rows(s: &SpectralData) -> DMatrix<f64> {
    let n = s.n();
    let mut j = DMatrix::zeros(n, 2 * n);
    for k in 0..n {
        for m in 0..n {
            if m != k {
                let d = 1.0 / (s.z[k] - s.z[m]);
                j[(k, k)] += d;
                j[(k, m)] = -d;
            }
        }
        j[(k, n + k)] = 1.0 / s.rho[k];
    }
    j
}

fn f_weights(s: &SpectralData, f: &WeightFn) -> Result<Vec<f64>> {
    s.z.iter()
        .map(|&z| {
            let w = f.eval(z);
            if w == 0.0 {
                Err(Error::DomainViolation(z))
            } else {
                Ok(w)
            }
        })
        .collect()
}

fn canonical_pair(dim: usize, pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(dim, dim);
    for &(a, b) in pairs {
        t[(a, b)] = 1.0;
        t[(b, a)] = -1.0;
    }
    t
}

/// `(z, q(z_k))`: expects `{q(z_k), z_n} = f(z_n) q(z_k) delta` and all else zero.
pub struct ZqChart {
    pub f: WeightFn,
}

impl ChartMap for ZqChart {
    fn id(&self) -> ChartId {
        ChartId::Zq
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(zq_chart(&state(x)?)?.values)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = state(x)?;
        let n = s.n();
        let q = s.q_at_poles();
        let logs = log_q_rows(&s);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(k, k)] = 1.0;
            for c in 0..2 * n {
                j[(n + k, c)] = q[k] * logs[(k, c)];
            }
        }
        Ok(j)
    }

    fn expected(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = state(x)?;
        let n = s.n();
        let q = s.q_at_poles();
        let mut t = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            let val = self.f.eval(s.z[k]) * q[k];
            t[(n + k, k)] = val;
            t[(k, n + k)] = -val;
        }
        Ok(t)
    }
}

/// `(I_0..I_{N-1}, y_0..y_{N-1})` with `y_k = ln|q(z_k)|`: expects `{y_k, I_n} = delta`.
pub struct IyChart {
    pub f: WeightFn,
}

impl ChartMap for IyChart {
    fn id(&self) -> ChartId {
        ChartId::Iy
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = state(x)?;
        let mut out = action_coords(&s, &self.f)?;
        out.extend(s.q_at_poles().iter().map(|q| q.abs().ln()));
        Ok(out)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = state(x)?;
        let n = s.n();
        let w = f_weights(&s, &self.f)?;
        let logs = log_q_rows(&s);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(k, k)] = 1.0 / w[k];
        }
        j.rows_mut(n, n).copy_from(&logs);
        Ok(j)
    }

    fn expected(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len() / 2;
        Ok(canonical_pair(2 * n, &(0..n).map(|k| (n + k, k)).collect::<Vec<_>>()))
    }
}

/// `(I_1..I_{N-1}, theta_1..theta_{N-1}, Phi1, Phi2)`: expects `{theta_k, I_n} = delta`
/// with the Casimirs decoupled.
pub struct ActionAngleChart {
    pub f: WeightFn,
}

impl ChartMap for ActionAngleChart {
    fn id(&self) -> ChartId {
        ChartId::ActionAngle
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = state(x)?;
        let mut out: Vec<f64> = action_coords(&s, &self.f)?[1..].to_vec();
        out.extend(angle_coords(&s)?);
        let (p1, p2) = casimir_values(&s, &self.f)?;
        out.push(p1);
        out.push(p2);
        Ok(out)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = state(x)?;
        let n = s.n();
        let w = f_weights(&s, &self.f)?;
        let logs = log_q_rows(&s);
        let q0 = s.q0();
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 1..n {
            j[(k - 1, k)] = 1.0 / w[k];
            for c in 0..2 * n {
                j[(n - 1 + k - 1, c)] = logs[(k, c)] - logs[(0, c)];
            }
        }
        for k in 0..n {
            j[(2 * n - 2, k)] = 1.0 / w[k];
            j[(2 * n - 1, n + k)] = 1.0 / q0;
        }
        Ok(j)
    }

    fn expected(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len() / 2;
        Ok(canonical_pair(
            2 * n,
            &(0..n - 1).map(|k| (n - 1 + k, k)).collect::<Vec<_>>(),
        ))
    }
}

/// `(gamma_1..gamma_{N-1}, pi_1..pi_{N-1}, Phi1, Phi2)`: expects `{gamma_k, pi_n} = delta`
/// and `{Phi1, Phi2} = 1`.
pub struct GammaPiChart {
    pub f: WeightFn,
}

impl ChartMap for GammaPiChart {
    fn id(&self) -> ChartId {
        ChartId::GammaPi
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let cv = gamma_pi_chart(&state(x)?, &self.f)?;
        let (p1, p2) = cv.casimirs.expect("gamma-pi chart carries Casimirs");
        let mut out = cv.values;
        out.push(p1);
        out.push(p2);
        Ok(out)
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = state(x)?;
        let n = s.n();
        let (gamma, _) = gammas(&s)?;
        let w = f_weights(&s, &self.f)?;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for (a, &g) in gamma.iter().enumerate() {
            // gamma is a zero of sum rho_k / (gamma - z_k)
            let dg: f64 = -s.z.iter().zip(&s.rho).map(|(z, r)| r / ((g - z) * (g - z))).sum::<f64>();
            let inv_sum: f64 = s.z.iter().map(|z| 1.0 / (g - z)).sum();
            for k in 0..n {
                let d = g - s.z[k];
                let dgz = -(s.rho[k] / (d * d)) / dg;
                let dgr = -(1.0 / d) / dg;
                j[(a, k)] = dgz;
                j[(a, n + k)] = dgr;
                j[(n - 1 + a, k)] = inv_sum * dgz - 1.0 / d;
                j[(n - 1 + a, n + k)] = inv_sum * dgr;
            }
        }
        let q0 = s.q0();
        for k in 0..n {
            j[(2 * n - 2, k)] = 1.0 / w[k];
            j[(2 * n - 1, n + k)] = 1.0 / q0;
        }
        Ok(j)
    }

    fn expected(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len() / 2;
        let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|k| (k, n - 1 + k)).collect();
        pairs.push((2 * n - 2, 2 * n - 1));
        Ok(canonical_pair(2 * n, &pairs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalReport {
    pub chart: ChartId,
    pub structure: String,
    /// Largest `|J T J^T - expected|` entry with the analytic Jacobian.
    pub max_deviation: f64,
    /// The same against the negated pattern, to expose an orientation flip.
    pub reversed_deviation: f64,
    /// Largest entry deviation when the Jacobian is taken by central differences.
    pub fd_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Pushes `structure` through `chart` at `x` and compares with the chart's canonical pattern.
pub fn verify_canonical(chart: &dyn ChartMap, structure: &PoissonStructure, x: &[f64], tol: f64) -> Result<CanonicalReport> {
    let expected = chart.expected(x)?;
    let pushed = pushforward_with_jacobian(structure, &chart.jacobian(x)?, x)?;
    let fd = pushforward_with_jacobian(structure, &fd_jacobian(&|y| chart.eval(y), x)?, x)?;
    let max_deviation = (&pushed - &expected).amax();
    Ok(CanonicalReport {
        chart: chart.id(),
        structure: structure.label().to_string(),
        max_deviation,
        reversed_deviation: (&pushed + &expected).amax(),
        fd_deviation: (&fd - &expected).amax(),
        tolerance: tol,
        passed: max_deviation <= tol,
    })
}
