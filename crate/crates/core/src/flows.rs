//! Hierarchy vector fields, the closed-form spectral flow and RK4 propagation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::brackets::{pi_cv, Chart};
use crate::error::{Error, Result};
use crate::spectral::{direct_transform, SpectralData};
use crate::tridiag::JacobiMatrix;

/// `H_n = tr L^{n+1} / (n + 1)` from the eigenvalues.
pub fn hamiltonian(j: &JacobiMatrix, n: u32) -> Result<f64> {
    Ok(power_sum(&j.eigen()?.z, n + 1) / (n + 1) as f64)
}

/// `H_n = sum z_k^{n+1} / (n + 1)`.
pub fn hamiltonian_spectral(s: &SpectralData, n: u32) -> f64 {
    power_sum(&s.z, n + 1) / (n + 1) as f64
}

fn power_sum(z: &[f64], m: u32) -> f64 {
    z.iter().map(|x| x.powi(m as i32)).sum()
}

fn matrix_power(l: &DMatrix<f64>, k: u32) -> DMatrix<f64> {
    let mut out = DMatrix::identity(l.nrows(), l.ncols());
    for _ in 0..k {
        out = &out * l;
    }
    out
}

/// `A_k = ((L^k)_upper - (L^k)_lower) / 2`.
pub fn lax_a(j: &JacobiMatrix, k: u32) -> DMatrix<f64> {
    let lk = matrix_power(&j.to_matrix(), k);
    let n = j.n();
    DMatrix::from_fn(n, n, |r, c| {
        if c > r {
            lk[(r, c)] / 2.0
        } else if c < r {
            -lk[(c, r)] / 2.0
        } else {
            0.0
        }
    })
}

/// `(v', c')` read off `[A_k, L]`, which must stay tridiagonal.
pub fn lax_rhs(j: &JacobiMatrix, k: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::InvalidArgument("flow index k must be at least 1".into()));
    }
    let l = j.to_matrix();
    let a = lax_a(j, k);
    let comm = &a * &l - &l * &a;
    let n = j.n();
    let scale = 1.0_f64.max(j.max_abs().powi(k as i32 + 1));
    for r in 0..n {
        for c in 0..n {
            if r.abs_diff(c) >= 2 && comm[(r, c)].abs() > 1e-12 * scale {
                return Err(Error::StructureViolation(r, c, comm[(r, c)]));
            }
        }
    }
    Ok((
        (0..n).map(|i| comm[(i, i)]).collect(),
        (0..n - 1).map(|i| comm[(i, i + 1)]).collect(),
    ))
}

/// Gradient of `H_n` on the `(v, c)` chart: `(L^n)_{ii}` and `2 (L^n)_{i,i+1}`.
pub fn hamiltonian_gradient(j: &JacobiMatrix, n: u32) -> DVector<f64> {
    let ln = matrix_power(&j.to_matrix(), n);
    let size = j.n();
    let mut g = DVector::zeros(2 * size - 1);
    for i in 0..size {
        g[i] = ln[(i, i)];
        if i + 1 < size {
            g[size + i] = 2.0 * ln[(i, i + 1)];
        }
    }
    g
}

/// `{., H_{k-p}}_{pi_p}` on the `(v, c)` chart.
pub fn hamiltonian_field(j: &JacobiMatrix, k: u32, p: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    if p > k.min(2) {
        return Err(Error::InvalidArgument(format!("need p <= min(k, 2), got k = {k}, p = {p}")));
    }
    let x = j.to_vec();
    let t = pi_cv(p as usize, j.n())?.tensor(&x)?;
    let field = t * hamiltonian_gradient(j, k - p);
    let n = j.n();
    Ok((field.rows(0, n).iter().copied().collect(), field.rows(n, n - 1).iter().copied().collect()))
}

/// `rho_n' = (z_n^k - sum_s z_s^k rho_s) rho_n`; the poles are fixed.
pub fn spectral_field(s: &SpectralData, k: u32) -> Vec<f64> {
    let zk: Vec<f64> = s.z.iter().map(|z| z.powi(k as i32)).collect();
    let mean: f64 = zk.iter().zip(&s.rho).map(|(a, r)| a * r).sum();
    zk.iter().zip(&s.rho).map(|(a, r)| (a - mean) * r).collect()
}

/// `rho_n(t) = rho_n e^{z_n^k t} / sum_s rho_s e^{z_s^k t}`, normalized by the largest exponent.
pub fn exact_flow(s: &SpectralData, k: u32, t: f64) -> Result<SpectralData> {
    if let Some((i, r)) = s.rho.iter().enumerate().find(|(_, r)| **r < 0.0) {
        return Err(Error::NotInRatNPrime(format!("rho[{i}] = {r} is negative")));
    }
    if t == 0.0 {
        return Ok(s.clone());
    }
    let expo: Vec<f64> = s.z.iter().map(|z| z.powi(k as i32) * t).collect();
    if expo.iter().any(|e| !e.is_finite()) {
        return Err(Error::OverflowGuard(format!("exponent z^{k} t not finite at t = {t}")));
    }
    let top = s
        .rho
        .iter()
        .zip(&expo)
        .filter(|(r, _)| **r > 0.0)
        .map(|(_, e)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = s.rho.iter().zip(&expo).map(|(r, e)| r * (e - top).exp()).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::OverflowGuard(format!("normalization {total} at t = {t}")));
    }
    Ok(SpectralData {
        z: s.z.clone(),
        rho: w.iter().map(|x| x / total).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMethod {
    ExactSpectral,
    Rk4Lax,
    Rk4Hamiltonian(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub k: u32,
    pub method: FlowMethod,
    pub t_final: f64,
    pub dt: f64,
}

impl FlowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("flow index k must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_final = {} must be non-negative", self.t_final)));
        }
        if let FlowMethod::Rk4Hamiltonian(p) = self.method {
            if p > self.k.min(2) {
                return Err(Error::InvalidArgument(format!("need p <= min(k, 2), got p = {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub chart: Chart,
    pub fields: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub sum_rho_drift: Vec<f64>,
    pub spectrum_drift: Vec<f64>,
}

/// Isospectrality diagnostics: `(|sum rho - reference|, max |z - z_ref|)`.
fn drift(chart: Chart, x: &[f64], reference: &SpectralData) -> Result<(f64, f64)> {
    let s = match chart {
        Chart::ZRHO => SpectralData::from_slice(x)?,
        Chart::CV => direct_transform(&JacobiMatrix::from_slice(x)?)?,
        Chart::QP => {
            let n = x.len() / 2;
            let pt = crate::tridiag::PhasePoint::new(x[..n].to_vec(), x[n..].to_vec())?;
            direct_transform(&crate::tridiag::flaschka(&pt)?)?
        }
    };
    let spec = s
        .z
        .iter()
        .zip(&reference.z)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(((s.q0() - reference.q0()).abs(), spec))
}

fn reference(chart: Chart, x: &[f64]) -> Result<SpectralData> {
    match chart {
        Chart::ZRHO => SpectralData::from_slice(x),
        Chart::CV => direct_transform(&JacobiMatrix::from_slice(x)?),
        Chart::QP => {
            let n = x.len() / 2;
            let pt = crate::tridiag::PhasePoint::new(x[..n].to_vec(), x[n..].to_vec())?;
            direct_transform(&crate::tridiag::flaschka(&pt)?)
        }
    }
}

/// Uniform grid `0, dt, 2 dt, ...` ending exactly at `t_final`.
pub fn time_grid(dt: f64, t_final: f64) -> Vec<f64> {
    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut times: Vec<f64> = (0..steps).map(|i| i as f64 * dt).collect();
    times.push(t_final);
    times
}

pub fn field_names(chart: Chart, n: usize) -> Vec<String> {
    let (a, b, nb) = match chart {
        Chart::QP => ("q", "p", n),
        Chart::CV => ("v", "c", n - 1),
        Chart::ZRHO => ("z", "rho", n),
    };
    (0..n)
        .map(|i| format!("{a}{i}"))
        .chain((0..nb).map(|i| format!("{b}{i}")))
        .collect()
}

/// Classic fourth-order Runge-Kutta on a chart-tagged state, recording drift per step.
pub fn rk4(
    field: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    chart: Chart,
    state: &[f64],
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let n = match chart {
        Chart::CV => (state.len() + 1) / 2,
        _ => state.len() / 2,
    };
    let reference = reference(chart, state)?;
    let times = time_grid(dt, t_final);
    let mut states = Vec::with_capacity(times.len());
    let mut sum_rho_drift = Vec::with_capacity(times.len());
    let mut spectrum_drift = Vec::with_capacity(times.len());
    let mut x = state.to_vec();
    let axpy = |x: &[f64], h: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            let h = t - times[i - 1];
            let k1 = field(&x)?;
            let k2 = field(&axpy(&x, h / 2.0, &k1))?;
            let k3 = field(&axpy(&x, h / 2.0, &k2))?;
            let k4 = field(&axpy(&x, h, &k3))?;
            for j in 0..x.len() {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState(t));
            }
        }
        let (dr, ds) = drift(chart, &x, &reference).map_err(|e| match e {
            Error::InvalidJacobi(_) | Error::InvalidSpectral(_) | Error::ConvergenceFailure(_) => Error::NonFiniteState(t),
            other => other,
        })?;
        states.push(x.clone());
        sum_rho_drift.push(dr);
        spectrum_drift.push(ds);
    }
    Ok(Trajectory {
        chart,
        fields: field_names(chart, n),
        times,
        states,
        sum_rho_drift,
        spectrum_drift,
    })
}

/// Closed-form trajectory sampled on the same grid as [`rk4`].
pub fn exact_trajectory(s: &SpectralData, k: u32, dt: f64, t_final: f64) -> Result<Trajectory> {
    let times = time_grid(dt, t_final);
    let mut states = Vec::with_capacity(times.len());
    let mut sum_rho_drift = Vec::with_capacity(times.len());
    for &t in &times {
        let st = exact_flow(s, k, t)?;
        sum_rho_drift.push((st.q0() - s.q0()).abs());
        states.push(st.to_vec());
    }
    Ok(Trajectory {
        chart: Chart::ZRHO,
        fields: field_names(Chart::ZRHO, s.n()),
        spectrum_drift: vec![0.0; times.len()],
        times,
        states,
        sum_rho_drift,
    })
}

/// Runs `spec` from Jacobi data (`Rk4Lax`, `Rk4Hamiltonian`) or spectral data (`ExactSpectral`).
pub fn evolve_jacobi(j: &JacobiMatrix, spec: &FlowSpec) -> Result<Trajectory> {
    spec.validate()?;
    let k = spec.k;
    match spec.method {
        FlowMethod::Rk4Lax => rk4(
            &|x| {
                let (v, c) = lax_rhs(&JacobiMatrix::from_slice(x)?, k)?;
                Ok(v.into_iter().chain(c).collect())
            },
            Chart::CV,
            &j.to_vec(),
            spec.dt,
            spec.t_final,
        ),
        FlowMethod::Rk4Hamiltonian(p) => rk4(
            &|x| {
                let (v, c) = hamiltonian_field(&JacobiMatrix::from_slice(x)?, k, p)?;
                Ok(v.into_iter().chain(c).collect())
            },
            Chart::CV,
            &j.to_vec(),
            spec.dt,
            spec.t_final,
        ),
        FlowMethod::ExactSpectral => exact_trajectory(&direct_transform(j)?, k, spec.dt, spec.t_final),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn jm(v: &[f64], c: &[f64]) -> JacobiMatrix {
        JacobiMatrix::new(v.to_vec(), c.to_vec()).unwrap()
    }

    fn example() -> SpectralData {
        SpectralData::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        assert_abs_diff_eq!(hamiltonian(&jm(&[0.0, 0.0], &[1.0]), 1).unwrap(), 1.0, epsilon = 1e-14);
        let j = jm(&[0.4, -1.1, 2.0], &[0.3, 0.9]);
        assert_abs_diff_eq!(hamiltonian(&j, 0).unwrap(), 1.3, epsilon = 1e-14);
        assert_eq!(hamiltonian_spectral(&example(), 2), 0.0);
    }

    #[test]
    fn lax_a_examples() {
        let a = lax_a(&jm(&[0.0, 0.0], &[1.0]), 1);
        assert_eq!(a[(0, 1)], 0.5);
        assert_eq!(a[(1, 0)], -0.5);
        let j = jm(&[0.2, -0.7, 1.1, 0.4], &[0.5, 1.2, 0.8]);
        for k in 1..4 {
            let a = lax_a(&j, k);
            assert_eq!((&a + a.transpose()).amax(), 0.0);
        }
    }

    #[test]
    fn lax_rhs_examples() {
        let (v, c) = lax_rhs(&jm(&[0.0, 0.0], &[1.0]), 1).unwrap();
        assert_eq!(v, vec![1.0, -1.0]);
        assert_eq!(c, vec![0.0]);
        let (v, c) = lax_rhs(&jm(&[0.8], &[]), 1).unwrap();
        assert_eq!(v, vec![0.0]);
        assert!(c.is_empty());
        // k = 2 on N = 3 agrees with the canonical Hamiltonian field of H_2
        let j = jm(&[0.0, 0.0, 0.0], &[1.0, 1.0]);
        let lax = lax_rhs(&j, 2).unwrap();
        let ham = hamiltonian_field(&j, 2, 0).unwrap();
        for (a, b) in lax.0.iter().chain(&lax.1).zip(ham.0.iter().chain(&ham.1)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn first_flow_equations() {
        // v_k' = c_k^2 - c_{k-1}^2, c_k' = c_k (v_{k+1} - v_k)/2
        let j = jm(&[0.3, -0.9, 1.4], &[0.6, 1.3]);
        let (v, c) = hamiltonian_field(&j, 1, 0).unwrap();
        let (vv, cc) = (j.v(), j.c());
        assert_abs_diff_eq!(v[0], cc[0] * cc[0], epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], cc[1] * cc[1] - cc[0] * cc[0], epsilon = 1e-14);
        assert_abs_diff_eq!(v[2], -cc[1] * cc[1], epsilon = 1e-14);
        assert_abs_diff_eq!(c[0], cc[0] * (vv[1] - vv[0]) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[1], cc[1] * (vv[2] - vv[1]) / 2.0, epsilon = 1e-14);
        let (v1, c1) = hamiltonian_field(&j, 1, 1).unwrap();
        for (a, b) in v.iter().chain(&c).zip(v1.iter().chain(&c1)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectral_field_examples() {
        assert_eq!(spectral_field(&example(), 1), vec![-0.5, 0.5]);
        let s = SpectralData::new(vec![-1.0, 0.5, 2.0], vec![1.0, 0.0, 0.0]).unwrap();
        assert!(spectral_field(&s, 2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn exact_flow_examples() {
        let r = exact_flow(&example(), 1, 2f64.ln()).unwrap();
        assert_abs_diff_eq!(r.rho[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rho[1], 0.8, epsilon = 1e-15);
        assert_eq!(exact_flow(&example(), 1, 0.0).unwrap(), example());
        let r = exact_flow(&example(), 1, 50.0).unwrap();
        assert_abs_diff_eq!(r.rho[1], 1.0, epsilon = 1e-10);
        // no overflow far beyond exp range
        let r = exact_flow(&example(), 3, 1e4).unwrap();
        assert_eq!(r.rho, vec![0.0, 1.0]);
    }

    #[test]
    fn rk4_examples() {
        let traj = rk4(&|x| Ok(vec![0.0; x.len()]), Chart::ZRHO, &example().to_vec(), 0.1, 1.0).unwrap();
        assert!(traj.states.iter().all(|s| s == &example().to_vec()));

        let s = example();
        let traj = rk4(
            &|x| {
                let st = SpectralData::from_slice(x)?;
                Ok(vec![0.0; st.n()].into_iter().chain(spectral_field(&st, 1)).collect())
            },
            Chart::ZRHO,
            &s.to_vec(),
            1e-3,
            1.0,
        )
        .unwrap();
        let exact = exact_flow(&s, 1, 1.0).unwrap();
        let last = traj.states.last().unwrap();
        for (a, b) in last[2..].iter().zip(&exact.rho) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }

        let traj = evolve_jacobi(
            &jm(&[0.0, 0.0], &[1.0]),
            &FlowSpec {
                k: 1,
                method: FlowMethod::Rk4Lax,
                t_final: 1.0,
                dt: 1e-3,
            },
        )
        .unwrap();
        assert!(traj.spectrum_drift.iter().all(|&d| d <= 1e-9));
        assert_eq!(traj.times.len(), 1001);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
    }

    #[test]
    fn zero_time_is_single_row() {
        assert_eq!(time_grid(0.1, 0.0), vec![0.0]);
        let t = exact_trajectory(&example(), 1, 0.1, 0.0).unwrap();
        assert_eq!(t.states, vec![example().to_vec()]);
    }
}
