//! Poisson structures as antisymmetric tensor fields on coordinate charts,
//! and the numerical machinery to test them.

mod analytic;
mod cv;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analytic::{
    analytic_bracket, analytic_bracket_terms, closed_form, omega_differential, phi1, phi2,
    restricted_bracket, restricted_bracket_terms, weyl_gradient, zrho_restricted_tensor,
    zrho_tensor,
};
pub use cv::{det_gradient, pi0_cv, pi0_qp, pi1_cv, pi2_cv, pi_cv, trace_gradient, trace_inverse_gradient};

/// Coordinate chart tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// `(q_0..q_{N-1}, p_0..p_{N-1})`
    QP,
    /// `(v_0..v_{N-1}, c_0..c_{N-2})`
    CV,
    /// `(z_0..z_{N-1}, rho_0..rho_{N-1})`
    ZRHO,
}

impl Chart {
    pub fn dimension(self, n: usize) -> usize {
        match self {
            Chart::QP | Chart::ZRHO => 2 * n,
            Chart::CV => 2 * n - 1,
        }
    }
}

type ComplexFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The weight `f` of the analytic brackets.
#[derive(Clone)]
pub enum WeightFn {
    /// `f(z) = z^n`
    Power(u32),
    /// A user-supplied entire function with an antiderivative of `1/f`.
    Custom {
        label: String,
        f: ComplexFn,
        inv_antiderivative: Option<RealFn>,
    },
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "WeightFn({})", self.label())
    }
}

impl WeightFn {
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        inv_antiderivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        WeightFn::Custom {
            label: label.into(),
            f: Arc::new(f),
            inv_antiderivative,
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightFn::Power(n) => format!("POWER {n}"),
            WeightFn::Custom { label, .. } => label.clone(),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            WeightFn::Power(n) => z.powi(*n as i32),
            WeightFn::Custom { f, .. } => f(Complex64::new(z, 0.0)).re,
        }
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        match self {
            WeightFn::Power(n) => z.powu(*n),
            WeightFn::Custom { f, .. } => f(z),
        }
    }
}

pub type TensorFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

/// A chart-tagged antisymmetric tensor field.
#[derive(Clone)]
pub struct PoissonStructure {
    chart: Chart,
    n: usize,
    label: String,
    weight: Option<WeightFn>,
    restricted: bool,
    tensor: TensorFn,
}

impl fmt::Debug for PoissonStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonStructure")
            .field("chart", &self.chart)
            .field("n", &self.n)
            .field("label", &self.label)
            .field("weight", &self.weight)
            .field("restricted", &self.restricted)
            .finish()
    }
}

impl PoissonStructure {
    pub fn new(
        chart: Chart,
        n: usize,
        label: impl Into<String>,
        weight: Option<WeightFn>,
        restricted: bool,
        tensor: TensorFn,
    ) -> Self {
        Self {
            chart,
            n,
            label: label.into(),
            weight,
            restricted,
            tensor,
        }
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.chart.dimension(self.n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weight(&self) -> Option<&WeightFn> {
        self.weight.as_ref()
    }

    pub fn restricted(&self) -> bool {
        self.restricted
    }

    pub fn tensor(&self, state: &[f64]) -> Result<DMatrix<f64>> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.len(),
            });
        }
        (self.tensor)(state)
    }

    /// `{F, G}` from the gradients of `F` and `G`.
    pub fn bracket(&self, state: &[f64], df: &DVector<f64>, dg: &DVector<f64>) -> Result<f64> {
        Ok(df.dot(&(self.tensor(state)? * dg)))
    }

    /// Same structure with `{x_0, x_1}` replaced by `x_0 + exp(x_0)`; a Jacobi-identity negative control.
    pub fn corrupted(&self) -> PoissonStructure {
        let inner = self.tensor.clone();
        PoissonStructure {
            label: format!("{} (corrupted)", self.label),
            tensor: Arc::new(move |x| {
                let mut t = inner(x)?;
                // state dependent, so constant tensors are broken too
                t[(0, 1)] = x[0] + x[0].exp();
                t[(1, 0)] = -x[0] - x[0].exp();
                Ok(t)
            }),
            ..self.clone()
        }
    }
}

/// A scalar function together with its gradient.
#[derive(Clone)]
pub struct ScalarFn {
    pub label: String,
    value: Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>,
    gradient: Arc<dyn Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync>,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.label)
    }
}

impl ScalarFn {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        (self.gradient)(x)
    }
}

/// Central-difference step `eps^{1/3} (1 + |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.abs())
}

/// Dirac reduction to the level sets of `(phi1, phi2)`:
/// `{F,G}' = {F,G} + {phi2,G}{F,phi1} - {phi1,G}{F,phi2}`, requiring `{phi1, phi2} = 1`.
pub fn dirac_restrict(base: &PoissonStructure, phi1: &ScalarFn, phi2: &ScalarFn) -> PoissonStructure {
    let inner = base.clone();
    let (p1, p2) = (phi1.clone(), phi2.clone());
    PoissonStructure {
        label: format!("{} | Dirac({}, {})", base.label, phi1.label, phi2.label),
        restricted: true,
        tensor: Arc::new(move |x| {
            let t = inner.tensor(x)?;
            let g1 = p1.gradient(x)?;
            let g2 = p2.gradient(x)?;
            let t1 = &t * &g1;
            let t2 = &t * &g2;
            let constraint = g1.dot(&t2);
            if (constraint - 1.0).abs() > 1e-8 {
                return Err(Error::ConstraintBracketNotUnit(constraint));
            }
            // {phi2, G} = -(T g2)^T dG and {F, phi1} = dF^T T g1
            Ok(&t - &t1 * t2.transpose() + &t2 * t1.transpose())
        }),
        ..base.clone()
    }
}

fn fd_tensor_derivatives(p: &PoissonStructure, state: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let mut x = state.to_vec();
    let mut out = Vec::with_capacity(state.len());
    for l in 0..state.len() {
        let h = fd_step(state[l]);
        x[l] = state[l] + h;
        let plus = p.tensor(&x)?;
        x[l] = state[l] - h;
        let minus = p.tensor(&x)?;
        x[l] = state[l];
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

/// Largest cyclic sum `sum_l (d_l T_ij T_lk + d_l T_jk T_li + d_l T_ki T_lj)`
/// over the given index triples (all triples when `None`).
pub fn jacobi_residual(
    p: &PoissonStructure,
    state: &[f64],
    triples: Option<&[(usize, usize, usize)]>,
) -> Result<f64> {
    let t = p.tensor(state)?;
    let dt = fd_tensor_derivatives(p, state)?;
    let d = state.len();
    let term = |i: usize, j: usize, k: usize| -> f64 { (0..d).map(|l| dt[l][(i, j)] * t[(l, k)]).sum() };
    let cyclic = |(i, j, k): (usize, usize, usize)| (term(i, j, k) + term(j, k, i) + term(k, i, j)).abs();
    let worst = match triples {
        Some(list) => list.iter().copied().map(cyclic).fold(0.0, f64::max),
        None => {
            let mut worst = 0.0_f64;
            for i in 0..d {
                for j in i + 1..d {
                    for k in j + 1..d {
                        worst = worst.max(cyclic((i, j, k)));
                    }
                }
            }
            worst
        }
    };
    Ok(worst)
}

/// Central-difference Jacobian of `map` at `state`.
pub fn fd_jacobian(map: &dyn Fn(&[f64]) -> Result<Vec<f64>>, state: &[f64]) -> Result<DMatrix<f64>> {
    let rows = map(state)?.len();
    let mut jac = DMatrix::zeros(rows, state.len());
    let mut x = state.to_vec();
    for l in 0..state.len() {
        let h = fd_step(state[l]);
        x[l] = state[l] + h;
        let plus = map(&x)?;
        x[l] = state[l] - h;
        let minus = map(&x)?;
        x[l] = state[l];
        for r in 0..rows {
            jac[(r, l)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// `J T J^T` with `J` the finite-difference Jacobian of `map` at `state`.
pub fn pushforward(
    p: &PoissonStructure,
    map: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    state: &[f64],
) -> Result<DMatrix<f64>> {
    let jac = fd_jacobian(map, state)?;
    pushforward_with_jacobian(p, &jac, state)
}

pub fn pushforward_with_jacobian(p: &PoissonStructure, jac: &DMatrix<f64>, state: &[f64]) -> Result<DMatrix<f64>> {
    let t = p.tensor(state)?;
    Ok(jac * t * jac.transpose())
}

/// `|| T grad(phi) ||_inf`.
pub fn casimir_residual(p: &PoissonStructure, phi: &ScalarFn, state: &[f64]) -> Result<f64> {
    let t = p.tensor(state)?;
    let g = phi.gradient(state)?;
    Ok((t * g).amax())
}

/// Largest `|T + T^T|` entry.
pub fn antisymmetry_defect(t: &DMatrix<f64>) -> f64 {
    (t + t.transpose()).amax()
}
