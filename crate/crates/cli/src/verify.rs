//! Randomized invariant suites behind `toda verify`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use toda_core::brackets::{
    casimir_residual, dirac_restrict, jacobi_residual, phi1, phi2, pi0_cv, pi1_cv, pi2_cv, trace_gradient,
    det_gradient, trace_inverse_gradient, zrho_restricted_tensor, zrho_tensor,
};
use toda_core::coords::{verify_canonical, ActionAngleChart, GammaPiChart, IyChart};
use toda_core::flows::{evolve_jacobi, exact_flow, hamiltonian_field, spectral_field};
use toda_core::sampling::{random_jacobi, random_spectral, trial_rng};
use toda_core::spectral::{direct_transform, inverse_transform, validate, weyl_eval_real, weyl_factored};
use toda_core::{FlowMethod, FlowSpec, JacobiMatrix, PoissonStructure, ScalarFn, SpectralData, WeightFn};

use crate::{CliError, Suite};

pub const JACOBI_TOL: f64 = 1e-6;
pub const ROUNDTRIP_TOL: f64 = 1e-10;
pub const WEYL_TOL: f64 = 1e-8;
pub const HIERARCHY_TOL: f64 = 1e-10;
pub const ALGEBRAIC_TOL: f64 = 1e-13;
pub const FLOW_TOL: f64 = 1e-7;
pub const DRIFT_TOL: f64 = 1e-8;
pub const CASIMIR_TOL: f64 = 1e-9;
pub const DIRAC_TOL: f64 = 1e-10;
pub const DARBOUX_TOL: f64 = 1e-6;

/// Pole range for suites that only need distinct real poles.
pub const STANDARD_RANGE: (f64, f64) = (-3.0, 3.0);
/// Pole range for suites that evaluate the antiderivative of `1/f`.
pub const POSITIVE_RANGE: (f64, f64) = (0.5, 6.0);
pub const V_RANGE: (f64, f64) = (-3.0, 3.0);
pub const C_RANGE: (f64, f64) = (0.25, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Substitutes corrupted tensors in the Jacobi-identity suite.
    pub negative_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub suite: String,
    pub name: String,
    pub cases: usize,
    /// `null` in JSON when a case produced a non-finite residual.
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub cases: usize,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "suite {}  n = {}  trials = {}  seed = {}",
            self.suite, self.n, self.trials, self.seed
        );
        let width = self.properties.iter().map(|p| p.suite.len() + p.name.len() + 1).max().unwrap_or(8).max(8);
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>12}  {:>9}  result", "property", "cases", "max", "tol");
        for p in &self.properties {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>12.3e}  {:>9.0e}  {}",
                format!("{}/{}", p.suite, p.name),
                p.cases,
                p.max_residual,
                p.tolerance,
                if p.passed { "PASS" } else { "FAIL" }
            );
            for e in &p.errors {
                let _ = writeln!(out, "    {e}");
            }
        }
        let _ = writeln!(out, "{}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

/// One measured residual from one trial.
struct Sample {
    name: String,
    tolerance: f64,
    residual: Result<f64, String>,
}

fn sample(name: impl Into<String>, tolerance: f64, residual: toda_core::Result<f64>) -> Sample {
    Sample {
        name: name.into(),
        tolerance,
        residual: residual.map_err(|e| e.to_string()),
    }
}

type TrialFn = fn(&mut ChaCha8Rng, usize, bool) -> Vec<Sample>;

fn suite_fn(s: Suite) -> TrialFn {
    match s {
        Suite::Roundtrip => roundtrip_trial,
        Suite::Jacobi => jacobi_trial,
        Suite::Hierarchy => hierarchy_trial,
        Suite::Darboux => darboux_trial,
        Suite::Casimirs => casimir_trial,
        Suite::All => unreachable!("expanded by run"),
    }
}

/// Runs the suite with trials fanned out over the rayon pool; results are reduced in trial order.
pub fn run(opts: &VerifyOptions) -> Result<VerifyReport, CliError> {
    if opts.n == 0 || opts.n > 16 {
        return Err(CliError::validation(format!("n = {} must lie in 1..=16", opts.n)));
    }
    if opts.trials == 0 {
        return Err(CliError::validation("trials must be positive"));
    }
    let suites: Vec<Suite> = match opts.suite {
        Suite::All => vec![Suite::Roundtrip, Suite::Jacobi, Suite::Hierarchy, Suite::Darboux, Suite::Casimirs],
        s => vec![s],
    };
    let mut properties = Vec::new();
    for suite in suites {
        let f = suite_fn(suite);
        let per_trial: Vec<Vec<Sample>> = (0..opts.trials)
            .into_par_iter()
            .map(|t| f(&mut trial_rng(opts.seed, t as u64), opts.n, opts.negative_control))
            .collect();
        properties.extend(reduce(suite, per_trial));
    }
    let passed = properties.iter().all(|p| p.passed);
    Ok(VerifyReport {
        suite: opts.suite.name().to_string(),
        n: opts.n,
        trials: opts.trials,
        seed: opts.seed,
        cases: properties.iter().map(|p| p.cases).sum(),
        properties,
        passed,
    })
}

fn reduce(suite: Suite, per_trial: Vec<Vec<Sample>>) -> Vec<PropertyResult> {
    let mut out: Vec<PropertyResult> = Vec::new();
    for (trial, samples) in per_trial.into_iter().enumerate() {
        for s in samples {
            let idx = match out.iter().position(|p| p.name == s.name) {
                Some(i) => i,
                None => {
                    out.push(PropertyResult {
                        suite: suite.name().to_string(),
                        name: s.name.clone(),
                        cases: 0,
                        max_residual: 0.0,
                        tolerance: s.tolerance,
                        passed: true,
                        errors: Vec::new(),
                    });
                    out.len() - 1
                }
            };
            let p = &mut out[idx];
            p.cases += 1;
            match s.residual {
                Ok(r) if r.is_finite() => p.max_residual = p.max_residual.max(r),
                Ok(r) => {
                    p.max_residual = f64::INFINITY;
                    p.errors.push(format!("trial {trial}: residual {r}"));
                }
                Err(e) => p.errors.push(format!("trial {trial}: {e}")),
            }
        }
    }
    for p in &mut out {
        p.passed = p.errors.is_empty() && p.max_residual <= p.tolerance;
    }
    out
}

fn weights() -> [(WeightFn, &'static str); 4] {
    [
        (WeightFn::Power(0), "1"),
        (WeightFn::Power(1), "z"),
        (WeightFn::Power(2), "z^2"),
        (WeightFn::Power(3), "z^3"),
    ]
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn jacobi(rng: &mut ChaCha8Rng, n: usize) -> JacobiMatrix {
    random_jacobi(rng, n, V_RANGE, C_RANGE)
}

/// `‖inverse(direct(J)) − J‖_∞ / (1 + ‖J‖_∞)`.
pub fn jacobi_roundtrip_residual(j: &JacobiMatrix) -> toda_core::Result<f64> {
    let back = inverse_transform(&direct_transform(j)?)?;
    Ok(max_abs_diff(&back.to_vec(), &j.to_vec()) / (1.0 + j.max_abs()))
}

/// Evaluation point at least `gap` away from every pole.
fn off_pole(rng: &mut ChaCha8Rng, z: &[f64], lo: f64, hi: f64, gap: f64) -> f64 {
    loop {
        let x = rng.random_range(lo..hi);
        if z.iter().all(|p| (p - x).abs() >= gap) {
            return x;
        }
    }
}

fn roundtrip_trial(rng: &mut ChaCha8Rng, n: usize, _: bool) -> Vec<Sample> {
    let j = jacobi(rng, n);
    let mut out = vec![sample("inverse(direct(J)) = J", ROUNDTRIP_TOL, jacobi_roundtrip_residual(&j))];
    let s = direct_transform(&j);
    out.push(sample(
        "sum rho = 1",
        ROUNDTRIP_TOL,
        s.as_ref().map(|s| (s.q0() - 1.0).abs()).map_err(Clone::clone),
    ));
    out.push(sample(
        "membership and interlacing",
        0.0,
        s.as_ref().map(|s| {
            let m = validate(s);
            if m.rat_n_prime && m.interlaces {
                0.0
            } else {
                1.0
            }
        }).map_err(Clone::clone),
    ));
    if let Ok(s) = &s {
        let x = off_pole(rng, &s.z, -4.0, 4.0, 0.05);
        let forms = (|| -> toda_core::Result<f64> {
            let a = weyl_eval_real(s, x)?;
            let b = j.weyl_ratio(x);
            let c = weyl_factored(s, x)?;
            let scale = a.abs().max(f64::MIN_POSITIVE);
            Ok([(a - b).abs(), (a - c).abs(), (b - c).abs()].into_iter().fold(0.0, f64::max) / scale)
        })();
        out.push(sample("Weyl function forms agree", WEYL_TOL, forms));
    }
    let sd = random_spectral(rng, n, STANDARD_RANGE.0, STANDARD_RANGE.1);
    let back = inverse_transform(&sd).and_then(|j| direct_transform(&j));
    out.push(sample(
        "direct(inverse(S)) = S",
        ROUNDTRIP_TOL,
        back.map(|b| max_abs_diff(&b.to_vec(), &sd.to_vec())),
    ));
    out
}

fn jacobi_trial(rng: &mut ChaCha8Rng, n: usize, negative_control: bool) -> Vec<Sample> {
    let pick = |p: PoissonStructure| if negative_control { p.corrupted() } else { p };
    let s = random_spectral(rng, n, STANDARD_RANGE.0, STANDARD_RANGE.1).to_vec();
    let mut out = Vec::new();
    if n < 2 && !negative_control {
        return out;
    }
    for (f, label) in weights() {
        let t = pick(zrho_tensor(f.clone(), n));
        out.push(sample(format!("zrho[{label}]"), JACOBI_TOL, jacobi_residual(&t, &s, None)));
        let t = pick(zrho_restricted_tensor(f, n));
        out.push(sample(format!("zrho_restricted[{label}]"), JACOBI_TOL, jacobi_residual(&t, &s, None)));
    }
    let j = jacobi(rng, n).to_vec();
    for (label, p) in [("pi0", pi0_cv(n)), ("pi1", pi1_cv(n)), ("pi2", pi2_cv(n))] {
        out.push(sample(label, JACOBI_TOL, jacobi_residual(&pick(p), &j, None)));
    }
    out
}

fn relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    max_abs_diff(a, b) / scale
}

fn hierarchy_trial(rng: &mut ChaCha8Rng, n: usize, _: bool) -> Vec<Sample> {
    let j = jacobi(rng, n);
    let mut out = Vec::new();
    for k in 1..=3u32 {
        let agree = (|| -> toda_core::Result<f64> {
            let (v0, c0) = hamiltonian_field(&j, k, 0)?;
            let base: Vec<f64> = v0.into_iter().chain(c0).collect();
            let mut worst = 0.0_f64;
            for p in 1..=k.min(2) {
                let (v, c) = hamiltonian_field(&j, k, p)?;
                let other: Vec<f64> = v.into_iter().chain(c).collect();
                worst = worst.max(relative(&other, &base));
            }
            Ok(worst)
        })();
        out.push(sample(format!("X_{k} independent of p"), HIERARCHY_TOL, agree));
    }
    let s = random_spectral(rng, n, STANDARD_RANGE.0, STANDARD_RANGE.1);
    for k in 1..=3u32 {
        for p in 0..=k.min(2) {
            let r = restricted_field(&s, k, p).map(|field| relative(&field, &spectral_field(&s, k)));
            out.push(sample(format!("restricted[z^{p}] grad H_{} = X_{k}", k - p), ALGEBRAIC_TOL, r));
        }
    }
    let spec = FlowSpec {
        k: 1,
        method: FlowMethod::Rk4Lax,
        t_final: 1.0,
        dt: 1e-3,
    };
    let flow = (|| -> toda_core::Result<(f64, f64)> {
        let traj = evolve_jacobi(&j, &spec)?;
        let last = JacobiMatrix::from_slice(traj.states.last().expect("non-empty grid"))?;
        let reached = direct_transform(&last)?;
        let exact = exact_flow(&direct_transform(&j)?, 1, spec.t_final)?;
        let drift = traj.spectrum_drift.iter().copied().fold(0.0, f64::max);
        Ok((max_abs_diff(&reached.rho, &exact.rho), drift))
    })();
    out.push(sample("RK4 Lax = exact flow (k=1, t=1)", FLOW_TOL, flow.clone().map(|r| r.0)));
    out.push(sample("spectrum drift along Lax flow", DRIFT_TOL, flow.map(|r| r.1)));
    out
}

/// `T' grad H_{k-p}` for the restricted tensor with `f = z^p`, rho components only.
pub fn restricted_field(s: &SpectralData, k: u32, p: u32) -> toda_core::Result<Vec<f64>> {
    let n = s.n();
    let t = zrho_restricted_tensor(WeightFn::Power(p), n).tensor(&s.to_vec())?;
    let mut grad = nalgebra::DVector::zeros(2 * n);
    for i in 0..n {
        grad[i] = s.z[i].powi((k - p) as i32);
    }
    let field = t * grad;
    Ok(field.rows(n, n).iter().copied().collect())
}

fn darboux_trial(rng: &mut ChaCha8Rng, n: usize, _: bool) -> Vec<Sample> {
    let s = random_spectral(rng, n, POSITIVE_RANGE.0, POSITIVE_RANGE.1);
    let x = s.to_vec();
    let mut out = Vec::new();
    for (f, label) in weights().into_iter().take(3) {
        let iy = IyChart { f: f.clone() };
        let r = verify_canonical(&iy, &zrho_tensor(f.clone(), n), &x, DARBOUX_TOL).map(|r| r.max_deviation);
        out.push(sample(format!("I-y canonical [{label}]"), DARBOUX_TOL, r));
        let aa = ActionAngleChart { f: f.clone() };
        let r = verify_canonical(&aa, &zrho_restricted_tensor(f.clone(), n), &x, DARBOUX_TOL)
            .map(|r| r.max_deviation);
        out.push(sample(format!("action-angle canonical [{label}]"), DARBOUX_TOL, r));
        out.push(sample(
            format!("{{Phi1, Phi2}} = 1 [{label}]"),
            CASIMIR_TOL,
            phi_bracket(&f, n, &x).map(|b| (b - 1.0).abs()),
        ));
        out.push(sample(
            format!("{{Phi1, Phi2}} = -1 [{label}] (reversed orientation)"),
            CASIMIR_TOL,
            phi_bracket(&f, n, &x).map(|b| (b + 1.0).abs()),
        ));
    }
    let gp = GammaPiChart { f: WeightFn::Power(0) };
    let report = verify_canonical(&gp, &zrho_tensor(WeightFn::Power(0), n), &x, DARBOUX_TOL);
    out.push(sample("gamma-pi canonical [1]", DARBOUX_TOL, report.clone().map(|r| r.max_deviation)));
    out.push(sample(
        "gamma-pi canonical [1] (reversed orientation)",
        DARBOUX_TOL,
        report.map(|r| r.reversed_deviation),
    ));
    out
}

/// `{Phi1, Phi2}^f` through the unrestricted tensor.
pub fn phi_bracket(f: &WeightFn, n: usize, x: &[f64]) -> toda_core::Result<f64> {
    let p = zrho_tensor(f.clone(), n);
    p.bracket(x, &phi1(f.clone(), n).gradient(x)?, &phi2(n).gradient(x)?)
}

/// `|T grad(phi)|_∞ / (|T|_∞ |grad(phi)|_∞)`.
pub fn relative_casimir_residual(p: &PoissonStructure, phi: &ScalarFn, x: &[f64]) -> toda_core::Result<f64> {
    let scale = p.tensor(x)?.amax() * phi.gradient(x)?.amax();
    let r = casimir_residual(p, phi, x)?;
    Ok(if scale > 0.0 { r / scale } else { r })
}

fn relative_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn casimir_trial(rng: &mut ChaCha8Rng, n: usize, _: bool) -> Vec<Sample> {
    let j = jacobi(rng, n).to_vec();
    let mut out = vec![
        sample("pi0: tr L", CASIMIR_TOL, relative_casimir_residual(&pi0_cv(n), &trace_gradient(n), &j)),
        sample("pi1: det L", CASIMIR_TOL, relative_casimir_residual(&pi1_cv(n), &det_gradient(), &j)),
        sample(
            "pi2: tr L^-1",
            CASIMIR_TOL,
            relative_casimir_residual(&pi2_cv(n), &trace_inverse_gradient(), &j),
        ),
    ];
    let s = random_spectral(rng, n, POSITIVE_RANGE.0, POSITIVE_RANGE.1).to_vec();
    for (f, label) in weights().into_iter().take(3) {
        let restricted = zrho_restricted_tensor(f.clone(), n);
        for phi in [phi1(f.clone(), n), phi2(n)] {
            out.push(sample(
                format!("restricted[{label}]: {}", phi.label),
                CASIMIR_TOL,
                relative_casimir_residual(&restricted, &phi, &s),
            ));
        }
        let dirac = dirac_restrict(&zrho_tensor(f.clone(), n), &phi2(n), &phi1(f, n));
        let r = dirac.tensor(&s).and_then(|d| Ok(relative_matrix(&d, &restricted.tensor(&s)?)));
        out.push(sample(format!("Dirac reduction = restricted [{label}]"), DIRAC_TOL, r));
    }
    out
}
