use num_complex::Complex64;
use serde::Serialize;
use toda_core::brackets::{analytic_bracket_terms, closed_form, restricted_bracket_terms};
use toda_core::envelope::{trajectory_csv, trajectory_json, State};
use toda_core::flows::{evolve_jacobi, exact_flow, exact_trajectory};
use toda_core::spectral::{direct_transform, gammas, inverse_transform};
use toda_core::tridiag::{flaschka, unflaschka};
use toda_core::{FlowMethod, FlowSpec, JacobiMatrix, PhasePoint, SpectralData, WeightFn};

use crate::verify::{self, VerifyOptions};
use crate::{
    read_input, write_output, BracketArgs, CliError, Config, Direction, EvolveArgs, Method, OutFormat, Suite,
    TargetKind, TransformArgs, VerifyArgs,
};

fn rank(kind: TargetKind) -> u8 {
    match kind {
        TargetKind::Phase => 0,
        TargetKind::Jacobi => 1,
        TargetKind::Spectral => 2,
    }
}

fn kind_of(state: &State) -> TargetKind {
    match state {
        State::Phase(_) => TargetKind::Phase,
        State::Jacobi(_) => TargetKind::Jacobi,
        State::Spectral(_) => TargetKind::Spectral,
    }
}

fn to_jacobi(state: &State) -> Result<JacobiMatrix, CliError> {
    Ok(match state {
        State::Phase(p) => flaschka(p)?,
        State::Jacobi(j) => j.clone(),
        State::Spectral(s) => inverse_transform(s)?,
    })
}

fn to_spectral(state: &State) -> Result<SpectralData, CliError> {
    Ok(match state {
        State::Spectral(s) => s.clone(),
        other => direct_transform(&to_jacobi(other)?)?,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Phase to Jacobi to spectral, stopping at `to`.
pub fn forward(state: &State, to: TargetKind) -> Result<State, CliError> {
    if rank(kind_of(state)) > rank(to) {
        return Err(CliError::validation(format!(
            "forward transform cannot go from {:?} to {:?}",
            kind_of(state),
            to
        )));
    }
    Ok(match to {
        TargetKind::Phase => state.clone(),
        TargetKind::Jacobi => State::Jacobi(to_jacobi(state)?),
        TargetKind::Spectral => State::Spectral(to_spectral(state)?),
    })
}

/// Spectral to Jacobi, then to phase space in the gauge `q_0 = q0`.
pub fn inverse(state: &State, to: TargetKind, q0: f64) -> Result<State, CliError> {
    if rank(kind_of(state)) < rank(to) {
        return Err(CliError::validation(format!(
            "inverse transform cannot go from {:?} to {:?}",
            kind_of(state),
            to
        )));
    }
    Ok(match to {
        TargetKind::Spectral => state.clone(),
        TargetKind::Jacobi => State::Jacobi(to_jacobi(state)?),
        TargetKind::Phase => match state {
            State::Phase(p) => State::Phase(p.clone()),
            other => State::Phase(unflaschka(&to_jacobi(other)?, q0)),
        },
    })
}

fn state_vec(state: &State) -> Vec<f64> {
    match state {
        State::Phase(p) => p.q.iter().chain(&p.p).copied().collect(),
        State::Jacobi(j) => j.to_vec(),
        State::Spectral(s) => s.to_vec(),
    }
}

/// Largest deviation after mapping `out` back to the kind of `input`.
pub fn round_trip_deviation(input: &State, out: &State, direction: Direction) -> Result<f64, CliError> {
    let back = match direction {
        Direction::Forward => {
            let q0 = match input {
                State::Phase(p) => p.q[0],
                _ => 0.0,
            };
            inverse(out, kind_of(input), q0)?
        }
        Direction::Inverse => forward(out, kind_of(input))?,
    };
    Ok(max_diff(&state_vec(&back), &state_vec(input)))
}

pub fn transform(a: TransformArgs, cfg: &Config) -> Result<(), CliError> {
    let input = a.input.or_else(|| cfg.input.clone());
    let output = a.output.or_else(|| cfg.output.clone());
    let direction = a.direction.or(cfg.direction).unwrap_or(Direction::Forward);
    let q0 = a.q0.or(cfg.q0);
    let state = State::from_json(&read_input(input.as_deref())?)?;
    let out = match direction {
        Direction::Forward => forward(&state, a.to.or(cfg.to).unwrap_or(TargetKind::Spectral))?,
        Direction::Inverse => {
            let default = if q0.is_some() { TargetKind::Phase } else { TargetKind::Jacobi };
            inverse(&state, a.to.or(cfg.to).unwrap_or(default), q0.unwrap_or(0.0))?
        }
    };
    if let Ok(dev) = round_trip_deviation(&state, &out, direction) {
        eprintln!("round trip: max deviation {dev:.3e}");
    }
    write_output(output.as_deref(), &out.to_json())
}

pub fn evolve(a: EvolveArgs, cfg: &Config) -> Result<(), CliError> {
    let input = a.input.or_else(|| cfg.input.clone());
    let output = a.output.or_else(|| cfg.output.clone());
    let k = a.k.or(cfg.k).unwrap_or(1);
    let t_final = a
        .t
        .or(cfg.t)
        .ok_or_else(|| CliError::validation("missing final time --t"))?;
    let dt = a.dt.or(cfg.dt).unwrap_or(1e-3);
    let method = match a.method.or(cfg.method).unwrap_or(Method::ExactSpectral) {
        Method::ExactSpectral => FlowMethod::ExactSpectral,
        Method::Rk4Lax => FlowMethod::Rk4Lax,
        Method::Rk4Hamiltonian => FlowMethod::Rk4Hamiltonian(a.p_index.or(cfg.p_index).unwrap_or(0)),
    };
    let format = a.out.or(cfg.out).unwrap_or(OutFormat::Csv);
    let spec = FlowSpec { k, method, t_final, dt };
    spec.validate()?;

    let state = State::from_json(&read_input(input.as_deref())?)?;
    let initial = to_spectral(&state)?;
    let traj = match method {
        FlowMethod::ExactSpectral => exact_trajectory(&initial, k, dt, t_final)?,
        _ => {
            let traj = evolve_jacobi(&to_jacobi(&state)?, &spec)?;
            let last = JacobiMatrix::from_slice(traj.states.last().expect("grid is never empty"))?;
            let reached = direct_transform(&last)?;
            let exact = exact_flow(&initial, k, t_final)?;
            eprintln!(
                "max |rho - rho_exact| at t = {t_final}: {:.3e}",
                max_diff(&reached.rho, &exact.rho)
            );
            traj
        }
    };
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    eprintln!(
        "drift: sum rho {:.3e}, spectrum {:.3e}",
        worst(&traj.sum_rho_drift),
        worst(&traj.spectrum_drift)
    );
    let text = match format {
        OutFormat::Csv => trajectory_csv(&traj),
        OutFormat::Json => trajectory_json(&traj),
    };
    write_output(output.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct PoleTerm {
    z: f64,
    rho: f64,
    term: f64,
}

#[derive(Debug, Serialize)]
struct BracketReport {
    f: String,
    p: f64,
    q: f64,
    restricted: bool,
    value: f64,
    terms: Vec<PoleTerm>,
    closed_form: Option<f64>,
    closed_form_deviation: Option<f64>,
}

pub fn bracket(a: BracketArgs, cfg: &Config) -> Result<(), CliError> {
    let input = a.input.or_else(|| cfg.input.clone());
    let n = a.f.or(cfg.f).unwrap_or(0);
    let p = a.p.or(cfg.p).ok_or_else(|| CliError::validation("missing evaluation point --p"))?;
    let q = a.q.or(cfg.q).ok_or_else(|| CliError::validation("missing evaluation point --q"))?;
    let restricted = a.restricted || cfg.restricted.unwrap_or(false);
    let json = a.json || cfg.json.unwrap_or(false);
    let s = to_spectral(&State::from_json(&read_input(input.as_deref())?)?)?;
    let f = WeightFn::Power(n);
    let (pc, qc) = (Complex64::new(p, 0.0), Complex64::new(q, 0.0));
    let terms = if restricted {
        restricted_bracket_terms(&s, pc, qc, &f)?
    } else {
        analytic_bracket_terms(&s, pc, qc, &f)?
    };
    let value: f64 = terms.iter().map(|t| t.re).sum();
    let closed = if n <= 1 {
        Some(closed_form(&s, pc, qc, &f, restricted)?.re)
    } else {
        None
    };
    let report = BracketReport {
        f: f.label(),
        p,
        q,
        restricted,
        value,
        terms: s
            .z
            .iter()
            .zip(&s.rho)
            .zip(&terms)
            .map(|((&z, &rho), t)| PoleTerm { z, rho, term: t.re })
            .collect(),
        closed_form: closed,
        closed_form_deviation: closed.map(|c| (c - value).abs()),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    let kind = if restricted { "restricted" } else { "unrestricted" };
    println!("{{chi({p}), chi({q})}}  f = {}  {kind}", report.f);
    println!("{:>4}  {:>24}  {:>24}  {:>24}", "k", "z_k", "rho_k", "term");
    for (k, t) in report.terms.iter().enumerate() {
        println!("{k:>4}  {:>24.16e}  {:>24.16e}  {:>24.16e}", t.z, t.rho, t.term);
    }
    println!("value        {value:.16e}");
    if let (Some(c), Some(d)) = (report.closed_form, report.closed_form_deviation) {
        println!("closed form  {c:.16e}  (deviation {d:.3e})");
    }
    Ok(())
}

pub fn verify(a: VerifyArgs, cfg: &Config) -> Result<(), CliError> {
    let opts = VerifyOptions {
        suite: a.suite.or(cfg.suite).unwrap_or(Suite::All),
        n: a.n.or(cfg.n).unwrap_or(4),
        trials: a.trials.or(cfg.trials).unwrap_or(50),
        seed: a.seed.or(cfg.seed).unwrap_or(0),
        negative_control: a.negative_control,
    };
    let report = verify::run(&opts)?;
    let json = report.to_json();
    if let Some(path) = a.output.or_else(|| cfg.output.clone()) {
        write_output(Some(&path), &json)?;
    }
    if a.json || cfg.json.unwrap_or(false) {
        write_output(None, &json)?;
    } else {
        print!("{}", report.table());
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::property(format!("suite {} failed", report.suite)))
    }
}

pub fn demo() -> Result<(), CliError> {
    let pt = PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0])?;
    let j = flaschka(&pt)?;
    println!("phase point   q = {:?}, p = {:?}", pt.q, pt.p);
    println!("Jacobi        v = {:?}, c = {:?}", j.v(), j.c());
    let s = direct_transform(&j)?;
    println!("spectrum      z = {:?}, rho = {:?}", s.z, s.rho);
    let (g, q0) = gammas(&s)?;
    println!("zeros of chi  gamma = {g:?}, q0 = {q0}");
    let (p, q) = (Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0));
    let f = WeightFn::Power(0);
    let un: Complex64 = analytic_bracket_terms(&s, p, q, &f)?.iter().sum();
    let re: Complex64 = restricted_bracket_terms(&s, p, q, &f)?.iter().sum();
    println!("{{chi(2), chi(3)}}   = {:.12}  (-49/576 = {:.12})", un.re, -49.0 / 576.0);
    println!("{{chi(2), chi(3)}}'  = {:.12}  (-7/576 = {:.12})", re.re, -7.0 / 576.0);
    let flowed = exact_flow(&s, 1, 2f64.ln())?;
    println!("X_1 flow to t = ln 2: rho = {:?}", flowed.rho);
    let back = inverse_transform(&flowed)?;
    println!("               Jacobi v = {:?}, c = {:?}", back.v(), back.c());
    Ok(())
}
