//! JSON state envelopes and trajectory export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flows::Trajectory;
use crate::spectral::SpectralData;
use crate::tridiag::{JacobiMatrix, PhasePoint};

/// The sign and normalization conventions this library implements; hashed into every envelope.
pub const CONVENTIONS: &str = "\
flaschka: v_k = -p_k, c_k = exp((q_k - q_{k+1})/2)
weyl: chi(z) = sum_k rho_k/(z_k - z) = ((L - z)^{-1})_{00}, rho_k = -Res_{z_k} chi
numerator: chi = -q/p, p monic with roots z, q(z_k) = p'(z_k) rho_k
bracket orientation: clockwise circles, {chi(p),chi(q)}^1 = (chi(p)-chi(q))^2/(p-q)
restricted z-rho tensor: Dirac reduction on (log q0, sum F(z_k))
pi1, pi2: normalized so that {., H_{k-p}}_{pi_p} = X_k
antiderivative: F = z (f = 1), ln z (f = z), -1/(n z^n) (f = z^{n+1})
";

pub fn conventions_hash() -> String {
    hex::encode(Sha256::digest(CONVENTIONS.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Phase,
    Jacobi,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub version: String,
    pub conventions: String,
}

impl Default for Meta {
    fn default() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            conventions: conventions_hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhasePayload {
    q: Vec<f64>,
    p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JacobiPayload {
    v: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralPayload {
    z: Vec<f64>,
    rho: Vec<f64>,
}

/// Wire form: `{"kind", "n", "payload", "meta"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEnvelope {
    pub kind: StateKind,
    pub n: usize,
    pub payload: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

/// A validated state of one of the three kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Phase(PhasePoint),
    Jacobi(JacobiMatrix),
    Spectral(SpectralData),
}

impl State {
    pub fn kind(&self) -> StateKind {
        match self {
            State::Phase(_) => StateKind::Phase,
            State::Jacobi(_) => StateKind::Jacobi,
            State::Spectral(_) => StateKind::Spectral,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            State::Phase(p) => p.n(),
            State::Jacobi(j) => j.n(),
            State::Spectral(s) => s.n(),
        }
    }

    pub fn to_envelope(&self) -> StateEnvelope {
        let payload = match self {
            State::Phase(p) => serde_json::to_value(PhasePayload {
                q: p.q.clone(),
                p: p.p.clone(),
            }),
            State::Jacobi(j) => serde_json::to_value(JacobiPayload {
                v: j.v().to_vec(),
                c: j.c().to_vec(),
            }),
            State::Spectral(s) => serde_json::to_value(SpectralPayload {
                z: s.z.clone(),
                rho: s.rho.clone(),
            }),
        }
        .expect("float arrays serialize");
        StateEnvelope {
            kind: self.kind(),
            n: self.n(),
            payload,
            meta: Some(Meta::default()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_envelope()).expect("envelope serializes")
    }

    /// Parses and validates an envelope.
    pub fn from_json(text: &str) -> Result<State> {
        let env: StateEnvelope =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed envelope: {e}")))?;
        env.into_state()
    }
}

fn payload<T: for<'de> Deserialize<'de>>(v: serde_json::Value, kind: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::InvalidArgument(format!("malformed {kind} payload: {e}")))
}

impl StateEnvelope {
    pub fn into_state(self) -> Result<State> {
        let state = match self.kind {
            StateKind::Phase => {
                let p: PhasePayload = payload(self.payload, "phase")?;
                State::Phase(PhasePoint::new(p.q, p.p)?)
            }
            StateKind::Jacobi => {
                let p: JacobiPayload = payload(self.payload, "jacobi")?;
                State::Jacobi(JacobiMatrix::new(p.v, p.c)?)
            }
            StateKind::Spectral => {
                let p: SpectralPayload = payload(self.payload, "spectral")?;
                State::Spectral(SpectralData::new(p.z, p.rho)?)
            }
        };
        if state.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: state.n(),
            });
        }
        Ok(state)
    }
}

/// CSV with header `t,<fields>,sum_rho_drift,spectrum_drift` and 17 significant digits.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for f in &traj.fields {
        out.push(',');
        out.push_str(f);
    }
    out.push_str(",sum_rho_drift,spectrum_drift\n");
    for (i, t) in traj.times.iter().enumerate() {
        let _ = write!(out, "{t:.16e}");
        for x in &traj.states[i] {
            let _ = write!(out, ",{x:.16e}");
        }
        let _ = writeln!(out, ",{:.16e},{:.16e}", traj.sum_rho_drift[i], traj.spectrum_drift[i]);
    }
    out
}

pub fn trajectory_json(traj: &Trajectory) -> String {
    serde_json::to_string_pretty(traj).expect("trajectory serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_kinds() {
        let states = [
            State::Phase(PhasePoint::new(vec![0.1, 1.0 / 3.0], vec![-2.5e-300, 7.0]).unwrap()),
            State::Jacobi(JacobiMatrix::new(vec![0.1, 0.2, 0.3], vec![1e-7, 2.0 / 3.0]).unwrap()),
            State::Spectral(SpectralData::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()),
        ];
        for s in states {
            let back = State::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn envelope_shape() {
        let s = State::Spectral(SpectralData::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap());
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["kind"], "spectral");
        assert_eq!(v["n"], 2);
        assert_eq!(v["payload"]["rho"][0], 0.5);
        assert_eq!(v["meta"]["conventions"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn rejects_inconsistent_input() {
        let bad = [
            r#"{"kind":"jacobi","n":2,"payload":{"v":[0,0],"c":[-1]}}"#,
            r#"{"kind":"jacobi","n":3,"payload":{"v":[0,0],"c":[1]}}"#,
            r#"{"kind":"spectral","n":2,"payload":{"z":[0,1],"rho":[1]}}"#,
            r#"{"kind":"phase","n":1,"payload":{"q":[0],"p":[0],"x":1}}"#,
            r#"{"kind":"other","n":1,"payload":{}}"#,
            r#"{"kind":"phase","n":1,"payload":{"q":[0],"p":[0]},"extra":true}"#,
            "not json",
        ];
        for b in bad {
            assert!(State::from_json(b).is_err(), "{b}");
        }
    }

    #[test]
    fn meta_is_optional_on_input() {
        let s = State::from_json(r#"{"kind":"phase","n":2,"payload":{"q":[0,0],"p":[0,0]}}"#).unwrap();
        assert_eq!(s.n(), 2);
    }
}
