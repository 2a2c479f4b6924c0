use proptest::prelude::*;
use toda_core::envelope::State;
use toda_core::{JacobiMatrix, PhasePoint, SpectralData};

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |x| x.is_finite())
}

fn positive() -> impl Strategy<Value = f64> {
    finite().prop_map(f64::abs).prop_filter("positive", |x| *x > 0.0)
}

fn state() -> impl Strategy<Value = State> {
    (1usize..=8).prop_flat_map(|n| {
        prop_oneof![
            (prop::collection::vec(finite(), n), prop::collection::vec(finite(), n))
                .prop_map(|(q, p)| State::Phase(PhasePoint::new(q, p).unwrap())),
            (prop::collection::vec(finite(), n), prop::collection::vec(positive(), n - 1))
                .prop_map(|(v, c)| State::Jacobi(JacobiMatrix::new(v, c).unwrap())),
            (prop::collection::vec(finite(), n), prop::collection::vec(finite(), n))
                .prop_map(|(z, r)| State::Spectral(SpectralData::new(z, r).unwrap())),
        ]
    })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(s in state()) {
        let back = State::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn parse_never_panics(text in ".{0,200}") {
        let _ = State::from_json(&text);
    }

    #[test]
    fn parse_rejects_mismatched_n(s in state(), extra in 1usize..4) {
        let mut env = s.to_envelope();
        env.n += extra;
        prop_assert!(env.into_state().is_err());
    }
}
