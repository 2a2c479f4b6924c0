mod common;

use common::{max_abs_diff, rng, spectral};
use nalgebra::DMatrix;
use proptest::prelude::*;
use toda_core::brackets::zrho_restricted_tensor;
use toda_core::flows::{evolve_jacobi, exact_flow, hamiltonian_field, rk4, spectral_field};
use toda_core::sampling::random_jacobi;
use toda_core::spectral::direct_transform;
use toda_core::{Chart, FlowMethod, FlowSpec, JacobiMatrix, WeightFn};

fn trace_power(x: &[f64], m: u32) -> f64 {
    let l = JacobiMatrix::from_slice(x).unwrap().to_matrix();
    let mut acc = DMatrix::identity(l.nrows(), l.ncols());
    for _ in 0..m {
        acc = &acc * &l;
    }
    acc.trace()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lax_flow_is_isospectral_and_equivariant(seed in any::<u64>(), n in 1usize..=6, k in 1u32..=2) {
        let j = random_jacobi(&mut rng(seed), n, (-1.5, 1.5), (0.1, 1.0));
        let spec = FlowSpec { k, method: FlowMethod::Rk4Lax, t_final: 5.0, dt: 1e-3 };
        let traj = evolve_jacobi(&j, &spec).unwrap();
        let drift = traj.spectrum_drift.iter().copied().fold(0.0, f64::max);
        prop_assert!(drift <= 1e-8, "drift {}", drift);
        let s0 = direct_transform(&j).unwrap();
        for (i, t) in traj.times.iter().enumerate().step_by(1000) {
            let reached = direct_transform(&JacobiMatrix::from_slice(&traj.states[i]).unwrap()).unwrap();
            let exact = exact_flow(&s0, k, *t).unwrap();
            prop_assert!(max_abs_diff(&reached.rho, &exact.rho) <= 1e-7, "t = {}", t);
        }
    }

    #[test]
    fn hamiltonians_are_conserved(seed in any::<u64>(), n in 1usize..=5, k in 1u32..=3) {
        let j = random_jacobi(&mut rng(seed), n, (-1.5, 1.5), (0.1, 1.0));
        let p = k.min(2);
        let spec = FlowSpec { k, method: FlowMethod::Rk4Hamiltonian(p), t_final: 1.0, dt: 1e-3 };
        let traj = evolve_jacobi(&j, &spec).unwrap();
        let first = &traj.states[0];
        let last = traj.states.last().unwrap();
        for m in 1..=4u32 {
            let (a, b) = (trace_power(first, m), trace_power(last, m));
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "tr L^{} {} -> {}", m, a, b);
        }
    }

    #[test]
    fn hierarchy_fields_coincide(seed in any::<u64>(), n in 2usize..=5, k in 1u32..=3) {
        let j = random_jacobi(&mut rng(seed), n, (-3.0, 3.0), (0.1, 3.0));
        let (v0, c0) = hamiltonian_field(&j, k, 0).unwrap();
        let base: Vec<f64> = v0.into_iter().chain(c0).collect();
        let scale = base.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for p in 1..=k.min(2) {
            let (v, c) = hamiltonian_field(&j, k, p).unwrap();
            let other: Vec<f64> = v.into_iter().chain(c).collect();
            prop_assert!(max_abs_diff(&other, &base) <= 1e-10 * scale);
        }
    }

    #[test]
    fn restricted_tensor_generates_spectral_flows(seed in any::<u64>(), n in 1usize..=8, k in 1u32..=3) {
        let s = spectral(&mut rng(seed), n);
        let x = s.to_vec();
        let want = spectral_field(&s, k);
        for p in 0..=k.min(2) {
            let t = zrho_restricted_tensor(WeightFn::Power(p), n).tensor(&x).unwrap();
            let grad = nalgebra::DVector::from_fn(2 * n, |i, _| if i < n { s.z[i].powi((k - p) as i32) } else { 0.0 });
            let field = t * grad;
            let scale = want.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            prop_assert!(field.rows(0, n).amax() == 0.0);
            let got: Vec<f64> = field.rows(n, n).iter().copied().collect();
            prop_assert!(max_abs_diff(&got, &want) <= 1e-13 * scale);
        }
    }
}

#[test]
fn rk4_on_spectral_chart_tracks_exact_flow() {
    let s = spectral(&mut rng(5), 4);
    let traj = rk4(&|x| {
        let s = toda_core::SpectralData::from_slice(x)?;
        Ok(vec![0.0; s.n()].into_iter().chain(spectral_field(&s, 1)).collect())
    }, Chart::ZRHO, &s.to_vec(), 1e-3, 1.0).unwrap();
    let exact = exact_flow(&s, 1, 1.0).unwrap();
    let last = traj.states.last().unwrap();
    assert!(max_abs_diff(&last[4..], &exact.rho) < 1e-10);
    assert!(traj.sum_rho_drift.iter().all(|d| *d < 1e-12));
}

#[test]
fn worked_example_flow() {
    let s = toda_core::SpectralData::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
    let r = exact_flow(&s, 1, 2f64.ln()).unwrap();
    assert!(max_abs_diff(&r.rho, &[0.2, 0.8]) < 1e-12);
    assert_eq!(exact_flow(&s, 1, 0.0).unwrap(), s);
}
