//! Raw bytes as (z, rho) pairs. Validation and the inverse map must not panic, and anything
//! accepted by `validate` must come back as a finite Jacobi matrix.

#![no_main]

use libfuzzer_sys::fuzz_target;
use toda_core::spectral::{inverse_transform, validate};
use toda_core::SpectralData;

fuzz_target!(|data: &[u8]| {
    let vals: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .take(32)
        .collect();
    let n = vals.len() / 2;
    let Ok(s) = SpectralData::new(vals[..n].to_vec(), vals[n..2 * n].to_vec()) else { return };
    let m = validate(&s);
    let j = inverse_transform(&s);
    if m.rat_n_prime && m.interlaces {
        if let Ok(j) = j {
            assert!(j.to_vec().iter().all(|x| x.is_finite()));
        }
    }
});
