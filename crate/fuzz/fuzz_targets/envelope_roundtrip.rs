#![no_main]

use libfuzzer_sys::fuzz_target;
use toda_core::State;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(state) = State::from_json(text) else { return };
    let again = State::from_json(&state.to_json()).expect("serialized state must parse");
    assert_eq!(state, again);
});
