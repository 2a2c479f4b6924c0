#![no_main]

use libfuzzer_sys::fuzz_target;
use toda_core::State;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Must not panic.
        let _ = State::from_json(text);
    }
});
