#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // must never panic or blow up on malformed model files
        let _ = davies_lab::model::parse_ham(text);
    }
});
