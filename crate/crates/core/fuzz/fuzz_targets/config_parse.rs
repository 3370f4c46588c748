#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = davies_lab::config::parse_config(text) {
        // accepted configs round-trip byte-identically
        let out = davies_lab::config::serialize_config(&cfg);
        let back = davies_lab::config::parse_config(&out).expect("serialized config parses");
        assert_eq!(cfg, back);
        assert_eq!(out, davies_lab::config::serialize_config(&back));
    }
});
