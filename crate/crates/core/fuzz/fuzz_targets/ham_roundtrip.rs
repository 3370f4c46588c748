#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = davies_lab::model::parse_ham(text) {
        // accepted inputs must survive a serialize -> parse round trip
        let out = davies_lab::model::serialize_ham(&spec);
        let back = davies_lab::model::parse_ham(&out).expect("serialized spec parses");
        assert_eq!(back.local_dim, spec.local_dim);
        assert_eq!(back.range, spec.range);
        assert_eq!(back.terms.len(), spec.terms.len());
        for (a, b) in back.terms.iter().zip(&spec.terms) {
            assert!(a.matrix.approx_eq(&b.matrix, 0.0));
        }
    }
});
