#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(dec) = bellcomm::io::parse_decomposition(text) {
        let back = bellcomm::io::parse_decomposition(&bellcomm::io::decomposition_to_json(&dec)).expect("round trip");
        assert_eq!(back, dec);
        let _ = dec.correlation();
    }
});
