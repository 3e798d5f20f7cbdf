#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = bellcomm::io::parse_correlation(text) {
        // Anything accepted must survive a round trip and validation.
        let back = bellcomm::io::parse_correlation(&bellcomm::io::correlation_to_json(&p)).expect("round trip");
        assert_eq!(back, p);
        let _ = bellcomm::scenario::validate(&p);
    }
});
