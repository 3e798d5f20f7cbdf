#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = bellcomm::io::parse_inequality(text) {
        let json = bellcomm::io::inequality_to_json(&rec.inequality, rec.local_bound);
        let back = bellcomm::io::parse_inequality(&json).expect("round trip");
        assert_eq!(back.inequality, rec.inequality);
    }
});
