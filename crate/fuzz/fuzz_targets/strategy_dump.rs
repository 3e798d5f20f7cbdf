#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = bellcomm::io::parse_strategy_dump(text) {
        let back = bellcomm::io::parse_strategy_dump(&bellcomm::io::strategy_dump(&list)).expect("round trip");
        assert_eq!(back, list);
    }
});
