#![no_main]

use convstate::harness::parse_labels;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_labels(text) {
        let _ = file.into_sequence(None);
    }
});
