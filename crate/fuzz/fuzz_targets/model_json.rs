#![no_main]

use convstate::harness::{model_from_json, model_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(saved) = model_from_json(text) {
        // anything accepted must survive a round trip unchanged
        let again = model_from_json(&model_to_json(&saved.model, saved.mode)).expect("round trip");
        assert_eq!(again, saved);
    }
});
