#![no_main]

use convstate::harness::SessionFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = SessionFile::from_json(text) {
        let _ = file.session.validate();
    }
});
