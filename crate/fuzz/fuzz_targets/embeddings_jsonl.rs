#![no_main]

use convstate::harness::parse_embeddings_jsonl;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_embeddings_jsonl(text);
});
