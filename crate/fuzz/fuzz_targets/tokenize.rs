#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        if let Ok(toks) = beepl_frontend::tokenize(src) {
            for t in &toks {
                assert!(t.span.start <= t.span.end && t.span.end <= src.len());
            }
        }
    }
});
