#![no_main]

use libfuzzer_sys::fuzz_target;

// Anything that parses prints, and the printed text parses to the same text.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(p) = beepl_frontend::parse_program(src) else { return };
    let Ok(text) = beepl_frontend::print_program(&p) else { return };
    let back = beepl_frontend::parse_program(&text).expect("printed program parses");
    assert_eq!(beepl_frontend::print_program(&back).expect("prints again"), text);
});
