#![no_main]

use libfuzzer_sys::fuzz_target;

// Decoding never panics, and re-encoding a decoded packet decodes to itself.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(bytes) = beepl_interp::decode_packet_hex(text) {
        let again: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(beepl_interp::decode_packet_hex(&again).expect("canonical hex decodes"), bytes);
    }
});
