#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(pair) = tcusum_core::io::parse_pair_json(text) {
            for x in [0.0, 1.0, -2.5, 1e9] {
                let _ = pair.llr(x);
            }
        }
    }
});
