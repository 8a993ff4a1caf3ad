#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scenario) = tcusum_core::io::parse_scenario_json(text) {
            // A validated scenario must classify every index without panicking.
            for i in 0..=scenario.n.min(10_000) {
                let _ = scenario.is_change_index(i);
            }
        }
    }
});
