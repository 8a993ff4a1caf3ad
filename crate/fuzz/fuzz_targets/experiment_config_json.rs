#![no_main]

use libfuzzer_sys::fuzz_target;
use tcusum_core::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = serde_json::from_str::<ExperimentConfig>(text) {
            let _ = config.validate();
        }
    }
});
