#![no_main]

use libfuzzer_sys::fuzz_target;
use tcusum_core::model::DensitySpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = serde_json::from_str::<DensitySpec>(text) {
            if spec.validate().is_ok() {
                // Evaluating the density must never panic on a valid spec.
                for x in [-1.0, 0.0, 0.5, 1.0, 1e6] {
                    let _ = spec.log_density(x);
                }
            }
        }
    }
});
