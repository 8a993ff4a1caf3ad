#![no_main]

use libfuzzer_sys::fuzz_target;
use tcusum_core::model::{DensitySpec, DistributionPair};
use tcusum_core::multi::mle_k_intervals;
use tcusum_core::single::{enumerate_ples, mle_interval};
use tcusum_core::walks::random_walk;

// Untrusted numeric series through the whole retrospective pipeline:
// CSV parse, LLR walk, interval MLE, PLE enumeration, K-interval MLE.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(series) = tcusum_core::io::parse_series_csv(text) else {
        return;
    };
    if series.len() > 4096 {
        return;
    }
    let pair = DistributionPair::new(
        DensitySpec::Lattice {
            support: vec![0.0, 1.0],
            masses: vec![0.8, 0.2],
        },
        DensitySpec::Lattice {
            support: vec![0.0, 1.0],
            masses: vec![0.2, 0.8],
        },
    )
    .expect("static pair is valid");
    let Ok(walk) = random_walk(&pair, &series) else {
        return;
    };
    let est = mle_interval(&walk);
    assert!(est.lambda >= 0.0);
    let ples = enumerate_ples(&walk);
    if !est.no_change {
        assert!(ples.contains(&(est.a_hat, est.b_hat)));
    }
    let multi = mle_k_intervals(&walk, 3).expect("k >= 1");
    assert!(multi.total_gain + 1e-9 >= est.lambda);
});
