#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = rayvote::io::decode_feature_map(data) {
        let bytes = rayvote::io::encode_feature_map(&map);
        assert_eq!(bytes, data, "accepted map must round-trip bit-exactly");
        // Sampling an accepted map must stay in bounds.
        let _ = map.sample(0.0, 0.0, rayvote::SampleMode::Nearest);
        let _ = map.sample(
            map.width as f64 / 2.0,
            map.height as f64 / 2.0,
            rayvote::SampleMode::Bilinear,
        );
    }
});
