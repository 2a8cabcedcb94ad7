#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = rayvote::io::decode_ply(data) {
        let bytes = rayvote::io::encode_ply(&cloud);
        // The reader tolerates comment lines the writer never emits, so
        // only the writer's own output is guaranteed byte-stable.
        let reparsed = rayvote::io::decode_ply(&bytes).expect("re-encoded ply parses");
        assert_eq!(reparsed, cloud);
        assert_eq!(rayvote::io::encode_ply(&reparsed), bytes);
    }
});
