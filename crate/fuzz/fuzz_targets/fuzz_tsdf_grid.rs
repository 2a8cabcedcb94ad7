#![no_main]

//! The binary grid decoder must reject arbitrary bytes without panicking or
//! over-allocating, and anything it accepts must re-encode to the same
//! bytes.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = rayvote::io::decode_tsdf_grid(data) {
        let bytes = rayvote::io::encode_tsdf_grid(&grid);
        assert_eq!(bytes, data, "accepted grid must round-trip bit-exactly");
    }
});
