#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(manifest) = rayvote::io::parse_manifest(text) {
        let again = manifest.to_toml();
        let reparsed = rayvote::io::parse_manifest(&again).expect("serialized manifest parses");
        assert_eq!(reparsed, manifest);
    }
});
