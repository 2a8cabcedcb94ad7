#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entries) = rayvote::io::parse_trajectory(text) {
        // Accepted poses satisfy the orthonormality invariant, so
        // re-formatting must parse again with the same record count.
        let again = rayvote::io::format_trajectory(&entries);
        let reparsed = rayvote::io::parse_trajectory(&again).expect("formatted output parses");
        assert_eq!(reparsed.len(), entries.len());
    }
});
