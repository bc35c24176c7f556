#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Must never panic; errors are fine.
    if let Ok(cfg) = echosurf::config::parse_config(text) {
        // Accepted configs satisfy their own structural checks; the hash is
        // a pure function of the text.
        assert_eq!(cfg.hash, echosurf::config::config_hash(text));
        assert!(cfg.scenario.ap_antennas >= 1);
        assert!(!cfg.sweep.atoms.is_empty());
        assert!(!cfg.sweep.methods.is_empty());
    }
});
