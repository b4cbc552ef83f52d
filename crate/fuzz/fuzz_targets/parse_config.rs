#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = vcell::config::parse_config(text) {
        // anything accepted must survive a round trip
        let again = vcell::config::parse_config(&vcell::config::to_toml(&config)).expect("re-parse");
        assert_eq!(again, config);
    }
});
