#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = vcell::harness::parse_csv(text) {
        let mut out = Vec::new();
        vcell::harness::write_csv(&rows, 0, &mut out).unwrap();
        let again = vcell::harness::parse_csv(std::str::from_utf8(&out).unwrap()).expect("re-parse");
        assert_eq!(again.len(), rows.len());
    }
});
