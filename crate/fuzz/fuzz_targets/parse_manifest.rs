#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = semg_cascade::dataset_io::parse_manifest(text) {
            for e in m.values() {
                assert!(e.class_label >= 1);
                assert!(e.sample_rate_hz > 0.0 && e.sample_rate_hz.is_finite());
            }
        }
    }
});
