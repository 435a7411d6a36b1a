#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = semg_cascade::dataset_io::parse_recording_csv(data) {
        let width = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == width));
        assert!(rows.iter().flatten().all(|v| v.is_finite()));
    }
});
