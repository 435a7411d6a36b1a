#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = semg_cascade::report::read_results_csv(data) {
        let _ = semg_cascade::eval::rank_table(&rows);
    }
});
