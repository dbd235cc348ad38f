#![no_main]

use dgschwarz::cli::{parse_csv, rows_to_csv, rows_to_markdown};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_csv(text) {
        let written = rows_to_csv(&rows);
        let again = parse_csv(&written).expect("written report must parse");
        assert_eq!(rows_to_csv(&again), written);
        let _ = rows_to_markdown(&rows);
    }
});
