#![no_main]

use libfuzzer_sys::fuzz_target;
use nsv_core::harness::csv::parse_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = parse_csv(text) {
            for row in &table.rows {
                assert_eq!(row.len(), table.header.len());
            }
        }
    }
});
