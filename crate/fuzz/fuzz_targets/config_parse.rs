#![no_main]

use libfuzzer_sys::fuzz_target;
use nsv_core::harness::{parse_config, write_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config(text) {
        let written = write_config(&config);
        let back = parse_config(&written).expect("written config parses");
        assert_eq!(write_config(&back), written);
    }
});
