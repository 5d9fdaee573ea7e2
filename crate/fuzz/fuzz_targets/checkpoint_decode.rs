#![no_main]

use libfuzzer_sys::fuzz_target;
use nsv_core::spectral::checkpoint::{decode, decode_header, encode};

fuzz_target!(|data: &[u8]| {
    let header = decode_header(data);
    if let Ok(ckpt) = decode(data) {
        assert!(header.is_ok());
        let bytes = encode(&ckpt);
        assert_eq!(bytes.len(), data.len());
        let again = decode(&bytes).expect("re-encoded checkpoint decodes");
        assert_eq!(encode(&again), bytes);
    }
});
