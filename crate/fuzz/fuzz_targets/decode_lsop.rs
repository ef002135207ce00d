#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = lindstab_core::linalg::codec::decode_lsop(data) {
        // decoding is the inverse of encoding on everything it accepts
        let again = lindstab_core::linalg::codec::encode_lsop(&m).expect("square");
        assert_eq!(again.len(), data.len());
    }
});
