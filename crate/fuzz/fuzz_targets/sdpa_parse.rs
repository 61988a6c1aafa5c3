//! SDPA sparse reader, including the writer round trip of accepted input.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = ioc_sdp::parse_sdpa(text) else { return };
    if let Ok(out) = ioc_sdp::to_sdpa_string(&p) {
        let q = ioc_sdp::parse_sdpa(&out).expect("written file parses");
        assert_eq!(q.num_rows(), p.num_rows());
    }
});
