#![no_main]

use ioc_core::bundle::ResultBundle;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = ResultBundle::from_json(text) {
        let _ = b.candidate();
        let _ = b.csv_row();
        let _ = b.lagrangian_text();
    }
});
