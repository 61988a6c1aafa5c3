#![no_main]

use ioc_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<RunConfig>(data) {
        if cfg.check().is_ok() {
            let _ = cfg.degrees();
            let _ = cfg.verify_options();
        }
    }
});
