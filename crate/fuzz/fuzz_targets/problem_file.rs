#![no_main]

use ioc_core::semialgebraic::ProblemFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ProblemFile::from_json(text) {
        if let Ok(sys) = file.build() {
            let again = ProblemFile::from_json(&sys.to_file().to_json().unwrap()).unwrap();
            assert!(again.build().is_ok());
        }
    }
});
