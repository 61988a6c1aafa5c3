#![no_main]

use ioc_core::bench::Benchmark;
use ioc_core::trajectory::TrajectoryDatabase;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(db) = TrajectoryDatabase::from_json(text) else { return };
    let _ = db.check_shape();
    let _ = db.to_csv();
    let _ = db.check_invariants(&Benchmark::ExitNorm.system());
});
