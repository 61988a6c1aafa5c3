//! Polynomial text parser. Anything it accepts must render to text that
//! parses back to the same polynomial.

#![no_main]

use ioc_core::polynomial::{Polynomial, VariableSpace};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let space = VariableSpace::new(2, 2, true).expect("space");
    if let Ok(p) = Polynomial::parse(&space, text) {
        if p.terms().all(|(_, c)| c.is_finite()) {
            let back = Polynomial::parse(&space, &p.to_string()).expect("rendered text parses");
            assert_eq!(back, p);
        }
    }
});
