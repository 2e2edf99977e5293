#![no_main]

use libfuzzer_sys::fuzz_target;
use mbv_graph::io;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = io::parse_coefficient_matrix(text) {
        let written = io::write_coefficient_matrix(&m).unwrap();
        assert_eq!(io::parse_coefficient_matrix(&written).unwrap(), m);
    }
});
