#![no_main]

use libfuzzer_sys::fuzz_target;
use mbv_graph::io;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = io::parse_grid(text) {
            assert!(grid.iter().all(|l| l.is_finite() && *l >= 0.0));
        }
    }
});
