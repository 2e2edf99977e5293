#![no_main]

use libfuzzer_sys::fuzz_target;
use mbv_graph::io;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(samples) = io::parse_samples(text) {
        let written = io::write_samples(&samples).unwrap();
        assert_eq!(io::parse_samples(&written).unwrap(), samples);
    }
});
