#![no_main]

use libfuzzer_sys::fuzz_target;
use mbv_graph::io;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = io::parse_model(text) {
        // anything accepted must convert both ways or fail cleanly
        let _ = model.theta();
        let _ = model.probabilities();
    }
});
