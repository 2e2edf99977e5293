#![no_main]

use libfuzzer_sys::fuzz_target;
use mbv_graph::io::{self, GraphFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = io::parse_graph_json(text) {
        let _ = io::export_graph(&g, GraphFormat::Dot, None);
        let written = io::write_graph_json(&g).unwrap();
        assert_eq!(io::parse_graph_json(&written).unwrap(), g);
    }
});
