#![no_main]

use libfuzzer_sys::fuzz_target;
use mbv_graph::io;

fuzz_target!(|data: &[u8]| {
    let Some((&p, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(g) = io::parse_edge_csv(text, usize::from(p % 32)) {
        let written = io::write_edge_csv(&g).unwrap();
        assert_eq!(io::parse_edge_csv(&written, g.p()).unwrap(), g);
    }
});
