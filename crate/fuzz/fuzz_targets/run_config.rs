#![no_main]

use coldrec_cli::{resolve, Override};
use libfuzzer_sys::fuzz_target;

// First line: JSON config. Remaining lines: overrides.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut lines = text.lines();
    let config = lines.next();
    let overrides: Vec<Override> = lines.filter_map(|l| Override::parse(l).ok()).collect();
    let _ = resolve(config, &overrides);
});
