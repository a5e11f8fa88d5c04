#![no_main]

use coldrec::dataset::{parse_pairs_csv, FeatureSchema};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let schema = FeatureSchema::new((1..=8).collect(), (1..=8).collect());
    let _ = parse_pairs_csv(text, &schema);
});
