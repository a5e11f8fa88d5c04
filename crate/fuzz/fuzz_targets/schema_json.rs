#![no_main]

use coldrec::dataset::FeatureSchema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(schema) = FeatureSchema::from_json(text) {
        let again = FeatureSchema::from_json(&schema.to_json()).expect("re-parse");
        assert_eq!(again.hash(), schema.hash());
    }
});
