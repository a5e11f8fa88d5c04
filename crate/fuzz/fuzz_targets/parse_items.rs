#![no_main]

use coldrec::dataset::movielens::decode_latin1;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = coldrec::dataset::parse_items(&decode_latin1(data));
});
