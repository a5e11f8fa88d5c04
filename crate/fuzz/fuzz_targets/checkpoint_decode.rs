#![no_main]

use coldrec::training::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

// Input layout: manifest JSON, a NUL byte, then the tensor blob.
fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let Ok(json) = std::str::from_utf8(&data[..split]) else { return };
    let blob = data.get(split + 1..).unwrap_or(&[]);
    if let Ok((params, manifest)) = decode_checkpoint(json, blob) {
        let (json2, blob2) = encode_checkpoint(&params, &manifest);
        let (params2, _) = decode_checkpoint(&json2, &blob2).expect("re-decode");
        assert_eq!(params, params2);
    }
});
