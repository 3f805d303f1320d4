#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // must never panic, allocate unboundedly, or read out of bounds
    if let Ok((header, state)) = etdrdp::field::decode_field(data) {
        // a successful decode must round-trip
        let bytes = etdrdp::field::encode_field(&state, &header).unwrap();
        let (h2, s2) = etdrdp::field::decode_field(&bytes).unwrap();
        assert_eq!(h2, header);
        assert_eq!(s2.values.len(), state.values.len());
    }
});
