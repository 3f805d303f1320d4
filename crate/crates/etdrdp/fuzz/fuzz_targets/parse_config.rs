#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // must never panic; a successful parse re-parses identically
        if let Ok(map) = etdrdp::config::parse_config(text) {
            let rendered: String =
                map.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
            if let Ok(again) = etdrdp::config::parse_config(&rendered) {
                for key in again.keys() {
                    assert!(map.contains_key(key));
                }
            }
        }
    }
});
