#![no_main]
use libfuzzer_sys::fuzz_target;
use pointnls::record::{parse_state_record, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rec) = parse_state_record(text) {
        // anything accepted must survive a write/read cycle unchanged
        let written = to_json(&rec).expect("accepted record serializes");
        let again = parse_state_record(&written).expect("written record parses");
        assert_eq!(to_json(&again).unwrap(), written);
    }
});
