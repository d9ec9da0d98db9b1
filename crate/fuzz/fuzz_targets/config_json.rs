#![no_main]

use libfuzzer_sys::fuzz_target;
use pbinfer::sim::SimScenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = SimScenario::from_json(text) {
        let again = serde_json::to_string(&list).unwrap();
        assert_eq!(SimScenario::from_json(&again).unwrap(), list);
    }
});
