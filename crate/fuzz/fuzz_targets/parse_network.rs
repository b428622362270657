#![no_main]

use jamsim::nn::MlpNetwork;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(net) = MlpNetwork::from_text(text) {
        // Anything accepted must survive a round trip unchanged.
        let again = MlpNetwork::from_text(&net.to_text()).expect("re-parse of serialized network");
        assert_eq!(again.to_text(), net.to_text());
    }
});
