#![no_main]

use jamsim::metrics::{compute_metrics, read_slot_log, Subject};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = read_slot_log(data) {
        if !log.is_empty() {
            compute_metrics(&log, Subject::Transmitter).expect("validated log has metrics");
            compute_metrics(&log, Subject::Jammer).expect("validated log has metrics");
        }
    }
});
