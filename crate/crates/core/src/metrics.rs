//! Per-slot ground truth and the error, throughput and power measures
//! computed from it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything that happened in one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub channel_busy: bool,
    pub t_transmitted: bool,
    pub t_score: f64,
    pub flipped: bool,
    pub jam_decision: bool,
    pub jam_power: f64,
    pub success: bool,
    /// Outcome of the same slot with the jamming power forced to zero.
    pub counterfactual_success: bool,
    pub ack: bool,
}

impl SlotRecord {
    pub fn check(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::DegenerateDataset(format!("slot {}: {msg}", self.slot)));
        if self.success && !self.t_transmitted {
            return fail("success without a transmission");
        }
        if self.ack != self.success {
            return fail("ACK must match success");
        }
        if !self.jam_decision && self.success != self.counterfactual_success {
            return fail("unjammed slot differs from its counterfactual");
        }
        if self.jam_power < 0.0 || !self.jam_power.is_finite() {
            return fail("bad jamming power");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subject {
    Transmitter,
    Jammer,
}

/// Aggregate measures of a log. Ratios whose denominator is zero are `None`
/// (serialized as `null`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub throughput: f64,
    pub success_ratio: Option<f64>,
    pub e_md: Option<f64>,
    pub e_fa: Option<f64>,
    pub n_slots: usize,
    pub n_transmissions: usize,
    pub n_successes: usize,
    pub mean_jam_power: f64,
}

impl Metrics {
    /// `max(e_md, e_fa)`, or `None` if either is undefined.
    pub fn max_error(&self) -> Option<f64> {
        Some(self.e_md?.max(self.e_fa?))
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Computes the measures of `subject` over a non-empty log.
///
/// For the transmitter the positive class is "idle": T predicts idle when
/// it transmits without flipping or stays silent on a flipped slot.
/// Misdetection is an idle slot predicted busy, false alarm a busy slot
/// predicted idle. For the jammer the positive class is "the transmission
/// would succeed without jamming".
pub fn compute_metrics(log: &[SlotRecord], subject: Subject) -> Result<Metrics> {
    if log.is_empty() {
        return Err(Error::DegenerateDataset("empty slot log".into()));
    }
    let n_slots = log.len();
    let n_transmissions = log.iter().filter(|r| r.t_transmitted).count();
    let n_successes = log.iter().filter(|r| r.success).count();
    let mean_jam_power = log.iter().map(|r| r.jam_power).sum::<f64>() / n_slots as f64;

    let (e_md, e_fa) = match subject {
        Subject::Transmitter => {
            let mut idle = 0;
            let mut busy = 0;
            let mut missed = 0;
            let mut false_alarms = 0;
            for r in log {
                let predicted_idle = r.t_transmitted != r.flipped;
                if r.channel_busy {
                    busy += 1;
                    if predicted_idle {
                        false_alarms += 1;
                    }
                } else {
                    idle += 1;
                    if !predicted_idle {
                        missed += 1;
                    }
                }
            }
            (ratio(missed, idle), ratio(false_alarms, busy))
        }
        Subject::Jammer => {
            let mut pos = 0;
            let mut neg = 0;
            let mut missed = 0;
            let mut false_alarms = 0;
            for r in log {
                if r.counterfactual_success {
                    pos += 1;
                    if !r.jam_decision {
                        missed += 1;
                    }
                } else {
                    neg += 1;
                    if r.jam_decision {
                        false_alarms += 1;
                    }
                }
            }
            (ratio(missed, pos), ratio(false_alarms, neg))
        }
    };

    Ok(Metrics {
        throughput: n_successes as f64 / n_slots as f64,
        success_ratio: ratio(n_successes, n_transmissions),
        e_md,
        e_fa,
        n_slots,
        n_transmissions,
        n_successes,
        mean_jam_power,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Writes a slot log as CSV with one column per [`SlotRecord`] field.
pub fn write_slot_log<W: std::io::Write>(log: &[SlotRecord], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SLOT_LOG_HEADER)?;
    for r in log {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const SLOT_LOG_HEADER: [&str; 10] = [
    "slot",
    "channel_busy",
    "t_transmitted",
    "t_score",
    "flipped",
    "jam_decision",
    "jam_power",
    "success",
    "counterfactual_success",
    "ack",
];

/// Parses a slot log written by [`write_slot_log`]. Records that break the
/// [`SlotRecord`] invariants are rejected.
pub fn read_slot_log<R: std::io::Read>(input: R) -> Result<Vec<SlotRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if header.iter().ne(SLOT_LOG_HEADER.iter().copied()) {
        return Err(Error::parse(1, "unexpected slot log header"));
    }
    let mut log = Vec::new();
    for (i, rec) in rdr.deserialize::<SlotRecord>().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        rec.check().map_err(|e| Error::parse(line, e.to_string()))?;
        log.push(rec);
    }
    Ok(log)
}

pub fn save_slot_log(log: &[SlotRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_slot_log(log, std::io::BufWriter::new(file)).map_err(|e| csv_err(path, e))
}

pub fn load_slot_log(path: &Path) -> Result<Vec<SlotRecord>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_slot_log(std::io::BufReader::new(file))
}

/// Pretty-printed JSON with fields in declaration order.
pub fn metrics_to_json(m: &Metrics) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn save_metrics(m: &Metrics, path: &Path) -> Result<()> {
    std::fs::write(path, metrics_to_json(m)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(slot: u64) -> SlotRecord {
        SlotRecord {
            slot,
            channel_busy: false,
            t_transmitted: false,
            t_score: 0.5,
            flipped: false,
            jam_decision: false,
            jam_power: 0.0,
            success: false,
            counterfactual_success: false,
            ack: false,
        }
    }

    #[test]
    fn no_attack_throughput() {
        let mut log: Vec<SlotRecord> = (0..500).map(record).collect();
        for r in log.iter_mut().take(400) {
            r.t_transmitted = true;
        }
        for r in log.iter_mut().take(383) {
            r.success = true;
            r.counterfactual_success = true;
            r.ack = true;
        }
        let m = compute_metrics(&log, Subject::Transmitter).unwrap();
        assert_eq!(m.throughput, 0.766);
        assert_eq!(m.success_ratio, Some(0.9575));
    }

    #[test]
    fn jammer_error_counts() {
        let mut log: Vec<SlotRecord> = (0..500).map(record).collect();
        for (i, r) in log.iter_mut().enumerate() {
            if i < 383 {
                r.t_transmitted = true;
                r.counterfactual_success = true;
                // 16 misses, the rest jammed.
                r.jam_decision = i >= 16;
                r.success = !r.jam_decision;
                r.ack = r.success;
            } else {
                // 17 false alarms among the 117 negatives.
                r.jam_decision = i < 383 + 17;
            }
            if r.jam_decision {
                r.jam_power = 1000.0;
            }
        }
        let m = compute_metrics(&log, Subject::Jammer).unwrap();
        assert!((m.e_md.unwrap() - 16.0 / 383.0).abs() < 1e-15);
        assert!((m.e_fa.unwrap() - 17.0 / 117.0).abs() < 1e-15);
        assert_eq!(format!("{:.2}", 100.0 * m.e_md.unwrap()), "4.18");
        assert_eq!(format!("{:.2}", 100.0 * m.e_fa.unwrap()), "14.53");
    }

    #[test]
    fn no_transmissions_is_flagged() {
        let log: Vec<SlotRecord> = (0..10).map(record).collect();
        let m = compute_metrics(&log, Subject::Jammer).unwrap();
        assert_eq!(m.throughput, 0.0);
        assert_eq!(m.success_ratio, None);
        assert_eq!(m.e_md, None);
        assert!(metrics_to_json(&m).contains("\"success_ratio\": null"));
        assert!(compute_metrics(&[], Subject::Jammer).is_err());
    }

    #[test]
    fn transmitter_errors_account_for_flips() {
        let mut idle_flipped_silent = record(0);
        idle_flipped_silent.flipped = true; // predicted idle, stayed silent
        let mut busy_flipped_tx = record(1);
        busy_flipped_tx.channel_busy = true;
        busy_flipped_tx.flipped = true;
        busy_flipped_tx.t_transmitted = true; // predicted busy, sent anyway
        let m = compute_metrics(&[idle_flipped_silent, busy_flipped_tx], Subject::Transmitter).unwrap();
        assert_eq!((m.e_md, m.e_fa), (Some(0.0), Some(0.0)));
    }

    fn arb_record() -> impl Strategy<Value = SlotRecord> {
        (any::<u64>(), any::<[bool; 5]>(), 0.0f64..1.0, 0.0f64..2000.0).prop_map(
            |(slot, [busy, tx, flip, jam, cf], score, power)| {
                let cf = cf && tx;
                let success = cf && !jam;
                SlotRecord {
                    slot,
                    channel_busy: busy,
                    t_transmitted: tx,
                    t_score: score,
                    flipped: flip,
                    jam_decision: jam,
                    jam_power: if jam { power } else { 0.0 },
                    success,
                    counterfactual_success: cf,
                    ack: success,
                }
            },
        )
    }

    proptest! {
        #[test]
        fn csv_round_trip_preserves_metrics(log in prop::collection::vec(arb_record(), 1..60)) {
            let mut buf = Vec::new();
            write_slot_log(&log, &mut buf).unwrap();
            let back = read_slot_log(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &log);
            for s in [Subject::Transmitter, Subject::Jammer] {
                prop_assert_eq!(compute_metrics(&back, s).unwrap(), compute_metrics(&log, s).unwrap());
            }
        }

        #[test]
        fn throughput_identity(log in prop::collection::vec(arb_record(), 1..60)) {
            let m = compute_metrics(&log, Subject::Transmitter).unwrap();
            // success_ratio * n_tx / n_slots == n_succ / n_slots on counts.
            prop_assert_eq!(m.n_successes as f64 / m.n_slots as f64, m.throughput);
            if let Some(sr) = m.success_ratio {
                prop_assert!(m.throughput <= sr + 1e-15);
                prop_assert_eq!((sr * m.n_transmissions as f64).round() as usize, m.n_successes);
            }
        }
    }

    #[test]
    fn empty_log_csv_is_header_only() {
        let mut buf = Vec::new();
        write_slot_log(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "slot,channel_busy,t_transmitted,t_score,flipped,jam_decision,jam_power,success,counterfactual_success,ack\n"
        );
    }

    #[test]
    fn invalid_records_are_rejected() {
        let text = "slot,channel_busy,t_transmitted,t_score,flipped,jam_decision,jam_power,success,counterfactual_success,ack\n\
                    0,false,false,0.1,false,false,0,true,true,true\n";
        assert!(matches!(read_slot_log(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
