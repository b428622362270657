use jamsim::harness::ScenarioConfig;
use jamsim::metrics::{compute_metrics, read_slot_log, write_slot_log, SlotRecord, Subject};
use jamsim::nn::{Activation, Dataset, MlpNetwork, NetworkSpec, Normalizer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_net() -> MlpNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut net = MlpNetwork::new(NetworkSpec::classifier(3, &[4], Activation::Sigmoid), &mut rng).unwrap();
    let data = Dataset::from_rows(3, &[(vec![1.0, 2.0, 3.0], true), (vec![2.0, 0.0, 5.0], false)]).unwrap();
    net.set_normalizer(Some(Normalizer::fit(&data).unwrap())).unwrap();
    net.set_threshold(Some(0.4));
    net
}

#[test]
fn network_file_preserves_scores() {
    let net = small_net();
    let back = MlpNetwork::from_text(&net.to_text()).unwrap();
    for x in [[0.0, 0.0, 0.0], [1.5, -2.0, 8.0]] {
        assert_eq!(net.score(&x).unwrap(), back.score(&x).unwrap());
    }
    assert_eq!(back.to_text(), net.to_text());
}

#[test]
fn truncated_network_file_is_rejected() {
    let text = small_net().to_text();
    let cut = &text[..text.len() / 2];
    assert!(MlpNetwork::from_text(cut).is_err());
}

#[test]
fn default_config_round_trips_through_toml() {
    let cfg = ScenarioConfig::default();
    let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
    back.validate().unwrap();
}

#[test]
fn slot_log_round_trip_keeps_metrics() {
    let log: Vec<SlotRecord> = (0..40u64)
        .map(|slot| {
            let t_transmitted = slot % 3 != 0;
            let jam_decision = slot % 4 == 0;
            let counterfactual_success = t_transmitted && slot % 5 != 0;
            let success = counterfactual_success && !jam_decision;
            SlotRecord {
                slot,
                channel_busy: slot % 5 == 0,
                t_transmitted,
                t_score: (slot as f64) / 40.0,
                flipped: false,
                jam_decision,
                jam_power: if jam_decision { 1.0 } else { 0.0 },
                success,
                counterfactual_success,
                ack: success,
            }
        })
        .collect();
    let mut buf = Vec::new();
    write_slot_log(&log, &mut buf).unwrap();
    let back = read_slot_log(buf.as_slice()).unwrap();
    assert_eq!(back, log);
    for subject in [Subject::Transmitter, Subject::Jammer] {
        assert_eq!(compute_metrics(&back, subject).unwrap(), compute_metrics(&log, subject).unwrap());
    }
}

fn corpus(target: &str) -> Vec<std::path::PathBuf> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty());
    files
}

#[test]
fn fuzz_seeds_parse() {
    for path in corpus("parse_network") {
        MlpNetwork::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    }
    for path in corpus("parse_config") {
        ScenarioConfig::from_toml(&std::fs::read_to_string(&path).unwrap()).unwrap();
    }
    for path in corpus("parse_slot_log") {
        read_slot_log(std::fs::File::open(&path).unwrap()).unwrap();
    }
}
