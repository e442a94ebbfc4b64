use std::io::Cursor;

use fermi_gibbs_core::io::{config_digest, read_samples_jsonl, write_estimates_csv, write_samples_jsonl, HeaderRow};
use fermi_gibbs_core::rng::stream_rng;
use fermi_gibbs_core::sampler::ObservableEstimate;
use fermi_gibbs_core::verify::random;
use fermi_gibbs_core::GaussianFactor;
use serde_json::json;

#[test]
fn jsonl_round_trip() {
    let mut rng = stream_rng(1, 0);
    let samples: Vec<GaussianFactor> = (0..20).map(|_| random::factor(4, &mut rng)).collect();
    let header = HeaderRow::new(json!({"seed": 1, "beta": 0.01}), samples.len());
    let mut buf = Vec::new();
    write_samples_jsonl(&mut buf, &header, &samples).unwrap();
    let (h2, s2) = read_samples_jsonl(Cursor::new(&buf)).unwrap();
    assert_eq!(h2.config_digest, header.config_digest);
    assert_eq!(s2, samples);
}

#[test]
fn digest_ignores_key_order() {
    assert_eq!(config_digest(&json!({"a": 1, "b": [1, 2]})), config_digest(&json!({"b": [1, 2], "a": 1})));
    assert_ne!(config_digest(&json!({"a": 1})), config_digest(&json!({"a": 2})));
}

#[test]
fn malformed_jsonl_is_rejected() {
    assert!(read_samples_jsonl(Cursor::new(b"not json\n".to_vec())).is_err());
    assert!(read_samples_jsonl(Cursor::new(Vec::new())).is_err());
}

#[test]
fn csv_layout() {
    let est = vec![ObservableEstimate { observable: "+1 g1 g2 g3 g4".into(), mean: 0.25, stderr: 0.01 }];
    let mut buf = Vec::new();
    write_estimates_csv(&mut buf, "abc", &est).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# config_digest=abc");
    assert_eq!(lines[1], "observable,mean,stderr");
    assert!(lines[2].starts_with("\"+1 g1 g2 g3 g4\",0.25,"));
}
