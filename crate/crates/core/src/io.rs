//! JSONL sample logs and CSV estimate tables.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianFactor, SampleRow};
use crate::sampler::ObservableEstimate;

/// SHA-256 of the compact JSON encoding (object keys are sorted).
pub fn config_digest(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HeaderRow {
    pub kind: String,
    pub config_digest: String,
    pub config: Value,
    pub n_samples: usize,
}

impl HeaderRow {
    pub fn new(config: Value, n_samples: usize) -> Self {
        HeaderRow { kind: "header".into(), config_digest: config_digest(&config), config, n_samples }
    }
}

/// Writes a header row followed by one row per sample.
pub fn write_samples_jsonl<W: Write>(mut w: W, header: &HeaderRow, samples: &[GaussianFactor]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for s in samples {
        serde_json::to_writer(&mut w, &s.to_row())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_jsonl<R: BufRead>(r: R) -> Result<(HeaderRow, Vec<GaussianFactor>)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty sample log".into()))??;
    let header: HeaderRow = serde_json::from_str(&first)?;
    if header.config_digest != config_digest(&header.config) {
        return Err(Error::Parse("header digest does not match its config".into()));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: SampleRow = serde_json::from_str(&line)?;
        out.push(GaussianFactor::from_row(&row)?);
    }
    Ok((header, out))
}

/// `observable,mean,stderr` rows preceded by a digest comment line.
pub fn write_estimates_csv<W: Write>(mut w: W, digest: &str, estimates: &[ObservableEstimate]) -> Result<()> {
    writeln!(w, "# config_digest={digest}")?;
    writeln!(w, "observable,mean,stderr")?;
    for e in estimates {
        writeln!(w, "\"{}\",{},{}", e.observable, e.mean, e.stderr)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip() {
        let mut g = GaussianFactor::identity(2);
        g.pin_pair(0, 3, -1).unwrap();
        g.scale(0.25).unwrap();
        let header = HeaderRow::new(json!({"seed": 3, "beta": 0.01}), 2);
        let mut buf = Vec::new();
        write_samples_jsonl(&mut buf, &header, &[g.clone(), GaussianFactor::identity(2)]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("\"pairs\":[[1,4,-1]]"));
        let (h2, rows) = read_samples_jsonl(&buf[..]).unwrap();
        assert_eq!(h2, header);
        assert_eq!(rows, vec![g, GaussianFactor::identity(2)]);
    }

    #[test]
    fn digest_is_key_order_independent() {
        let a: Value = serde_json::from_str(r#"{"a":1,"b":2}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b":2,"a":1}"#).unwrap();
        assert_eq!(config_digest(&a), config_digest(&b));
    }
}
