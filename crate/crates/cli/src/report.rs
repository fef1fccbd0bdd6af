//! Report serialization: self-describing JSON envelopes and curve CSVs.
//!
//! Every file is written atomically (temp file in the target directory,
//! then rename), so an interrupted or failed run never leaves a partial
//! report behind. Floats are printed with the shortest representation
//! that parses back to the identical bits, which is what makes reruns
//! byte-comparable and the CSV round-trip exact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use quench_core::interp::IntegrandCurve;
use serde::Serialize;

use crate::config::RunConfig;

pub const GENERATOR: &str = "quench";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON wrapper making each report regenerable: the command, the software
/// version and the complete configuration (seeds included) ride along with
/// the payload.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub generator: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub report: &'a T,
}

/// Pretty JSON bytes with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports contain no non-string keys");
    bytes.push(b'\n');
    bytes
}

pub fn envelope_bytes<T: Serialize>(command: &str, config: &RunConfig, report: &T) -> Vec<u8> {
    to_json_bytes(&Envelope {
        generator: GENERATOR,
        version: VERSION,
        command,
        config,
        report,
    })
}

/// Write-all-or-nothing: stage in the destination directory, rename over
/// the final path only once the bytes are complete and flushed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut staged = path.as_os_str().to_owned();
    staged.push(".tmp");
    let staged = std::path::PathBuf::from(staged);
    let result = (|| {
        let mut file = fs::File::create(&staged)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&staged, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&staged);
    }
    result
}

/// One CSV row of an integrand curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
    pub designated_count: usize,
}

pub fn curve_rows(curve: &IntegrandCurve) -> Vec<CurveRow> {
    curve
        .t_nodes
        .iter()
        .zip(&curve.values)
        .zip(&curve.errors)
        .map(|((&t, &value), &std_error)| CurveRow {
            t,
            value,
            std_error,
            designated_count: curve.designated_count,
        })
        .collect()
}

/// `t,value,std_error,designated_count` with shortest round-trip floats.
pub fn curve_to_csv(curve: &IntegrandCurve) -> String {
    let mut out = String::from("t,value,std_error,designated_count\n");
    for row in curve_rows(curve) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.t, row.value, row.std_error, row.designated_count
        ));
    }
    out
}

/// Inverse of [`curve_to_csv`]; bit-exact on the float columns.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("t,value,std_error,designated_count") => {}
        Some(other) => return Err(format!("unexpected CSV header: {other}")),
        None => return Err("empty CSV".to_string()),
    }
    let mut rows = Vec::new();
    for (index, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!("row {}: expected 4 fields, got {}", index + 1, fields.len()));
        }
        let parse_f64 = |s: &str, name: &str| {
            s.parse::<f64>()
                .map_err(|e| format!("row {}: bad {name} `{s}`: {e}", index + 1))
        };
        rows.push(CurveRow {
            t: parse_f64(fields[0], "t")?,
            value: parse_f64(fields[1], "value")?,
            std_error: parse_f64(fields[2], "std_error")?,
            designated_count: fields[3]
                .parse::<usize>()
                .map_err(|e| format!("row {}: bad designated_count `{}`: {e}", index + 1, fields[3]))?,
        });
    }
    Ok(rows)
}

/// β → filename fragment (`0.25` → `0.25`); shortest-round-trip Display
/// keeps names stable across runs.
pub fn beta_tag(beta: f64) -> String {
    format!("{beta}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use quench_core::interp::IntegrandCurve;

    fn sample_curve() -> IntegrandCurve {
        IntegrandCurve {
            t_nodes: vec![0.1127016653792583, 0.5, 0.8872983346207417],
            values: vec![0.9999999999999998, 0.625, 1.0 / 3.0],
            errors: vec![0.0, 1.5e-3, 2.0e-3],
            weights: vec![5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
            designated_count: 4,
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let curve = sample_curve();
        let text = curve_to_csv(&curve);
        let rows = parse_curve_csv(&text).unwrap();
        assert_eq!(rows, curve_rows(&curve));
        for (row, t) in rows.iter().zip(&curve.t_nodes) {
            assert_eq!(row.t.to_bits(), t.to_bits());
        }
    }

    #[test]
    fn csv_header_is_exactly_the_contract() {
        let text = curve_to_csv(&sample_curve());
        assert!(text.starts_with("t,value,std_error,designated_count\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn csv_parser_rejects_malformed_rows() {
        assert!(parse_curve_csv("wrong,header\n").is_err());
        assert!(parse_curve_csv("t,value,std_error,designated_count\n1,2\n").is_err());
        assert!(parse_curve_csv("t,value,std_error,designated_count\n1,2,x,4\n").is_err());
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_staging_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("report.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        let staged = dir.path().join("nested").join("report.json.tmp");
        assert!(!staged.exists());
    }

    #[test]
    fn envelope_embeds_command_config_and_version() {
        let config = RunConfig::default();
        let bytes = envelope_bytes("surface", &config, &42u32);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("\"command\": \"surface\""));
        assert!(text.contains("\"version\""));
        assert!(text.contains("\"lattice\""));
        assert!(text.ends_with('\n'));
        let reparsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(reparsed["report"], 42);
        assert_eq!(reparsed["config"]["k"], 2);
    }

    #[test]
    fn beta_tags_are_shortest_round_trip() {
        assert_eq!(beta_tag(0.1), "0.1");
        assert_eq!(beta_tag(1.0), "1");
        assert_eq!(beta_tag(0.25), "0.25");
    }
}
