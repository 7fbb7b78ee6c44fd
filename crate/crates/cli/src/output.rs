//! Table and metadata writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::experiments::Row;

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON number when finite, string otherwise.
struct FloatValue(f64);

impl Serialize for FloatValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&format_float(self.0))
        }
    }
}

impl Serialize for Row {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Row", 6)?;
        st.serialize_field("experiment", &self.experiment)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("p", &self.p.map(FloatValue))?;
        st.serialize_field("lhs", &FloatValue(self.lhs))?;
        st.serialize_field("rhs", &FloatValue(self.rhs))?;
        st.serialize_field("gap", &FloatValue(self.gap))?;
        st.end()
    }
}

pub fn write_table(rows: &[Row], path: &Path, format: Format) -> io::Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["experiment", "k", "p", "lhs", "rhs", "gap"])?;
            for r in rows {
                let p = r.p.map(format_float).unwrap_or_default();
                w.write_record([
                    r.experiment.clone(),
                    r.k.to_string(),
                    p,
                    format_float(r.lhs),
                    format_float(r.rhs),
                    format_float(r.gap),
                ])?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let mut w = file;
            for r in rows {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `<out>.meta.json` next to the table.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

#[derive(Serialize)]
pub struct Metadata<'a> {
    pub config_sha256: String,
    pub tool_version: &'a str,
    pub subcommand: &'a str,
    pub seed: u64,
    pub format: &'a str,
    pub rows: usize,
    pub violations: &'a [String],
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn write_metadata(meta: &Metadata<'_>, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, meta)?;
    w.write_all(b"\n")?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(-0.5), "-5.0000000000000000e-1");
    }

    #[test]
    fn sidecar_sits_next_to_the_table() {
        assert_eq!(sidecar_path(Path::new("/tmp/out.csv")), PathBuf::from("/tmp/out.csv.meta.json"));
    }

    #[test]
    fn jsonl_keeps_non_finite_values_as_text() {
        let r = Row { experiment: "x".into(), k: 2, p: Some(f64::INFINITY), lhs: 1.5, rhs: 0.0, gap: 1.5 };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"experiment":"x","k":2,"p":"inf","lhs":1.5,"rhs":0.0,"gap":1.5}"#
        );
    }
}
