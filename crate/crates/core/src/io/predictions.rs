//! Line-delimited prediction files.
//!
//! Each line is one JSON object:
//!
//! ```text
//! {"id":"s000","label":1,"probs":[[0.2,0.8],[0.35,0.65]]}
//! ```
//!
//! `probs` holds the M member predictions for the sample, each a row of K
//! probabilities. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{PredictionSet, ProbabilityVector};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    id: String,
    label: usize,
    probs: Vec<Vec<f64>>,
}

/// One sample: its id, true label and member predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub label: usize,
    pub set: PredictionSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub num_classes: usize,
    pub rows: Vec<PredictionRow>,
}

impl PredictionFile {
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("a prediction file needs at least one row"))?;
        let num_classes = first.set.num_classes();
        for row in &rows {
            if row.set.num_classes() != num_classes {
                return Err(Error::DimensionMismatch {
                    expected: num_classes,
                    found: row.set.num_classes(),
                });
            }
            if row.label >= num_classes {
                return Err(Error::invalid(format!(
                    "row `{}` has label {} but only {num_classes} classes",
                    row.id, row.label
                )));
            }
        }
        Ok(PredictionFile { num_classes, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| {
            Error::invalid(format!("cannot open prediction file {}: {e}", path.display()))
        })?;
        Self::parse(BufReader::new(file))
    }

    /// Parses and validates every line, preserving row order.
    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut num_classes = None;
        let mut num_members = None;
        let mut warned_members = false;
        for (index, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = index + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            let raw: RawRow =
                serde_json::from_str(&line).map_err(|e| parse_err(format!("malformed record: {e}")))?;
            let members = raw
                .probs
                .into_iter()
                .enumerate()
                .map(|(m, probs)| {
                    ProbabilityVector::new(probs).map_err(|e| {
                        parse_err(format!("row `{}`, member {m}: {e}", raw.id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let set = PredictionSet::new(members)
                .map_err(|e| parse_err(format!("row `{}`: {e}", raw.id)))?;
            let k = *num_classes.get_or_insert(set.num_classes());
            if set.num_classes() != k {
                return Err(parse_err(format!(
                    "row `{}` has {} classes, earlier rows have {k}",
                    raw.id,
                    set.num_classes()
                )));
            }
            if raw.label >= k {
                return Err(parse_err(format!(
                    "row `{}` has label {} but only {k} classes",
                    raw.id, raw.label
                )));
            }
            let m = *num_members.get_or_insert(set.num_members());
            if m != set.num_members() && !warned_members {
                warn!(
                    "line {line_no}: row `{}` has {} members, earlier rows have {m}",
                    raw.id,
                    set.num_members()
                );
                warned_members = true;
            }
            rows.push(PredictionRow {
                id: raw.id,
                label: raw.label,
                set,
            });
        }
        if rows.is_empty() {
            return Err(Error::invalid("prediction file contains no records"));
        }
        Self::new(rows)
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = BufWriter::new(writer);
        for row in &self.rows {
            let raw = RawRow {
                id: row.id.clone(),
                label: row.label,
                probs: row
                    .set
                    .members()
                    .iter()
                    .map(|p| p.as_slice().to_vec())
                    .collect(),
            };
            serde_json::to_writer(&mut out, &raw).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ROWS: &str = r#"{"id":"a","label":0,"probs":[[0.9,0.1],[0.6,0.4]]}
{"id":"b","label":1,"probs":[[0.3,0.7],[0.2,0.8]]}
"#;

    #[test]
    fn parses_a_binary_file() {
        let f = PredictionFile::parse(TWO_ROWS.as_bytes()).unwrap();
        assert_eq!(f.num_classes, 2);
        assert_eq!(f.rows.len(), 2);
        assert_eq!(f.rows[1].id, "b");
        assert_eq!(f.rows[1].label, 1);
        assert_eq!(f.rows[0].set.num_members(), 2);
    }

    #[test]
    fn near_unit_sums_are_renormalized() {
        let line = r#"{"id":"x","label":0,"probs":[[0.50005,0.5]]}"#;
        let f = PredictionFile::parse(line.as_bytes()).unwrap();
        let p = &f.rows[0].set.members()[0];
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_sums_name_the_row_and_line() {
        let text = format!("{TWO_ROWS}{}\n", r#"{"id":"bad","label":0,"probs":[[0.5,0.4]]}"#);
        let err = PredictionFile::parse(text.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("bad"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let text = format!("{TWO_ROWS}\nnot json\n");
        assert!(matches!(
            PredictionFile::parse(text.as_bytes()),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn inconsistent_class_counts_are_rejected() {
        let text = format!("{TWO_ROWS}{}\n", r#"{"id":"c","label":0,"probs":[[0.2,0.3,0.5]]}"#);
        assert!(matches!(
            PredictionFile::parse(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn labels_must_be_valid_classes() {
        let line = r#"{"id":"x","label":2,"probs":[[0.5,0.5]]}"#;
        assert!(PredictionFile::parse(line.as_bytes()).is_err());
        let line = r#"{"id":"x","label":-1,"probs":[[0.5,0.5]]}"#;
        assert!(PredictionFile::parse(line.as_bytes()).is_err());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(PredictionFile::parse("\n\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let f = PredictionFile::parse(TWO_ROWS.as_bytes()).unwrap();
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), TWO_ROWS);
        assert_eq!(PredictionFile::parse(&buf[..]).unwrap(), f);
    }
}
