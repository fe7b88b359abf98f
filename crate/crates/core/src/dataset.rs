//! JSONL persistence for [`ExampleRecord`] datasets.
//!
//! One record per line, no trailing commas, blank lines ignored. Read
//! errors carry the 1-based line number so malformed corpora are easy to
//! fix by hand.

use crate::mutgen::ExampleRecord;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ExampleRecord>, DatasetError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ExampleRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
                line: i + 1,
                detail: e.to_string(),
            })?;
        record.validate().map_err(|detail| DatasetError::Malformed {
            line: i + 1,
            detail,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_jsonl<W: Write>(mut writer: W, records: &[ExampleRecord]) -> Result<(), DatasetError> {
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_path(path: &Path) -> Result<Vec<ExampleRecord>, DatasetError> {
    read_jsonl(BufReader::new(File::open(path)?))
}

pub fn write_path(path: &Path, records: &[ExampleRecord]) -> Result<(), DatasetError> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_jsonl(&mut writer, records)?;
    writer.flush()?;
    Ok(())
}

pub fn to_jsonl_string(records: &[ExampleRecord]) -> String {
    let mut out = Vec::new();
    write_jsonl(&mut out, records).expect("writing to memory cannot fail");
    String::from_utf8(out).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mutgen::{augment, AugmentConfig, Label, MisalignKind};

    #[test]
    fn round_trips_an_augmented_corpus() {
        let dataset = fixtures::separation_corpus(4);
        let out = augment(&dataset, &AugmentConfig::default()).unwrap();
        let text = to_jsonl_string(&out);
        let back = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(out, back);
        assert_eq!(text.lines().count(), out.len());
    }

    #[test]
    fn round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let records = fixtures::separation_corpus(3);
        write_path(&path, &records).unwrap();
        assert_eq!(read_path(&path).unwrap(), records);
    }

    #[test]
    fn skips_blank_lines() {
        let records = fixtures::separation_corpus(2);
        let text = format!(
            "\n{}\n\n{}\n",
            serde_json::to_string(&records[0]).unwrap(),
            serde_json::to_string(&records[1]).unwrap()
        );
        assert_eq!(read_jsonl(text.as_bytes()).unwrap(), records);
    }

    #[test]
    fn reports_the_failing_line() {
        let good = serde_json::to_string(&fixtures::separation_corpus(1)[0]).unwrap();
        let text = format!("{good}\nnot json\n");
        match read_jsonl(text.as_bytes()) {
            Err(DatasetError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_incoherent_label_and_kind() {
        let mut record = fixtures::separation_corpus(1)[0].clone();
        record.misalign_kind = Some(MisalignKind::Equality);
        let text = serde_json::to_string(&record).unwrap();
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(DatasetError::Malformed { line: 1, .. })
        ));

        let mut record = fixtures::separation_corpus(1)[0].clone();
        record.label = Label::Misaligned;
        let text = serde_json::to_string(&record).unwrap();
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(DatasetError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = r#"{"id":"a","group_id":"g","informal":"i","formal":"theorem t : 1 = 1 :=","label":"aligned","extra":1}"#;
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(DatasetError::Malformed { line: 1, .. })
        ));
    }
}
