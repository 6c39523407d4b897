//! Long-format CSV sequences: one row per timestep.
//!
//! ```text
//! seq_id,t,label,f0,f1,...
//! 0,0,3,0.25,-1.5
//! 0,1,3,0.5,-1.25
//! ```
//!
//! Values are written with 17 significant digits so reading back is exact.
//! An empty `label` field means "unlabelled".

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SequenceSample;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub id_column: String,
    pub time_column: String,
    /// `None` when the file carries no labels.
    pub label_column: Option<String>,
    /// Every column whose name starts with this prefix is a feature, in file order.
    pub feature_prefix: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            id_column: "seq_id".into(),
            time_column: "t".into(),
            label_column: Some("label".into()),
            feature_prefix: "f".into(),
        }
    }
}

pub fn write_csv_sequences(path: &Path, samples: &[SequenceSample]) -> Result<()> {
    let features = samples.first().map(|s| s.features()).unwrap_or(0);
    let io = |e: csv::Error| Error::io(format!("writing {}", path.display()), e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["seq_id".to_string(), "t".into(), "label".into()];
    header.extend((0..features).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(io)?;
    for s in samples {
        if s.features() != features {
            return Err(Error::dim(features, s.features(), "csv sample features"));
        }
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        for t in 0..s.len() {
            let mut rec = vec![s.id.to_string(), t.to_string(), label.clone()];
            rec.extend(s.values.row(t).iter().map(|v| format!("{v:.16e}")));
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

struct Row {
    line: u64,
    t: usize,
    label: Option<usize>,
    values: Vec<f64>,
}

/// Reads sequences grouped by id (ascending), each ordered by timestep.
pub fn load_csv_sequences(path: &Path, schema: &CsvSchema) -> Result<Vec<SequenceSample>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(format!("opening {}", path.display()), io),
            other => parse_err(0, format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("column {name:?} not found in header")))
    };
    let id_col = find(&schema.id_column)?;
    let t_col = find(&schema.time_column)?;
    let label_col = schema.label_column.as_deref().map(find).transpose()?;
    let feature_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(i, h)| {
            h.starts_with(&schema.feature_prefix)
                && *i != id_col
                && *i != t_col
                && Some(*i) != label_col
        })
        .map(|(i, _)| i)
        .collect();
    if feature_cols.is_empty() {
        return Err(parse_err(1, "no feature columns in header".into()));
    }

    let mut groups: BTreeMap<usize, Vec<Row>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let int = |col: usize, what: &str| -> Result<usize> {
            rec[col]
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("bad {what} {:?}", &rec[col])))
        };
        let id = int(id_col, "sequence id")?;
        let t = int(t_col, "timestep")?;
        let label = match label_col {
            Some(c) if !rec[c].trim().is_empty() => Some(int(c, "label")?),
            _ => None,
        };
        let mut values = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let v: f64 = rec[c]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad value {:?} in column {}", &rec[c], &headers[c])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value in column {}", &headers[c])));
            }
            values.push(v);
        }
        groups.entry(id).or_default().push(Row {
            line,
            t,
            label,
            values,
        });
    }
    if groups.is_empty() {
        return Err(parse_err(1, "file contains no data rows".into()));
    }

    let d = feature_cols.len();
    let mut out = Vec::with_capacity(groups.len());
    for (id, mut rows) in groups {
        rows.sort_by_key(|r| r.t);
        for (expected, r) in rows.iter().enumerate() {
            if r.t != expected {
                return Err(parse_err(
                    r.line,
                    format!("sequence {id}: non-contiguous timestep {} (expected {expected})", r.t),
                ));
            }
            if r.label != rows[0].label {
                return Err(parse_err(r.line, format!("sequence {id}: inconsistent label")));
            }
        }
        let label = rows[0].label;
        let data: Vec<f64> = rows.into_iter().flat_map(|r| r.values).collect();
        let len = data.len() / d;
        out.push(SequenceSample::new(id, label, Matrix::from_vec(len, d, data)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RandomStream;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut st = RandomStream::new(1);
        let samples: Vec<SequenceSample> = (0..6)
            .map(|i| {
                let len = 1 + i * 3;
                let v = (0..len * 3).map(|_| st.normal() * 1e3f64.powi(i as i32 - 3)).collect();
                let label = if i == 2 { None } else { Some(i % 3) };
                SequenceSample::new(i, label, Matrix::from_vec(len, 3, v).unwrap())
            })
            .collect();
        let p = dir.path().join("seq.csv");
        write_csv_sequences(&p, &samples).unwrap();
        let back = load_csv_sequences(&p, &CsvSchema::default()).unwrap();
        assert_eq!(back, samples);
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "empty.csv", "");
        assert!(matches!(
            load_csv_sequences(&p, &CsvSchema::default()),
            Err(Error::Parse { .. })
        ));
        let p = write(&dir, "header.csv", "seq_id,t,label,f0\n");
        assert!(load_csv_sequences(&p, &CsvSchema::default()).is_err());
    }

    #[test]
    fn shuffled_rows_are_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "a.csv", "seq_id,t,label,f0\n1,0,2,0.5\n1,1,2,0.75\n1,2,2,1\n");
        let b = write(&dir, "b.csv", "seq_id,t,label,f0\n1,2,2,1\n1,0,2,0.5\n1,1,2,0.75\n");
        let sa = load_csv_sequences(&a, &CsvSchema::default()).unwrap();
        assert_eq!(sa, load_csv_sequences(&b, &CsvSchema::default()).unwrap());
        assert_eq!(sa[0].values.column(0), vec![0.5, 0.75, 1.0]);
        assert_eq!(sa[0].label, Some(2));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let gap = write(&dir, "gap.csv", "seq_id,t,label,f0\n0,0,1,1.0\n0,2,1,2.0\n");
        match load_csv_sequences(&gap, &CsvSchema::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("non-contiguous"));
            }
            other => panic!("{other:?}"),
        }
        let bad = write(&dir, "bad.csv", "seq_id,t,label,f0\n0,0,1,1.0\n0,1,1,abc\n");
        assert!(matches!(
            load_csv_sequences(&bad, &CsvSchema::default()),
            Err(Error::Parse { line: 3, .. })
        ));
        let nolabel = write(&dir, "nl.csv", "seq_id,t,f0\n0,0,1.0\n");
        assert!(load_csv_sequences(&nolabel, &CsvSchema::default()).is_err());
        let schema = CsvSchema {
            label_column: None,
            ..Default::default()
        };
        assert_eq!(load_csv_sequences(&nolabel, &schema).unwrap()[0].label, None);
        assert!(matches!(
            load_csv_sequences(&dir.path().join("missing.csv"), &schema),
            Err(Error::Io { .. })
        ));
    }
}
