//! Reading and writing samples.
//!
//! CSV files have a header with a column `r`, optional `t` and `z` columns
//! (0/1 or true/false) and then the payload columns in row-major order.
//! JSON-lines files hold one `{"r": .., "t": .., "z": .., "y": {..}}`
//! record per line, where `y` carries its own space. Row numbers in errors
//! count data rows from 1.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use geordd::spaces::WireObject;
use geordd::{Error, MetricObject, RddSample, Record, Result};
use serde::{Deserialize, Serialize};

use crate::space_arg::SpaceArg;

fn csv_error(e: csv::Error, row: usize) -> Error {
    Error::Parse {
        row,
        column: String::new(),
        message: e.to_string(),
    }
}

fn parse_flag(raw: &str, row: usize, column: &str) -> Result<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Parse {
            row,
            column: column.into(),
            message: format!("expected 0/1, got `{other}`"),
        }),
    }
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|e| Error::Parse {
        row,
        column: column.into(),
        message: format!("`{raw}`: {e}"),
    })
}

/// Shifts record indices in sample errors to 1-based data rows.
fn renumber(e: Error) -> Error {
    match e {
        Error::InvariantViolation { row, detail } => Error::InvariantViolation {
            row: row + 1,
            detail,
        },
        Error::MixedSpaces { row } => Error::MixedSpaces { row: row + 1 },
        other => other,
    }
}

pub fn read_csv<R: Read>(input: R, space_arg: SpaceArg, cutoff: f64) -> Result<RddSample> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(e, 0))?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let r_col = find("r").ok_or_else(|| Error::Parse {
        row: 0,
        column: "r".into(),
        message: "header has no `r` column".into(),
    })?;
    let t_col = find("t");
    let z_col = find("z");
    let payload: Vec<usize> = (0..headers.len())
        .filter(|&i| i != r_col && Some(i) != t_col && Some(i) != z_col)
        .collect();
    let space = space_arg.space(payload.len())?;
    let mut records = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let line = k + 1;
        let row = row.map_err(|e| csv_error(e, line))?;
        let r = parse_number(&row[r_col], line, "r")?;
        let mut values = Vec::with_capacity(payload.len());
        for &i in &payload {
            values.push(parse_number(&row[i], line, &headers[i])?);
        }
        let y = space_arg
            .object(space, values)
            .map_err(|e| Error::InvariantViolation {
                row: line,
                detail: e.to_string(),
            })?;
        let mut rec = Record::new(r, y);
        if let Some(i) = t_col {
            rec = rec.with_treatment(parse_flag(&row[i], line, "t")?);
        }
        if let Some(i) = z_col {
            rec = rec.with_assignment(parse_flag(&row[i], line, "z")?);
        }
        records.push(rec);
    }
    RddSample::new(records, cutoff).map_err(renumber)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Flag {
    Bool(bool),
    Int(u8),
}

#[derive(Deserialize)]
struct JsonRecordIn {
    r: f64,
    #[serde(default)]
    t: Option<Flag>,
    #[serde(default)]
    z: Option<Flag>,
    y: WireObject,
}

#[derive(Serialize)]
struct JsonRecordOut {
    r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<u8>,
    y: WireObject,
}

fn flag(f: Option<Flag>, row: usize, column: &str) -> Result<Option<bool>> {
    match f {
        None => Ok(None),
        Some(Flag::Bool(b)) => Ok(Some(b)),
        Some(Flag::Int(0)) => Ok(Some(false)),
        Some(Flag::Int(1)) => Ok(Some(true)),
        Some(Flag::Int(v)) => Err(Error::Parse {
            row,
            column: column.into(),
            message: format!("expected 0/1, got {v}"),
        }),
    }
}

pub fn read_jsonl<R: Read>(input: R, cutoff: f64) -> Result<RddSample> {
    let mut records = Vec::new();
    let mut line_no = 0;
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        line_no += 1;
        let raw: JsonRecordIn = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row: line_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let y = MetricObject::try_from(raw.y).map_err(|e| Error::InvariantViolation {
            row: line_no,
            detail: e.to_string(),
        })?;
        let mut rec = Record::new(raw.r, y);
        rec.t = flag(raw.t, line_no, "t")?;
        rec.z = flag(raw.z, line_no, "z")?;
        records.push(rec);
    }
    RddSample::new(records, cutoff).map_err(renumber)
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl" | "ndjson" | "json")
    )
}

/// Reads a CSV or, by extension (`.jsonl`, `.ndjson`, `.json`), a JSON-lines
/// file. CSV input needs a space descriptor.
pub fn ingest(path: &Path, space: Option<SpaceArg>, cutoff: f64) -> Result<RddSample> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if is_jsonl(path) {
        read_jsonl(file, cutoff)
    } else {
        let space = space.ok_or_else(|| Error::InvalidConfig("CSV input needs --space".into()))?;
        read_csv(file, space, cutoff)
    }
}

fn fmt_flag(b: Option<bool>) -> Option<String> {
    b.map(|v| u8::from(v).to_string())
}

/// Writes a sample as CSV under the convention that reads it back exactly
/// (sphere coordinates, not shares, for compositions).
pub fn write_csv<W: Write>(sample: &RddSample, out: W) -> Result<SpaceArg> {
    let arg = SpaceArg::for_space(sample.space());
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let width = sample.space().payload_len();
    let mut header = vec!["r".to_string()];
    if sample.has_treatment() {
        header.push("t".into());
    }
    if sample.has_assignment() {
        header.push("z".into());
    }
    header.extend((0..width).map(|k| format!("y{k}")));
    w.write_record(&header).map_err(io)?;
    for rec in sample.records() {
        let mut row = vec![format!("{}", rec.r)];
        row.extend(fmt_flag(rec.t));
        row.extend(fmt_flag(rec.z));
        row.extend(rec.y.data().iter().map(|v| format!("{v}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(arg)
}

pub fn write_jsonl<W: Write>(sample: &RddSample, mut out: W) -> Result<()> {
    for rec in sample.records() {
        let line = JsonRecordOut {
            r: rec.r,
            t: rec.t.map(u8::from),
            z: rec.z.map(u8::from),
            y: WireObject::from(rec.y.clone()),
        };
        let s = serde_json::to_string(&line).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{s}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_row_euclidean() {
        let text = "r,y\n-0.5,1.0\n0.1,2.0\n0.7,3\n";
        let s = read_csv(text.as_bytes(), SpaceArg::Euclid, 0.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.records()[2].y.data(), &[3.0]);
    }

    #[test]
    fn non_monotone_quantiles_name_the_row() {
        let text = "r,q0,q1,q2\n-0.5,0,1,2\n0.2,0,2,1\n";
        let err = read_csv(text.as_bytes(), SpaceArg::Wass { support: None }, 0.0).unwrap_err();
        assert!(
            matches!(err, Error::InvariantViolation { row: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn bad_number_is_a_parse_error() {
        let text = "r,t,y\n-0.5,0,1\n0.2,1,abc\n";
        let err = read_csv(text.as_bytes(), SpaceArg::Euclid, 0.0).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (2, "y")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_spaces_in_jsonl() {
        let text = concat!(
            r#"{"r":-0.1,"y":{"space":"Euclidean","shape":[1],"data":[1.0]}}"#,
            "\n",
            r#"{"r":0.1,"y":{"space":"Euclidean","shape":[2],"data":[1.0,2.0]}}"#,
            "\n"
        );
        assert_eq!(
            read_jsonl(text.as_bytes(), 0.0).unwrap_err(),
            Error::MixedSpaces { row: 2 }
        );
    }

    #[test]
    fn flags_accept_bools_and_bits() {
        let text = concat!(
            r#"{"r":-0.1,"t":false,"z":0,"y":{"space":"Euclidean","shape":[1],"data":[1.0]}}"#,
            "\n",
            r#"{"r":0.1,"t":1,"z":true,"y":{"space":"Euclidean","shape":[1],"data":[1.0]}}"#,
        );
        let s = read_jsonl(text.as_bytes(), 0.0).unwrap();
        assert_eq!(s.records()[1].t, Some(true));
        assert_eq!(s.records()[0].z, Some(false));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let recs = (0..5)
            .map(|i| {
                let r = -0.3 + 0.17 * i as f64;
                let z =
                    MetricObject::composition_from_shares(&[0.1 + 0.1 * i as f64, 0.3, 1.0 / 3.0])
                        .unwrap();
                Record::new(r, z).with_treatment(r >= 0.0)
            })
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        let mut buf = Vec::new();
        let arg = write_csv(&s, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), arg, 0.0).unwrap();
        assert_eq!(back, s);
    }
}
