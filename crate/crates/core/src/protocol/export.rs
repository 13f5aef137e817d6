//! CSV schemas shared with the statistics: accuracy rows
//! `listener,group,condition,accuracy_percent` (condition `zero` or `few`) and
//! quality rows `listener,group,variant,quality_percent` (variant `orig` or `anon`).

use std::io::{Read, Write};

use super::scoring::{score_discrimination, score_quality};
use super::session::{ResponseRecord, SessionPlan};
use super::{Condition, ProtocolError, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Row {
    pub listener: String,
    pub group: String,
    pub condition: Condition,
    pub accuracy_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table5Row {
    pub listener: String,
    pub group: String,
    pub variant: Variant,
    pub quality_percent: f64,
}

const TABLE3_HEADER: [&str; 4] = ["listener", "group", "condition", "accuracy_percent"];
const TABLE5_HEADER: [&str; 4] = ["listener", "group", "variant", "quality_percent"];

pub fn export_responses(
    responses: &[ResponseRecord],
    plans: &[SessionPlan],
) -> Result<(Vec<Table3Row>, Vec<Table5Row>), ProtocolError> {
    let t3 = score_discrimination(responses, plans)?
        .into_iter()
        .map(|c| Table3Row {
            listener: c.listener_id,
            group: c.group,
            condition: c.condition,
            accuracy_percent: c.accuracy_percent,
        })
        .collect();
    let t5 = score_quality(responses, plans)?
        .into_iter()
        .map(|c| Table5Row {
            listener: c.listener_id,
            group: c.group,
            variant: c.variant,
            quality_percent: c.quality_percent,
        })
        .collect();
    Ok((t3, t5))
}

fn csv_err(e: csv::Error) -> ProtocolError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ProtocolError::Io(io),
        other => ProtocolError::Format(format!("csv: {other:?}")),
    }
}

fn write_rows<W: Write>(
    writer: W,
    header: [&str; 4],
    rows: impl Iterator<Item = [String; 4]>,
) -> Result<(), ProtocolError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read>(reader: R, header: [&str; 4]) -> Result<Vec<(usize, csv::StringRecord)>, ProtocolError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = r.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(ProtocolError::Format(format!("expected header {}, found {:?}", header.join(","), found)));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 4 {
            return Err(ProtocolError::Format(format!("line {}: expected 4 fields", i + 2)));
        }
        rows.push((i + 2, rec));
    }
    Ok(rows)
}

fn percent(line: usize, field: &str) -> Result<f64, ProtocolError> {
    match field.parse::<f64>() {
        Ok(v) if (0.0..=100.0).contains(&v) => Ok(v),
        _ => Err(ProtocolError::Format(format!("line {line}: bad percentage {field:?}"))),
    }
}

pub fn write_table3<W: Write>(rows: &[Table3Row], writer: W) -> Result<(), ProtocolError> {
    write_rows(
        writer,
        TABLE3_HEADER,
        rows.iter().map(|r| {
            [r.listener.clone(), r.group.clone(), r.condition.csv_label().into(), r.accuracy_percent.to_string()]
        }),
    )
}

pub fn write_table5<W: Write>(rows: &[Table5Row], writer: W) -> Result<(), ProtocolError> {
    write_rows(
        writer,
        TABLE5_HEADER,
        rows.iter().map(|r| {
            [r.listener.clone(), r.group.clone(), r.variant.csv_label().into(), r.quality_percent.to_string()]
        }),
    )
}

pub fn read_table3<R: Read>(reader: R) -> Result<Vec<Table3Row>, ProtocolError> {
    read_rows(reader, TABLE3_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(Table3Row {
                listener: r[0].to_string(),
                group: r[1].to_string(),
                condition: r[2].parse()?,
                accuracy_percent: percent(line, &r[3])?,
            })
        })
        .collect()
}

pub fn read_table5<R: Read>(reader: R) -> Result<Vec<Table5Row>, ProtocolError> {
    read_rows(reader, TABLE5_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(Table5Row {
                listener: r[0].to_string(),
                group: r[1].to_string(),
                variant: r[2].parse()?,
                quality_percent: percent(line, &r[3])?,
            })
        })
        .collect()
}
