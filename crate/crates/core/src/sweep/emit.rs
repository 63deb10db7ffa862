use serde_json::{Map, Value};

use super::config::Format;
use super::run::ResultRow;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize rows under `columns` (axes, outputs, `status`).
pub fn emit(columns: &[String], rows: &[ResultRow], format: Format) -> Vec<u8> {
    match format {
        Format::Csv => emit_csv(columns, rows),
        Format::Json => emit_json(columns, rows),
    }
}

fn cells(row: &ResultRow) -> impl Iterator<Item = Option<f64>> + '_ {
    row.axes.iter().map(|&x| Some(x)).chain(row.values.iter().copied())
}

pub fn emit_csv(columns: &[String], rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for row in rows {
        let mut record: Vec<String> = cells(row)
            .map(|c| c.filter(|x| x.is_finite()).map(format_float).unwrap_or_default())
            .collect();
        record.push(row.status.as_str().to_string());
        w.write_record(&record).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn emit_json(columns: &[String], rows: &[ResultRow]) -> Vec<u8> {
    let objects: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, cell) in columns.iter().zip(cells(row)) {
                obj.insert(name.clone(), cell.map_or(Value::Null, Value::from));
            }
            obj.insert("status".into(), Value::from(row.status.as_str()));
            Value::Object(obj)
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&objects).expect("serializable");
    out.push(b'\n');
    out
}
