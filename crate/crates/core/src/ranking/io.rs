//! CSV score, trace and per-node value files.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::graph::LinkGraph;

use super::{ConvergenceTrace, RankError};

/// 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> RankError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RankError::Io(io),
        other => RankError::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `external_id,score` rows in internal index order.
pub fn write_scores<W: Write>(g: &LinkGraph, scores: &[f64], w: W) -> Result<(), RankError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["external_id", "score"])
        .map_err(csv_err)?;
    for (id, s) in g.external_ids().iter().zip(scores) {
        out.write_record([id.to_string(), fmt_f64(*s)])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `iteration,l1_residual,rel_error_vs_reference`; the last column is
/// empty when no reference was supplied.
pub fn write_trace<W: Write>(trace: &ConvergenceTrace, w: W) -> Result<(), RankError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "l1_residual", "rel_error_vs_reference"])
        .map_err(csv_err)?;
    for rec in &trace.records {
        out.write_record([
            rec.iteration.to_string(),
            fmt_f64(rec.l1_residual),
            rec.rel_error.map(fmt_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a two-column `external_id,value` CSV with a header row. Also reads
/// score files.
pub fn read_node_values<R: Read>(r: R) -> Result<BTreeMap<u64, f64>, RankError> {
    read_scores(r).map(|rows| rows.into_iter().collect())
}

/// Reads `external_id,score` rows in file order.
pub fn read_scores<R: Read>(r: R) -> Result<Vec<(u64, f64)>, RankError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| RankError::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(RankError::Parse {
                line,
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let id = rec[0].parse::<u64>().map_err(|_| RankError::Parse {
            line,
            message: format!("bad node id {:?}", &rec[0]),
        })?;
        let value = rec[1]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| RankError::Parse {
                line,
                message: format!("bad value {:?}", &rec[1]),
            })?;
        rows.push((id, value));
    }
    Ok(rows)
}
