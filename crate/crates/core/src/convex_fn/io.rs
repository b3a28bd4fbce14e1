use std::io::{Read, Write};

use super::{Extension, GridFunction};
use crate::error::{Error, Result};
use crate::extended::{format_extended, parse_extended};

/// Two-column `x,value` CSV with `inf` for `+∞`. A header row is written.
pub fn write_csv<W: Write>(f: &GridFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::InvalidArgument(format!("csv write: {e}"));
    w.write_record(["x", "value"]).map_err(io_err)?;
    for (x, v) in f.breakpoints().iter().zip(f.values()) {
        // `+ 0.0` turns `-0` into `0`.
        w.write_record([format!("{}", x + 0.0), format_extended(v + 0.0)])
            .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))
}

/// Reads the format of [`write_csv`]. A header row is optional; `#` lines are
/// comments. Rows are numbered from 1 in errors.
pub fn read_csv<R: Read>(input: R, left: Extension, right: Extension) -> Result<GridFunction> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                row,
                msg: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        let x = rec[0].parse::<f64>().ok().filter(|x| x.is_finite());
        let v = parse_extended(&rec[1]);
        match (x, v) {
            (Some(x), Some(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if row == 1 && x.is_none() => continue,
            _ => {
                return Err(Error::Parse {
                    row,
                    msg: format!("cannot parse ({}, {})", &rec[0], &rec[1]),
                })
            }
        }
    }
    GridFunction::new(xs, vs, left, right).map_err(|e| match e {
        Error::UnsortedBreakpoints { index } => Error::Parse {
            row: index + 1,
            msg: e.to_string(),
        },
        Error::NonConvex { index } => Error::Parse {
            row: index + 1,
            msg: e.to_string(),
        },
        e => e,
    })
}
