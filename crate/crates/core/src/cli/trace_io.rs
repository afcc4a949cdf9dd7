//! CSV form of a [`Trace`]: one header row of column names, then one row per
//! sample with every value in `{:.16e}` form (17 significant digits, which
//! round-trips any f64 exactly).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::Trace;

pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ctx = |what: &str| format!("{what} {}", path.display());
    let file = File::create(path).map_err(|e| Error::io(ctx("creating"), e))?;
    let mut w: csv::Writer<BufWriter<File>> = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::io(ctx("writing"), e.into());
    w.write_record(trace.names()).map_err(csv_err)?;
    let columns: Vec<&[f64]> = trace
        .names()
        .iter()
        .map(|n| trace.column(n).expect("own column"))
        .collect();
    let mut cells: Vec<String> = Vec::with_capacity(columns.len());
    for k in 0..trace.len() {
        cells.clear();
        cells.extend(columns.iter().map(|c| format!("{:.16e}", c[k])));
        w.write_record(&cells).map_err(csv_err)?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(ctx("writing"), e.into_error()))?;
    inner.flush().map_err(|e| Error::io(ctx("writing"), e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let ctx = |what: &str| format!("{what} {}", path.display());
    let file = File::open(path).map_err(|e| Error::io(ctx("opening"), e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let csv_err = |e: csv::Error| Error::io(ctx("reading"), e.into());
    let names: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut trace = Trace::new(names)?;
    let mut row = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        row.clear();
        for cell in record.iter() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::config(format!(
                    "{}: row {}: `{cell}` is not a number",
                    path.display(),
                    line + 1
                ))
            })?;
            row.push(v);
        }
        trace.push_row(&row)?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario, ControllerMode, Scenario};

    #[test]
    fn awkward_values_round_trip_bit_exactly() {
        let names = ["t", "a", "b"].map(String::from).to_vec();
        let mut tr = Trace::new(names).unwrap();
        let values = [
            0.1,
            1.0 / 3.0,
            -2.2250738585072014e-308,
            5e-324,
            f64::MAX,
            -0.0,
            1e16 + 2.0,
            std::f64::consts::PI,
            0.30000000000000004,
        ];
        for w in values.windows(3) {
            tr.push_row(w).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace(&tr, &p).unwrap();
        let back = read_trace(&p).unwrap();
        assert_eq!(back.names(), tr.names());
        for n in tr.names() {
            let a: Vec<u64> = tr.column(n).unwrap().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = back.column(n).unwrap().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let tr = Trace::new(vec!["t".into(), "q1.0".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_trace(&tr, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "t,q1.0\n");
        assert!(read_trace(&p).unwrap().is_empty());
    }

    #[test]
    fn simulated_trace_round_trips() {
        let mut sc = Scenario::standard(ControllerMode::Adaptive);
        sc.duration = 0.5;
        let tr = run_scenario(&sc).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.csv");
        write_trace(&tr, &p).unwrap();
        assert_eq!(read_trace(&p).unwrap(), tr);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = write_trace(&Trace::new(vec![]).unwrap(), "/nonexistent-dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"), "{err}");
        let err = read_trace("/nonexistent-dir/y.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/y.csv"), "{err}");
    }
}
