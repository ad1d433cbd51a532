//! Series file format.
//!
//! Line 1 header: `nodes=<N> steps=<L> rate_min=<R>`. Lines 2..N+1 hold L
//! comma-separated values per node; an empty cell marks a missing
//! observation. A companion `.adj` file holds an NxN adjacency, one
//! comma-separated row per line. Writing uses the shortest decimal form
//! that round-trips each f64, so write∘read is the identity on canonical
//! files.

use std::fs;
use std::path::Path;

use crate::data::series::TrafficSeries;
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

pub fn write_series(series: &TrafficSeries, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "nodes={} steps={} rate_min={}\n",
        series.node_count, series.step_count, series.sample_rate_minutes
    ));
    for node in 0..series.node_count {
        let mut cells = Vec::with_capacity(series.step_count);
        for step in 0..series.step_count {
            if series.observed(node, step) {
                let v = series.values.get(node, step);
                if !v.is_finite() {
                    return Err(Error::Data(format!(
                        "non-finite observed value at node {node}, step {step}"
                    )));
                }
                cells.push(format!("{v}"));
            } else {
                cells.push(String::new());
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<TrafficSeries> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let (n, l, rate) = parse_header(header)?;

    let mut values = Matrix::zeros(n, l);
    let mut mask = vec![false; n * l];
    let mut rows_read = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if rows_read == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {n} data rows, found extra content"),
            });
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != l {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {l} cells, found {}", cells.len()),
            });
        }
        for (step, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric cell '{cell}' at column {}", step + 1),
            })?;
            values.set(rows_read, step, v);
            mask[rows_read * l + step] = true;
        }
        rows_read += 1;
    }
    if rows_read != n {
        return Err(Error::Parse {
            line: rows_read + 1,
            message: format!("expected {n} data rows, found {rows_read}"),
        });
    }
    Ok(TrafficSeries {
        node_count: n,
        step_count: l,
        sample_rate_minutes: rate,
        values,
        missing_mask: mask,
    })
}

fn parse_header(header: &str) -> Result<(usize, usize, u32)> {
    let mut n = None;
    let mut l = None;
    let mut rate = None;
    for part in header.split_whitespace() {
        let (key, value) = part.split_once('=').ok_or(Error::Parse {
            line: 1,
            message: format!("malformed header field '{part}'"),
        })?;
        let parsed: u64 = value.parse().map_err(|_| Error::Parse {
            line: 1,
            message: format!("non-numeric header value '{value}'"),
        })?;
        match key {
            "nodes" => n = Some(parsed as usize),
            "steps" => l = Some(parsed as usize),
            "rate_min" => rate = Some(parsed as u32),
            other => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unknown header field '{other}'"),
                })
            }
        }
    }
    match (n, l, rate) {
        (Some(n), Some(l), Some(r)) if n > 0 && l > 0 && r > 0 => Ok((n, l, r)),
        _ => Err(Error::Parse {
            line: 1,
            message: "header must be 'nodes=<N> steps=<L> rate_min=<R>' with positive values"
                .into(),
        }),
    }
}

/// Write an NxN adjacency, one comma-separated row per line.
pub fn write_adjacency(adj: &Matrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in 0..adj.rows() {
        let cells: Vec<String> = (0..adj.cols()).map(|c| format!("{}", adj.get(r, c))).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_adjacency(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.parse::<f64>()).collect();
        rows.push(row.map_err(|_| Error::Parse {
            line: idx + 1,
            message: "non-numeric adjacency cell".into(),
        })?);
    }
    Matrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::synth_traffic;

    #[test]
    fn minimal_file_parses() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "nodes=2 steps=3 rate_min=5\n1,2,3\n4,5,6\n").unwrap();
        let s = read_series(&p).unwrap();
        assert_eq!(s.values.shape(), (2, 3));
        assert_eq!(s.sample_rate_minutes, 5);
        assert_eq!(s.values.get(1, 2), 6.0);
        assert!(s.fully_observed());
    }

    #[test]
    fn empty_cell_sets_mask_false() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "nodes=2 steps=3 rate_min=5\n1,2,3\n4,,6\n").unwrap();
        let s = read_series(&p).unwrap();
        assert!(!s.observed(1, 1));
        assert!(s.observed(1, 0));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(&p, "nodes=2 steps=3 rate_min=5\n1,2,3\n4,x,6\n").unwrap();
        let err = read_series(&p).unwrap_err();
        assert!(err.to_string().contains("line 3"), "got {err}");

        fs::write(&p, "nodes=2 steps=3 rate_min=5\n1,2\n4,5,6\n").unwrap();
        let err = read_series(&p).unwrap_err();
        assert!(err.to_string().contains("line 2"), "got {err}");

        fs::write(&p, "nodes=two steps=3 rate_min=5\n").unwrap();
        let err = read_series(&p).unwrap_err();
        assert!(err.to_string().contains("line 1"), "got {err}");
    }

    #[test]
    fn write_then_read_is_lossless_and_canonical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        let (mut series, adj) = synth_traffic(4, 96, 5, 0.3).unwrap();
        // Punch a hole to exercise the missing marker.
        series.missing_mask[7] = false;
        write_series(&series, &p1).unwrap();
        let back = read_series(&p1).unwrap();
        write_series(&back, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        for node in 0..4 {
            for step in 0..96 {
                if back.observed(node, step) {
                    assert_eq!(back.values.get(node, step), series.values.get(node, step));
                }
            }
        }
        let pa = dir.path().join("a.adj");
        write_adjacency(&adj, &pa).unwrap();
        let adj_back = read_adjacency(&pa).unwrap();
        assert_eq!(adj, adj_back);
    }
}
