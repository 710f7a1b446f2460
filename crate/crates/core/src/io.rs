//! CSV and JSON serialization of grid functions.
//!
//! CSV files carry one row per active cell: `index,x[,y],<columns...>`.
//! The JSON form is the grid descriptor plus a flat row-major value array.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: GridDescriptor,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: &[f64]) -> Self {
        Self {
            grid: grid.descriptor(),
            values: values.to_vec(),
        }
    }
}

/// Write named columns of grid functions, active cells only.
pub fn write_columns<W: Write>(mut out: W, grid: &Grid, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut header = String::from("index,x");
    if grid.dim() == 2 {
        header.push_str(",y");
    }
    for (name, values) in columns {
        if values.len() != grid.len() {
            return Err(Error::InvalidValues(format!(
                "column `{name}` has wrong length"
            )));
        }
        header.push(',');
        header.push_str(name);
    }
    writeln!(out, "{header}")?;
    for idx in grid.active_indices() {
        let c = grid.center(idx);
        let mut line = format!("{idx},{}", c[0]);
        if grid.dim() == 2 {
            line.push_str(&format!(",{}", c[1]));
        }
        for (_, values) in columns {
            line.push_str(&format!(",{}", values[idx]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Read a single-valued grid function from CSV. The file needs a header with
/// an `index` column and a `value` column (falling back to the last column);
/// every active cell must appear exactly once.
pub fn read_values<R: Read>(input: R, grid: &Grid) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let index_col = headers
        .iter()
        .position(|h| h == "index")
        .ok_or_else(|| Error::InvalidValues("CSV header lacks an `index` column".into()))?;
    let value_col = headers
        .iter()
        .position(|h| h == "value")
        .unwrap_or(headers.len() - 1);
    if value_col == index_col {
        return Err(Error::InvalidValues("CSV needs a value column".into()));
    }
    let mut values = vec![f64::NAN; grid.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let idx: usize = field(index_col)
            .parse()
            .map_err(|_| Error::InvalidValues(format!("row {}: bad index", line + 1)))?;
        let v: f64 = field(value_col)
            .parse()
            .map_err(|_| Error::InvalidValues(format!("row {}: bad value", line + 1)))?;
        if idx >= grid.len() || !grid.is_active(idx) {
            return Err(Error::InvalidValues(format!(
                "row {}: index {idx} is not an active cell",
                line + 1
            )));
        }
        if !values[idx].is_nan() {
            return Err(Error::InvalidValues(format!("cell {idx} listed twice")));
        }
        values[idx] = v;
    }
    for idx in 0..grid.len() {
        if !grid.is_active(idx) {
            values[idx] = 0.0;
        } else if values[idx].is_nan() {
            return Err(Error::InvalidValues(format!("cell {idx} missing from CSV")));
        }
    }
    Ok(values)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidValues(format!("CSV: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_on_disc() {
        let g = Grid::disc([0.0, 0.0], 1.0, 8).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|i| if g.is_active(i) { i as f64 * 0.25 } else { 0.0 })
            .collect();
        let mut buf = Vec::new();
        write_columns(&mut buf, &g, &[("value", &values)]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,x,y,value\n"));
        assert_eq!(text.lines().count(), g.active_count() + 1);
        let back = read_values(buf.as_slice(), &g).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn missing_cells_are_rejected() {
        let g = Grid::interval(0.0, 1.0, 3).unwrap();
        let csv = "index,value\n0,1\n2,1\n";
        assert!(read_values(csv.as_bytes(), &g).is_err());
    }

    #[test]
    fn json_descriptor_round_trip() {
        let g = Grid::interval(-1.0, 1.0, 4).unwrap();
        let f = GridFunction::new(&g, &[1.0, 2.0, 3.0, 4.0]);
        let s = serde_json::to_string(&f).unwrap();
        let back: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(Grid::from_descriptor(&back.grid).unwrap(), g);
    }
}
