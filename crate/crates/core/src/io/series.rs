use std::path::Path;

use crate::error::{HgfError, Result};
use crate::network::NodeKind;

/// One observed input stream and the node it feeds.
#[derive(Debug, Clone, PartialEq)]
pub struct InputColumn {
    pub name: String,
    pub node: usize,
    /// `None` marks a missing observation.
    pub values: Vec<Option<f64>>,
}

/// Observations u (one column per input node), optional time stamps and
/// optional binary responses y.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputSeries {
    pub time: Option<Vec<f64>>,
    pub columns: Vec<InputColumn>,
    pub actions: Option<Vec<u8>>,
}

impl InputSeries {
    /// A single fully observed input stream feeding `node`.
    pub fn single(node: usize, values: &[f64]) -> Self {
        Self {
            time: None,
            columns: vec![InputColumn {
                name: "u".into(),
                node,
                values: values.iter().copied().map(Some).collect(),
            }],
            actions: None,
        }
    }

    pub fn with_actions(mut self, actions: Vec<u8>) -> Self {
        self.actions = Some(actions);
        self
    }

    pub fn with_time(mut self, time: Vec<f64>) -> Self {
        self.time = Some(time);
        self
    }

    /// Reassigns input columns to nodes, in column order.
    pub fn with_input_nodes(mut self, nodes: &[usize]) -> Result<Self> {
        if nodes.len() != self.columns.len() {
            return Err(HgfError::Validation(format!(
                "{} input columns but {} input nodes",
                self.columns.len(),
                nodes.len()
            )));
        }
        for (col, &node) in self.columns.iter_mut().zip(nodes) {
            col.node = node;
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.columns
            .first()
            .map(|c| c.values.len())
            .or_else(|| self.time.as_ref().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Observations present at `row` as (node, value) pairs.
    pub fn observations_at(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.columns
            .iter()
            .filter_map(move |c| c.values[row].map(|u| (c.node, u)))
    }

    pub fn time_at(&self, row: usize) -> Option<f64> {
        self.time.as_ref().map(|t| t[row])
    }

    /// Δt before `row`: the time difference when stamps exist, 1 otherwise.
    pub fn dt(&self, row: usize) -> f64 {
        match &self.time {
            Some(t) if row > 0 => t[row] - t[row - 1],
            _ => 1.0,
        }
    }

    /// Checks lengths, time monotonicity, and binary columns against node kinds.
    pub fn validate(&self, kinds: &[NodeKind]) -> Result<()> {
        let n = self.len();
        for c in &self.columns {
            if c.values.len() != n {
                return Err(HgfError::Alignment(format!(
                    "column `{}` has {} rows, expected {n}",
                    c.name,
                    c.values.len()
                )));
            }
            let kind = kinds.get(c.node).ok_or(HgfError::IndexOutOfRange {
                index: c.node,
                len: kinds.len(),
            })?;
            for (row, v) in c.values.iter().enumerate() {
                if let Some(u) = *v {
                    if !u.is_finite() || (*kind == NodeKind::Binary && u != 0.0 && u != 1.0) {
                        return Err(HgfError::Ingestion {
                            row: row + 1,
                            message: format!("column `{}`: value {u} invalid for a {} node", c.name, kind.as_str()),
                        });
                    }
                }
            }
        }
        if let Some(t) = &self.time {
            if t.len() != n {
                return Err(HgfError::Alignment(format!("time has {} rows, expected {n}", t.len())));
            }
            if let Some(row) = (1..t.len()).find(|&i| !(t[i] > t[i - 1])) {
                return Err(HgfError::Ingestion {
                    row: row + 1,
                    message: format!("time must be strictly increasing ({} after {})", t[row], t[row - 1]),
                });
            }
        }
        if let Some(y) = &self.actions {
            if y.len() != n {
                return Err(HgfError::Alignment(format!("y has {} rows, expected {n}", y.len())));
            }
        }
        Ok(())
    }
}

fn parse_cell(cell: &str) -> std::result::Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") || cell.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|e| format!("`{cell}`: {e}"))
}

/// Reads a header-first CSV with columns `time` (optional), `u` / `u0`, `u1`, …
/// (inputs, assigned to nodes 0, 1, … in order) and `y` (optional responses).
/// When `input_kinds` is given, binary inputs are checked to be 0 or 1.
pub fn read_timeseries_csv<P: AsRef<Path>>(path: P, input_kinds: Option<&[NodeKind]>) -> Result<InputSeries> {
    let file = std::fs::File::open(path)?;
    read_timeseries(file, input_kinds)
}

pub fn read_timeseries<R: std::io::Read>(reader: R, input_kinds: Option<&[NodeKind]>) -> Result<InputSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let time_col = headers.iter().position(|h| h == "time");
    let y_col = headers.iter().position(|h| h == "y");
    let input_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h == "u" || (h.starts_with('u') && h[1..].parse::<usize>().is_ok()))
        .map(|(i, _)| i)
        .collect();
    if input_cols.is_empty() {
        return Err(HgfError::Ingestion {
            row: 0,
            message: "no input column (`u`, `u0`, `u1`, ...) in header".into(),
        });
    }

    let mut series = InputSeries {
        time: time_col.map(|_| Vec::new()),
        columns: input_cols
            .iter()
            .enumerate()
            .map(|(node, &i)| InputColumn {
                name: headers[i].to_string(),
                node,
                values: Vec::new(),
            })
            .collect(),
        actions: y_col.map(|_| Vec::new()),
    };

    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let cell = |i: usize| parse_cell(record.get(i).unwrap_or("")).map_err(|message| HgfError::Ingestion { row, message });
        if let (Some(i), Some(t)) = (time_col, series.time.as_mut()) {
            t.push(cell(i)?.ok_or_else(|| HgfError::Ingestion {
                row,
                message: "missing time value".into(),
            })?);
        }
        for (col, &i) in series.columns.iter_mut().zip(&input_cols) {
            col.values.push(cell(i)?);
        }
        if let (Some(i), Some(y)) = (y_col, series.actions.as_mut()) {
            match cell(i)? {
                Some(v) if v == 0.0 || v == 1.0 => y.push(v as u8),
                other => {
                    return Err(HgfError::Ingestion {
                        row,
                        message: format!("response y must be 0 or 1, got {other:?}"),
                    })
                }
            }
        }
    }

    let kinds: Vec<NodeKind> = match input_kinds {
        Some(k) => k.to_vec(),
        None => vec![NodeKind::Continuous; series.columns.len()],
    };
    if kinds.len() < series.columns.len() {
        return Err(HgfError::Validation(format!(
            "{} input columns but kinds for only {}",
            series.columns.len(),
            kinds.len()
        )));
    }
    series.validate(&kinds)?;
    Ok(series)
}
