use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{HgfError, Result};
use crate::inference::{ComparisonReport, PosteriorSamples, RecoveryReport};
use crate::io::InputSeries;
use crate::network::{NodeKind, NodeRecord, Trajectory, TrajectoryRow};

pub const TRAJECTORY_COLUMNS: [&str; 12] = [
    "step",
    "time",
    "dt",
    "node",
    "kind",
    "mean",
    "precision",
    "expected_mean",
    "expected_precision",
    "observation",
    "surprise",
    "total_surprise",
];

/// Shortest decimal that parses back to the same f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

/// One row per step per node.
pub fn write_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    for row in &traj.rows {
        let total = format_f64(row.surprise());
        for (i, n) in row.nodes.iter().enumerate() {
            w.write_record([
                row.step.to_string(),
                format_f64(row.time),
                format_f64(row.dt),
                i.to_string(),
                n.kind.as_str().to_string(),
                format_f64(n.mean),
                format_f64(n.precision),
                format_f64(n.expected_mean),
                format_f64(n.expected_precision),
                format_opt(n.observation),
                format_opt(n.surprise),
                total.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Trajectory> {
    read_trajectory(File::open(path)?)
}

pub fn read_trajectory<R: Read>(reader: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| HgfError::Ingestion {
            row: 0,
            message: format!("trajectory file has no `{name}` column"),
        })
    };
    let [step, time, dt, node, kind, mean, precision, expected_mean, expected_precision, observation, surprise] = [
        "step",
        "time",
        "dt",
        "node",
        "kind",
        "mean",
        "precision",
        "expected_mean",
        "expected_precision",
        "observation",
        "surprise",
    ]
    .map(col);
    let (step, time, dt, node, kind) = (step?, time?, dt?, node?, kind?);
    let (mean, precision, expected_mean, expected_precision) = (mean?, precision?, expected_mean?, expected_precision?);
    let (observation, surprise) = (observation?, surprise?);

    let mut traj = Trajectory::default();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = |name: &str, v: &str| HgfError::Ingestion {
            row,
            message: format!("invalid {name} `{v}`"),
        };
        let num = |i: usize, name: &str| field(i).parse::<f64>().map_err(|_| bad(name, field(i)));
        let opt = |i: usize, name: &str| match field(i) {
            "" => Ok(None),
            v => v.parse::<f64>().map(Some).map_err(|_| bad(name, v)),
        };
        let s: usize = field(step).parse().map_err(|_| bad("step", field(step)))?;
        let n: usize = field(node).parse().map_err(|_| bad("node", field(node)))?;
        let record = NodeRecord {
            kind: field(kind).parse::<NodeKind>().map_err(|_| bad("kind", field(kind)))?,
            mean: num(mean, "mean")?,
            precision: num(precision, "precision")?,
            expected_mean: num(expected_mean, "expected_mean")?,
            expected_precision: num(expected_precision, "expected_precision")?,
            observation: opt(observation, "observation")?,
            surprise: opt(surprise, "surprise")?,
        };
        if n == 0 {
            traj.rows.push(TrajectoryRow {
                step: s,
                time: num(time, "time")?,
                dt: num(dt, "dt")?,
                nodes: Vec::new(),
            });
        }
        match traj.rows.last_mut() {
            Some(last) if last.step == s && last.nodes.len() == n => last.nodes.push(record),
            _ => {
                return Err(HgfError::Ingestion {
                    row,
                    message: format!("node {n} of step {s} is out of order"),
                })
            }
        }
    }
    Ok(traj)
}

/// Inputs in the layout read back by [`read_timeseries_csv`](crate::io::read_timeseries_csv).
pub fn write_inputs_csv(series: &InputSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let mut header: Vec<&str> = Vec::new();
    if series.time.is_some() {
        header.push("time");
    }
    header.extend(series.columns.iter().map(|c| c.name.as_str()));
    if series.actions.is_some() {
        header.push("y");
    }
    w.write_record(&header)?;
    for i in 0..series.len() {
        let mut record = Vec::with_capacity(header.len());
        if let Some(t) = &series.time {
            record.push(format_f64(t[i]));
        }
        record.extend(series.columns.iter().map(|c| format_opt(c.values[i])));
        if let Some(y) = &series.actions {
            record.push(y[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: chain, draw, then one per parameter.
pub fn write_samples_csv(samples: &PosteriorSamples, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let mut header = vec!["chain".to_string(), "draw".to_string()];
    header.extend(samples.names.iter().cloned());
    w.write_record(&header)?;
    for (c, chain) in samples.draws.iter().enumerate() {
        for (d, draw) in chain.iter().enumerate() {
            let mut record = vec![c.to_string(), d.to_string()];
            record.extend(draw.iter().map(|&x| format_f64(x)));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns: subject, true_<p> and estimate_<p> per parameter, at_bound, error.
pub fn write_recovery_csv(report: &RecoveryReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let mut header = vec!["subject".to_string()];
    header.extend(report.names.iter().map(|n| format!("true_{n}")));
    header.extend(report.names.iter().map(|n| format!("estimate_{n}")));
    header.extend(["at_bound".to_string(), "error".to_string()]);
    w.write_record(&header)?;
    for s in &report.subjects {
        let mut record = vec![s.subject.to_string()];
        record.extend(s.truth.iter().map(|&x| format_f64(x)));
        match &s.estimate {
            Some(e) => record.extend(e.iter().map(|&x| format_f64(x))),
            None => record.extend(report.names.iter().map(|_| String::new())),
        }
        record.push(s.at_bound.iter().any(|&b| b).to_string());
        record.push(s.error.clone().unwrap_or_default());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with object keys sorted, newline-terminated.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let value = serde_json::to_value(value)?;
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_comparison_json(report: &ComparisonReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghgf::{preset, PresetSpec};
    use crate::io::{read_timeseries_csv, SwitchingTask};

    fn trajectory() -> Trajectory {
        let u = SwitchingTask::with_trials(60).generate(4).unwrap();
        let net = preset(&PresetSpec::binary(3)).unwrap();
        net.run(&InputSeries::single(0, &u)).unwrap().1
    }

    #[test]
    fn trajectory_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        let traj = trajectory();
        write_trajectory_csv(&traj, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 60 * 3);
        assert!(!text.contains('\r'));
        assert_eq!(read_trajectory_csv(&path).unwrap(), traj);
    }

    #[test]
    fn float_format_is_shortest_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 123456789.12345679] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(0.1), "0.1");
    }

    #[test]
    fn samples_shape() {
        let samples = PosteriorSamples {
            names: vec!["a".into(), "b".into()],
            draws: vec![vec![vec![0.5, 1.5]; 10]; 4],
            acceptance: vec![0.3; 4],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        write_samples_csv(&samples, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 41);
        assert_eq!(lines[0], "chain,draw,a,b");
        assert_eq!(lines[40], "3,9,0.5,1.5");
    }

    #[test]
    fn inputs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let series = InputSeries::single(0, &[1.0, 0.0, 1.0]).with_actions(vec![0, 1, 1]);
        write_inputs_csv(&series, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "u,y\n1.0,0\n0.0,1\n1.0,1\n");
        let back = read_timeseries_csv(&path, Some(&[NodeKind::Binary])).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn json_keys_are_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: Vec<u8>,
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        write_json(&S { zeta: 0.25, alpha: vec![1] }, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
    }

    #[test]
    fn malformed_trajectory_is_an_error() {
        let text = "step,time,dt,node,kind,mean,precision,expected_mean,expected_precision,observation,surprise\n0,1.0,1.0,1,binary,0.5,1.0,0.5,1.0,,\n";
        assert!(matches!(read_trajectory(text.as_bytes()), Err(HgfError::Ingestion { row: 1, .. })));
    }
}
