use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{io_err, IoError};
use crate::simulate::StepRecord;

/// Incremental writer for the probe time series.
///
/// Columns: `step,t_seconds,T_air,columns_active,probe_0..probe_k,min,max,mean`.
pub struct ProbeWriter {
    out: BufWriter<File>,
    path: PathBuf,
    probe_count: usize,
}

impl ProbeWriter {
    pub fn create(path: impl AsRef<Path>, probe_count: usize) -> Result<Self, IoError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = Self {
            out: BufWriter::new(file),
            path,
            probe_count,
        };
        let mut header = String::from("step,t_seconds,T_air,columns_active");
        for k in 0..probe_count {
            header.push_str(&format!(",probe_{k}"));
        }
        header.push_str(",min,max,mean\n");
        w.out
            .write_all(header.as_bytes())
            .map_err(io_err(&w.path))?;
        Ok(w)
    }

    pub fn write_row(&mut self, record: &StepRecord, probes: &[f64]) -> Result<(), IoError> {
        assert_eq!(
            probes.len(),
            self.probe_count,
            "probe count changed mid-run"
        );
        let mut line = format!(
            "{},{},{},{}",
            record.step,
            record.t_cur,
            record.t_air,
            u8::from(record.columns_active)
        );
        for v in probes {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{},{},{}\n", record.min, record.max, record.mean));
        self.out
            .write_all(line.as_bytes())
            .map_err(io_err(&self.path))
    }

    pub fn flush(&mut self) -> Result<(), IoError> {
        self.out.flush().map_err(io_err(&self.path))
    }
}

/// Writes a complete probe file, one row per record.
pub fn write_probes(
    records: &[StepRecord],
    probe_values: &[Vec<f64>],
    probe_count: usize,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let mut w = ProbeWriter::create(path, probe_count)?;
    for (r, p) in records.iter().zip(probe_values) {
        w.write_row(r, p)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SolveReport;

    fn record(step: usize) -> StepRecord {
        StepRecord {
            step,
            t_cur: step as f64 * 86400.0,
            t_air: -10.0,
            columns_active: step.is_multiple_of(2),
            report: SolveReport {
                iterations: 3,
                relative_residual: 1e-9,
                converged: true,
                wall_time: 0.0,
            },
            min: -20.0,
            max: 1.0,
            mean: -4.0,
        }
    }

    #[test]
    fn header_only_when_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_probes(&[], &[], 2, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "step,t_seconds,T_air,columns_active,probe_0,probe_1,min,max,mean\n"
        );
    }

    #[test]
    fn one_row_per_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let recs: Vec<_> = (1..=3).map(record).collect();
        let vals = vec![vec![-20.0]; 3];
        write_probes(&recs, &vals, 1, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(1).unwrap(), "1,86400,-10,0,-20,-20,1,-4");
    }
}
