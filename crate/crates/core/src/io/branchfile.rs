//! Branch files: comma-separated rows under a `#`-prefixed header.
//!
//! ```text
//! # femcont-branch 1 problem=bratu
//! # kind,step,lam,ds,n_unstable,err,max|u1|,L2(u1)
//! regular,0,0.2,0.05,0,0,0.259,0.259
//! ```
//!
//! `n_unstable` is empty when no spectrum was computed.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::cont::{BranchRecord, PointKind};
use crate::error::{Error, Result};

const FIXED: [&str; 6] = ["kind", "step", "lam", "ds", "n_unstable", "err"];

fn kind_name(k: PointKind) -> &'static str {
    match k {
        PointKind::Regular => "regular",
        PointKind::Bifurcation => "bifurcation",
    }
}

/// Appends records to a branch file, writing the header for a new file.
pub struct BranchWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
    n_outputs: usize,
}

impl BranchWriter {
    pub fn open(path: &Path, problem: &str, outputs: &[String]) -> Result<Self> {
        let columns: Vec<String> = FIXED.iter().map(|s| s.to_string()).chain(outputs.iter().cloned()).collect();
        let exists = path.exists() && std::fs::metadata(path)?.len() > 0;
        if exists {
            let table = BranchTable::load(path)?;
            if table.columns != columns {
                return Err(Error::InvalidInput(format!(
                    "{}: existing columns {:?} differ from {:?}",
                    path.display(),
                    table.columns,
                    columns
                )));
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if !exists {
            writeln!(file, "# femcont-branch 1 problem={problem}")?;
            writeln!(file, "# {}", columns.join(","))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(file),
            n_outputs: outputs.len(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, r: &BranchRecord) -> Result<()> {
        if r.outputs.len() != self.n_outputs {
            return Err(Error::Dimension {
                what: "branch outputs",
                expected: self.n_outputs,
                got: r.outputs.len(),
            });
        }
        let mut row = vec![
            kind_name(r.kind).to_string(),
            r.step.to_string(),
            r.lam.to_string(),
            r.ds.to_string(),
            r.n_unstable.map(|n| n.to_string()).unwrap_or_default(),
            r.err.to_string(),
        ];
        row.extend(r.outputs.iter().map(f64::to_string));
        self.writer.write_record(&row).map_err(|e| Error::Io(e.into()))?;
        self.writer.flush()?;
        Ok(())
    }
}

/// A branch file read back into memory.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchTable {
    pub problem: String,
    pub columns: Vec<String>,
    pub rows: Vec<BranchRecord>,
}

impl BranchTable {
    pub fn load(path: &Path) -> Result<Self> {
        let corrupt = |msg: String| Error::Corrupt {
            path: path.to_path_buf(),
            msg,
        };
        let mut lines = BufReader::new(File::open(path)?).lines();
        let mut header = |what: &str| -> Result<String> {
            let l = lines.next().transpose()?.ok_or_else(|| corrupt(format!("missing {what}")))?;
            l.strip_prefix("# ").map(str::to_string).ok_or_else(|| corrupt(format!("bad {what} line '{l}'")))
        };
        let first = header("header")?;
        let problem = first
            .strip_prefix("femcont-branch 1 problem=")
            .ok_or_else(|| corrupt(format!("not a branch file: '{first}'")))?
            .to_string();
        let columns: Vec<String> = header("column line")?.split(',').map(str::to_string).collect();
        if columns.len() < FIXED.len() || columns[..FIXED.len()] != FIXED {
            return Err(corrupt(format!("unexpected columns {columns:?}")));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| corrupt(e.to_string()))?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| corrupt(e.to_string()))?;
            if rec.len() != columns.len() {
                return Err(corrupt(format!("row {} has {} fields, expected {}", i + 1, rec.len(), columns.len())));
            }
            let num = |k: usize| -> Result<f64> {
                rec[k].parse::<f64>().map_err(|_| corrupt(format!("row {}: bad number '{}'", i + 1, &rec[k])))
            };
            let kind = match &rec[0] {
                "regular" => PointKind::Regular,
                "bifurcation" => PointKind::Bifurcation,
                other => return Err(corrupt(format!("row {}: unknown kind '{other}'", i + 1))),
            };
            let int = |k: usize| rec[k].parse::<usize>().map_err(|_| corrupt(format!("row {}: bad integer '{}'", i + 1, &rec[k])));
            rows.push(BranchRecord {
                kind,
                step: int(1)?,
                lam: num(2)?,
                ds: num(3)?,
                n_unstable: if rec[4].is_empty() { None } else { Some(int(4)?) },
                err: num(5)?,
                outputs: (FIXED.len()..columns.len()).map(num).collect::<Result<_>>()?,
            });
        }
        Ok(Self { problem, columns, rows })
    }

    /// Values of a named column (`lam`, `step`, an output name, ...).
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::NotFound(format!("branch column '{name}' (have {})", self.columns.join(", "))))?;
        Ok(self
            .rows
            .iter()
            .map(|r| match k {
                1 => r.step as f64,
                2 => r.lam,
                3 => r.ds,
                4 => r.n_unstable.map_or(f64::NAN, |n| n as f64),
                5 => r.err,
                0 => f64::NAN,
                _ => r.outputs[k - FIXED.len()],
            })
            .collect())
    }

    pub fn output_names(&self) -> &[String] {
        &self.columns[FIXED.len()..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(kind: PointKind, step: usize, lam: f64, n: Option<usize>) -> BranchRecord {
        BranchRecord {
            kind,
            step,
            lam,
            ds: 0.05,
            n_unstable: n,
            err: 0.0,
            outputs: vec![lam * 2.0, 1.0 / 3.0],
        }
    }

    #[test]
    fn append_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("branch.csv");
        let outs = vec!["max|u1|".to_string(), "L2(u1)".to_string()];
        let rows = vec![
            rec(PointKind::Regular, 0, 0.2, Some(0)),
            rec(PointKind::Bifurcation, 1, 0.1520000000001, Some(1)),
            rec(PointKind::Regular, 1, 0.15, None),
        ];
        {
            let mut w = BranchWriter::open(&path, "bratu", &outs).unwrap();
            w.append(&rows[0]).unwrap();
            w.append(&rows[1]).unwrap();
        }
        // reopening appends without a second header
        let mut w = BranchWriter::open(&path, "bratu", &outs).unwrap();
        w.append(&rows[2]).unwrap();
        let t = BranchTable::load(&path).unwrap();
        assert_eq!(t.problem, "bratu");
        assert_eq!(t.rows, rows);
        assert_eq!(t.column("max|u1|").unwrap()[1], 2.0 * 0.1520000000001);
        assert!(matches!(t.column("nope"), Err(Error::NotFound(_))));
        assert!(BranchWriter::open(&path, "bratu", &outs[..1]).is_err());
    }
}
