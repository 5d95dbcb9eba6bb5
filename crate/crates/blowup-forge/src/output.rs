use crate::ForgeError;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A CSV table of numbers with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<(), ForgeError> {
        let io = |e: csv::Error| ForgeError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| fmt_f64(*x))).map_err(io)?;
        }
        w.flush().map_err(|e| ForgeError::Io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, ForgeError> {
        let io = |e: csv::Error| ForgeError::Io(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(io)?;
        let header = r.headers().map_err(io)?.iter().map(str::to_string).collect();
        let mut rows = vec![];
        for rec in r.records() {
            let rec = rec.map_err(io)?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| ForgeError::Io(format!("{}: {s:?}: {e}", path.display()))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

/// One named check of a command's output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Invariant {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Where a command writes, and what it wrote.
#[derive(Debug)]
pub struct Sink {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, ForgeError> {
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: vec![] })
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<(), ForgeError> {
        let path = self.dir.join(name);
        t.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), ForgeError> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| ForgeError::Io(e.to_string()))? + "\n";
        std::fs::write(&path, text).map_err(|e| ForgeError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn tables_round_trip_with_lf_endings() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1, -3.0]);
        t.push(vec![1e-300, 2.0 / 3.0]);
        let path = dir.path().join("t.csv");
        t.write(&path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        assert!(!raw.contains('\r'));
        assert!(raw.starts_with("a,b\n"));
        assert_eq!(Table::read(&path).unwrap(), t);
    }
}
