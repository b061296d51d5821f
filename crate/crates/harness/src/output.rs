//! CSV tables and VTK files under the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thinpore_core::discretization::{write_vtk, Field, Mesh};

use crate::HarnessError;

/// A CSV file whose rows all start with the config hash and regime label.
/// Every row is flushed as soon as it is written.
pub struct CsvTable {
    path: PathBuf,
    writer: csv::Writer<File>,
    hash: String,
    columns: usize,
}

impl CsvTable {
    pub fn create(dir: &Path, name: &str, hash: &str, columns: &[&str]) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        let mut header = vec!["config_hash", "regime"];
        header.extend_from_slice(columns);
        writer.write_record(&header)?;
        writer.flush()?;
        Ok(CsvTable {
            path,
            writer,
            hash: hash.to_string(),
            columns: columns.len(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn row(&mut self, regime: &str, fields: &[String]) -> Result<(), HarnessError> {
        assert_eq!(fields.len(), self.columns, "row width of {}", self.path.display());
        let mut record = Vec::with_capacity(fields.len() + 2);
        record.push(self.hash.as_str());
        record.push(regime);
        record.extend(fields.iter().map(String::as_str));
        self.writer.write_record(&record)?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Shortest round-trip text of `v`; scientific outside `[1e-4, 1e6)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_fields(
    dir: &Path,
    name: &str,
    title: &str,
    mesh: &Mesh,
    fields: &[(&str, &Field)],
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut out = BufWriter::new(File::create(&path)?);
    write_vtk(&mut out, title, mesh, fields)?;
    out.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -0.375, 1.0 / 12.0, 3e-15, 2.5e7, -1e-5] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.125), "0.125");
        assert_eq!(num(3e-15), "3e-15");
    }
}
