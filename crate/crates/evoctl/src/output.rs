use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::CliResult;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV writer with a leading `#` comment line and LF line endings.
pub struct CsvOut {
    inner: csv::Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, comment: &str, header: &[String]) -> CliResult<Self> {
        let mut file = File::create(path)?;
        writeln!(file, "# {comment}")?;
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
        inner.write_record(header)?;
        Ok(CsvOut { inner })
    }

    pub fn row(&mut self, fields: &[String]) -> CliResult<()> {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn complex_header(prefix: &str, n: usize) -> Vec<String> {
    (0..n).flat_map(|i| [format!("{prefix}{i}_re"), format!("{prefix}{i}_im")]).collect()
}

pub fn complex_fields(v: &evolve::CVec) -> Vec<String> {
    v.iter().flat_map(|z| [num(z.re), num(z.im)]).collect()
}
