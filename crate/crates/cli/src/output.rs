use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::Format;
use crate::error::CliError;

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    }
}

pub fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(io::Error::other)?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let mut out = BufWriter::new(out);
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

/// Output directory; created on first use.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::output(root, e))?;
        Ok(Self {
            root: root.to_owned(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_with(
        &self,
        name: &str,
        body: impl FnOnce(BufWriter<File>) -> io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        File::create(&path)
            .and_then(|f| body(BufWriter::new(f)))
            .map_err(|e| CliError::output(&path, e))?;
        Ok(path)
    }

    pub fn write_rows<T: Serialize>(
        &self,
        stem: &str,
        rows: &[T],
        format: Format,
    ) -> Result<PathBuf, CliError> {
        let name = format!("{stem}.{}", extension(format));
        self.write_with(&name, |w| write_rows(w, rows, format))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write_with(name, |mut w| {
            serde_json::to_writer_pretty(&mut w, value)?;
            w.write_all(b"\n")?;
            w.flush()
        })
    }
}

pub fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(io::Error::from)
        .and_then(|()| out.write_all(b"\n"))
        .map_err(|e| CliError::output("<stdout>", e))
}

pub fn print_rows<T: Serialize>(
    out: &mut dyn Write,
    rows: &[T],
    format: Format,
) -> Result<(), CliError> {
    write_rows(out, rows, format).map_err(|e| CliError::output("<stdout>", e))
}
