use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// JSON-lines sink; one record per line, flushed on every write so a
/// failed run still leaves its history behind.
pub struct HistoryWriter<W: Write> {
    out: BufWriter<W>,
    lines: usize,
}

impl HistoryWriter<std::fs::File> {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(std::fs::File::create(path)?))
    }
}

impl<W: Write> HistoryWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            out: BufWriter::new(w),
            lines: 0,
        }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.lines += 1;
        Ok(())
    }

    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn into_inner(self) -> std::io::Result<W> {
        self.out.into_inner().map_err(|e| e.into_error())
    }
}
