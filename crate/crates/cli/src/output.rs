use std::io::{self, Write};

use crate::args::Format;

/// A command result: one table, summary lines and whether every must-hold
/// verdict held.
#[derive(Debug, Default)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<String>,
    /// Extra text shown only in the text format.
    pub details: Vec<String>,
    pub verdict_failed: bool,
}

impl Report {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        self.rows.push(cells.into_iter().collect());
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn detail(&mut self, line: impl Into<String>) {
        self.details.push(line.into());
    }

    /// Records a must-hold verdict in the summary.
    pub fn verdict(&mut self, name: &str, holds: bool) {
        self.summary.push(format!("{name}: {}", if holds { "holds" } else { "FAILS" }));
        self.verdict_failed |= !holds;
    }

    /// CSV: provenance comment, header, rows. The summary goes to `notes`
    /// so that the CSV stays machine readable.
    pub fn write(&self, format: Format, provenance: &str, out: &mut dyn Write, notes: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "# provenance: {provenance}")?;
                let mut writer = csv::Writer::from_writer(&mut *out);
                writer.write_record(&self.header)?;
                for row in &self.rows {
                    writer.write_record(row)?;
                }
                writer.flush()?;
                drop(writer);
                for line in &self.summary {
                    writeln!(notes, "{line}")?;
                }
            }
            Format::Text => {
                writeln!(out, "provenance: {provenance}")?;
                for line in &self.summary {
                    writeln!(out, "{line}")?;
                }
                for line in &self.details {
                    writeln!(out, "{line}")?;
                }
                if !self.rows.is_empty() {
                    writeln!(out)?;
                    write_aligned(&self.header, &self.rows, out)?;
                }
            }
        }
        Ok(())
    }
}

fn write_aligned(header: &[String], rows: &[Vec<String>], out: &mut dyn Write) -> io::Result<()> {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String], out: &mut dyn Write| -> io::Result<()> {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        writeln!(out, "{}", padded.join("  ").trim_end())
    };
    line(header, out)?;
    for row in rows {
        line(row, out)?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn nums(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|&v| num(v))
}

/// `prefix1, prefix2, ...` column names.
pub fn indexed(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_provenance_then_header() {
        let mut report = Report::new(["a", "b"]);
        report.row([num(1.5), num(-2.0)]);
        report.verdict("thing", true);
        let mut out = Vec::new();
        let mut notes = Vec::new();
        report.write(Format::Csv, "test", &mut out, &mut notes).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "# provenance: test\na,b\n1.5,-2.0\n");
        assert_eq!(String::from_utf8(notes).unwrap(), "thing: holds\n");
    }
}
