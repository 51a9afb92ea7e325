//! Shared helpers for the text formats written by the toolkit.

use std::io::Write;

/// Scientific notation with 17 significant digits; round-trips binary64.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes each preamble line as a `# ` comment.
pub fn write_preamble<W: Write>(out: &mut W, preamble: &[String]) -> std::io::Result<()> {
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}
