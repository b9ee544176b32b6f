//! Dataset files: UTF-8 CSV with header `t,y`, one observation per row.
//!
//! Lines starting with `#` are comments. Two of them carry sampling metadata
//! and are written back on output, so emit, ingest, emit is byte-identical:
//!
//! ```text
//! # seed = 42
//! # attempted = 1139
//! t,y
//! -0.2,0.53
//! ```

use std::fmt::Write as _;

use lbtrunc::Sample;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub sample: Sample,
    /// `(line, reason)` for rows dropped under lenient ingestion.
    pub skipped: Vec<(usize, String)>,
}

fn metadata(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?;
    let (k, v) = body.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn parse_row(t: &str, y: &str) -> Result<(f64, f64), String> {
    let t: f64 = t.trim().parse().map_err(|_| format!("t = {t:?} is not a number"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("y = {y:?} is not a number"))?;
    if !(t.is_finite() && y.is_finite()) {
        return Err("values must be finite".into());
    }
    if y < t {
        return Err(format!("y = {y} is below t = {t}"));
    }
    Ok((t, y))
}

/// Parses dataset text. Strict ingestion rejects the whole file on the first
/// bad row; lenient ingestion drops bad rows and lists them in `skipped`.
pub fn parse_dataset(text: &str, strict: bool) -> Result<Dataset, CliError> {
    let mut seed = None;
    let mut attempted = 0u64;
    for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
        match metadata(line.trim_start()) {
            Some(("seed", v)) => seed = Some(v.parse().map_err(|_| CliError::config(format!("bad seed comment {line:?}")))?),
            Some(("attempted", v)) => {
                attempted = v.parse().map_err(|_| CliError::config(format!("bad attempted comment {line:?}")))?
            }
            _ => {}
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["t", "y"] {
        return Err(CliError::config(format!("dataset header must be `t,y`, found `{}`", names.join(","))));
    }
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let parsed = if record.len() != 2 {
            Err(format!("expected 2 fields, found {}", record.len()))
        } else {
            parse_row(&record[0], &record[1])
        };
        match parsed {
            Ok(p) => pairs.push(p),
            Err(reason) if strict => return Err(CliError::config(format!("dataset line {line}: {reason}"))),
            Err(reason) => skipped.push((line, reason)),
        }
    }
    if attempted > 0 && (pairs.len() as u64) > attempted {
        attempted = 0;
    }
    Ok(Dataset {
        sample: Sample::new(pairs, attempted, seed)?,
        skipped,
    })
}

pub fn read_dataset(path: &std::path::Path, strict: bool) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, strict)
}

/// Renders a sample. Numbers use the shortest representation that parses
/// back to the same `f64`.
pub fn write_dataset(sample: &Sample) -> String {
    let mut out = String::new();
    if let Some(seed) = sample.seed() {
        writeln!(out, "# seed = {seed}").unwrap();
    }
    if sample.attempted() > 0 {
        writeln!(out, "# attempted = {}", sample.attempted()).unwrap();
    }
    out.push_str("t,y\n");
    for (t, y) in sample.pairs() {
        writeln!(out, "{t},{y}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HAND: &str = "t,y\n0.1,0.5\n0.2,0.3\n0.4,0.9\n";

    #[test]
    fn reads_hand_sample() {
        let d = parse_dataset(HAND, true).unwrap();
        assert_eq!(d.sample.pairs(), &[(0.1, 0.5), (0.2, 0.3), (0.4, 0.9)]);
        assert!(d.skipped.is_empty());
    }

    #[test]
    fn comments_and_metadata() {
        let text = "# produced by hand\n# seed = 9\n# attempted = 5\nt,y\n0.1,0.5\n# trailing note\n0.2,0.3\n";
        let d = parse_dataset(text, true).unwrap();
        assert_eq!(d.sample.seed(), Some(9));
        assert_eq!(d.sample.attempted(), 5);
        assert_eq!(d.sample.len(), 2);
    }

    #[test]
    fn strict_rejects_and_lenient_skips() {
        let text = "t,y\n0.1,0.5\n0.6,0.3\nx,1\n0.2,0.4\n";
        assert!(matches!(parse_dataset(text, true), Err(CliError::Config(_))));
        let d = parse_dataset(text, false).unwrap();
        assert_eq!(d.sample.len(), 2);
        assert_eq!(d.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn wrong_header() {
        assert!(parse_dataset("y,t\n0.1,0.5\n", true).is_err());
    }

    #[test]
    fn emit_ingest_emit_is_identical() {
        let sample = Sample::new(vec![(-0.1234567890123, 0.3), (1e-17, 0.7000000000000001)], 3, Some(4)).unwrap();
        let a = write_dataset(&sample);
        let b = write_dataset(&parse_dataset(&a, true).unwrap().sample);
        assert_eq!(a, b);
        let plain = write_dataset(&parse_dataset(HAND, true).unwrap().sample);
        assert_eq!(plain, HAND);
    }
}
