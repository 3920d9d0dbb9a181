//! Bit-stable CSV/JSON emission with atomic file replacement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

/// Shortest decimal representation that round-trips the double.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

/// Full double precision, 17 significant digits.
pub fn fmt_f64_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write via a temporary file in the same directory plus rename, so an
/// interrupted run never leaves a partial file at the final path.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default(),
        std::process::id()
    ));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A CSV body under construction; rows are joined with `\n` and the file
/// ends with a trailing newline.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            lines: vec![header.to_string()],
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn body(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Emit a CSV and its JSON sidecar next to each other, atomically.
pub fn emit(
    dir: &Path,
    stem: &str,
    csv: &Csv,
    sidecar: &Value,
) -> std::io::Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_atomic(&csv_path, &csv.body())?;
    let mut json = serde_json::to_string_pretty(sidecar).expect("serializable sidecar");
    json.push('\n');
    write_atomic(&json_path, &json)?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_roundtrip_format() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.3333333333333333");
        let x: f64 = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn full_precision_format_roundtrips() {
        let x = std::f64::consts::PI;
        assert_eq!(fmt_f64_full(x).parse::<f64>().unwrap(), x);
        assert!(fmt_f64_full(x).contains('e'));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = std::env::temp_dir().join(format!("ptsb-out-test-{}", std::process::id()));
        let path = dir.join("x.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        write_atomic(&path, "a,b\n3,4\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n3,4\n");
        fs::remove_dir_all(&dir).unwrap();
    }
}
