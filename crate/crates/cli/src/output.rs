use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

use crate::args::Format;

/// What a subcommand produced.
pub struct Outcome {
    /// Plot-facing table, header included.
    pub csv: String,
    /// Machine-facing report; always carries a boolean `pass`.
    pub report: Value,
    pub pass: bool,
    /// Exit status ignores `pass` (negative controls).
    pub report_only: bool,
    /// Analysis commands write both files when an output path is given.
    pub paired: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass || self.report_only {
            0
        } else {
            1
        }
    }
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

/// Writes through a temporary sibling and renames, so a failure leaves no partial file.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let name = path.file_name().context("output path has no file name")?.to_string_lossy().into_owned();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn sibling(path: &Path, ext: &str) -> Option<PathBuf> {
    let p = path.with_extension(ext);
    (p != path).then_some(p)
}

pub fn emit(outcome: &Outcome, out: Option<&Path>, format: Format) -> Result<()> {
    let (main, other, other_ext) = match format {
        Format::Csv => (outcome.csv.clone(), json_text(&outcome.report), "json"),
        Format::Json => (json_text(&outcome.report), outcome.csv.clone(), "csv"),
    };
    match out {
        None => {
            std::io::stdout().write_all(main.as_bytes())?;
        }
        Some(path) => {
            write_atomic(path, &main)?;
            if outcome.paired {
                if let Some(p) = sibling(path, other_ext) {
                    write_atomic(&p, &other)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_header_and_trailing_newline() {
        let t = csv_table(&["a", "b"], [vec!["1".into(), "2".into()]]);
        assert_eq!(t, "a,b\n1,2\n");
    }

    #[test]
    fn report_only_never_fails_the_exit_code() {
        let o = Outcome { csv: String::new(), report: Value::Null, pass: false, report_only: true, paired: false };
        assert_eq!(o.exit_code(), 0);
        let o = Outcome { report_only: false, ..o };
        assert_eq!(o.exit_code(), 1);
    }

    #[test]
    fn sibling_swaps_extension() {
        assert_eq!(sibling(Path::new("out/a.csv"), "json"), Some(PathBuf::from("out/a.json")));
        assert_eq!(sibling(Path::new("a.json"), "json"), None);
    }
}
