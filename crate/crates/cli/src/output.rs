//! Deterministic file export: CSV with fixed 17-digit floats, sorted-key JSON,
//! and the plot script.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

/// `{:.16e}`: 17 significant digits, round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, text.as_bytes()).map_err(io_err(path))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), OutputError> {
    write_text(path, &csv_string(header, rows))
}

/// Serializes through [`Value`] so object keys come out sorted; the text is
/// then stable under a parse/serialize round trip.
pub fn json_string<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v: Value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let text = json_string(value).map_err(|source| OutputError::Json { path: path.to_path_buf(), source })?;
    write_text(path, &text)
}

/// One panel of the plot script.
pub struct Panel<'a> {
    pub csv: &'a str,
    pub x: &'a str,
    pub ys: &'a [&'a str],
    pub loglog: bool,
    pub title: &'a str,
}

/// A standalone matplotlib script that reads the CSVs next to it.
pub fn plot_script(panels: &[Panel]) -> String {
    let mut s = String::from(
        "#!/usr/bin/env python3\n\
         import csv\n\
         import os\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\
         \n\
         HERE = os.path.dirname(os.path.abspath(__file__))\n\
         \n\
         \n\
         def load(name):\n\
         \x20   with open(os.path.join(HERE, name)) as f:\n\
         \x20       rows = list(csv.DictReader(f))\n\
         \x20   return {k: [float(r[k]) for r in rows] for k in rows[0]}\n\
         \n\
         \n",
    );
    let _ = writeln!(s, "fig, axes = plt.subplots({}, 1, figsize=(7, {}), squeeze=False)", panels.len(), 3.5 * panels.len() as f64);
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(s, "data = load({:?})", p.csv);
        let _ = writeln!(s, "ax = axes[{i}][0]");
        for y in p.ys {
            if p.loglog {
                let _ = writeln!(
                    s,
                    "pts = [(a, abs(b)) for a, b in zip(data[{x:?}], data[{y:?}]) if a > 0 and b != 0]\n\
                     ax.loglog([a for a, _ in pts], [b for _, b in pts], label={y:?})",
                    x = p.x,
                );
            } else {
                let _ = writeln!(s, "ax.plot(data[{:?}], data[{:?}], label={:?})", p.x, y, y);
            }
        }
        let _ = writeln!(s, "ax.set_xlabel({:?})\nax.set_title({:?})\nax.legend()", p.x, p.title);
    }
    s.push_str("fig.tight_layout()\nfig.savefig(os.path.join(HERE, \"plots.png\"), dpi=120)\n");
    s
}

/// Relative paths of regular files under `root`, sorted.
pub fn list_files(root: &Path) -> Result<Vec<PathBuf>, OutputError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| io_err(root)(e.into()))?;
        if entry.file_type().is_file() {
            out.push(entry.path().strip_prefix(root).unwrap_or(entry.path()).to_path_buf());
        }
    }
    Ok(out)
}

/// First difference between two directory trees, `None` if byte-identical.
pub fn compare_trees(a: &Path, b: &Path) -> Result<Option<String>, OutputError> {
    let (fa, fb) = (list_files(a)?, list_files(b)?);
    if fa != fb {
        return Ok(Some(format!("file lists differ ({} vs {} files)", fa.len(), fb.len())));
    }
    for f in &fa {
        let (pa, pb) = (a.join(f), b.join(f));
        if std::fs::read(&pa).map_err(io_err(&pa))? != std::fs::read(&pb).map_err(io_err(&pb))? {
            return Ok(Some(format!("{} differs", f.display())));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(csv_string(&["a", "b"], &[vec![1.0, f64::NAN]]), "a,b\n1.0000000000000000e0,NaN\n");
    }

    #[test]
    fn json_round_trips() {
        #[derive(Serialize)]
        struct S {
            z: f64,
            a: Vec<f64>,
        }
        let text = json_string(&S { z: 0.1 + 0.2, a: vec![1e-300, 2.5] }).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json_string(&back).unwrap(), text);
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
    }

    #[test]
    fn tree_comparison_finds_the_first_difference() {
        let t = std::env::temp_dir().join(format!("collapse-lab-trees-{}", std::process::id()));
        let (a, b) = (t.join("a"), t.join("b"));
        for d in [&a, &b] {
            write_text(&d.join("sub/x.csv"), "1\n").unwrap();
        }
        assert_eq!(compare_trees(&a, &b).unwrap(), None);
        write_text(&b.join("sub/x.csv"), "2\n").unwrap();
        assert!(compare_trees(&a, &b).unwrap().unwrap().contains("x.csv"));
        write_text(&b.join("y.csv"), "").unwrap();
        assert!(compare_trees(&a, &b).unwrap().unwrap().contains("file lists"));
        std::fs::remove_dir_all(&t).unwrap();
    }
}
