use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap()
}

pub fn fmt_real(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// `<root>/<command>/<hash>/`.
pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path, command: &str, hash: &str) -> Result<Self, CliError> {
        let dir = root.join(command).join(hash);
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
        Ok(OutputDir { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let parent = target.parent().unwrap().to_path_buf();
        fs::create_dir_all(&parent).map_err(|e| CliError::Io(parent.clone(), e))?;
        let tmp = parent.join(format!(
            ".{}.tmp{}",
            target.file_name().unwrap().to_string_lossy(),
            std::process::id()
        ));
        let io = |e| CliError::Io(target.clone(), e);
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &target).map_err(io)?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Invalid(e.to_string()))?;
        round_value(&mut v);
        let mut text = serde_json::to_string_pretty(&v).unwrap();
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_tsv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
        let mut text = header.join("\t");
        text.push('\n');
        for r in rows {
            let cells: Vec<String> = r.iter().map(|&x| fmt_real(x)).collect();
            text.push_str(&cells.join("\t"));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }
}
