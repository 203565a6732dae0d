//! Run manifests: a `key=value` text file written next to a command's main
//! output, holding enough to re-run the command.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};

/// `<output>.manifest` beside `output`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    output.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub command: String,
    /// Arguments after the program name, in order.
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration: Duration,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool=latmrf");
        let _ = writeln!(out, "version={}", self.version);
        let _ = writeln!(out, "command={}", self.command);
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed={s}");
        }
        for a in &self.args {
            let _ = writeln!(out, "arg={}", escape(a));
        }
        for o in &self.outputs {
            let _ = writeln!(out, "output={}", escape(&o.to_string_lossy()));
        }
        let _ = writeln!(out, "duration_s={:.3}", self.duration.as_secs_f64());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest {
            command: String::new(),
            args: Vec::new(),
            seed: None,
            outputs: Vec::new(),
            version: String::new(),
            duration: Duration::ZERO,
        };
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("manifest line {}: expected key=value", n + 1))?;
            match key {
                "tool" => {}
                "version" => m.version = value.to_string(),
                "command" => m.command = value.to_string(),
                "seed" => m.seed = Some(value.parse().with_context(|| format!("manifest line {}", n + 1))?),
                "arg" => m.args.push(unescape(value)),
                "output" => m.outputs.push(PathBuf::from(unescape(value))),
                "duration_s" => {
                    m.duration = Duration::from_secs_f64(value.parse().with_context(|| format!("manifest line {}", n + 1))?)
                }
                other => bail!("manifest line {}: unknown key {other:?}", n + 1),
            }
        }
        if m.args.is_empty() {
            bail!("manifest records no arguments");
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = Manifest {
            command: "sample".into(),
            args: vec!["sample".into(), "--out".into(), "a b\\c\nd".into()],
            seed: Some(7),
            outputs: vec![PathBuf::from("/tmp/x.txt")],
            version: "0.1.0".into(),
            duration: Duration::from_millis(1500),
        };
        assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
    }

    #[test]
    fn path_naming() {
        assert_eq!(manifest_path(Path::new("out/z.txt")), PathBuf::from("out/z.txt.manifest"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Manifest::parse("nonsense").is_err());
        assert!(Manifest::parse("tool=latmrf\n").is_err());
    }
}
