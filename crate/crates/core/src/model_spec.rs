//! Plain-text model files.
//!
//! ```text
//! colors 1
//! family oneeach
//! position 1 0
//! position 0 1
//! theta -1 -1
//! ```
//!
//! `position` lines are optional; without them the structure has to be
//! supplied by the caller. `theta` holds the free-parameter vector.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::interactions::{InteractionStructure, Offset};
use crate::potentials::{Family, PotentialArray};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub colors: usize,
    pub family: Family,
    pub structure: Option<InteractionStructure>,
    pub params: Vec<f64>,
}

impl ModelSpec {
    pub fn from_potentials(theta: &PotentialArray) -> Self {
        Self {
            colors: theta.colors(),
            family: theta.family(),
            structure: Some(theta.structure().clone()),
            params: theta.summarize(),
        }
    }

    /// Potentials on the file's own structure, or on `fallback` when the file
    /// has none.
    pub fn potentials(&self, fallback: Option<&InteractionStructure>) -> Result<PotentialArray> {
        let structure = self
            .structure
            .as_ref()
            .or(fallback)
            .ok_or_else(|| Error::InvalidArgument("model has no positions and none were given".into()))?;
        PotentialArray::expand(&self.params, self.family, structure, self.colors)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut colors = None;
        let mut family = None;
        let mut positions = Vec::new();
        let mut params = None;
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let err = |msg: String| Error::Parse { line: n + 1, msg };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or("");
            let rest: Vec<&str> = words.collect();
            match key {
                "colors" => {
                    let [c] = rest[..] else {
                        return Err(err("expected `colors <C>`".into()));
                    };
                    colors = Some(c.parse::<usize>().map_err(|e| err(e.to_string()))?);
                }
                "family" => {
                    let [f] = rest[..] else {
                        return Err(err("expected `family <name>`".into()));
                    };
                    family = Some(f.parse::<Family>().map_err(|e| err(e.to_string()))?);
                }
                "position" => {
                    let [a, b] = rest[..] else {
                        return Err(err("expected `position <r1> <r2>`".into()));
                    };
                    let a = a.parse::<i32>().map_err(|e| err(e.to_string()))?;
                    let b = b.parse::<i32>().map_err(|e| err(e.to_string()))?;
                    positions.push(Offset::new(a, b));
                }
                "theta" => {
                    let v = rest
                        .iter()
                        .map(|w| w.parse::<f64>().map_err(|e| err(format!("{w:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    params = Some(v);
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            msg: format!("missing `{what}` line"),
        };
        let spec = Self {
            colors: colors.ok_or_else(|| missing("colors"))?,
            family: family.ok_or_else(|| missing("family"))?,
            structure: if positions.is_empty() {
                None
            } else {
                Some(InteractionStructure::from_positions(positions)?)
            },
            params: params.ok_or_else(|| missing("theta"))?,
        };
        if let Some(s) = &spec.structure {
            spec.potentials(Some(s))?;
        }
        Ok(spec)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "colors {}", self.colors)?;
        writeln!(sink, "family {}", self.family)?;
        if let Some(s) = &self.structure {
            for p in s.positions() {
                writeln!(sink, "position {} {}", p.row, p.col)?;
            }
        }
        let values: Vec<String> = self.params.iter().map(|v| format!("{v}")).collect();
        writeln!(sink, "theta {}", values.join(" "))?;
        Ok(())
    }
}
