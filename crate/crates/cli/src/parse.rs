//! Small argument parsers and file helpers.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use latmrf::hmrf::{fourier_basis, polynomial_basis, BasisSet};
use latmrf::io::{read_discrete_any, read_real_field, write_discrete_field, write_pgm};
use latmrf::{DiscreteField, InteractionStructure, ModelSpec, Norm, Offset, PotentialArray, RealField};

use crate::StructureArgs;

pub fn pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T)>
where
    T::Err: std::fmt::Display,
{
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("{what} must look like `a,b`, got {s:?}"))?;
    let a = a.trim().parse::<T>().map_err(|e| anyhow!("{what} {s:?}: {e}"))?;
    let b = b.trim().parse::<T>().map_err(|e| anyhow!("{what} {s:?}: {e}"))?;
    Ok((a, b))
}

pub fn float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("{v:?}: {e}")))
        .collect()
}

fn offsets(pos: &[String]) -> Result<Vec<Offset>> {
    pos.iter()
        .map(|p| pair::<i32>(p, "position").map(|(a, b)| Offset::new(a, b)))
        .collect()
}

/// `norm:<type>:<radius>` plus extra positions.
pub fn structure_from_spec(spec: Option<&str>, pos: &[String]) -> Result<InteractionStructure> {
    let extra = offsets(pos)?;
    match spec {
        None => Ok(InteractionStructure::build(0.0, Norm::L1, &extra)?),
        Some(s) => {
            if let Some(rest) = s.strip_prefix("norm:") {
                let (norm, radius) = rest
                    .split_once(':')
                    .ok_or_else(|| anyhow!("expected norm:<type>:<radius>, got {s:?}"))?;
                let norm: Norm = norm.parse()?;
                let radius: f64 = radius.parse().map_err(|e| anyhow!("radius {radius:?}: {e}"))?;
                Ok(InteractionStructure::build(radius, norm, &extra)?)
            } else {
                let file = fs::File::open(s).with_context(|| format!("opening structure file {s}"))?;
                let base = InteractionStructure::read(BufReader::new(file))?;
                Ok(base.union(&InteractionStructure::build(0.0, Norm::L1, &extra)?))
            }
        }
    }
}

/// Structure from the flags, or `None` when no flag was given.
pub fn structure_opt(args: &StructureArgs) -> Result<Option<InteractionStructure>> {
    if args.mrfi.is_none() && args.pos.is_empty() {
        return Ok(None);
    }
    structure_from_spec(args.mrfi.as_deref(), &args.pos).map(Some)
}

pub fn structure_req(args: &StructureArgs) -> Result<InteractionStructure> {
    structure_opt(args)?.ok_or_else(|| anyhow!("an interaction structure is required (--mrfi or --pos)"))
}

/// Model file potentials; flags must agree with positions stored in the file.
pub fn load_model(path: &Path, flags: &StructureArgs) -> Result<PotentialArray> {
    let text = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    let spec = ModelSpec::read(text.as_slice()).with_context(|| format!("parsing model {}", path.display()))?;
    let given = structure_opt(flags)?;
    if let (Some(own), Some(g)) = (&spec.structure, &given) {
        if own.positions() != g.positions() {
            bail!("model {} lists positions {own} but the flags give {g}", path.display());
        }
    }
    Ok(spec.potentials(given.as_ref())?)
}

pub fn save_model(path: &Path, theta: &PotentialArray) -> Result<()> {
    let mut buf = Vec::new();
    ModelSpec::from_potentials(theta).write(&mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn read_field(path: &Path) -> Result<DiscreteField> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    read_discrete_any(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_field(path: &Path, field: &DiscreteField) -> Result<()> {
    let mut buf = Vec::new();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        write_pgm(field, &mut buf)?;
    } else {
        write_discrete_field(field, &mut buf)?;
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn read_real(path: &Path) -> Result<RealField> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_real_field(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_real(path: &Path, field: &RealField) -> Result<()> {
    let mut buf = Vec::new();
    latmrf::io::write_real_field(field, &mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn basis(spec: &str, dims: (usize, usize)) -> Result<Option<BasisSet>> {
    if spec == "none" {
        return Ok(None);
    }
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("basis must be poly:d1,d2, fourier:k1,k2 or none"))?;
    let degrees = pair::<usize>(rest, "basis degrees")?;
    match kind {
        "poly" => Ok(Some(polynomial_basis(degrees, dims)?)),
        "fourier" => Ok(Some(fourier_basis(degrees, dims)?)),
        _ => bail!("unknown basis kind {kind:?}"),
    }
}
