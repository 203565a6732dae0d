use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;

use latmrf::estimators::{default_gamma, fit_pl, fit_sa, select_interactions, SaSettings};
use latmrf::exact::{exact_expected_stats, exact_mle, log_partition, log_partition_transfer};
use latmrf::hmrf::{fit_ghm, GhmSettings, HmrfFit};
use latmrf::io::read_region;
use latmrf::kernel::cohist;
use latmrf::optim::BfgsOptions;
use latmrf::render::{render_discrete, render_real, Palette, Ramp, Raster};
use latmrf::report::{hmrf_summary, mrf_summary};
use latmrf::sampler::{sample_mrf, InitialField, SamplerConfig};
use latmrf::{Family, PixelRegion, PotentialArray};

use crate::manifest::{manifest_path, Manifest};
use crate::parse::{self, load_model, pair, structure_req};
use crate::{Cli, Command, DemoKind};

/// What a command produced: files (the first one is the main output) and
/// the seed it used, if any.
pub(crate) struct Produced {
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

impl Produced {
    fn none() -> Self {
        Self {
            outputs: Vec::new(),
            seed: None,
        }
    }
}

pub(crate) fn dispatch(cli: Cli, recorded: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let (name, produced) = match cli.command {
        Command::Replay { manifest } => return replay(&manifest),
        Command::Sample(a) => ("sample", sample(a)?),
        Command::FitPl(a) => ("fit-pl", fit_pl_cmd(a)?),
        Command::FitSa(a) => ("fit-sa", fit_sa_cmd(a)?),
        Command::FitGhm(a) => ("fit-ghm", fit_ghm_cmd(a)?),
        Command::Select(a) => ("select", select_cmd(a)?),
        Command::Cohist(a) => ("cohist", cohist_cmd(a)?),
        Command::Mrfi(a) => ("mrfi", mrfi_cmd(a)?),
        Command::Render(a) => ("render", render_cmd(a)?),
        Command::Oracle(a) => ("oracle", oracle_cmd(a)?),
        Command::Demo(d) => match d.which {
            DemoKind::Texture {
                size,
                radius,
                seed,
                out_dir,
            } => ("demo", crate::demo::texture(size, radius, seed, &out_dir)?),
            DemoKind::Segment { size, seed, out_dir } => ("demo", crate::demo::segment(size, seed, &out_dir)?),
        },
    };
    if let Some(main) = produced.outputs.first() {
        let m = Manifest {
            command: name.to_string(),
            args: recorded,
            seed: produced.seed,
            outputs: produced.outputs.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration: started.elapsed(),
        };
        m.write(&manifest_path(main))?;
    }
    Ok(())
}

fn replay(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let m = Manifest::parse(&text)?;
    let argv = std::iter::once("latmrf".to_string()).chain(m.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| anyhow!("manifest arguments no longer parse: {e}"))?;
    if matches!(cli.command, Command::Replay { .. }) {
        bail!("a manifest cannot record a replay");
    }
    dispatch(cli, m.args)
}

pub(crate) fn write_png(path: &Path, raster: &Raster) -> Result<()> {
    let mut buf = Vec::new();
    raster.write_png(&mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_region_file(path: &Path) -> Result<PixelRegion> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_region(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn family(name: &str) -> Result<Family> {
    Ok(name.parse::<Family>()?)
}

fn sample(a: crate::SampleArgs) -> Result<Produced> {
    let theta = load_model(&a.theta, &a.structure)?;
    let init = match (&a.dims, &a.init) {
        (Some(d), None) => {
            let (h, w) = pair::<usize>(d, "dims")?;
            InitialField::Dims(h, w)
        }
        (None, Some(p)) => InitialField::Field(parse::read_field(p)?),
        _ => bail!("give exactly one of --dims and --init"),
    };
    let config = SamplerConfig {
        cycles: a.cycles,
        seed: a.seed,
        fixed_region: a.fixed.as_deref().map(read_region_file).transpose()?,
        sub_region: a.sub.as_deref().map(read_region_file).transpose()?,
    };
    let z = sample_mrf(init, &theta, &config)?;
    parse::write_field(&a.out, &z)?;
    let mut outputs = vec![a.out.clone()];
    if !a.no_png {
        let png = a.png.clone().unwrap_or_else(|| a.out.with_extension("png"));
        write_png(&png, &render_discrete(&z, Palette::Categorical).scaled(a.scale))?;
        outputs.push(png);
    }
    Ok(Produced {
        outputs,
        seed: Some(a.seed),
    })
}

fn init_model(path: Option<&Path>, structure: &crate::StructureArgs) -> Result<Option<PotentialArray>> {
    path.map(|p| load_model(p, structure)).transpose()
}

fn fit_pl_cmd(a: crate::FitPlArgs) -> Result<Produced> {
    let z = parse::read_field(&a.field)?;
    let structure = structure_req(&a.structure)?;
    let init = init_model(a.init.as_deref(), &a.structure)?;
    let opts = BfgsOptions {
        gtol: a.gtol,
        max_iter: a.max_iter,
    };
    let fit = fit_pl(&z, &structure, family(&a.family)?, init.as_ref(), opts)?;
    print!("{}", mrf_summary(&fit));
    let mut produced = Produced::none();
    if let Some(out) = a.out {
        parse::save_model(&out, &fit.theta)?;
        produced.outputs.push(out);
    }
    Ok(produced)
}

fn sa_settings(sa: &crate::SaArgs, structure: &crate::StructureArgs) -> Result<SaSettings> {
    Ok(SaSettings {
        gamma: default_gamma(sa.gamma_max, sa.iterations),
        init: init_model(sa.init.as_deref(), structure)?,
        cycles: sa.cycles,
        refresh_each: sa.refresh_each,
        refresh_cycles: sa.refresh_cycles,
        seed: sa.seed,
    })
}

fn fit_sa_cmd(a: crate::FitSaArgs) -> Result<Produced> {
    let z = parse::read_field(&a.field)?;
    let structure = structure_req(&a.structure)?;
    let settings = sa_settings(&a.sa, &a.structure)?;
    let fit = fit_sa(&z, &structure, family(&a.family)?, &settings)?;
    print!("{}", mrf_summary(&fit));
    let mut produced = Produced {
        outputs: Vec::new(),
        seed: Some(a.sa.seed),
    };
    if let Some(out) = a.out {
        parse::save_model(&out, &fit.theta)?;
        produced.outputs.push(out);
    }
    if let Some(path) = a.metrics {
        let mut csv = String::from("iteration,distance\n");
        for (t, d) in &fit.metrics {
            let _ = writeln!(csv, "{t},{d}");
        }
        write_text(&path, &csv)?;
        produced.outputs.push(path);
    }
    Ok(produced)
}

fn select_cmd(a: crate::SelectArgs) -> Result<Produced> {
    let z = parse::read_field(&a.field)?;
    let candidates = structure_req(&a.structure)?;
    let settings = sa_settings(&a.sa, &a.structure)?;
    let (selected, fit) = select_interactions(&z, &candidates, family(&a.family)?, &settings, a.threshold)?;
    print!("{}", mrf_summary(&fit));
    println!("\nSelected positions (threshold {}): {selected}", a.threshold);
    let mut produced = Produced {
        outputs: Vec::new(),
        seed: Some(a.sa.seed),
    };
    if let Some(out) = a.out {
        let mut buf = Vec::new();
        selected.write(&mut buf)?;
        fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
        produced.outputs.push(out);
    }
    Ok(produced)
}

pub(crate) fn write_ghm_outputs(fit: &HmrfFit, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let z_pred = dir.join("z_pred.txt");
    parse::write_field(&z_pred, &fit.z_pred)?;
    let mut params = String::from("name,value\n");
    for (k, (m, s)) in fit.params.mu.iter().zip(&fit.params.sigma).enumerate() {
        let _ = writeln!(params, "mu{k},{m}\nsigma{k},{s}");
    }
    for (j, b) in fit.params.beta.iter().enumerate() {
        let _ = writeln!(params, "beta{j},{b}");
    }
    let params_path = dir.join("params.csv");
    write_text(&params_path, &params)?;
    let fixed = dir.join("fixed.csv");
    parse::write_real(&fixed, &fit.fixed)?;
    let predicted = dir.join("predicted.csv");
    parse::write_real(&predicted, &fit.predicted)?;
    let summary = dir.join("summary.txt");
    write_text(&summary, &hmrf_summary(fit))?;
    let png = dir.join("z_pred.png");
    write_png(&png, &render_discrete(&fit.z_pred, Palette::Categorical))?;
    Ok(vec![z_pred, params_path, fixed, predicted, summary, png])
}

fn fit_ghm_cmd(a: crate::FitGhmArgs) -> Result<Produced> {
    let y = parse::read_real(&a.y)?;
    let theta = load_model(&a.theta, &a.structure)?;
    let basis = parse::basis(&a.basis, y.dims())?;
    let init = match (&a.mu, &a.sigma) {
        (Some(m), Some(s)) => Some((parse::float_list(m)?, parse::float_list(s)?)),
        (None, None) => None,
        _ => bail!("--mu and --sigma go together"),
    };
    let settings = GhmSettings {
        equal_vars: a.equal_vars,
        init,
        maxiter: a.maxiter,
        max_dist: a.max_dist,
        icm_cycles: a.icm_cycles,
    };
    let fit = fit_ghm(&y, &theta, basis.as_ref(), &settings)?;
    print!("{}", hmrf_summary(&fit));
    Ok(Produced {
        outputs: write_ghm_outputs(&fit, &a.out_dir)?,
        seed: None,
    })
}

fn cohist_cmd(a: crate::CohistArgs) -> Result<Produced> {
    let z = parse::read_field(&a.field)?;
    let structure = structure_req(&a.structure)?;
    let h = cohist(&z, &structure);
    let side = h.colors() + 1;
    let mut csv = String::from("a,b,r1,r2,count\n");
    for (k, p) in structure.positions().iter().enumerate() {
        for a in 0..side {
            for b in 0..side {
                let _ = writeln!(csv, "{a},{b},{},{},{}", p.row, p.col, h.get(a, b, k));
            }
        }
    }
    match a.out {
        Some(out) => {
            write_text(&out, &csv)?;
            Ok(Produced {
                outputs: vec![out],
                seed: None,
            })
        }
        None => {
            print!("{csv}");
            Ok(Produced::none())
        }
    }
}

fn mrfi_cmd(a: crate::MrfiArgs) -> Result<Produced> {
    let s = parse::structure_from_spec(a.spec.as_deref(), &a.pos)?;
    if a.count {
        println!("{}", s.len());
    } else if a.out.is_none() {
        let mut buf = Vec::new();
        s.write(&mut buf)?;
        print!("{}", String::from_utf8_lossy(&buf));
    }
    let mut produced = Produced::none();
    if let Some(out) = a.out {
        let mut buf = Vec::new();
        s.write(&mut buf)?;
        fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
        produced.outputs.push(out);
    }
    Ok(produced)
}

fn render_cmd(a: crate::RenderArgs) -> Result<Produced> {
    let raster = match (&a.field, &a.real) {
        (Some(f), None) => {
            let palette = match a.colors.as_deref() {
                None | Some("categorical") => Palette::Categorical,
                Some("gray") => Palette::Gray,
                Some(o) => bail!("unknown palette {o:?} for a discrete field"),
            };
            render_discrete(&parse::read_field(f)?, palette)
        }
        (None, Some(r)) => {
            let ramp = match a.colors.as_deref() {
                None | Some("gray") => Ramp::Gray,
                Some("viridis") => Ramp::Viridis,
                Some(o) => bail!("unknown ramp {o:?} for a real field"),
            };
            render_real(&parse::read_real(r)?, ramp)
        }
        _ => bail!("give exactly one of --field and --real"),
    };
    write_png(&a.out, &raster.scaled(a.scale))?;
    Ok(Produced {
        outputs: vec![a.out],
        seed: None,
    })
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

fn oracle_cmd(a: crate::OracleArgs) -> Result<Produced> {
    let dims = pair::<usize>(&a.dims, "dims")?;
    let theta = load_model(&a.theta, &a.structure)?;
    let fam = family(&a.family)?;
    let theta = theta.reinterpret(fam).context("model does not fit the requested family")?;
    println!("log partition: {:.10}", log_partition(dims, &theta)?);
    if let Ok(t) = log_partition_transfer(dims, &theta) {
        println!("log partition (transfer matrix): {t:.10}");
    }
    println!("expected statistics: {}", fmt_vec(&exact_expected_stats(dims, &theta, fam)?));
    if let Some(f) = a.field {
        let z = parse::read_field(&f)?;
        let mle = exact_mle(&z, theta.structure(), fam)?;
        println!("exact MLE: {}", fmt_vec(&mle));
    }
    Ok(Produced::none())
}
