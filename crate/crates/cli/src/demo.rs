//! Self-contained synthetic workflows.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use latmrf::estimators::{default_gamma, fit_pl, select_interactions, SaSettings};
use latmrf::hmrf::{fit_ghm, polynomial_basis, GhmSettings};
use latmrf::optim::BfgsOptions;
use latmrf::render::{render_discrete, render_real, Palette, Ramp, Raster};
use latmrf::report::{hmrf_summary, mrf_summary};
use latmrf::rng::stream_rng;
use latmrf::sampler::{sample_mrf, InitialField, SamplerConfig};
use latmrf::{Family, InteractionStructure, Norm, Offset, PotentialArray, RealField};

use crate::commands::{write_ghm_outputs, write_png, write_text, Produced};
use crate::parse;

/// Independent seed for sub-step `k` of a demo.
fn sub_seed(seed: u64, k: u64) -> u64 {
    stream_rng(seed, k).random::<u64>()
}

/// Samples a texture with interactions at (1,0), (0,1) and (4,4), recovers
/// them by selection, refits by pseudo-likelihood and resamples.
pub(crate) fn texture(size: usize, radius: usize, seed: u64, dir: &Path) -> Result<Produced> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let truth_structure = InteractionStructure::from_positions(vec![Offset::new(1, 0), Offset::new(0, 1), Offset::new(4, 4)])?;
    let truth = PotentialArray::expand(&[-1.0, -1.0, 0.2], Family::OneEach, &truth_structure, 1)?;
    let observed = sample_mrf(InitialField::Dims(size, size), &truth, &SamplerConfig::new(60, sub_seed(seed, 0)))?;
    let observed_path = dir.join("observed.txt");
    parse::write_field(&observed_path, &observed)?;

    let candidates = InteractionStructure::build(radius as f64, Norm::Linf, &[])?;
    let settings = SaSettings {
        gamma: default_gamma(1.0, 300),
        seed: sub_seed(seed, 1),
        ..SaSettings::default()
    };
    let (selected, sa_fit) = select_interactions(&observed, &candidates, Family::OneEach, &settings, 0.1)?;
    let selection_path = dir.join("selected.txt");
    let mut buf = Vec::new();
    selected.write(&mut buf)?;
    fs::write(&selection_path, buf).with_context(|| format!("writing {}", selection_path.display()))?;

    let pl = fit_pl(&observed, &selected, Family::OneEach, None, BfgsOptions::default())?;
    let model_path = dir.join("fitted.model");
    parse::save_model(&model_path, &pl.theta)?;
    let resampled = sample_mrf(InitialField::Dims(size, size), &pl.theta, &SamplerConfig::new(60, sub_seed(seed, 2)))?;
    let resampled_path = dir.join("resampled.txt");
    parse::write_field(&resampled_path, &resampled)?;

    let png = dir.join("texture.png");
    let side = Raster::side_by_side(
        &[render_discrete(&observed, Palette::Gray), render_discrete(&resampled, Palette::Gray)],
        8,
    );
    write_png(&png, &side.scaled(2))?;

    let summary = format!(
        "{}\nSelected positions: {selected}\n\n{}",
        mrf_summary(&sa_fit),
        mrf_summary(&pl)
    );
    print!("{summary}");
    let summary_path = dir.join("summary.txt");
    write_text(&summary_path, &summary)?;
    Ok(Produced {
        outputs: vec![observed_path, selection_path, model_path, resampled_path, png, summary_path],
        seed: Some(seed),
    })
}

/// Three-class Potts field observed with a smooth trend and Gaussian noise,
/// then segmented.
pub(crate) fn segment(size: usize, seed: u64, dir: &Path) -> Result<Produced> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let nn = InteractionStructure::build(1.0, Norm::L1, &[])?;
    let theta = PotentialArray::expand(&[-1.0], Family::OnePar, &nn, 2)?;
    let latent = sample_mrf(InitialField::Dims(size, size), &theta, &SamplerConfig::new(100, sub_seed(seed, 0)))?;

    let mu = [0.0, 2.5, 5.0];
    let noise = Normal::new(0.0, 0.8)?;
    let mut rng = stream_rng(seed, 3);
    let scaled = |i: usize| 2.0 * i as f64 / (size.max(2) - 1) as f64 - 1.0;
    let values: Vec<f64> = latent
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let (r, c) = (scaled(i / size), scaled(i % size));
            mu[l as usize] + 0.7 * r - 0.5 * r * c + noise.sample(&mut rng)
        })
        .collect();
    let y = RealField::new(size, size, values, None)?;
    let y_path = dir.join("y.csv");
    parse::write_real(&y_path, &y)?;
    let truth_path = dir.join("z_true.txt");
    parse::write_field(&truth_path, &latent)?;

    let basis = polynomial_basis((2, 2), (size, size))?;
    let fit = fit_ghm(&y, &theta, Some(&basis), &GhmSettings::default())?;
    let mut outputs = vec![y_path, truth_path];
    outputs.extend(write_ghm_outputs(&fit, dir)?);
    let agree = fit.z_pred.labels().iter().zip(latent.labels()).filter(|(a, b)| a == b).count();
    let summary = format!(
        "{}\nAgreement with the simulated labels: {:.4}\n",
        hmrf_summary(&fit),
        agree as f64 / (size * size) as f64
    );
    print!("{summary}");
    write_text(&dir.join("summary.txt"), &summary)?;

    let png = dir.join("segment.png");
    let side = Raster::side_by_side(
        &[
            render_real(&y, Ramp::Viridis),
            render_discrete(&latent, Palette::Categorical),
            render_discrete(&fit.z_pred, Palette::Categorical),
        ],
        6,
    );
    write_png(&png, &side.scaled(2))?;
    outputs.push(png);
    Ok(Produced { outputs, seed: Some(seed) })
}
