//! Text summaries of fitted models.

use std::fmt::Write;

use crate::estimators::{position_magnitudes, MrfFit};
use crate::hmrf::HmrfFit;
use crate::potentials::{Family, PotentialArray};

/// Per-position largest absolute potential, divided by the largest over all
/// positions. All zeros when every potential is zero.
pub fn relative_contribution(theta: &PotentialArray) -> Vec<f64> {
    let m = position_magnitudes(theta);
    let top = m.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return vec![0.0; m.len()];
    }
    m.iter().map(|v| v / top).collect()
}

pub fn stars(contribution: f64) -> &'static str {
    if contribution > 2.0 / 3.0 {
        "***"
    } else if contribution > 1.0 / 3.0 {
        "**"
    } else if contribution > 0.0 {
        "*"
    } else {
        ""
    }
}

fn count_table(out: &mut String, counts: &[usize]) {
    let widths: Vec<usize> = counts.iter().map(|c| c.to_string().len().max(5) + 1).collect();
    for (k, w) in widths.iter().enumerate() {
        let _ = write!(out, "{k:>w$} ");
    }
    out.push_str("       \n");
    for (c, w) in counts.iter().zip(&widths) {
        let _ = write!(out, "{c:>w$} ");
    }
    out.push('\n');
}

pub fn mrf_summary(fit: &MrfFit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Model adjusted via {} ", fit.method.describe());
    let _ = writeln!(out, "Image dimension: {} {} ", fit.dims.0, fit.dims.1);
    let _ = writeln!(out, "{} colors, distributed as:", fit.color_counts.len());
    count_table(&mut out, &fit.color_counts);
    out.push('\n');

    let theta = &fit.theta;
    let positions = theta.structure().positions();
    if positions.is_empty() {
        out.push_str("No interacting positions.\n");
        return out;
    }
    let params = theta.summarize();
    let family = theta.family();
    let block = family.block_len(theta.colors());
    let header = if family == Family::Free || family == Family::Dif {
        "Interactions (free parameters per position): "
    } else {
        "Interactions for different-valued pairs: "
    };
    let _ = writeln!(out, "{header}");
    let _ = writeln!(out, "Position|  Value  Rel. Contribution");
    let contrib = relative_contribution(theta);
    for (k, p) in positions.iter().enumerate() {
        let values: &[f64] = if family == Family::OnePar {
            &params[..]
        } else {
            &params[k * block..(k + 1) * block]
        };
        let cells: Vec<String> = values.iter().map(|v| format!("{v:6.3}")).collect();
        let _ = writeln!(
            out,
            "{:>8}| {}  {:.3} {}",
            p.to_string(),
            cells.join(" "),
            contrib[k],
            stars(contrib[k])
        );
    }
    if let Some(lpl) = fit.log_pl {
        let _ = writeln!(out, "\nLog pseudo-likelihood: {lpl:.3}");
    }
    if let Some(&(t, d)) = fit.metrics.last() {
        let _ = writeln!(out, "\nDistance to observed statistics after {t} iterations: {d:.3}");
    }
    out
}

pub fn hmrf_summary(fit: &HmrfFit) -> String {
    let mut out = String::new();
    out.push_str("Gaussian mixture model driven by Hidden MRF fitted by EM-algorithm.\n");
    let _ = writeln!(out, "Image dimensions: {} {} ", fit.z_pred.height(), fit.z_pred.width());
    out.push_str("Predicted mixture component table:\n");
    count_table(&mut out, &fit.component_counts);
    let _ = writeln!(out, "Number of covariates (or basis functions): {} ", fit.n_basis);
    let positions: Vec<String> = fit.structure.positions().iter().map(|p| p.to_string()).collect();
    let _ = writeln!(out, "Interaction structure considered: {} ", positions.join(" "));
    out.push_str("\nMixture parameters:\n");
    let cells = |v: &[f64]| -> Vec<String> { v.iter().map(|x| format!("{x:.2}")).collect() };
    let mu = cells(&fit.params.mu);
    let sigma = cells(&fit.params.sigma);
    let wm = mu.iter().map(String::len).max().unwrap_or(0).max(5) + 1;
    let ws = sigma.iter().map(String::len).max().unwrap_or(0).max(5) + 1;
    let _ = writeln!(out, " Component{:>wm$}{:>ws$} ", "mu", "sigma");
    for (k, (m, s)) in mu.iter().zip(&sigma).enumerate() {
        let _ = writeln!(out, "{k:>10}{m:>wm$}{s:>ws$} ");
    }
    let _ = writeln!(out, "\nModel fitted in {} iterations.", fit.iterations);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::FitMethod;
    use crate::interactions::{InteractionStructure, Norm, Offset};

    fn fit_with(values: &[f64]) -> MrfFit {
        let r = InteractionStructure::build(1.0, Norm::L1, &[Offset::new(4, 4)]).unwrap();
        MrfFit {
            theta: PotentialArray::expand(values, Family::OneEach, &r, 1).unwrap(),
            log_pl: None,
            metrics: Vec::new(),
            method: FitMethod::PseudoLikelihood,
            color_counts: vec![11083, 11417],
            dims: (150, 150),
        }
    }

    #[test]
    fn contributions_and_stars() {
        let fit = fit_with(&[-0.993, -1.021, 0.183]);
        let c = relative_contribution(&fit.theta);
        assert!((c[0] - 0.993 / 1.021).abs() < 1e-12);
        assert_eq!(c[1], 1.0);
        assert!((c[2] - 0.183 / 1.021).abs() < 1e-12);
        assert_eq!([stars(c[0]), stars(c[2]), stars(0.5), stars(0.0)], ["***", "*", "**", ""]);
    }

    #[test]
    fn layout() {
        let text = mrf_summary(&fit_with(&[-0.993, -1.021, 0.183]));
        assert!(text.starts_with("Model adjusted via Pseudolikelihood \nImage dimension: 150 150 \n2 colors"));
        assert!(text.contains("   (1,0)| -0.993  0.973 ***\n"));
        assert!(text.contains("   (4,4)|  0.183  0.179 *\n"));
        assert!(text.contains(" 11083  11417"));
    }

    #[test]
    fn no_positions() {
        let mut fit = fit_with(&[0.0, 0.0, 0.0]);
        fit.theta = PotentialArray::zeros(Family::OneEach, &InteractionStructure::empty(), 1).unwrap();
        let text = mrf_summary(&fit);
        assert!(text.contains("No interacting positions."));
        assert!(!text.contains("Position|"));
    }
}
