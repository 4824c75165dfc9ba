use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `iterations ~ a * size^p`, fitted by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub p: f64,
    pub r_squared: f64,
}

pub fn power_law_fit(sizes: &[f64], iterations: &[f64]) -> Result<PowerLawFit> {
    if sizes.len() != iterations.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sizes but {} iteration counts",
            sizes.len(),
            iterations.len()
        )));
    }
    if sizes.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("sizes must be positive".into()));
    }
    if iterations.iter().any(|&k| !(k >= 1.0)) {
        return Err(Error::InvalidArgument("iteration counts must be >= 1".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = iterations.iter().map(|k| k.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.len() < 2 || sxx <= 0.0 {
        return Err(Error::InvalidArgument(
            "power-law fit needs at least two distinct sizes".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let intercept = my - p * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - p * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PowerLawFit {
        a: intercept.exp(),
        p,
        r_squared,
    })
}
