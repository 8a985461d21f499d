//! Least-squares power-law fitting on log-log data.

use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Fit log(value) = intercept + slope * log(t) over the points whose t lies
/// in `window`. Needs at least 5 points with positive values.
pub fn fit_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(CliError::Fit(format!(
                "nonpositive value {v} at t = {t} inside the fit window"
            )));
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 5 {
        return Err(CliError::Fit(format!(
            "only {} points in window [{}, {}], need at least 5",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if xs.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        slope,
        intercept,
        stderr,
        window,
        points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let series: Vec<(f64, f64)> = (1..=20)
            .map(|i| {
                let t = 0.01 * 1.5f64.powi(i);
                (t, 3.0 * t.powf(-0.5))
            })
            .collect();
        let fit = fit_exponent(&series, (0.0, f64::INFINITY)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-6, "slope {}", fit.slope);
        assert!(fit.stderr < 1e-9);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let series: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 2.5)).collect();
        let fit = fit_exponent(&series, (0.0, 100.0)).unwrap();
        assert!(fit.slope.abs() < 1e-6);
    }

    #[test]
    fn window_and_positivity_are_enforced() {
        let series: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 1.0)).collect();
        assert!(fit_exponent(&series, (100.0, 200.0)).is_err());
        let mut bad = series.clone();
        bad[3].1 = 0.0;
        assert!(fit_exponent(&bad, (0.0, 100.0)).is_err());
    }
}
