use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// Regress `log y` on `log lambda`.
    PurePower,
    /// Regress `log y` on `log(lambda^{1/2} (log lambda)^{(d-2)/2})`.
    PowerWithLogCorrection,
}

impl std::str::FromStr for ScalingModel {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure_power" => Ok(ScalingModel::PurePower),
            "power_with_log_correction" => Ok(ScalingModel::PowerWithLogCorrection),
            _ => invalid(format!("unknown scaling model {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    /// `(regressor, log y)` pairs.
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `log y` against the model's regressor.
pub fn fit_scaling(lambdas: &[f64], ys: &[f64], model: ScalingModel, dim: usize) -> Result<ScalingFit> {
    if lambdas.len() != ys.len() {
        return invalid("lambda and y columns differ in length");
    }
    if lambdas.len() < 4 {
        return invalid(format!("a scaling fit needs at least 4 points, got {}", lambdas.len()));
    }
    if ys.iter().any(|&y| !(y > 0.0)) || lambdas.iter().any(|&l| !(l > 1.0)) {
        return invalid("scaling fits need y > 0 and lambda > 1");
    }
    let pairs: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(ys)
        .map(|(&l, &y)| {
            let x = match model {
                ScalingModel::PurePower => l.ln(),
                ScalingModel::PowerWithLogCorrection => 0.5 * l.ln() + 0.5 * (dim as f64 - 2.0) * l.ln().ln(),
            };
            (x, y.ln())
        })
        .collect();
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return invalid("degenerate design: every lambda is the same");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(ScalingFit {
        model,
        pairs,
        slope,
        intercept,
        r_squared,
    })
}

/// Fits column `y_column` of a CSV table against its `lambda` column.
pub fn fit_table(path: &Path, y_column: &str, model: ScalingModel, dim: usize) -> Result<ScalingFit> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::InvalidArgument(format!("no column {name:?}")))
    };
    let (li, yi) = (col("lambda")?, col(y_column)?);
    let (mut lambdas, mut ys) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        let parse = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| LabError::InvalidArgument(format!("{}: {e}", &rec[i])))
        };
        lambdas.push(parse(li)?);
        ys.push(parse(yi)?);
    }
    fit_scaling(&lambdas, &ys, model, dim)
}
