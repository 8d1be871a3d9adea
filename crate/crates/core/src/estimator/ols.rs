use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsDiagnostics {
    /// `None` when undefined (no residual degrees of freedom or constant response).
    pub adjusted_r2: Option<f64>,
    /// Pearson correlation of fitted and observed responses.
    pub prediction_correlation: Option<f64>,
    pub n_obs: usize,
    pub n_params: usize,
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub fitted: DVector<f64>,
    pub diagnostics: OlsDiagnostics,
}

/// Least squares by Householder QR. `names` labels columns in errors.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>, names: Option<&[String]>) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Alignment(format!("{} responses for {n} design rows", y.len())));
    }
    if n < p || p == 0 {
        return Err(Error::InsufficientData(format!(
            "least squares with {p} columns needs at least {p} rows, got {n}"
        )));
    }
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    let scaled = DMatrix::from_fn(n, p, |i, j| {
        if norms[j] > 0.0 {
            x[(i, j)] / norms[j]
        } else {
            0.0
        }
    });
    let qr = scaled.qr();
    let r = qr.r();
    let dependent: Vec<usize> = (0..p)
        .filter(|&k| norms[k] == 0.0 || r[(k, k)].abs() <= 1e-10)
        .collect();
    if !dependent.is_empty() {
        let label = |k: usize| match names {
            Some(ns) if k < ns.len() => ns[k].clone(),
            _ => format!("column {k}"),
        };
        let listed: Vec<String> = dependent.iter().map(|&k| label(k)).collect();
        return Err(Error::Singular(format!(
            "design is rank deficient; dependent columns: {}",
            listed.join(", ")
        )));
    }
    let qty = qr.q().transpose() * y;
    let b_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let coefficients = DVector::from_iterator(p, (0..p).map(|j| b_scaled[j] / norms[j]));
    let fitted = x * &coefficients;
    let residuals = y - &fitted;
    let diagnostics = diagnostics(y, &fitted, &residuals, p);
    Ok(OlsFit {
        coefficients,
        residuals,
        fitted,
        diagnostics,
    })
}

fn diagnostics(y: &DVector<f64>, fitted: &DVector<f64>, residuals: &DVector<f64>, p: usize) -> OlsDiagnostics {
    let n = y.len();
    let rss = residuals.norm_squared();
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let adjusted_r2 = if n > p && tss > 0.0 {
        Some(1.0 - (rss / (n - p) as f64) / (tss / (n - 1) as f64))
    } else {
        None
    };
    OlsDiagnostics {
        adjusted_r2,
        prediction_correlation: pearson(fitted.as_slice(), y.as_slice()),
        n_obs: n,
        n_params: p,
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_provinces_with_linear_trend() {
        // rows: (A,0) (A,1) (A,2) (B,0) (B,1) (B,2); columns αA, αB, β₁
        let x = DMatrix::from_row_slice(
            6,
            3,
            &[
                1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0,
                1.0, 2.0,
            ],
        );
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 2.0, 3.0, 4.0]);
        let fit = fit_ols(&x, &y, None).unwrap();
        let b = &fit.coefficients;
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
        assert!((b[2] - 1.0).abs() < 1e-12);
        assert!(fit.residuals.amax() < 1e-10);
        assert!((fit.diagnostics.adjusted_r2.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_the_column() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let err = fit_ols(&x, &y, Some(&names)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.ends_with(": c"), "{msg}");
        assert!(matches!(err, Error::Singular(_)));
    }
}
