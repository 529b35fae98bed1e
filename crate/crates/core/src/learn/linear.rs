//! Ridge-regularized linear regression baseline.
//!
//! Probability-histogram feature blocks each sum to one, which makes the
//! plain normal equations singular; a small ridge term (1e-8) on the weights
//! keeps the solve well posed without noticeably biasing the fit.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::learn::TargetScaler;

/// Ridge strength applied to the weight rows (the intercept is free).
pub const RIDGE: f64 = 1e-8;

/// Multi-output linear model: prediction = xᵀW + intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// (input_dim + 1) rows × output_dim columns; last row is the intercept.
    pub weights: Vec<Vec<f64>>,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Identity scaling: the linear fit works in original units directly.
    pub scaler: TargetScaler,
}

impl LinearModel {
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.input_dim {
            return Err(CoreError::Dimension(format!(
                "model expects {} features, got {}",
                self.input_dim,
                features.len()
            )));
        }
        let mut out = self.weights[self.input_dim].clone();
        for (i, &x) in features.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(&self.weights[i]) {
                *o += x * w;
            }
        }
        Ok(self.scaler.inverse_row(&out))
    }
}

/// Least-squares fit with ridge on the weights, exact on the intercept.
pub fn fit_linear(xs: &[&[f64]], ys: &[&[f64]]) -> Result<LinearModel> {
    if xs.len() < 2 {
        return Err(CoreError::Training(format!(
            "linear regression needs at least 2 samples, got {}",
            xs.len()
        )));
    }
    if xs.len() != ys.len() {
        return Err(CoreError::Dimension("feature/label row mismatch".into()));
    }
    let d = xs[0].len();
    let k = ys[0].len();
    let da = d + 1; // augmented with intercept
    // Normal equations A = XᵀX + λR, B = XᵀY with the intercept unpenalized.
    let mut a = vec![vec![0.0; da]; da];
    let mut b = vec![vec![0.0; k]; da];
    let mut xi = vec![0.0; da];
    for (x, y) in xs.iter().zip(ys) {
        if x.len() != d || y.len() != k {
            return Err(CoreError::Dimension("ragged training rows".into()));
        }
        xi[..d].copy_from_slice(x);
        xi[d] = 1.0;
        for r in 0..da {
            let xr = xi[r];
            if xr != 0.0 {
                for c in r..da {
                    a[r][c] += xr * xi[c];
                }
                for (bc, yv) in b[r].iter_mut().zip(y.iter()) {
                    *bc += xr * yv;
                }
            }
        }
    }
    for r in 0..da {
        for c in 0..r {
            a[r][c] = a[c][r];
        }
    }
    for (r, row) in a.iter_mut().enumerate().take(d) {
        row[r] += RIDGE;
    }
    let w = cholesky_solve(&mut a, &b)?;
    Ok(LinearModel {
        weights: w,
        input_dim: d,
        output_dim: k,
        scaler: TargetScaler::identity(k),
    })
}

/// Solves A·X = B for SPD A via Cholesky; A is overwritten with its factor.
fn cholesky_solve(a: &mut [Vec<f64>], b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let k = b[0].len();
    for j in 0..n {
        let mut diag = a[j][j];
        for t in 0..j {
            diag -= a[j][t] * a[j][t];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(CoreError::Training(format!(
                "normal equations not positive definite at pivot {j}"
            )));
        }
        let diag = diag.sqrt();
        a[j][j] = diag;
        for i in (j + 1)..n {
            let mut v = a[i][j];
            for t in 0..j {
                v -= a[i][t] * a[j][t];
            }
            a[i][j] = v / diag;
        }
    }
    // Forward then backward substitution per right-hand side.
    let mut x = vec![vec![0.0; k]; n];
    for col in 0..k {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = b[i][col];
            for t in 0..i {
                v -= a[i][t] * y[t];
            }
            y[i] = v / a[i][i];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for t in (i + 1)..n {
                v -= a[t][i] * x[t][col];
            }
            x[i][col] = v / a[i][i];
        }
    }
    Ok(x)
}
