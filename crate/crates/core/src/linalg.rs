//! Least-squares regression with an intercept.
//!
//! Columns are centered (equivalent to fitting an intercept) and the system is solved by
//! Householder QR. A rank-deficient design falls back to the SVD pseudo-inverse, which
//! yields the minimum-norm coefficient vector. Residuals are formed explicitly rather
//! than through normal equations so that near-perfect fits on high-variance columns keep
//! their precision.

use nalgebra::{DMatrix, DVector};

/// Relative size below which a diagonal entry of R marks the design as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OlsFit {
    /// One coefficient per predictor, in the order given.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Residual sum of squares.
    pub ssr: f64,
}

fn centered_column(x: &DMatrix<f64>, j: usize) -> (DVector<f64>, f64) {
    let col = x.column(j);
    let mean = col.sum() / col.len() as f64;
    (col.add_scalar(-mean), mean)
}

/// Regresses column `target` of `x` on `predictors` plus an intercept.
pub fn ols(x: &DMatrix<f64>, target: usize, predictors: &[usize]) -> OlsFit {
    let n = x.nrows();
    let (y, y_mean) = centered_column(x, target);
    if predictors.is_empty() {
        return OlsFit {
            coefficients: Vec::new(),
            intercept: y_mean,
            ssr: y.norm_squared(),
        };
    }
    let k = predictors.len();
    let mut means = Vec::with_capacity(k);
    let mut design = DMatrix::zeros(n, k);
    for (c, &j) in predictors.iter().enumerate() {
        let (col, mean) = centered_column(x, j);
        design.set_column(c, &col);
        means.push(mean);
    }

    let beta = solve_qr(&design, &y).unwrap_or_else(|| solve_pinv(&design, &y));
    let residual = &y - &design * &beta;
    let intercept = y_mean - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    OlsFit {
        coefficients: beta.iter().copied().collect(),
        intercept,
        ssr: residual.norm_squared(),
    }
}

fn solve_qr(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let (n, k) = design.shape();
    if n < k {
        return None;
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= RANK_TOL * scale) {
        return None;
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, k).into_owned();
    r.solve_upper_triangular(&rhs)
}

fn solve_pinv(design: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let (n, k) = design.shape();
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = f64::EPSILON * n.max(k) as f64 * smax;
    svd.solve(y, tol)
        .unwrap_or_else(|_| DVector::zeros(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(cols: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
    }

    #[test]
    fn empty_parent_set_is_centered_sum_of_squares() {
        let x = data(&[&[1.0, -1.0, 1.0, -1.0]]);
        assert_eq!(ols(&x, 0, &[]).ssr, 4.0);
    }

    #[test]
    fn orthogonal_parent_has_zero_slope() {
        let x = data(&[&[1.0, 1.0, -1.0, -1.0], &[1.0, -1.0, 1.0, -1.0]]);
        let fit = ols(&x, 0, &[1]);
        assert!(fit.coefficients[0].abs() < 1e-15);
        assert!((fit.ssr - 4.0).abs() < 1e-12);
    }

    #[test]
    fn exact_fit_with_intercept() {
        let x = data(&[&[0.0, 1.0, 2.0, 3.0], &[3.0, 5.0, 7.0, 9.0]]);
        let fit = ols(&x, 1, &[0]);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.ssr < 1e-20);
    }

    #[test]
    fn collinear_design_uses_minimum_norm_solution() {
        // Column 2 duplicates column 1; y = 2 * x1.
        let x1 = [0.5, -1.0, 2.0, 0.0, 1.5];
        let y: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let x = data(&[&x1, &x1, &y]);
        let fit = ols(&x, 2, &[0, 1]);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-9);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-9);
        assert!(fit.ssr < 1e-18);
    }

    #[test]
    fn more_predictors_than_samples() {
        let x = data(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, -1.0], &[2.0, 2.0]]);
        let fit = ols(&x, 0, &[1, 2, 3]);
        assert!(fit.ssr.is_finite());
        assert!(fit.ssr < 1e-18);
    }
}
