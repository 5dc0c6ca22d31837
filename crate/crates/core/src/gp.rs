//! RBF-kernel Gaussian processes: regression residuals for nonlinear scoring and
//! function draws for data generation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Largest jitter tried before declaring a matrix not positive definite.
pub const MAX_JITTER: f64 = 1e-3;
/// First non-zero jitter in the escalation schedule.
pub const MIN_JITTER: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Diagonal regularization added to the kernel matrix.
    pub alpha: f64,
    /// Candidate length scales; the one with highest log marginal likelihood is used.
    pub length_scale_grid: Vec<f64>,
    pub jitter: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            length_scale_grid: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            jitter: MIN_JITTER,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidArgument("gp alpha must be >= 0".into()));
        }
        if self.length_scale_grid.is_empty()
            || self.length_scale_grid.iter().any(|&l| !(l > 0.0))
        {
            return Err(Error::InvalidArgument(
                "gp length-scale grid must be non-empty and positive".into(),
            ));
        }
        if !(self.jitter > 0.0) {
            return Err(Error::InvalidArgument("gp jitter must be > 0".into()));
        }
        Ok(())
    }
}

/// `K[i,j] = exp(-|a_i - b_j|^2 / (2 l^2))` over the rows of `a` and `b`.
pub fn rbf_kernel(a: &DMatrix<f64>, b: &DMatrix<f64>, length_scale: f64) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols(), "rbf_kernel: column counts differ");
    let scale = -0.5 / (length_scale * length_scale);
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        let mut sq = 0.0;
        for c in 0..a.ncols() {
            let diff = a[(i, c)] - b[(j, c)];
            sq += diff * diff;
        }
        (sq * scale).exp()
    })
}

/// Cholesky factor of `spd + jitter * I`, escalating the jitter tenfold (from at least
/// [`MIN_JITTER`]) until the factorization succeeds or exceeds [`MAX_JITTER`].
pub fn cholesky_with_jitter(spd: &DMatrix<f64>, jitter: f64) -> Result<Cholesky<f64, Dyn>> {
    let mut current = jitter.max(0.0);
    loop {
        let mut shifted = spd.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += current;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok(chol);
        }
        let next = (current * 10.0).max(MIN_JITTER);
        if next > MAX_JITTER {
            return Err(Error::NotPositiveDefinite { jitter: current });
        }
        current = next;
    }
}

/// Solves `(spd + jitter * I) X = rhs` with jitter escalation on factorization failure.
pub fn cholesky_solve(spd: &DMatrix<f64>, rhs: &DMatrix<f64>, jitter: f64) -> Result<DMatrix<f64>> {
    if spd.nrows() != spd.ncols() || spd.nrows() != rhs.nrows() {
        return Err(Error::Shape(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            spd.nrows(),
            spd.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    Ok(cholesky_with_jitter(spd, jitter)?.solve(rhs))
}

struct GpFit {
    log_marginal: f64,
    mean: DVector<f64>,
}

fn fit_length_scale(
    inputs: &DMatrix<f64>,
    y: &DVector<f64>,
    length_scale: f64,
    cfg: &GpConfig,
) -> Result<GpFit> {
    let n = y.len();
    let k = rbf_kernel(inputs, inputs, length_scale);
    let mut ky = k.clone();
    for i in 0..n {
        ky[(i, i)] += cfg.alpha;
    }
    let chol = cholesky_with_jitter(&ky, cfg.jitter)?;
    let weights = chol.solve(y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let log_marginal = -0.5 * y.dot(&weights)
        - log_det
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    Ok(GpFit {
        log_marginal,
        mean: k * weights,
    })
}

/// Picks the grid length scale with the highest log marginal likelihood (ties go to the
/// larger scale) and returns it with the in-sample posterior mean.
pub fn gp_regress(
    inputs: &DMatrix<f64>,
    y: &DVector<f64>,
    cfg: &GpConfig,
) -> Result<(f64, DVector<f64>)> {
    cfg.validate()?;
    let mut best: Option<(f64, GpFit)> = None;
    for &ls in &cfg.length_scale_grid {
        let fit = fit_length_scale(inputs, y, ls, cfg)?;
        let better = match &best {
            None => true,
            Some((best_ls, best_fit)) => {
                fit.log_marginal > best_fit.log_marginal
                    || (fit.log_marginal == best_fit.log_marginal && ls > *best_ls)
            }
        };
        if better {
            best = Some((ls, fit));
        }
    }
    let (ls, fit) = best.expect("grid validated non-empty");
    Ok((ls, fit.mean))
}

/// Sum of squared in-sample residuals of a GP regression of `node` on `parents`.
///
/// The target is centered first; an empty parent set gives the centered sum of squares.
pub fn gp_ssr(data: &Dataset, node: usize, parents: &[usize], cfg: &GpConfig) -> Result<f64> {
    let x = data.x();
    let y = x.column(node);
    let mean = y.sum() / y.len() as f64;
    let y = y.add_scalar(-mean);
    if parents.is_empty() {
        return Ok(y.norm_squared());
    }
    let inputs = DMatrix::from_fn(x.nrows(), parents.len(), |i, c| x[(i, parents[c])]);
    let (_, fitted) = gp_regress(&inputs, &y, cfg)?;
    Ok((y - fitted).norm_squared())
}

/// One draw of `f ~ N(0, K(inputs, inputs))` evaluated at the rows of `inputs`.
pub fn gp_sample_function<R: Rng + ?Sized>(
    inputs: &DMatrix<f64>,
    length_scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("gp_sample_function needs at least one input".into()));
    }
    let k = rbf_kernel(inputs, inputs, length_scale);
    let chol = cholesky_with_jitter(&k, MIN_JITTER)?;
    let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((chol.l() * xi).iter().copied().collect())
}
