//! Ordinary least squares with a cached QR factorization, leverage-based
//! leave-one-out residuals, and moment summaries of the design.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Columns of the design are declared dependent when the ratio of smallest
/// to largest singular value falls below this.
const RANK_TOL: f64 = 1e-12;

/// A leverage within this distance of one makes the leave-one-out residual
/// numerically meaningless.
const LEVERAGE_TOL: f64 = 1e-10;

/// A regression data set: an n×p design with responses, n > p ≥ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Validates shapes and finiteness.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                context: format!("design has {n} rows but response has {} entries", y.len()),
            });
        }
        if !(n > p && p >= 1) {
            return Err(Error::DimensionMismatch {
                context: format!("need n > p >= 1, got n = {n}, p = {p}"),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "design matrix".into() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "response vector".into() });
        }
        Ok(Self { x, y })
    }

    /// The design matrix.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// The response vector.
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of regressors.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Thin QR factorization of a design matrix, with the rank check applied.
pub(crate) fn qr_decompose(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let qr = x.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let ratio = singular_ratio(&r);
    if ratio.is_nan() || ratio <= RANK_TOL {
        return Err(Error::RankDeficient { ratio });
    }
    Ok((q, r))
}

/// Ratio of smallest to largest singular value of a square factor.
fn singular_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Weights w with x_fᵀ(XᵀX)⁻¹Xᵀ = wᵀ, i.e. w = Q R⁻ᵀ x_f, so that the
/// shift in the prediction at x_f caused by any response perturbation e is
/// exactly w·e.
pub(crate) fn weights_from_qr(
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    xf: &[f64],
) -> Result<DVector<f64>> {
    let p = r.ncols();
    if xf.len() != p {
        return Err(Error::DimensionMismatch {
            context: format!("prediction point has {} coordinates, design has {p}", xf.len()),
        });
    }
    let xf = DVector::from_column_slice(xf);
    let t = r
        .transpose()
        .solve_lower_triangular(&xf)
        .ok_or(Error::RankDeficient { ratio: 0.0 })?;
    Ok(q * t)
}

/// An OLS fit with everything the bootstrap needs cached: coefficients,
/// leverages, centered and leave-one-out residual pools, the error variance
/// estimate, and the QR factors for O(np) refits.
#[derive(Debug, Clone)]
pub struct FittedModel {
    data: Dataset,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    beta_hat: DVector<f64>,
    leverages: Vec<f64>,
    raw_residuals: Vec<f64>,
    residual_mean: f64,
    centered_residuals: Vec<f64>,
    predictive_residuals: std::result::Result<Vec<f64>, (usize, f64)>,
    sigma_hat_sq: f64,
}

/// Fits ordinary least squares by QR, consuming the data set.
pub fn fit_ols(data: Dataset) -> Result<FittedModel> {
    let n = data.n();
    let (q, r) = qr_decompose(data.x())?;
    let qty = q.tr_mul(data.y());
    let beta_hat =
        r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient { ratio: 0.0 })?;

    let fitted = data.x() * &beta_hat;
    let raw_residuals: Vec<f64> = (0..n).map(|i| data.y()[i] - fitted[i]).collect();
    let leverages: Vec<f64> = (0..n).map(|i| q.row(i).norm_squared()).collect();

    let residual_mean = raw_residuals.iter().sum::<f64>() / n as f64;
    let centered_residuals: Vec<f64> =
        raw_residuals.iter().map(|e| e - residual_mean).collect();
    let sigma_hat_sq =
        centered_residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;

    // Leave-one-out (predictive) residuals via the leverage identity
    // r'_i = e_i / (1 - h_i), then centered; recorded as unavailable if any
    // leverage is numerically one.
    let predictive_residuals = match leverages
        .iter()
        .enumerate()
        .find(|(_, &h)| 1.0 - h <= LEVERAGE_TOL)
    {
        Some((i, &h)) => Err((i, h)),
        None => {
            let loo: Vec<f64> = raw_residuals
                .iter()
                .zip(&leverages)
                .map(|(e, h)| e / (1.0 - h))
                .collect();
            let mean = loo.iter().sum::<f64>() / n as f64;
            Ok(loo.iter().map(|v| v - mean).collect())
        }
    };

    Ok(FittedModel {
        data,
        q,
        r,
        beta_hat,
        leverages,
        raw_residuals,
        residual_mean,
        centered_residuals,
        predictive_residuals,
        sigma_hat_sq,
    })
}

impl FittedModel {
    /// The training data.
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// Number of regressors.
    pub fn p(&self) -> usize {
        self.data.p()
    }

    /// Estimated coefficients.
    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    /// Hat-matrix diagonal h_i = x_iᵀ(XᵀX)⁻¹x_i; each lies in [0, 1] and
    /// they sum to p.
    pub fn leverages(&self) -> &[f64] {
        &self.leverages
    }

    /// Residuals y_i − x_iᵀβ̂ exactly as fitted.
    pub fn raw_residuals(&self) -> &[f64] {
        &self.raw_residuals
    }

    /// Mean of the raw residuals (zero whenever the design spans an
    /// intercept).
    pub fn residual_mean(&self) -> f64 {
        self.residual_mean
    }

    /// Mean-centered residuals — the classical bootstrap pool.
    pub fn centered_residuals(&self) -> &[f64] {
        &self.centered_residuals
    }

    /// Mean-centered leave-one-out residuals e_i/(1 − h_i) — the predictive
    /// bootstrap pool. Fails if some leverage is numerically one.
    pub fn predictive_residuals(&self) -> Result<&[f64]> {
        match &self.predictive_residuals {
            Ok(v) => Ok(v.as_slice()),
            Err((index, value)) => Err(Error::LeverageOne { index: *index, value: *value }),
        }
    }

    /// Plug-in error variance estimate: the mean square of the centered
    /// residuals.
    pub fn sigma_hat_sq(&self) -> f64 {
        self.sigma_hat_sq
    }

    /// Point prediction x_fᵀβ̂.
    pub fn predict(&self, xf: &[f64]) -> Result<f64> {
        if xf.len() != self.p() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "prediction point has {} coordinates, design has {}",
                    xf.len(),
                    self.p()
                ),
            });
        }
        Ok(xf.iter().zip(self.beta_hat.iter()).map(|(a, b)| a * b).sum())
    }

    /// Weight vector w = Q R⁻ᵀ x_f (see [`weights_from_qr`]).
    pub(crate) fn prediction_weights(&self, xf: &[f64]) -> Result<DVector<f64>> {
        weights_from_qr(&self.q, &self.r, xf)
    }

    /// Coefficient shift (XᵀX)⁻¹Xᵀe for a perturbation e of the responses,
    /// using the cached factorization. Refitting on y + e gives exactly
    /// β̂ + refit_shift(e).
    pub fn refit_shift(&self, disturbance: &[f64]) -> Result<DVector<f64>> {
        if disturbance.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "disturbance has {} entries, design has {} rows",
                    disturbance.len(),
                    self.n()
                ),
            });
        }
        let e = DVector::from_column_slice(disturbance);
        let qte = self.q.tr_mul(&e);
        self.r.solve_upper_triangular(&qte).ok_or(Error::RankDeficient { ratio: 0.0 })
    }
}

/// Moment summary of a design at a prediction point: Â = XᵀX/n, the mean
/// regressor b̄, and the quadratic forms the asymptotic variance needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSummary {
    a_matrix: DMatrix<f64>,
    b_mean: DVector<f64>,
    xf: DVector<f64>,
    quad_aa: f64,
    quad_ab: f64,
    n_obs: usize,
}

/// Builds the [`DesignSummary`] for `data` at prediction point `xf`.
pub fn design_summary(data: &Dataset, xf: &[f64]) -> Result<DesignSummary> {
    let (n, p) = (data.n(), data.p());
    if xf.len() != p {
        return Err(Error::DimensionMismatch {
            context: format!("prediction point has {} coordinates, design has {p}", xf.len()),
        });
    }
    let a_matrix = data.x().tr_mul(data.x()) / n as f64;
    let b_mean = data.x().row_mean().transpose();
    let chol = nalgebra::Cholesky::new(a_matrix.clone())
        .ok_or_else(|| Error::RankDeficient { ratio: singular_ratio(&a_matrix) })?;
    let xf_vec = DVector::from_column_slice(xf);
    let z = chol.solve(&xf_vec);
    let quad_aa = xf_vec.dot(&z);
    let quad_ab = z.dot(&b_mean);
    Ok(DesignSummary { a_matrix, b_mean, xf: xf_vec, quad_aa, quad_ab, n_obs: n })
}

impl DesignSummary {
    /// Â = XᵀX/n.
    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    /// Mean regressor row b̄ = Xᵀ1/n.
    pub fn b_mean(&self) -> &DVector<f64> {
        &self.b_mean
    }

    /// The prediction point.
    pub fn xf(&self) -> &[f64] {
        self.xf.as_slice()
    }

    /// x_fᵀÂ⁻¹x_f ≥ 0.
    pub fn quad_aa(&self) -> f64 {
        self.quad_aa
    }

    /// x_fᵀÂ⁻¹b̄.
    pub fn quad_ab(&self) -> f64 {
        self.quad_ab
    }

    /// Number of observations the summary was computed from.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (diff {})",
            (got - want).abs()
        );
    }

    #[test]
    fn intercept_only_constant_response_fits_exactly() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let y = DVector::from_element(5, 3.0);
        let fit = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        assert_close(fit.beta_hat()[0], 3.0, 1e-12);
        assert_close(fit.sigma_hat_sq(), 0.0, 1e-28);
        for (&h, &e) in fit.leverages().iter().zip(fit.raw_residuals()) {
            assert_close(h, 0.2, 1e-12);
            assert_close(e, 0.0, 1e-12);
        }
    }

    #[test]
    fn saturated_single_regressor_interpolates() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let y = DVector::from_column_slice(&[1.0, 2.0]);
        let fit = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        assert_close(fit.beta_hat()[0], 1.0, 1e-12);
        assert_close(fit.sigma_hat_sq(), 0.0, 1e-24);
        assert_close(fit.leverages()[0], 0.2, 1e-12);
        assert_close(fit.leverages()[1], 0.8, 1e-12);
    }

    #[test]
    fn leave_one_out_hand_case() {
        // Intercept-only, y = (0,0,0,4): each h_i = 1/4, raw residuals
        // (-1,-1,-1,3), leave-one-out residuals (-4/3,-4/3,-4/3,4), which are
        // already mean-centered.
        let x = DMatrix::from_element(4, 1, 1.0);
        let y = DVector::from_column_slice(&[0.0, 0.0, 0.0, 4.0]);
        let fit = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        let want_raw = [-1.0, -1.0, -1.0, 3.0];
        let want_loo = [-4.0 / 3.0, -4.0 / 3.0, -4.0 / 3.0, 4.0];
        for i in 0..4 {
            assert_close(fit.leverages()[i], 0.25, 1e-12);
            assert_close(fit.raw_residuals()[i], want_raw[i], 1e-12);
            assert_close(fit.predictive_residuals().unwrap()[i], want_loo[i], 1e-12);
        }
    }

    #[test]
    fn zero_regressor_row_has_zero_leverage_and_identity_loo() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 2.0, 0.0, 0.0, 1.0, 3.0]);
        let y = DVector::from_column_slice(&[2.0, 3.0, 7.0, 5.0]);
        let fit = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        assert_close(fit.leverages()[2], 0.0, 1e-12);
        // The fitted value at the zero row is 0, so its raw residual is y,
        // and zero leverage leaves the leave-one-out residual equal to the
        // raw one (before pool centering).
        assert_close(fit.raw_residuals()[2], 7.0, 1e-10);
        let loo = fit.predictive_residuals().unwrap();
        let loo_mean: f64 = fit
            .raw_residuals()
            .iter()
            .zip(fit.leverages())
            .map(|(e, h)| e / (1.0 - h))
            .sum::<f64>()
            / 4.0;
        assert_close(loo[2] + loo_mean, 7.0, 1e-10);
    }

    #[test]
    fn residual_pools_are_centered_and_orthogonal() {
        let mut rng = crate::empirical::RngStream::new(31, 0).rng();
        let n = 60;
        let p = 4;
        let x = DMatrix::from_fn(n, p, |_, j| {
            if j == 0 {
                1.0
            } else {
                crate::special::normal_quantile(crate::empirical::uniform_open01(&mut rng))
            }
        });
        let y = DVector::from_fn(n, |_, _| {
            crate::special::normal_quantile(crate::empirical::uniform_open01(&mut rng))
        });
        let fit = fit_ols(Dataset::new(x.clone(), y).unwrap()).unwrap();

        // With an intercept the raw residuals are already centered.
        assert_close(fit.residual_mean(), 0.0, 1e-12);
        assert_close(fit.centered_residuals().iter().sum::<f64>(), 0.0, 1e-10);
        assert_close(fit.predictive_residuals().unwrap().iter().sum::<f64>(), 0.0, 1e-10);
        assert_close(fit.leverages().iter().sum::<f64>(), p as f64, 1e-10);
        for &h in fit.leverages() {
            assert!((0.0..=1.0).contains(&h));
        }
        // Residuals orthogonal to every column of the design.
        let e = DVector::from_column_slice(fit.raw_residuals());
        let xte = x.tr_mul(&e);
        for v in xte.iter() {
            assert_close(*v, 0.0, 1e-9);
        }
        // sigma_hat_sq consistent with its definition.
        let want = fit.centered_residuals().iter().map(|e| e * e).sum::<f64>() / n as f64;
        assert_close(fit.sigma_hat_sq(), want, 1e-14);
    }

    #[test]
    fn fitting_twice_is_bit_identical() {
        let mut rng = crate::empirical::RngStream::new(5, 1).rng();
        let x = DMatrix::from_fn(30, 3, |_, _| {
            crate::special::normal_quantile(crate::empirical::uniform_open01(&mut rng))
        });
        let y = DVector::from_fn(30, |_, _| {
            crate::special::normal_quantile(crate::empirical::uniform_open01(&mut rng))
        });
        let a = fit_ols(Dataset::new(x.clone(), y.clone()).unwrap()).unwrap();
        let b = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        assert_eq!(a.beta_hat().as_slice(), b.beta_hat().as_slice());
        assert_eq!(a.raw_residuals(), b.raw_residuals());
        assert_eq!(a.leverages(), b.leverages());
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        match fit_ols(Dataset::new(x, y).unwrap()) {
            Err(Error::RankDeficient { ratio }) => assert!(ratio < 1e-12),
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn unit_leverage_blocks_leave_one_out_only() {
        // Row 1 is the only observation spanning the second coordinate, so
        // its leverage is exactly one.
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let y = DVector::from_column_slice(&[1.0, 5.0, 3.0]);
        let fit = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        assert_close(fit.leverages()[1], 1.0, 1e-12);
        match fit.predictive_residuals() {
            Err(Error::LeverageOne { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected LeverageOne, got {other:?}"),
        }
        assert!(fit.centered_residuals().len() == 3);
    }

    #[test]
    fn dataset_shape_and_finiteness_checks() {
        let x = DMatrix::from_element(3, 1, 1.0);
        let y_short = DVector::from_column_slice(&[1.0, 2.0]);
        assert!(matches!(
            Dataset::new(x.clone(), y_short),
            Err(Error::DimensionMismatch { .. })
        ));
        let square = DMatrix::from_element(2, 2, 1.0);
        let y2 = DVector::from_column_slice(&[1.0, 2.0]);
        assert!(matches!(Dataset::new(square, y2), Err(Error::DimensionMismatch { .. })));
        let y_nan = DVector::from_column_slice(&[1.0, f64::NAN, 2.0]);
        assert!(matches!(Dataset::new(x, y_nan), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn predict_is_dot_product() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_column_slice(&[1.0, 2.0, 3.5]);
        let fit = fit_ols(Dataset::new(x, y).unwrap()).unwrap();
        let b = fit.beta_hat();
        assert_close(fit.predict(&[2.0, -1.0]).unwrap(), 2.0 * b[0] - b[1], 1e-12);
        assert!(fit.predict(&[1.0]).is_err());
    }

    #[test]
    fn design_summary_intercept_only() {
        // Intercept-only: Â = 1, b̄ = 1, both quadratic forms are 1.
        let x = DMatrix::from_element(6, 1, 1.0);
        let y = DVector::from_fn(6, |i, _| i as f64);
        let data = Dataset::new(x, y).unwrap();
        let s = design_summary(&data, &[1.0]).unwrap();
        assert_close(s.quad_aa(), 1.0, 1e-12);
        assert_close(s.quad_ab(), 1.0, 1e-12);
        assert_eq!(s.n_obs(), 6);
        assert_close(s.a_matrix()[(0, 0)], 1.0, 1e-12);
        assert_close(s.b_mean()[0], 1.0, 1e-12);
    }

    #[test]
    fn design_summary_zero_point_has_zero_quadratic() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, 1.0, 2.0, 1.0, 0.5]);
        let y = DVector::from_column_slice(&[0.0; 4]);
        let data = Dataset::new(x, y).unwrap();
        let s = design_summary(&data, &[0.0, 0.0]).unwrap();
        assert_close(s.quad_aa(), 0.0, 1e-12);
        assert_close(s.quad_ab(), 0.0, 1e-12);
    }
}
