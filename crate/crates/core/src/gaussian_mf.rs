//! Circularly symmetric complex Gaussian beliefs in precision form.
//!
//! A density `CN(mu, Lambda^{-1})` is stored by its mean and precision
//! matrix. Products of Gaussian factors add precisions and
//! precision-weighted means; marginal variances come from the inverse of the
//! Cholesky factor.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance of the Hermitian check.
pub const HERMITIAN_TOL: f64 = 1e-12;

fn hermitian_defect(m: &CMatrix) -> (f64, f64) {
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            defect = defect.max((m[(r, c)] - m[(c, r)].conj()).norm());
            scale = scale.max(m[(r, c)].norm());
        }
    }
    (defect, scale)
}

fn symmetrized(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn cholesky(m: &CMatrix, what: &str) -> Result<Cholesky<Complex64, Dyn>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    let (defect, scale) = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what} is not Hermitian (defect {defect:e})"
        )));
    }
    let chol = Cholesky::new(symmetrized(m)).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    // The complex square root never fails, so a non-positive pivot shows up
    // as a diagonal entry of L that is not a positive real number.
    let l = chol.l_dirty();
    let ok = (0..l.nrows()).all(|k| {
        let d = l[(k, k)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= HERMITIAN_TOL * d.re
    });
    if !ok {
        return Err(Error::NotPositiveDefinite(what.to_string()));
    }
    Ok(chol)
}

/// Complex Gaussian density with Hermitian positive definite precision.
#[derive(Clone, Debug)]
pub struct ComplexGaussian {
    mean: CVector,
    precision: CMatrix,
    covariance: CMatrix,
    log_det_precision: f64,
}

impl ComplexGaussian {
    /// Builds `CN(mean, precision^{-1})`.
    pub fn new(mean: CVector, precision: CMatrix) -> Result<Self> {
        if mean.len() != precision.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "mean of length {} with precision of size {}",
                mean.len(),
                precision.nrows()
            )));
        }
        let chol = cholesky(&precision, "precision")?;
        Ok(Self::from_parts(mean, symmetrized(&precision), &chol))
    }

    /// Builds the density from its information form `(Lambda, Lambda mu)`.
    pub fn from_information(precision: CMatrix, info: CVector) -> Result<Self> {
        if info.len() != precision.nrows() {
            return Err(Error::DimensionMismatch("information vector length".into()));
        }
        let chol = cholesky(&precision, "precision")?;
        let mean = chol.solve(&info);
        Ok(Self::from_parts(mean, symmetrized(&precision), &chol))
    }

    /// `CN(0, I)` of the given dimension.
    pub fn standard(dim: usize) -> Self {
        Self::new(CVector::zeros(dim), CMatrix::identity(dim, dim)).expect("identity is PD")
    }

    /// Builds `CN(mean, covariance)` from a covariance matrix.
    pub fn from_covariance(mean: CVector, covariance: CMatrix) -> Result<Self> {
        let chol = cholesky(&covariance, "covariance")?;
        let precision = symmetrized(&chol.inverse());
        Self::new(mean, precision)
    }

    fn from_parts(mean: CVector, precision: CMatrix, chol: &Cholesky<Complex64, Dyn>) -> Self {
        let l = chol.l_dirty();
        let log_det_precision = 2.0 * (0..l.nrows()).map(|k| l[(k, k)].re.ln()).sum::<f64>();
        let covariance = symmetrized(&chol.inverse());
        ComplexGaussian {
            mean,
            precision,
            covariance,
            log_det_precision,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &CVector {
        &self.mean
    }

    pub fn precision(&self) -> &CMatrix {
        &self.precision
    }

    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }

    /// `ln det Lambda`.
    pub fn log_det_precision(&self) -> f64 {
        self.log_det_precision
    }

    /// `Lambda mu`.
    pub fn information(&self) -> CVector {
        &self.precision * &self.mean
    }

    /// Marginal variances `[Lambda^{-1}]_ii`.
    pub fn marginal_variances(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.covariance[(k, k)].re).collect()
    }

    /// `ln CN(x; mu, Lambda^{-1})`.
    pub fn log_density(&self, x: &CVector) -> f64 {
        let d = x - &self.mean;
        let q = (d.adjoint() * &self.precision * &d)[(0, 0)].re;
        -(self.dim() as f64) * std::f64::consts::PI.ln() + self.log_det_precision - q
    }

    /// Differential entropy `d ln(pi e) - ln det Lambda`.
    pub fn entropy(&self) -> f64 {
        let d = self.dim() as f64;
        d * (std::f64::consts::PI * std::f64::consts::E).ln() - self.log_det_precision
    }

    /// `E_b[ln self(h)]` for `h ~ b`.
    pub fn expected_log_density(&self, b: &ComplexGaussian) -> Result<f64> {
        if b.dim() != self.dim() {
            return Err(Error::DimensionMismatch("expected log density".into()));
        }
        let d = b.mean() - &self.mean;
        let q = (d.adjoint() * &self.precision * &d)[(0, 0)].re;
        let trace: f64 = (&self.precision * b.covariance()).trace().re;
        Ok(-(self.dim() as f64) * std::f64::consts::PI.ln() + self.log_det_precision - trace - q)
    }
}

/// Information-form contribution `(Lambda, Lambda mu)` with a positive
/// semidefinite (possibly singular) precision.
#[derive(Clone, Debug, PartialEq)]
pub struct InformationForm {
    pub precision: CMatrix,
    pub info: CVector,
}

impl InformationForm {
    /// Flat (zero precision) contribution.
    pub fn zeros(dim: usize) -> Self {
        InformationForm {
            precision: CMatrix::zeros(dim, dim),
            info: CVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.info.len()
    }

    /// Adds another contribution.
    pub fn add(&mut self, other: &InformationForm) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch("information forms".into()));
        }
        self.precision += &other.precision;
        self.info += &other.info;
        Ok(())
    }

    /// Adds a diagonal contribution on one coordinate.
    pub fn add_diagonal(&mut self, coord: usize, precision: f64, info: Complex64) {
        self.precision[(coord, coord)] += Complex64::new(precision, 0.0);
        self.info[coord] += info;
    }

    /// Converts to a proper density; fails when the precision is singular.
    pub fn to_gaussian(&self) -> Result<ComplexGaussian> {
        ComplexGaussian::from_information(self.precision.clone(), self.info.clone())
    }
}

impl From<&ComplexGaussian> for InformationForm {
    fn from(g: &ComplexGaussian) -> Self {
        InformationForm {
            precision: g.precision.clone(),
            info: g.information(),
        }
    }
}

/// Diagonal quadratic evidence: precision increments `lambda_i >= 0` and
/// precision-weighted means `lambda_i mu_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticEvidence {
    pub precision: Vec<f64>,
    pub info: Vec<Complex64>,
}

impl QuadraticEvidence {
    pub fn zeros(dim: usize) -> Self {
        QuadraticEvidence {
            precision: vec![0.0; dim],
            info: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.precision.len() != dim || self.info.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "evidence of length {} for dimension {dim}",
                self.precision.len()
            )));
        }
        if let Some(l) = self.precision.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidArgument(format!("evidence precision {l} is not a nonnegative number")));
        }
        Ok(())
    }
}

/// Product of Gaussian contributions: `Lambda = sum Lambda_k`,
/// `mu = Lambda^{-1} sum Lambda_k mu_k`.
pub fn gaussian_product(factors: &[InformationForm]) -> Result<ComplexGaussian> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidArgument("product of zero Gaussians".into()))?;
    let mut acc = InformationForm::zeros(first.dim());
    for f in factors {
        acc.add(f)?;
    }
    acc.to_gaussian()
}

/// Posterior `Lambda_H = Lambda_P + diag(lambda)`,
/// `mu_H = Lambda_H^{-1}(Lambda_P mu_P + lambda mu)`.
pub fn posterior_update(prior: &ComplexGaussian, evidence: &QuadraticEvidence) -> Result<ComplexGaussian> {
    evidence.validate(prior.dim())?;
    let mut acc = InformationForm::from(prior);
    for k in 0..prior.dim() {
        acc.add_diagonal(k, evidence.precision[k], evidence.info[k]);
    }
    acc.to_gaussian()
}

/// Per-coordinate marginal means and variances.
pub fn coordinate_moments(b: &ComplexGaussian) -> Vec<(Complex64, f64)> {
    b.mean
        .iter()
        .zip(b.marginal_variances())
        .map(|(&m, v)| (m, v))
        .collect()
}

/// Mean and variance of a discrete symbol distribution over a constellation.
pub fn symbol_statistics(probs: &[f64], constellation: &[Complex64]) -> Result<(Complex64, f64)> {
    if probs.len() != constellation.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} constellation points",
            probs.len(),
            constellation.len()
        )));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("symbol belief is not a probability vector".into()));
    }
    let mean: Complex64 = probs.iter().zip(constellation).map(|(p, x)| x * p).sum();
    let var: f64 = probs
        .iter()
        .zip(constellation)
        .map(|(p, x)| p * (x - mean).norm_sqr())
        .sum();
    Ok((mean, var))
}
