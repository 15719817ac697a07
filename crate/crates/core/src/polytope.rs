//! Integrals over the probability simplex.
//!
//! The measure throughout is ∫Π_x dP(x) δ(Σ_x P(x) − 1), i.e. Lebesgue measure
//! on the first N−1 coordinates, under which the simplex has volume 1/(N−1)!.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::oracle::adaptive_simpson;
use crate::types::{count_types, enumerate_types, ln_multinomial, SequenceType};

pub const MIN_LAMBDA: f64 = 10.0;
/// Required distance of the peak from every face, in units of 1/√λ_min.
pub const BOUNDARY_MARGIN: f64 = 3.0;

fn factorial_big(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// ∫ Π_j P_j^{a_j − 1} over the simplex = Π Γ(a_j) / Γ(Σ a_j).
///
/// Integer exponents are evaluated from exact factorials.
pub fn dirichlet_integral(exponents: &[f64]) -> Result<f64> {
    if exponents.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &a) in exponents.iter().enumerate() {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonPositiveExponent { index, value: a });
        }
    }
    let integral = exponents.iter().all(|&a| a.fract() == 0.0 && a <= 1000.0);
    if integral {
        let num: BigUint = exponents.iter().map(|&a| factorial_big(a as u64 - 1)).product();
        let total: u64 = exponents.iter().map(|&a| a as u64).sum();
        let den = factorial_big(total - 1);
        return Ok(big_ratio(&num, &den));
    }
    Ok(ln_dirichlet_integral(exponents).exp())
}

fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    match (num.to_f64(), den.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            // scale both down to a common magnitude
            let shift = num.bits().max(den.bits()).saturating_sub(1000);
            let a = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
            let b = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
            a / b
        }
    }
}

pub fn ln_dirichlet_integral(exponents: &[f64]) -> f64 {
    exponents.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(exponents.iter().sum())
}

/// Product over rows of row-wise Dirichlet integrals (one simplex per x).
pub fn conditional_dirichlet_integral(rows: &[Vec<f64>]) -> Result<f64> {
    rows.iter().map(|r| dirichlet_integral(r)).product()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curvature {
    Diagonal(Vec<f64>),
    Full(DMatrix<f64>),
}

/// exp(−ΔPᵀ A ΔP) with ΔP = P − center, restricted to the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGaussian {
    center: Distribution,
    curvature: Curvature,
}

fn symmetric_min_eigen(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    for i in 0..n {
        for j in 0..i {
            let scale = a[(i, j)].abs().max(a[(j, i)].abs()).max(1.0);
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter("matrix is not symmetric".into()));
            }
        }
    }
    let min = a.clone().symmetric_eigenvalues().min();
    if !(min > 0.0) {
        return Err(Error::SingularMatrix);
    }
    Ok(min)
}

impl SimplexGaussian {
    pub fn diagonal(center: Distribution, lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: lambdas.len(),
            });
        }
        for (index, &l) in lambdas.iter().enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::NonPositiveWeight { index, value: l });
            }
        }
        Ok(SimplexGaussian {
            center,
            curvature: Curvature::Diagonal(lambdas),
        })
    }

    pub fn full(center: Distribution, a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: a.nrows(),
            });
        }
        symmetric_min_eigen(&a)?;
        Ok(SimplexGaussian {
            center,
            curvature: Curvature::Full(a),
        })
    }

    pub fn center(&self) -> &Distribution {
        &self.center
    }

    pub fn curvature(&self) -> &Curvature {
        &self.curvature
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.curvature {
            Curvature::Diagonal(l) => DMatrix::from_diagonal(&DVector::from_column_slice(l)),
            Curvature::Full(a) => a.clone(),
        }
    }

    /// Smallest eigenvalue of the curvature.
    pub fn lambda_min(&self) -> f64 {
        match &self.curvature {
            Curvature::Diagonal(l) => l.iter().cloned().fold(f64::INFINITY, f64::min),
            Curvature::Full(a) => a.clone().symmetric_eigenvalues().min(),
        }
    }

    /// Integrand value at `p`.
    pub fn density(&self, p: &[f64]) -> f64 {
        let d: Vec<f64> = p.iter().zip(self.center.probs()).map(|(a, b)| a - b).collect();
        let q = match &self.curvature {
            Curvature::Diagonal(l) => d.iter().zip(l).map(|(x, l)| l * x * x).sum(),
            Curvature::Full(a) => {
                let v = DVector::from_column_slice(&d);
                (v.transpose() * a * &v)[(0, 0)]
            }
        };
        (-q).exp()
    }

    /// Checks that the peak is sharp and sits away from the boundary.
    pub fn check_peak(&self) -> Result<()> {
        let lmin = self.lambda_min();
        if lmin < MIN_LAMBDA {
            return Err(Error::LambdaTooSmall {
                min: lmin,
                required: MIN_LAMBDA,
            });
        }
        let margin = BOUNDARY_MARGIN / lmin.sqrt();
        let min_center = self.center.min_prob();
        if min_center < margin {
            return Err(Error::PeakNearBoundary { min_center, margin });
        }
        Ok(())
    }

    /// ln of the closed form, without the peak guards.
    pub fn ln_closed_form(&self) -> Result<f64> {
        let k = self.dim() as f64 - 1.0;
        let ln_pi = 0.5 * k * PI.ln();
        match &self.curvature {
            Curvature::Diagonal(l) => {
                let ln_prod: f64 = l.iter().map(|v| v.ln()).sum();
                let inv_sum: f64 = l.iter().map(|v| 1.0 / v).sum();
                Ok(ln_pi - 0.5 * (ln_prod + inv_sum.ln()))
            }
            Curvature::Full(a) => {
                let chol = a.clone().cholesky().ok_or(Error::SingularMatrix)?;
                let ln_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let ones = DVector::from_element(self.dim(), 1.0);
                let quad = ones.dot(&chol.solve(&ones));
                Ok(ln_pi - 0.5 * (ln_det + quad.ln()))
            }
        }
    }

    /// √(π^{N−1} / (det A · tr A⁻¹)), the diagonalized matrix form as printed.
    /// Agrees with [`simplex_gaussian_integral`] only when A is diagonal.
    pub fn trace_form(&self) -> Result<f64> {
        let a = self.matrix();
        let inv = a.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let k = self.dim() as f64 - 1.0;
        Ok((PI.powf(k) / (a.determinant() * inv.trace())).sqrt())
    }
}

/// ∫𝒟P exp(−ΔPᵀAΔP) for a sharply peaked interior Gaussian.
///
/// Diagonal A gives √(π^{N−1}/(Πλ · Σ1/λ)), i.e. the λ's combined "in
/// parallel". A general A gives √(π^{N−1}/(det A · 1ᵀA⁻¹1)).
pub fn simplex_gaussian_integral(g: &SimplexGaussian) -> Result<f64> {
    g.check_peak()?;
    Ok(g.ln_closed_form()?.exp())
}

/// The parallel combination (Σ 1/λ)⁻¹.
pub fn lambda_parallel(lambdas: &[f64]) -> f64 {
    1.0 / lambdas.iter().map(|l| 1.0 / l).sum::<f64>()
}

/// Gaussian over x_size independent simplices P(·|x), with A indexed by the
/// flattened pair x·y_size + y:
/// √(π^{NxNy−Nx} / (det A · det S)), S_{x₁x₂} = Σ_{y₁y₂} A⁻¹_{(x₁y₁),(x₂y₂)}.
pub fn conditional_simplex_gaussian_integral(a: &DMatrix<f64>, x_size: usize, y_size: usize) -> Result<f64> {
    let dim = x_size * y_size;
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: a.nrows(),
        });
    }
    symmetric_min_eigen(a)?;
    let chol = a.clone().cholesky().ok_or(Error::SingularMatrix)?;
    let ln_det_a = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let inv = chol.inverse();
    let s = DMatrix::from_fn(x_size, x_size, |x1, x2| {
        let mut acc = 0.0;
        for y1 in 0..y_size {
            for y2 in 0..y_size {
                acc += inv[(x1 * y_size + y1, x2 * y_size + y2)];
            }
        }
        acc
    });
    let det_s = s.determinant();
    if !(det_s > 0.0) {
        return Err(Error::SingularMatrix);
    }
    let k = (dim - x_size) as f64;
    Ok((0.5 * (k * PI.ln() - ln_det_a - det_s.ln())).exp())
}

/// V_a = a^{N−1} π^{(N−1)/2} / √N.
pub fn v_a(a: f64, alphabet_size: usize) -> f64 {
    ln_v_a(a, alphabet_size).exp()
}

pub fn ln_v_a(a: f64, alphabet_size: usize) -> f64 {
    let k = alphabet_size as f64 - 1.0;
    k * a.ln() + 0.5 * k * PI.ln() - 0.5 * (alphabet_size as f64).ln()
}

/// Gaussian smoothing of the Kronecker delta between type classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothedDelta {
    epsilon: f64,
    reference: SequenceType,
}

impl SmoothedDelta {
    pub fn new(epsilon: f64, reference: SequenceType) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1)")));
        }
        Ok(SmoothedDelta { epsilon, reference })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn reference(&self) -> &SequenceType {
        &self.reference
    }

    fn sq_distance(&self, p: &[f64]) -> f64 {
        let r = self.reference.frequencies();
        p.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// δ_ε(𝒳, 𝒴) = exp(−Σ(P_𝒳 − P_𝒴)²/ε²).
    pub fn class_kernel(&self, p: &[f64]) -> f64 {
        (-self.sq_distance(p) / (self.epsilon * self.epsilon)).exp()
    }

    /// δ_ε(P − P_𝒴) = δ_ε(𝒳, 𝒴)/V_ε.
    pub fn density(&self, p: &[f64]) -> f64 {
        let n = self.reference.alphabet_size();
        (-self.sq_distance(p) / (self.epsilon * self.epsilon) - ln_v_a(self.epsilon, n)).exp()
    }

    /// δ_ε(xⁿ, yⁿ) = δ_ε(𝒳, 𝒴)/(√(d_𝒳 d_𝒴) V_{nε}) for xⁿ of type `t`.
    pub fn sequence_kernel(&self, t: &SequenceType) -> f64 {
        let n = t.n() as f64;
        let size = self.reference.alphabet_size();
        let ln = -self.sq_distance(&t.frequencies()) / (self.epsilon * self.epsilon)
            - 0.5 * (ln_multinomial(t.counts()) + ln_multinomial(self.reference.counts()))
            - ln_v_a(n * self.epsilon, size);
        ln.exp()
    }

    /// The continuous smoothing as a simplex Gaussian with λ = 1/ε².
    pub fn as_gaussian(&self) -> Result<SimplexGaussian> {
        let n = self.reference.alphabet_size();
        SimplexGaussian::diagonal(
            self.reference.as_distribution(),
            vec![1.0 / (self.epsilon * self.epsilon); n],
        )
    }
}

pub const DELTA_ENUMERATION_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, Serialize)]
pub struct DeltaNormalization {
    pub epsilon: f64,
    pub n: u64,
    pub alphabet_size: usize,
    pub v_epsilon: f64,
    /// Closed-form Gaussian integral divided by V_ε.
    pub continuous: f64,
    /// Direct quadrature of ∫𝒟P δ_ε(P − P_𝒴), two-symbol alphabets only.
    pub continuous_quadrature: Option<f64>,
    /// Σ_types δ_ε(P_T − P_𝒴) / n^{N−1}: the type sum approximating ∫𝒟P.
    pub type_sum: f64,
    /// Σ_{xⁿ} δ_ε(xⁿ, yⁿ), summed class by class.
    pub sequence_sum: f64,
}

/// Normalization of the smoothed delta in continuous and discrete form.
pub fn smoothed_delta_normalization(delta: &SmoothedDelta) -> Result<DeltaNormalization> {
    let g = delta.as_gaussian()?;
    let closed = simplex_gaussian_integral(&g)?;
    let size = delta.reference.alphabet_size();
    let n = delta.reference.n();
    let v_eps = v_a(delta.epsilon, size);
    let continuous_quadrature = (size == 2).then(|| {
        adaptive_simpson(|t| delta.density(&[t, 1.0 - t]), 0.0, 1.0, 1e-13)
    });
    let types = count_types(size, n).to_f64().unwrap_or(f64::INFINITY);
    if types > DELTA_ENUMERATION_LIMIT {
        return Err(Error::InstanceTooLarge {
            what: "smoothed delta type sum".into(),
            size: types,
            limit: DELTA_ENUMERATION_LIMIT,
        });
    }
    let scale = (n as f64).powi(size as i32 - 1);
    let mut type_sum = 0.0;
    let mut sequence_sum = 0.0;
    for t in enumerate_types(size, n)? {
        type_sum += delta.density(&t.frequencies());
        let ln_d = ln_multinomial(t.counts());
        sequence_sum += (ln_d + delta.sequence_kernel(&t).ln()).exp();
    }
    Ok(DeltaNormalization {
        epsilon: delta.epsilon,
        n,
        alphabet_size: size,
        v_epsilon: v_eps,
        continuous: closed / v_eps,
        continuous_quadrature,
        type_sum: type_sum / scale,
        sequence_sum,
    })
}

/// Inverse and determinant of A = E + p qᵀ from E⁻¹ and det E.
pub fn sherman_morrison(
    e_inverse: &DMatrix<f64>,
    det_e: f64,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    let n = e_inverse.nrows();
    if e_inverse.ncols() != n || p.len() != n || q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if p.len() != n { p.len() } else { q.len() },
        });
    }
    let ep = e_inverse * p;
    let qe = q.transpose() * e_inverse;
    let denominator = 1.0 + q.dot(&ep);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::SingularUpdate { denominator });
    }
    let inverse = e_inverse - (&ep * &qe) / denominator;
    Ok((inverse, det_e * denominator))
}

/// det(1 + εA) to first order: 1 + ε tr A.
pub fn det_first_order(a: &DMatrix<f64>, eps: f64) -> f64 {
    1.0 + eps * a.trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{adaptive_simpson_2d, simplex_monte_carlo};
    use crate::dist::RngStream;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_integral(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(dirichlet_integral(&[1.0, 1.0, 1.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(dirichlet_integral(&[2.0, 3.0]).unwrap(), 1.0 / 12.0, epsilon = 1e-16);
        assert_abs_diff_eq!(
            dirichlet_integral(&[0.5, 0.5]).unwrap(),
            PI,
            epsilon = 1e-12
        );
        assert!(matches!(
            dirichlet_integral(&[1.0, 0.0]),
            Err(Error::NonPositiveExponent { index: 1, .. })
        ));
        let q = adaptive_simpson(|t| t * (1.0 - t).powi(2), 0.0, 1.0, 1e-14);
        assert_abs_diff_eq!(dirichlet_integral(&[2.0, 3.0]).unwrap(), q, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_two_symbols() {
        let l = 1000.0;
        let g = SimplexGaussian::diagonal(Distribution::uniform(2).unwrap(), vec![l, l]).unwrap();
        let v = simplex_gaussian_integral(&g).unwrap();
        assert_abs_diff_eq!(v, (PI / (2.0 * l)).sqrt(), epsilon = 1e-15);
        let quad = adaptive_simpson(|t| g.density(&[t, 1.0 - t]), 0.0, 1.0, 1e-14);
        assert!((v / quad - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gaussian_guards() {
        let g = SimplexGaussian::diagonal(Distribution::uniform(2).unwrap(), vec![5.0, 50.0]).unwrap();
        assert!(matches!(simplex_gaussian_integral(&g), Err(Error::LambdaTooSmall { .. })));
        let c = Distribution::new(vec![0.02, 0.98]).unwrap();
        let g = SimplexGaussian::diagonal(c, vec![100.0, 100.0]).unwrap();
        assert!(matches!(simplex_gaussian_integral(&g), Err(Error::PeakNearBoundary { .. })));
    }

    #[test]
    fn matrix_form_reduces_to_diagonal() {
        let c = Distribution::new(vec![0.3, 0.3, 0.4]).unwrap();
        let l = vec![200.0, 300.0, 500.0];
        let diag = SimplexGaussian::diagonal(c.clone(), l.clone()).unwrap();
        let full = SimplexGaussian::full(c, diag.matrix()).unwrap();
        let a = simplex_gaussian_integral(&diag).unwrap();
        let b = simplex_gaussian_integral(&full).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14 * a);
        assert_abs_diff_eq!(full.trace_form().unwrap(), a, epsilon = 1e-12 * a);
        let prod: f64 = l.iter().product();
        let inv_sum: f64 = l.iter().map(|v| 1.0 / v).sum();
        assert_abs_diff_eq!(prod * inv_sum, prod / lambda_parallel(&l), epsilon = 1e-6);
    }

    #[test]
    fn non_diagonal_matrix_uses_ones_quadratic_form() {
        let c = Distribution::uniform(2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1000.0, 300.0, 300.0, 800.0]);
        let g = SimplexGaussian::full(c, a).unwrap();
        let quad = adaptive_simpson(|t| g.density(&[t, 1.0 - t]), 0.0, 1.0, 1e-14);
        let exact = simplex_gaussian_integral(&g).unwrap();
        assert!((exact / quad - 1.0).abs() < 1e-6);
        assert!((g.trace_form().unwrap() / quad - 1.0).abs() > 0.05);
    }

    #[test]
    fn gaussian_vs_monte_carlo() {
        let c = Distribution::new(vec![0.3, 0.35, 0.35]).unwrap();
        let g = SimplexGaussian::diagonal(c, vec![150.0, 250.0, 400.0]).unwrap();
        let est = simplex_monte_carlo(|p| g.density(p), 3, 400_000, RngStream::new(11, 0));
        let v = simplex_gaussian_integral(&g).unwrap();
        assert!((est.value - v).abs() < 3.0 * est.std_error, "{} vs {v} ± {}", est.value, est.std_error);
    }

    #[test]
    fn conditional_block_cases() {
        let l = 500.0;
        let a = DMatrix::from_diagonal_element(4, 4, l);
        let v = conditional_simplex_gaussian_integral(&a, 2, 2).unwrap();
        assert_abs_diff_eq!(v, PI / (2.0 * l), epsilon = 1e-15);

        let c = Distribution::new(vec![0.3, 0.3, 0.4]).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[400.0, 20.0, 10.0, 20.0, 300.0, 5.0, 10.0, 5.0, 500.0]);
        let g = SimplexGaussian::full(c, m.clone()).unwrap();
        let single = conditional_simplex_gaussian_integral(&m, 1, 3).unwrap();
        assert_abs_diff_eq!(single, simplex_gaussian_integral(&g).unwrap(), epsilon = 1e-14 * single);
        assert!(conditional_simplex_gaussian_integral(&DMatrix::zeros(4, 4), 2, 2).is_err());
    }

    #[test]
    fn conditional_vs_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let b = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let a = &b * b.transpose() * 300.0 + DMatrix::from_diagonal_element(4, 4, 1000.0);
        let f = |t0: f64, t1: f64| {
            let d = DVector::from_column_slice(&[t0 - 0.5, 0.5 - t0, t1 - 0.5, 0.5 - t1]);
            (-(d.transpose() * &a * &d)[(0, 0)]).exp()
        };
        let quad = adaptive_simpson_2d(f, (0.0, 1.0), (0.0, 1.0), 1e-11);
        let v = conditional_simplex_gaussian_integral(&a, 2, 2).unwrap();
        assert!((v / quad - 1.0).abs() < 0.01, "{v} vs {quad}");
    }

    #[test]
    fn smoothed_delta_examples() {
        let d = SmoothedDelta::new(0.01, SequenceType::new(vec![100, 100]).unwrap()).unwrap();
        let r = smoothed_delta_normalization(&d).unwrap();
        assert_abs_diff_eq!(r.continuous, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.continuous_quadrature.unwrap(), 1.0, epsilon = 1e-6);

        let d = SmoothedDelta::new(0.3, SequenceType::new(vec![1, 9]).unwrap()).unwrap();
        assert!(matches!(
            smoothed_delta_normalization(&d),
            Err(Error::PeakNearBoundary { .. })
        ));

        let d = SmoothedDelta::new(0.05, SequenceType::new(vec![100, 100]).unwrap()).unwrap();
        let r = smoothed_delta_normalization(&d).unwrap();
        assert!((r.type_sum - 1.0).abs() < 0.05);
        // sequence form is ≈ (1 + nε²/2)^{-1/2} at the balanced class
        assert_abs_diff_eq!(r.sequence_sum, (1.0f64 + 200.0 * 0.0025 / 2.0).powf(-0.5), epsilon = 5e-3);
    }

    #[test]
    fn sherman_morrison_examples() {
        let e = DMatrix::<f64>::identity(3, 3);
        let p = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let (inv, det) = sherman_morrison(&e, 1.0, &p, &p).unwrap();
        assert_abs_diff_eq!(inv[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(inv[(1, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(det, 2.0, epsilon = 1e-15);

        let zero = DVector::zeros(3);
        let (inv, det) = sherman_morrison(&e, 1.0, &zero, &p).unwrap();
        assert_eq!(inv, e);
        assert_eq!(det, 1.0);

        let m = -p.clone();
        assert!(matches!(
            sherman_morrison(&e, 1.0, &p, &m),
            Err(Error::SingularUpdate { .. })
        ));
    }

    #[test]
    fn det_first_order_examples() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert_abs_diff_eq!(det_first_order(&i, 0.01), 1.03, epsilon = 1e-15);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, -1.0]);
        assert_eq!(det_first_order(&a, 0.05), 1.0);
    }
}
