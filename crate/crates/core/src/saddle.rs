//! Steepest-descent evaluation of type integrals
//! ∫𝒟T n^{N−1} (d)_{H=0}(T) e^{n Σ T ln(w/T)}.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::polytope::SimplexGaussian;
use crate::types::{enumerate_types, iid_type_probability, stirling_log_size};

#[derive(Debug, Clone, Serialize)]
pub struct SaddleResult {
    /// T̃(x) = w(x)/Σw.
    pub tilde_point: Distribution,
    /// n ln Σw, the exponent at T̃.
    pub log_value: f64,
    /// δ²L coefficients, −n/T̃(x) on the diagonal.
    #[serde(skip)]
    pub second_variation: DMatrix<f64>,
    pub n: u64,
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in w.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveWeight { index, value });
        }
    }
    Ok(())
}

/// Stationary point of n Σ T ln(w/T) + λ(Σ T − 1).
pub fn saddle_of_weights(w: &[f64], n: u64) -> Result<SaddleResult> {
    check_weights(w)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let total: f64 = w.iter().sum();
    let tilde: Vec<f64> = w.iter().map(|v| v / total).collect();
    let second_variation = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        w.len(),
        tilde.iter().map(|t| -(n as f64) / t),
    ));
    Ok(SaddleResult {
        tilde_point: Distribution::from_weights(&tilde)?,
        log_value: n as f64 * total.ln(),
        second_variation,
        n,
    })
}

/// ln of the Gaussian fluctuation factor ∫𝒟T exp(½ δTᵀ δ²L δT) around T̃,
/// i.e. the simplex Gaussian with λ_x = n/(2T̃(x)).
pub fn gaussian_correction(result: &SaddleResult) -> Result<f64> {
    let lambdas = result
        .second_variation
        .diagonal()
        .iter()
        .map(|v| -0.5 * v)
        .collect();
    let g = SimplexGaussian::diagonal(result.tilde_point.clone(), lambdas)?;
    g.check_peak()?;
    g.ln_closed_form()
}

/// ln (d)_{H=0}(T) = −((N−1)/2) ln(2πn) − ½ Σ ln T(x).
pub fn ln_zero_entropy_density(t: &Distribution, n: u64) -> f64 {
    let k = t.len() as f64 - 1.0;
    -0.5 * k * (2.0 * std::f64::consts::PI * n as f64).ln()
        - 0.5 * t.probs().iter().map(|p| p.ln()).sum::<f64>()
}

/// Steepest-descent estimate of ln Σ_types d_T Π w(x)^{nT(x)}:
/// saddle exponent + ln n^{N−1} + ln (d)_{H=0}(T̃) + Gaussian correction.
pub fn saddle_sum_estimate(w: &[f64], n: u64) -> Result<f64> {
    let r = saddle_of_weights(w, n)?;
    let k = w.len() as f64 - 1.0;
    Ok(r.log_value
        + k * (n as f64).ln()
        + ln_zero_entropy_density(&r.tilde_point, n)
        + gaussian_correction(&r)?)
}

/// Σ_types e^{Stirling ln d_T} Q(T): the type sum with the asymptotic class
/// size in place of the multinomial.
pub fn stirling_type_sum(q: &Distribution, n: u64) -> Result<f64> {
    let mut acc = 0.0;
    for t in enumerate_types(q.len(), n)? {
        acc += (stirling_log_size(&t) + iid_type_probability(&t, q)?).exp();
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// T̃ = q already satisfies the constraint.
    Typical,
    /// Maximum on the constraint boundary, found by exponential tilting.
    LargeDeviation,
    /// The boundary only touches the simplex on the face where c is minimal.
    Vertex,
    /// No type satisfies the constraint.
    Empty,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedEstimate {
    /// Leading-order (1/n) ln Σ_{Σ T c ≤ R} Q(xⁿ), in nats per symbol.
    pub log_rate: f64,
    pub regime: Regime,
    /// Tilt s of T ∝ q e^{−s c}; 0 in the typical regime.
    pub tilt: f64,
    pub maximizer: Option<Distribution>,
    /// Set for the degenerate vertex case.
    pub warning: bool,
}

fn tilted(q: &[f64], c: &[f64], s: f64) -> (Vec<f64>, f64) {
    let logits: Vec<f64> = q.iter().zip(c).map(|(p, c)| p.ln() - s * c).collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    (w.iter().map(|v| v / z).collect(), m + z.ln())
}

/// max Σ T ln(q/T) subject to Σ T c ≤ R.
pub fn constrained_sum_estimate(q: &Distribution, c: &[f64], rate: f64) -> Result<ConstrainedEstimate> {
    check_weights(q.probs())?;
    if c.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: c.len(),
        });
    }
    if c.iter().any(|v| !v.is_finite()) || !rate.is_finite() {
        return Err(Error::InvalidParameter("constraint must be finite".into()));
    }
    let mean: f64 = q.probs().iter().zip(c).map(|(p, c)| p * c).sum();
    if mean <= rate {
        return Ok(ConstrainedEstimate {
            log_rate: 0.0,
            regime: Regime::Typical,
            tilt: 0.0,
            maximizer: Some(q.clone()),
            warning: false,
        });
    }
    let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = c.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if rate < c_min - 1e-12 * scale {
        return Ok(ConstrainedEstimate {
            log_rate: f64::NEG_INFINITY,
            regime: Regime::Empty,
            tilt: f64::INFINITY,
            maximizer: None,
            warning: false,
        });
    }
    if rate <= c_min + 1e-12 * scale {
        // T ∝ q on argmin c
        let face: Vec<f64> = q
            .probs()
            .iter()
            .zip(c)
            .map(|(p, v)| if *v <= c_min + 1e-12 * scale { *p } else { 0.0 })
            .collect();
        let mass: f64 = face.iter().sum();
        return Ok(ConstrainedEstimate {
            log_rate: mass.ln(),
            regime: Regime::Vertex,
            tilt: f64::INFINITY,
            maximizer: Some(Distribution::from_weights(&face)?),
            warning: true,
        });
    }
    let qp = q.probs();
    let mean_at = |s: f64| -> f64 {
        let (t, _) = tilted(qp, c, s);
        t.iter().zip(c).map(|(t, c)| t * c).sum()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean_at(hi) > rate {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_at(mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = hi;
    let (t, ln_z) = tilted(qp, c, s);
    // Σ T ln(q/T) = s Σ T c + ln Z
    let tc: f64 = t.iter().zip(c).map(|(t, c)| t * c).sum();
    Ok(ConstrainedEstimate {
        log_rate: (s * tc + ln_z).min(0.0),
        regime: Regime::LargeDeviation,
        tilt: s,
        maximizer: Some(Distribution::from_weights(&t)?),
        warning: false,
    })
}
