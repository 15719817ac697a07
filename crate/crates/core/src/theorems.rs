//! Finite-n and asymptotic success predictions for source coding, channel
//! coding and lossy source coding.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::dist::{joint_from, Channel, Distribution};
use crate::error::{Error, Result};
use crate::info::{capacity, entropy, entropy_of, rate_distortion, DistortionMatrix, DEFAULT_CAPACITY_TOL, DEFAULT_RD_TOL};
use crate::types::{count_types, enumerate_types, iid_type_probability, ln_multinomial, SequenceType};

/// Type-enumeration budget for exact computations.
pub const ENUMERATION_LIMIT: f64 = 1e7;
/// Slack when comparing a type statistic against the rate.
pub const RATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceCodingMode {
    /// A = {xⁿ : −(1/n) ln P(xⁿ) ≤ R}
    SourceDependent,
    /// A = {xⁿ : H(T_{xⁿ}) ≤ R}
    Universal,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceCodingSetup {
    pub source: Distribution,
    pub rate: f64,
    pub n: u64,
    pub mode: SourceCodingMode,
}

impl SourceCodingSetup {
    pub fn new(source: Distribution, rate: f64, n: u64, mode: SourceCodingMode) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("rate {rate} must be positive")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        Ok(SourceCodingSetup { source, rate, n, mode })
    }

    /// Whether every sequence can receive its own index: ⌊e^{nR}⌋ ≥ |S|ⁿ.
    pub fn indexes_everything(&self) -> bool {
        self.rate >= (self.source.len() as f64).ln()
    }

    /// Membership of the class of `t` in the encoder's set A.
    pub fn accepts(&self, t: &SequenceType) -> bool {
        if self.indexes_everything() {
            return true;
        }
        let n = t.n() as f64;
        let stat = match self.mode {
            SourceCodingMode::SourceDependent => match iid_type_probability(t, &self.source) {
                Ok(lp) => -lp / n,
                Err(_) => return false,
            },
            SourceCodingMode::Universal => entropy_of(&t.frequencies()),
        };
        stat <= self.rate + RATE_TOL
    }
}

/// ⌊e^{nR}⌋ as a float (saturating to e^{nR} beyond 2⁵³).
pub fn codebook_size(rate: f64, n: u64) -> f64 {
    let v = (rate * n as f64).exp();
    if v < 9.0e15 {
        v.floor()
    } else {
        v
    }
}

/// ln ⌊e^{nR}⌋.
pub fn ln_codebook_size(rate: f64, n: u64) -> f64 {
    let v = codebook_size(rate, n);
    if v.is_finite() {
        v.ln()
    } else {
        rate * n as f64
    }
}

fn log_sum_exp_acc(acc: &mut (f64, f64), v: f64) {
    // streaming (max, scaled sum)
    if v == f64::NEG_INFINITY {
        return;
    }
    if v > acc.0 {
        acc.1 = acc.1 * (acc.0 - v).exp() + 1.0;
        acc.0 = v;
    } else {
        acc.1 += (v - acc.0).exp();
    }
}

/// ln P_suc by exact enumeration over types.
pub fn source_coding_exact_log_psuc(setup: &SourceCodingSetup) -> Result<f64> {
    if setup.indexes_everything() {
        return Ok(0.0);
    }
    let types = count_types(setup.source.len(), setup.n);
    let count = num_traits::ToPrimitive::to_f64(&types).unwrap_or(f64::INFINITY);
    if count > ENUMERATION_LIMIT {
        return Err(Error::InstanceTooLarge {
            what: "source coding type enumeration".into(),
            size: count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut acc = (f64::NEG_INFINITY, 0.0);
    for t in enumerate_types(setup.source.len(), setup.n)? {
        if !setup.accepts(&t) {
            continue;
        }
        if let Ok(lp) = iid_type_probability(&t, &setup.source) {
            log_sum_exp_acc(&mut acc, ln_multinomial(t.counts()) + lp);
        }
    }
    Ok(if acc.1 > 0.0 { (acc.0 + acc.1.ln()).min(0.0) } else { f64::NEG_INFINITY })
}

pub fn source_coding_exact_psuc(setup: &SourceCodingSetup) -> Result<f64> {
    Ok(source_coding_exact_log_psuc(setup)?.exp().clamp(0.0, 1.0))
}

/// θ(R ≥ H(source)).
pub fn source_coding_asymptote(setup: &SourceCodingSetup) -> u8 {
    u8::from(setup.rate >= entropy(&setup.source))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelCodingPrediction {
    /// H(y:x) in nats.
    pub a: f64,
    /// E[ln² P(x:y)] − a², nats².
    pub b: f64,
    pub rate: f64,
    pub n: u64,
    pub p_suc_step: u8,
    pub p_suc_erfc: f64,
    /// ln N_m with N_m = ⌊e^{nR}⌋.
    pub ln_codebook_size: f64,
}

/// ½ erfc(√(n/2b)(R − a)), falling back to the step when b = 0.
pub fn erfc_success(a: f64, b: f64, rate: f64, n: u64) -> f64 {
    if b <= 0.0 {
        return if rate < a { 1.0 } else { 0.0 };
    }
    (0.5 * erfc((n as f64 / (2.0 * b)).sqrt() * (rate - a))).clamp(0.0, 1.0)
}

/// Mean and variance of the information density ln P(x:y) under the joint.
pub fn information_density_moments(channel: &Channel, input: &Distribution) -> Result<(f64, f64)> {
    let joint = joint_from(channel, input)?;
    let px = joint.marginal_x();
    let py = joint.marginal_y();
    let mut cells = Vec::new();
    for x in 0..joint.x_size() {
        for y in 0..joint.y_size() {
            let p = joint.prob(x, y);
            if p > 0.0 {
                let ratio = p / (px.prob(x) * py.prob(y));
                if !(ratio > 0.0) || !ratio.is_finite() {
                    return Err(Error::UndefinedRatio { x, y });
                }
                cells.push((p, ratio.ln()));
            }
        }
    }
    let a: f64 = cells.iter().map(|(p, l)| p * l).sum();
    let b: f64 = cells.iter().map(|(p, l)| p * (l - a) * (l - a)).sum();
    Ok((a.max(0.0), b.max(0.0)))
}

pub fn channel_coding_prediction(
    channel: &Channel,
    input: &Distribution,
    rate: f64,
    n: u64,
) -> Result<ChannelCodingPrediction> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate {rate} must be finite")));
    }
    let (a, b) = information_density_moments(channel, input)?;
    // a constant density makes b pure rounding noise
    let b = if b <= 1e-15 * a.max(1.0) { 0.0 } else { b };
    Ok(ChannelCodingPrediction {
        a,
        b,
        rate,
        n,
        p_suc_step: u8::from(rate < a),
        p_suc_erfc: erfc_success(a, b, rate, n),
        ln_codebook_size: ln_codebook_size(rate, n),
    })
}

/// The capacity C at which the step prediction switches.
pub fn channel_capacity_threshold(channel: &Channel) -> Result<f64> {
    Ok(capacity(channel, DEFAULT_CAPACITY_TOL)?.capacity_nats)
}

/// Achievability: R < C.
pub fn achievable(rate: f64, capacity: f64) -> bool {
    rate < capacity
}

/// Converse: a reliable code needs R ≤ C.
pub fn converse_allows(rate: f64, capacity: f64) -> bool {
    rate <= capacity
}

#[derive(Debug, Clone, Serialize)]
pub struct RateDistortionPrediction {
    pub distortion_bound: f64,
    pub rate: f64,
    /// H_x(D).
    pub threshold: f64,
    pub succeeds: bool,
}

pub fn rate_distortion_prediction(
    source: &Distribution,
    d: &DistortionMatrix,
    distortion: f64,
    rate: f64,
) -> Result<RateDistortionPrediction> {
    let threshold = rate_distortion(source, d, distortion, DEFAULT_RD_TOL)?.rate_nats;
    Ok(RateDistortionPrediction {
        distortion_bound: distortion,
        rate,
        threshold,
        succeeds: rate > threshold,
    })
}
