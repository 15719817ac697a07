//! Information measures in nats.
//!
//! Zero-probability cells contribute nothing (0·ln 0 = 0).

mod capacity;
mod rate_distortion;

pub use capacity::{capacity, CapacityResult, DEFAULT_CAPACITY_TOL};
pub use rate_distortion::{
    rate_distortion, rate_distortion_at_slope, DistortionMatrix, RateDistortionPoint,
    DEFAULT_RD_TOL,
};

use crate::dist::{Distribution, JointDistribution};
use crate::error::{Error, Result};

/// −Σ p ln p over the positive entries of `probs`.
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn entropy(dist: &Distribution) -> f64 {
    entropy_of(dist.probs()).max(0.0)
}

pub fn joint_entropy(joint: &JointDistribution) -> f64 {
    entropy_of(joint.flat()).max(0.0)
}

/// H(y|x) = H(x,y) − H(x).
pub fn conditional_entropy(joint: &JointDistribution) -> f64 {
    (joint_entropy(joint) - entropy(&joint.marginal_x())).max(0.0)
}

/// H(y:x) = Σ P(x,y) ln P(x:y).
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let px = joint.marginal_x();
    let py = joint.marginal_y();
    let mut acc = 0.0;
    for x in 0..joint.x_size() {
        for y in 0..joint.y_size() {
            let p = joint.prob(x, y);
            if p > 0.0 {
                acc += p * (p / (px.prob(x) * py.prob(y))).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Conditional mutual information H(x:y|λ).
///
/// `joint` has the flattened pair `(x, y)` as its row index, `x * y_size + y`,
/// and λ as its column index.
pub fn conditional_mutual_information(
    joint: &JointDistribution,
    x_size: usize,
    y_size: usize,
) -> Result<f64> {
    if x_size * y_size != joint.x_size() {
        return Err(Error::DimensionMismatch {
            expected: x_size * y_size,
            found: joint.x_size(),
        });
    }
    let l_size = joint.y_size();
    let mut xl = vec![0.0; x_size * l_size];
    let mut yl = vec![0.0; y_size * l_size];
    let mut l = vec![0.0; l_size];
    for x in 0..x_size {
        for y in 0..y_size {
            for k in 0..l_size {
                let p = joint.prob(x * y_size + y, k);
                xl[x * l_size + k] += p;
                yl[y * l_size + k] += p;
                l[k] += p;
            }
        }
    }
    let value = entropy_of(&xl) + entropy_of(&yl) - entropy_of(joint.flat()) - entropy_of(&l);
    Ok(value.max(0.0))
}

/// D{p//q} in nats; `+∞` when p puts mass where q has none.
pub fn relative_information(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}
