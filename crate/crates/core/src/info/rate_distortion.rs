//! Rate-distortion function by Blahut–Arimoto on the Lagrangian slope.
//!
//! For a slope parameter β ≥ 0 the alternating minimization converges to the
//! point of the R(D) curve where the tangent has slope −β. The target
//! distortion is then reached by bisection on β; if the target falls inside a
//! linear segment of the curve the two bracketing test channels are mixed.

use serde::{Deserialize, Serialize};

use crate::dist::{joint_from, Channel, Distribution};
use crate::error::{Error, Result};

use super::mutual_information;

pub const DEFAULT_RD_TOL: f64 = 1e-7;
const MAX_ITERATIONS: usize = 1_000_000;

/// d(x, x̂): row is the source symbol, column the reproduction symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistortionLiteral", into = "DistortionLiteral")]
pub struct DistortionMatrix {
    size: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistortionLiteral {
    d: Vec<Vec<f64>>,
}

impl TryFrom<DistortionLiteral> for DistortionMatrix {
    type Error = Error;
    fn try_from(lit: DistortionLiteral) -> Result<Self> {
        DistortionMatrix::new(lit.d)
    }
}

impl From<DistortionMatrix> for DistortionLiteral {
    fn from(m: DistortionMatrix) -> Self {
        DistortionLiteral {
            d: m.values.chunks(m.size).map(|r| r.to_vec()).collect(),
        }
    }
}

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::Empty);
        }
        let mut values = Vec::with_capacity(size * size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidDistortion(format!(
                    "row {x} has {} entries, expected {size}",
                    row.len()
                )));
            }
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistortion(format!("d({x},{y}) = {v}")));
                }
                if x == y && v != 0.0 {
                    return Err(Error::InvalidDistortion(format!("d({x},{x}) = {v} must be 0")));
                }
            }
            values.extend_from_slice(row);
        }
        Ok(DistortionMatrix { size, values })
    }

    pub fn hamming(size: usize) -> Result<Self> {
        Self::new(
            (0..size)
                .map(|x| (0..size).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, x_hat: usize) -> f64 {
        self.values[x * self.size + x_hat]
    }

    /// Expected distortion E d under `source` and test channel P(x̂|x).
    pub fn expected(&self, source: &Distribution, test_channel: &Channel) -> f64 {
        let mut acc = 0.0;
        for x in 0..self.size {
            for xh in 0..self.size {
                acc += source.prob(x) * test_channel.prob(x, xh) * self.get(x, xh);
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateDistortionPoint {
    /// Requested distortion level D.
    pub distortion: f64,
    /// E d achieved by `optimal_test_channel` (≤ D up to tolerance).
    pub achieved_distortion: f64,
    pub rate_nats: f64,
    /// P(x̂|x), rows indexed by the source symbol.
    pub optimal_test_channel: Channel,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

struct SlopePoint {
    distortion: f64,
    channel: Vec<f64>,
}

/// Blahut–Arimoto at fixed β; `beta = f64::INFINITY` restricts every source
/// symbol to its zero-distortion reproductions.
fn ba_at_slope(source: &Distribution, dm: &DistortionMatrix, beta: f64, tol: f64) -> Result<SlopePoint> {
    let n = dm.size();
    let mut log_q = vec![-(n as f64).ln(); n];
    let mut channel = vec![0.0; n * n];
    let mut logits = vec![0.0; n];
    let mut gap = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut q_new = vec![0.0; n];
        for x in 0..n {
            for xh in 0..n {
                let d = dm.get(x, xh);
                logits[xh] = if beta.is_infinite() {
                    if d == 0.0 {
                        log_q[xh]
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    log_q[xh] - beta * d
                };
            }
            let z = log_sum_exp(&logits);
            for xh in 0..n {
                let w = (logits[xh] - z).exp();
                channel[x * n + xh] = w;
                q_new[xh] += source.prob(x) * w;
            }
        }
        // c(x̂) = q_new/q; at the fixed point max ln c = 0
        gap = (0..n)
            .filter(|&xh| log_q[xh] > f64::NEG_INFINITY && q_new[xh] > 0.0)
            .map(|xh| q_new[xh].ln() - log_q[xh])
            .fold(0.0, f64::max);
        for xh in 0..n {
            log_q[xh] = if q_new[xh] > 0.0 { q_new[xh].ln() } else { f64::NEG_INFINITY };
        }
        if gap <= tol {
            let mut distortion = 0.0;
            for x in 0..n {
                for xh in 0..n {
                    distortion += source.prob(x) * channel[x * n + xh] * dm.get(x, xh);
                }
            }
            return Ok(SlopePoint { distortion, channel });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        gap,
    })
}

fn to_channel(n: usize, flat: &[f64]) -> Result<Channel> {
    // renormalize rows against accumulated rounding before validation
    let rows = flat
        .chunks(n)
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::new(rows)
}

fn point(source: &Distribution, dm: &DistortionMatrix, target: f64, channel: Channel) -> Result<RateDistortionPoint> {
    let rate = mutual_information(&joint_from(&channel, source)?);
    Ok(RateDistortionPoint {
        distortion: target,
        achieved_distortion: dm.expected(source, &channel),
        rate_nats: rate,
        optimal_test_channel: channel,
    })
}

fn check_inputs(source: &Distribution, dm: &DistortionMatrix) -> Result<()> {
    if source.len() != dm.size() {
        return Err(Error::DimensionMismatch {
            expected: dm.size(),
            found: source.len(),
        });
    }
    Ok(())
}

/// The curve point at slope −β (β ≥ 0, possibly infinite).
pub fn rate_distortion_at_slope(
    source: &Distribution,
    dm: &DistortionMatrix,
    beta: f64,
    tol: f64,
) -> Result<RateDistortionPoint> {
    check_inputs(source, dm)?;
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("slope parameter {beta} must be ≥ 0")));
    }
    let sp = ba_at_slope(source, dm, beta, tol)?;
    let channel = to_channel(dm.size(), &sp.channel)?;
    point(source, dm, sp.distortion, channel)
}

/// H_x(D): minimum of H(x̂:x) over test channels with E d ≤ D.
pub fn rate_distortion(
    source: &Distribution,
    dm: &DistortionMatrix,
    max_distortion: f64,
    tol: f64,
) -> Result<RateDistortionPoint> {
    check_inputs(source, dm)?;
    if !(max_distortion >= 0.0) || !max_distortion.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "distortion level {max_distortion} must be finite and ≥ 0"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n = dm.size();
    let inner_tol = (tol * 1e-3).max(1e-11);

    // best constant reproduction
    let (best_xh, d_max) = (0..n)
        .map(|xh| (xh, (0..n).map(|x| source.prob(x) * dm.get(x, xh)).sum::<f64>()))
        .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
    if max_distortion >= d_max {
        let rows = (0..n)
            .map(|_| (0..n).map(|xh| if xh == best_xh { 1.0 } else { 0.0 }).collect())
            .collect();
        return point(source, dm, max_distortion, Channel::new(rows)?);
    }
    if max_distortion == 0.0 {
        let sp = ba_at_slope(source, dm, f64::INFINITY, inner_tol)?;
        return point(source, dm, 0.0, to_channel(n, &sp.channel)?);
    }

    let mut lo = SlopePoint {
        distortion: d_max,
        channel: Vec::new(),
    };
    let mut beta_lo = 0.0;
    let mut beta_hi = 1.0;
    let mut hi = ba_at_slope(source, dm, beta_hi, inner_tol)?;
    while hi.distortion > max_distortion {
        beta_lo = beta_hi;
        lo = hi;
        beta_hi *= 2.0;
        if beta_hi > 1e12 {
            hi = ba_at_slope(source, dm, f64::INFINITY, inner_tol)?;
            break;
        }
        hi = ba_at_slope(source, dm, beta_hi, inner_tol)?;
    }
    for _ in 0..200 {
        if max_distortion - hi.distortion <= 1e-14 || beta_hi - beta_lo <= 1e-14 * beta_hi {
            break;
        }
        let mid = 0.5 * (beta_lo + beta_hi);
        let sp = ba_at_slope(source, dm, mid, inner_tol)?;
        if sp.distortion > max_distortion {
            beta_lo = mid;
            lo = sp;
        } else {
            beta_hi = mid;
            hi = sp;
        }
    }
    let hi_point = point(source, dm, max_distortion, to_channel(n, &hi.channel)?)?;
    let slack = max_distortion - hi.distortion;
    if slack <= 1e-12 || lo.channel.is_empty() {
        return Ok(hi_point);
    }
    // the target sits on a linear stretch: time-share the bracketing channels
    let lambda = slack / (lo.distortion - hi.distortion);
    let mixed: Vec<f64> = lo
        .channel
        .iter()
        .zip(&hi.channel)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect();
    let mixed_point = point(source, dm, max_distortion, to_channel(n, &mixed)?)?;
    if mixed_point.rate_nats <= hi_point.rate_nats
        && mixed_point.achieved_distortion <= max_distortion + tol
    {
        Ok(mixed_point)
    } else {
        Ok(hi_point)
    }
}
