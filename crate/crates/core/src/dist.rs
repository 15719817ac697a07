//! Probability objects over finite alphabets.
//!
//! Symbols are `usize` indices into an alphabet of known size. All objects
//! validate their normalization at construction and are immutable afterwards,
//! so they can be shared freely across threads.

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &p) in probs.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if p < 0.0 {
            return Err(Error::NegativeWeight { index, value: p });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

fn normalize(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { index, value: w });
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// A probability vector over an alphabet of `len()` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionLiteral", into = "DistributionLiteral")]
pub struct Distribution {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionLiteral {
    probs: Vec<f64>,
}

impl TryFrom<DistributionLiteral> for Distribution {
    type Error = Error;
    fn try_from(lit: DistributionLiteral) -> Result<Self> {
        Distribution::new(lit.probs)
    }
}

impl From<Distribution> for DistributionLiteral {
    fn from(d: Distribution) -> Self {
        DistributionLiteral { probs: d.probs }
    }
}

impl Distribution {
    /// Wraps an already-normalized vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs)?;
        Ok(Distribution { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Ok(Distribution {
            probs: normalize(weights)?,
        })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Self::from_weights(&vec![1.0; size])
    }

    pub fn point_mass(size: usize, symbol: usize) -> Result<Self> {
        if symbol >= size {
            return Err(Error::SymbolOutOfAlphabet { symbol, size });
        }
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Ok(Distribution { probs })
    }

    /// Parses `{"probs": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

/// Normalizes `weights`; errors on negative entries or zero total mass.
pub fn make_distribution(weights: &[f64]) -> Result<Distribution> {
    Distribution::from_weights(weights)
}

/// Row-stochastic transition matrix; row `x` holds P(y|x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelLiteral", into = "ChannelLiteral")]
pub struct Channel {
    input_size: usize,
    output_size: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChannelLiteral {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelLiteral> for Channel {
    type Error = Error;
    fn try_from(lit: ChannelLiteral) -> Result<Self> {
        Channel::new(lit.rows)
    }
}

impl From<Channel> for ChannelLiteral {
    fn from(c: Channel) -> Self {
        ChannelLiteral {
            rows: (0..c.input_size).map(|x| c.row(x).to_vec()).collect(),
        }
    }
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::Empty);
        }
        let output_size = rows[0].len();
        let mut probs = Vec::with_capacity(input_size * output_size);
        for row in &rows {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch {
                    expected: output_size,
                    found: row.len(),
                });
            }
            check_probs(row)?;
            probs.extend_from_slice(row);
        }
        Ok(Channel {
            input_size,
            output_size,
            probs,
        })
    }

    pub fn identity(size: usize) -> Result<Self> {
        let rows = (0..size)
            .map(|x| (0..size).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows)
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("crossover {p} not in [0,1]")));
        }
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Every input sees the same output distribution.
    pub fn constant(input_size: usize, output: &Distribution) -> Result<Self> {
        Self::new(vec![output.probs().to_vec(); input_size])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.output_size + y]
    }

    /// Output distribution induced by `input`.
    pub fn output_distribution(&self, input: &Distribution) -> Result<Distribution> {
        Ok(joint_from(self, input)?.marginal_y())
    }
}

/// Joint distribution P(x, y) stored row-major over `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointLiteral", into = "JointLiteral")]
pub struct JointDistribution {
    x_size: usize,
    y_size: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointLiteral {
    joint: Vec<Vec<f64>>,
}

impl TryFrom<JointLiteral> for JointDistribution {
    type Error = Error;
    fn try_from(lit: JointLiteral) -> Result<Self> {
        JointDistribution::new(lit.joint)
    }
}

impl From<JointDistribution> for JointLiteral {
    fn from(j: JointDistribution) -> Self {
        JointLiteral {
            joint: j.probs.chunks(j.y_size).map(|r| r.to_vec()).collect(),
        }
    }
}

impl JointDistribution {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let x_size = matrix.len();
        if x_size == 0 {
            return Err(Error::Empty);
        }
        let y_size = matrix[0].len();
        let mut probs = Vec::with_capacity(x_size * y_size);
        for row in &matrix {
            if row.len() != y_size {
                return Err(Error::DimensionMismatch {
                    expected: y_size,
                    found: row.len(),
                });
            }
            probs.extend_from_slice(row);
        }
        Self::from_flat(x_size, y_size, probs)
    }

    pub fn from_flat(x_size: usize, y_size: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != x_size * y_size {
            return Err(Error::DimensionMismatch {
                expected: x_size * y_size,
                found: probs.len(),
            });
        }
        check_probs(&probs)?;
        Ok(JointDistribution {
            x_size,
            y_size,
            probs,
        })
    }

    pub fn product(px: &Distribution, py: &Distribution) -> Self {
        let probs = px
            .probs()
            .iter()
            .flat_map(|&a| py.probs().iter().map(move |&b| a * b))
            .collect();
        JointDistribution {
            x_size: px.len(),
            y_size: py.len(),
            probs,
        }
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.y_size + y]
    }

    pub fn flat(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal_x(&self) -> Distribution {
        let probs = self.probs.chunks(self.y_size).map(|r| r.iter().sum()).collect();
        Distribution { probs }
    }

    pub fn marginal_y(&self) -> Distribution {
        let mut probs = vec![0.0; self.y_size];
        for row in self.probs.chunks(self.y_size) {
            for (acc, p) in probs.iter_mut().zip(row) {
                *acc += p;
            }
        }
        Distribution { probs }
    }

    /// The same joint with the roles of x and y exchanged.
    pub fn transpose(&self) -> Self {
        let mut probs = vec![0.0; self.probs.len()];
        for x in 0..self.x_size {
            for y in 0..self.y_size {
                probs[y * self.x_size + x] = self.prob(x, y);
            }
        }
        JointDistribution {
            x_size: self.y_size,
            y_size: self.x_size,
            probs,
        }
    }
}

/// P(x, y) = input(x) · channel(y|x).
pub fn joint_from(channel: &Channel, input: &Distribution) -> Result<JointDistribution> {
    if channel.input_size() != input.len() {
        return Err(Error::DimensionMismatch {
            expected: channel.input_size(),
            found: input.len(),
        });
    }
    let probs = (0..channel.input_size())
        .flat_map(|x| channel.row(x).iter().map(move |&w| input.prob(x) * w))
        .collect();
    Ok(JointDistribution {
        x_size: channel.input_size(),
        y_size: channel.output_size(),
        probs,
    })
}

/// Information ratio P(x,y) / (P(x) P(y)).
pub fn info_ratio(joint: &JointDistribution, x: usize, y: usize) -> Result<f64> {
    if x >= joint.x_size() {
        return Err(Error::SymbolOutOfAlphabet {
            symbol: x,
            size: joint.x_size(),
        });
    }
    if y >= joint.y_size() {
        return Err(Error::SymbolOutOfAlphabet {
            symbol: y,
            size: joint.y_size(),
        });
    }
    let px: f64 = (0..joint.y_size()).map(|b| joint.prob(x, b)).sum();
    let py: f64 = (0..joint.x_size()).map(|a| joint.prob(a, y)).sum();
    if px <= 0.0 || py <= 0.0 {
        return Err(Error::ZeroMarginal);
    }
    Ok(joint.prob(x, y) / (px * py))
}

/// Reproducible random stream identified by `(seed, stream_index)`.
///
/// Backed by ChaCha8 with the stream id as the cipher nonce, so every stream
/// is independent and can be created in any order on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        RngStream { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Child stream `index` of this stream. Children of distinct parents and
    /// distinct indices never collide in practice (64-bit mixed seed).
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_index.wrapping_add(0x9e37))),
            stream_index: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Symbol sampler for a fixed distribution.
#[derive(Debug, Clone)]
pub struct SymbolSampler {
    index: WeightedIndex<f64>,
}

impl SymbolSampler {
    pub fn new(dist: &Distribution) -> Self {
        // weights are validated non-negative with unit mass, so this cannot fail
        let index = WeightedIndex::new(dist.probs()).expect("validated distribution");
        SymbolSampler { index }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [usize]) {
        for s in out {
            *s = self.index.sample(rng);
        }
    }
}

/// Draws `n` i.i.d. symbols from `dist` using a fresh generator for `stream`.
pub fn sample_iid(dist: &Distribution, n: usize, stream: RngStream) -> Vec<usize> {
    let mut rng = stream.rng();
    sample_iid_with(dist, n, &mut rng)
}

pub fn sample_iid_with<R: Rng + ?Sized>(dist: &Distribution, n: usize, rng: &mut R) -> Vec<usize> {
    let sampler = SymbolSampler::new(dist);
    let mut out = vec![0; n];
    sampler.fill(rng, &mut out);
    out
}
