//! Seeded Monte Carlo simulators of the three random-coding protocols.
//!
//! Two engines are available. The materialized engine draws the whole
//! codebook for each trial. The sampled engine draws only the sequences that
//! are actually transmitted or observed and accounts for the remaining
//! codewords through their exact law, which depends only on the observed
//! sequence's type; it is exact in distribution and makes codebooks of
//! e^{nR} ≫ 10⁹ rows tractable.

mod channel;
mod law;
mod lossy;
mod source;

pub use channel::{simulate_channel_coding, ChannelCodingSetup, ChannelDecoder};
pub use law::{StatisticLaw, LAW_LIMIT};
pub use lossy::{simulate_rate_distortion, RateDistortionSetup, RdEncoder};
pub use source::simulate_source_coding;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, RngStream, SymbolSampler};
use crate::error::{Error, Result};

/// Default bound on N_m · n · trials for the materialized engine.
pub const DEFAULT_OP_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Materialized when within the operation budget, sampled otherwise.
    #[default]
    Auto,
    Materialized,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub mode: Mode,
    /// Reuse one codebook for every trial (materialized engine only).
    pub fixed_codebook: bool,
    pub op_limit: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            mode: Mode::Auto,
            fixed_codebook: false,
            op_limit: DEFAULT_OP_LIMIT,
        }
    }
}

impl SimOptions {
    /// Resolves `Auto` against the workload N_m · n · trials.
    fn engine(&self, ln_codebook: f64, n: u64, trials: u64) -> Result<Mode> {
        let cost = (ln_codebook + (n as f64).ln() + (trials as f64).ln()).exp();
        let fits = cost <= self.op_limit;
        match self.mode {
            Mode::Materialized | Mode::Auto if fits => Ok(Mode::Materialized),
            Mode::Materialized => Err(Error::CodebookTooLarge {
                cost,
                limit: self.op_limit,
            }),
            Mode::Auto if self.fixed_codebook => Err(Error::CodebookTooLarge {
                cost,
                limit: self.op_limit,
            }),
            Mode::Auto => Ok(Mode::Sampled),
            Mode::Sampled if self.fixed_codebook => Err(Error::InvalidParameter(
                "a fixed codebook needs the materialized engine".into(),
            )),
            Mode::Sampled => Ok(Mode::Sampled),
        }
    }
}

/// N_m codewords of length n, stored row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    words: Vec<usize>,
}

impl Codebook {
    pub fn new(words: Vec<Vec<usize>>, alphabet_size: usize) -> Result<Self> {
        let n = words.first().map(Vec::len).ok_or(Error::Empty)?;
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut flat = Vec::with_capacity(words.len() * n);
        for w in &words {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
            if let Some(&s) = w.iter().find(|&&s| s >= alphabet_size) {
                return Err(Error::SymbolOutOfAlphabet {
                    symbol: s,
                    size: alphabet_size,
                });
            }
            flat.extend_from_slice(w);
        }
        Ok(Codebook { n, words: flat })
    }

    /// Random coding: every symbol i.i.d. from `dist`.
    pub fn random<R: Rng + ?Sized>(dist: &Distribution, size: usize, n: usize, rng: &mut R) -> Self {
        let sampler = SymbolSampler::new(dist);
        let mut words = vec![0; size * n];
        sampler.fill(rng, &mut words);
        Codebook { n, words }
    }

    pub fn len(&self) -> usize {
        self.words.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    pub fn word(&self, m: usize) -> &[usize] {
        &self.words[m * self.n..(m + 1) * self.n]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    /// 1.96 √(p̂(1−p̂)/trials).
    pub ci95_halfwidth: f64,
    pub seed: u64,
    pub engine: Mode,
}

impl TrialReport {
    pub fn new(successes: u64, trials: u64, seed: u64, engine: Mode) -> Self {
        let p_hat = successes as f64 / trials as f64;
        TrialReport {
            successes,
            trials,
            p_hat,
            ci95_halfwidth: 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            seed,
            engine,
        }
    }

    /// Binomial standard deviation of p̂ under success probability `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Runs `trial(stream)` on per-trial substreams in parallel and counts
/// successes; results do not depend on the worker count.
pub(crate) fn run_trials<F>(trials: u64, stream: RngStream, trial: F) -> Result<u64>
where
    F: Fn(RngStream) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| trial(stream.substream(t)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

pub(crate) fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Ok(())
}

/// (1 − p)^k for k = e^{ln_k} from ln p, accurate when p is tiny and k huge.
pub(crate) fn ln_none_of(ln_p: f64, ln_k: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY || ln_k == f64::NEG_INFINITY {
        return 0.0;
    }
    if ln_p >= 0.0 {
        return f64::NEG_INFINITY;
    }
    let p = ln_p.exp();
    let k = ln_k.exp();
    if ln_p < -30.0 {
        -(ln_p + ln_k).exp()
    } else {
        k * (-p).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_fields() {
        let r = TrialReport::new(30, 100, 7, Mode::Sampled);
        assert_eq!(r.p_hat, 0.3);
        assert!((r.ci95_halfwidth - 1.96 * (0.21f64 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn engine_selection() {
        let o = SimOptions::default();
        assert_eq!(o.engine(3f64.ln(), 10, 10).unwrap(), Mode::Materialized);
        assert_eq!(o.engine(100.0, 10, 10).unwrap(), Mode::Sampled);
        let m = SimOptions {
            mode: Mode::Materialized,
            ..o
        };
        assert!(matches!(m.engine(100.0, 10, 10), Err(Error::CodebookTooLarge { .. })));
    }

    #[test]
    fn none_of_limits() {
        assert_eq!(ln_none_of(f64::NEG_INFINITY, 50.0), 0.0);
        assert!((ln_none_of(0.5f64.ln(), 3f64.ln()) - 3.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!((ln_none_of(-100.0, 99.0) + (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn codebook_validation() {
        assert!(Codebook::new(vec![vec![0, 1], vec![1]], 2).is_err());
        assert!(Codebook::new(vec![vec![0, 2]], 2).is_err());
        let c = Codebook::new(vec![vec![0, 1], vec![1, 1]], 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.word(1), &[1, 1]);
    }
}
