use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Channel, Distribution, RngStream, SymbolSampler};
use crate::error::{Error, Result};
use crate::info::DistortionMatrix;
use crate::theorems::ln_codebook_size;

use super::law::{Cache, CellValues};
use super::{check_trials, ln_none_of, run_trials, Codebook, Mode, SimOptions, TrialReport};

const CACHE_CAPACITY: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RdEncoder {
    /// Success iff some codeword has (1/n) ln P(xⁿ:x̂ⁿ(m)) < R and average
    /// distortion ≤ D.
    Threshold,
    /// Success iff some codeword has average distortion ≤ D.
    MinimumDistortion,
    /// Success iff some codeword with distortion ≤ D satisfies
    /// R > (1/n) ln P(xⁿ:x̂ⁿ(m))/P(xⁿ:x̂ⁿ(m′)) against every other m′.
    /// Needs the materialized engine.
    Pairwise,
}

#[derive(Debug, Clone)]
pub struct RateDistortionSetup {
    pub source: Distribution,
    /// P(x̂|x), rows indexed by the source symbol.
    pub test_channel: Channel,
    pub distortion: DistortionMatrix,
    pub max_distortion: f64,
    pub rate: f64,
    pub n: u64,
}

impl RateDistortionSetup {
    pub fn new(
        source: Distribution,
        test_channel: Channel,
        distortion: DistortionMatrix,
        max_distortion: f64,
        rate: f64,
        n: u64,
    ) -> Result<Self> {
        let k = distortion.size();
        if source.len() != k || test_channel.input_size() != k || test_channel.output_size() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: if source.len() != k { source.len() } else { test_channel.output_size() },
            });
        }
        if n == 0 || !(rate > 0.0) || !rate.is_finite() || !(max_distortion >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need n ≥ 1, rate > 0, D ≥ 0; got n={n}, rate={rate}, D={max_distortion}"
            )));
        }
        if ln_codebook_size(rate, n) < 2f64.ln() {
            return Err(Error::InvalidParameter(format!(
                "codebook ⌊e^(nR)⌋ must have at least 2 words (n={n}, rate={rate})"
            )));
        }
        let setup = RateDistortionSetup {
            source,
            test_channel,
            distortion,
            max_distortion,
            rate,
            n,
        };
        let r = setup.reproduction_marginal();
        if let Some(symbol) = r.iter().position(|&v| v <= 0.0) {
            return Err(Error::DegenerateMarginal { symbol });
        }
        Ok(setup)
    }

    /// r(x̂) = Σ_x P(x) P(x̂|x), the codebook distribution.
    pub fn reproduction_marginal(&self) -> Vec<f64> {
        let k = self.distortion.size();
        (0..k)
            .map(|xh| (0..k).map(|x| self.source.prob(x) * self.test_channel.prob(x, xh)).sum())
            .collect()
    }

    pub fn ln_codebook_size(&self) -> f64 {
        ln_codebook_size(self.rate, self.n)
    }

    /// Cells indexed x̂ · k + x: ln P(x:x̂) and d(x, x̂).
    fn cells(&self) -> CellValues {
        let k = self.distortion.size();
        let r = self.reproduction_marginal();
        let mut primary = vec![0.0; k * k];
        let mut secondary = vec![0.0; k * k];
        for xh in 0..k {
            for x in 0..k {
                let w = self.test_channel.prob(x, xh);
                primary[xh * k + x] = if w == 0.0 { f64::NEG_INFINITY } else { (w / r[xh]).ln() };
                secondary[xh * k + x] = self.distortion.get(x, xh);
            }
        }
        CellValues {
            others: k,
            groups: k,
            primary,
            secondary: Some(secondary),
        }
    }
}

struct Context<'a> {
    setup: &'a RateDistortionSetup,
    encoder: RdEncoder,
    cells: CellValues,
    source: SymbolSampler,
    rate_threshold: f64,
    distortion_threshold: f64,
}

impl Context<'_> {
    fn statistics(&self, xs: &[usize], xh: &[usize]) -> (f64, f64) {
        let k = self.cells.groups;
        let mut counts = vec![0u64; k * k];
        for (&x, &h) in xs.iter().zip(xh) {
            counts[h * k + x] += 1;
        }
        self.cells.evaluate(&counts)
    }

    fn covers(&self, f: f64, g: f64) -> bool {
        g <= self.distortion_threshold
            && match self.encoder {
                RdEncoder::Threshold => f < self.rate_threshold,
                _ => true,
            }
    }
}

fn materialized_trial(ctx: &Context, book: Option<&Codebook>, stream: RngStream) -> Result<bool> {
    let mut rng = stream.rng();
    let n = ctx.setup.n as usize;
    let owned;
    let book = match book {
        Some(b) => b,
        None => {
            let size = ctx.setup.ln_codebook_size().exp().round() as usize;
            let r = Distribution::from_weights(&ctx.setup.reproduction_marginal())?;
            owned = Codebook::random(&r, size, n, &mut rng);
            &owned
        }
    };
    let mut xs = vec![0; n];
    ctx.source.fill(&mut rng, &mut xs);
    let stats: Vec<(f64, f64)> = (0..book.len()).map(|m| ctx.statistics(&xs, book.word(m))).collect();
    if ctx.encoder != RdEncoder::Pairwise {
        return Ok(stats.iter().any(|&(f, g)| ctx.covers(f, g)));
    }
    // smallest and second-smallest density, to get min over m′ ≠ m
    let (mut best, mut second, mut best_at) = (f64::INFINITY, f64::INFINITY, usize::MAX);
    for (m, &(f, _)) in stats.iter().enumerate() {
        if f < best {
            second = best;
            best = f;
            best_at = m;
        } else if f < second {
            second = f;
        }
    }
    Ok(stats.iter().enumerate().any(|(m, &(f, g))| {
        let rival = if m == best_at { second } else { best };
        g <= ctx.distortion_threshold && f - rival < ctx.rate_threshold
    }))
}

fn sampled_trial(ctx: &Context, cache: &Cache<f64>, stream: RngStream) -> Result<bool> {
    let mut rng = stream.rng();
    let n = ctx.setup.n as usize;
    let k = ctx.cells.groups;
    let mut x_counts = vec![0u64; k];
    for _ in 0..n {
        x_counts[ctx.source.sample(&mut rng)] += 1;
    }
    let ln_p = cache.get_or_try_insert(&x_counts, || {
        let ln_r: Vec<f64> = ctx.setup.reproduction_marginal().iter().map(|p| p.ln()).collect();
        let atoms = ctx.cells.enumerate(&x_counts, &ln_r)?;
        let mut acc = (f64::NEG_INFINITY, 0.0);
        for (lp, f, g) in atoms {
            if ctx.covers(f, g) {
                if lp > acc.0 {
                    acc.1 = acc.1 * (acc.0 - lp).exp() + 1.0;
                    acc.0 = lp;
                } else {
                    acc.1 += (lp - acc.0).exp();
                }
            }
        }
        Ok(if acc.1 > 0.0 { (acc.0 + acc.1.ln()).min(0.0) } else { f64::NEG_INFINITY })
    })?;
    // P(no codeword covers xⁿ) = (1 − p)^{N_m}
    let ln_fail = ln_none_of(*ln_p, ctx.setup.ln_codebook_size());
    Ok(rng.gen::<f64>().ln() >= ln_fail)
}

/// Lossy source coding with a random codebook drawn from the reproduction
/// marginal of `test_channel ∘ source`.
pub fn simulate_rate_distortion(
    setup: &RateDistortionSetup,
    encoder: RdEncoder,
    trials: u64,
    stream: RngStream,
    options: &SimOptions,
) -> Result<TrialReport> {
    check_trials(trials)?;
    let engine = options.engine(setup.ln_codebook_size(), setup.n, trials)?;
    if engine == Mode::Sampled && encoder == RdEncoder::Pairwise {
        return Err(Error::InvalidParameter(
            "the pairwise encoder needs a materialized codebook".into(),
        ));
    }
    let nd = setup.n as f64 * setup.max_distortion;
    let ctx = Context {
        setup,
        encoder,
        cells: setup.cells(),
        source: SymbolSampler::new(&setup.source),
        rate_threshold: setup.n as f64 * setup.rate,
        distortion_threshold: nd + 1e-12 * nd.max(1.0),
    };
    let successes = match engine {
        Mode::Sampled => {
            let cache = Cache::new(CACHE_CAPACITY);
            run_trials(trials, stream, |s| sampled_trial(&ctx, &cache, s))?
        }
        _ => {
            let fixed = if options.fixed_codebook {
                let size = setup.ln_codebook_size().exp().round() as usize;
                let r = Distribution::from_weights(&setup.reproduction_marginal())?;
                let mut rng = stream.substream(u64::MAX).rng();
                Some(Codebook::random(&r, size, setup.n as usize, &mut rng))
            } else {
                None
            };
            run_trials(trials, stream, |s| materialized_trial(&ctx, fixed.as_ref(), s))?
        }
    };
    Ok(TrialReport::new(successes, trials, stream.seed, engine))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(rate: f64, n: u64, d: f64) -> RateDistortionSetup {
        let src = Distribution::uniform(2).unwrap();
        let dm = DistortionMatrix::hamming(2).unwrap();
        let pt = crate::info::rate_distortion(&src, &dm, d, 1e-7).unwrap();
        RateDistortionSetup::new(src, pt.optimal_test_channel, dm, d, rate, n).unwrap()
    }

    #[test]
    fn engines_agree() {
        let s = setup(0.35, 24, 0.2);
        for enc in [RdEncoder::Threshold, RdEncoder::MinimumDistortion] {
            let a = simulate_rate_distortion(&s, enc, 3000, RngStream::new(1, 0), &SimOptions { mode: Mode::Materialized, ..Default::default() }).unwrap();
            let b = simulate_rate_distortion(&s, enc, 3000, RngStream::new(2, 0), &SimOptions { mode: Mode::Sampled, ..Default::default() }).unwrap();
            let p = 0.5 * (a.p_hat + b.p_hat);
            let sigma = (2.0 * p * (1.0 - p) / 3000.0).sqrt();
            assert!((a.p_hat - b.p_hat).abs() <= 4.0 * sigma + 1e-3, "{enc:?}: {} vs {}", a.p_hat, b.p_hat);
        }
    }

    #[test]
    fn pairwise_needs_materialized() {
        let s = setup(0.35, 300, 0.2);
        assert!(simulate_rate_distortion(&s, RdEncoder::Pairwise, 10, RngStream::new(1, 0), &SimOptions::default()).is_err());
        let small = setup(0.35, 20, 0.2);
        assert!(simulate_rate_distortion(&small, RdEncoder::Pairwise, 50, RngStream::new(1, 0), &SimOptions::default()).is_ok());
    }

    #[test]
    fn degenerate_marginal_rejected() {
        let src = Distribution::uniform(2).unwrap();
        let dm = DistortionMatrix::hamming(2).unwrap();
        let constant = Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            RateDistortionSetup::new(src, constant, dm, 0.5, 0.3, 20),
            Err(Error::DegenerateMarginal { symbol: 1 })
        ));
    }
}
