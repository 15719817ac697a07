use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Channel, Distribution, RngStream, SymbolSampler};
use crate::error::{Error, Result};
use crate::theorems::ln_codebook_size;

use super::law::{Cache, CellValues, StatisticLaw};
use super::{check_trials, ln_none_of, run_trials, Codebook, Mode, SimOptions, TrialReport};

/// Relative tolerance for likelihood ties.
pub const TIE_TOL: f64 = 1e-9;
const CACHE_CAPACITY: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelDecoder {
    /// Success iff the sent index is the only one whose information density
    /// (1/n) ln P(yⁿ:xⁿ(m)) exceeds R.
    Threshold,
    /// Success iff the sent index beats every other index by more than nR in
    /// log-likelihood: R < (1/n) ln P(yⁿ|xⁿ(m̂))/P(yⁿ|xⁿ(m)) for all m ≠ m̂.
    Pairwise,
    /// argmax_m P(yⁿ|xⁿ(m)) with uniform tie-breaking.
    MaximumLikelihood,
}

#[derive(Debug, Clone)]
pub struct ChannelCodingSetup {
    pub channel: Channel,
    pub input: Distribution,
    pub rate: f64,
    pub n: u64,
}

impl ChannelCodingSetup {
    pub fn new(channel: Channel, input: Distribution, rate: f64, n: u64) -> Result<Self> {
        if channel.input_size() != input.len() {
            return Err(Error::DimensionMismatch {
                expected: channel.input_size(),
                found: input.len(),
            });
        }
        if n == 0 || !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("need n ≥ 1 and rate > 0, got n={n}, rate={rate}")));
        }
        if ln_codebook_size(rate, n) < 2f64.ln() {
            return Err(Error::InvalidParameter(format!(
                "codebook ⌊e^(nR)⌋ must have at least 2 words (n={n}, rate={rate})"
            )));
        }
        Ok(ChannelCodingSetup {
            channel,
            input,
            rate,
            n,
        })
    }

    pub fn ln_codebook_size(&self) -> f64 {
        ln_codebook_size(self.rate, self.n)
    }

    /// Per-cell statistic v(x, y) used by `decoder`.
    fn cells(&self, decoder: ChannelDecoder) -> CellValues {
        let (nx, ny) = (self.channel.input_size(), self.channel.output_size());
        let q: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| self.input.prob(x) * self.channel.prob(x, y)).sum())
            .collect();
        let mut primary = vec![0.0; nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                let w = self.channel.prob(x, y);
                primary[x * ny + y] = match decoder {
                    ChannelDecoder::MaximumLikelihood => w.ln(),
                    _ if w == 0.0 || q[y] == 0.0 => f64::NEG_INFINITY,
                    _ => (w / q[y]).ln(),
                };
            }
        }
        CellValues {
            others: nx,
            groups: ny,
            primary,
            secondary: None,
        }
    }
}

struct Context<'a> {
    setup: &'a ChannelCodingSetup,
    decoder: ChannelDecoder,
    cells: CellValues,
    input: SymbolSampler,
    rows: Vec<SymbolSampler>,
    threshold: f64,
}

impl Context<'_> {
    fn transmit<R: Rng + ?Sized>(&self, xs: &[usize], rng: &mut R) -> Vec<usize> {
        xs.iter().map(|&x| self.rows[x].sample(rng)).collect()
    }

    fn statistic(&self, xs: &[usize], ys: &[usize]) -> f64 {
        let ny = self.cells.groups;
        let mut counts = vec![0u64; self.cells.others * ny];
        for (&x, &y) in xs.iter().zip(ys) {
            counts[x * ny + y] += 1;
        }
        self.cells.evaluate(&counts).0
    }

    fn tie_band(&self, s: f64) -> (f64, f64) {
        let tol = TIE_TOL * s.abs().max(1.0);
        (s - tol, s + tol)
    }
}

fn materialized_trial(ctx: &Context, book: Option<&Codebook>, stream: RngStream) -> Result<bool> {
    let mut rng = stream.rng();
    let n = ctx.setup.n as usize;
    let size = ctx.setup.ln_codebook_size().exp().round() as usize;
    let owned;
    let book = match book {
        Some(b) => b,
        None => {
            owned = Codebook::random(&ctx.setup.input, size, n, &mut rng);
            &owned
        }
    };
    let m = rng.gen_range(0..book.len());
    let ys = ctx.transmit(book.word(m), &mut rng);
    let stats: Vec<f64> = (0..book.len()).map(|k| ctx.statistic(book.word(k), &ys)).collect();
    let sent = stats[m];
    let others = stats.iter().enumerate().filter(|&(k, _)| k != m).map(|(_, &s)| s);
    Ok(match ctx.decoder {
        ChannelDecoder::Threshold => sent > ctx.threshold && others.clone().all(|s| s <= ctx.threshold),
        ChannelDecoder::Pairwise => others.clone().all(|s| sent - s > ctx.threshold),
        ChannelDecoder::MaximumLikelihood => {
            let (lo, hi) = ctx.tie_band(sent);
            let mut ties = 0u64;
            for s in others {
                if s > hi {
                    return Ok(false);
                }
                if s >= lo {
                    ties += 1;
                }
            }
            ties == 0 || rng.gen_range(0..=ties) == 0
        }
    })
}

/// E[1/(K+1)] for K ~ Binomial(N, q), with N = e^{ln_n}.
fn ln_tie_factor(q: f64, ln_n: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let ln_n1 = log_add_one(ln_n);
    let x = (ln_n1 + q.ln()).exp();
    if x < 1e-8 {
        // 1 − Nq/2 + O((Nq)²)
        return (-0.5 * (ln_n + q.ln()).exp()).ln_1p();
    }
    // (1 − (1−q)^{N+1}) / ((N+1) q)
    let none = ln_none_of(q.ln(), ln_n1);
    ((-none.exp_m1()).ln() - ln_n1 - q.ln()).min(0.0)
}

/// ln(e^a − 1) for a > 0.
pub(crate) fn ln_minus_one(a: f64) -> f64 {
    if a > 30.0 {
        a + (-(-a).exp()).ln_1p()
    } else {
        a.exp_m1().ln()
    }
}

/// ln(e^a + 1).
fn log_add_one(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

fn sampled_trial(ctx: &Context, cache: &Cache<StatisticLaw>, stream: RngStream) -> Result<bool> {
    let mut rng = stream.rng();
    let n = ctx.setup.n as usize;
    let mut xs = vec![0; n];
    ctx.input.fill(&mut rng, &mut xs);
    let ys = ctx.transmit(&xs, &mut rng);
    let sent = ctx.statistic(&xs, &ys);
    let ny = ctx.cells.groups;
    let mut y_counts = vec![0u64; ny];
    for &y in &ys {
        y_counts[y] += 1;
    }
    let law = cache.get_or_try_insert(&y_counts, || {
        let ln_pi: Vec<f64> = ctx.setup.input.probs().iter().map(|p| p.ln()).collect();
        let atoms = ctx.cells.enumerate(&y_counts, &ln_pi)?;
        Ok(StatisticLaw::from_atoms(atoms.into_iter().map(|a| (a.1, a.0)).collect()))
    })?;
    let ln_competitors = ln_minus_one(ctx.setup.ln_codebook_size());
    let ln_success = match ctx.decoder {
        ChannelDecoder::Threshold => {
            if sent <= ctx.threshold {
                return Ok(false);
            }
            ln_none_of(law.ln_greater(ctx.threshold), ln_competitors)
        }
        ChannelDecoder::Pairwise => ln_none_of(law.ln_at_least(sent - ctx.threshold), ln_competitors),
        ChannelDecoder::MaximumLikelihood => {
            let (lo, hi) = ctx.tie_band(sent);
            let ln_gt = law.ln_greater(hi);
            let none_greater = ln_none_of(ln_gt, ln_competitors);
            let p_eq = law.prob_between(lo, hi);
            let q = (p_eq / (1.0 - ln_gt.exp())).min(1.0);
            none_greater + ln_tie_factor(q, ln_competitors)
        }
    };
    Ok(rng.gen::<f64>().ln() < ln_success)
}

/// Random-coding channel experiment: fresh codebook drawn i.i.d. from the
/// input distribution, uniform message, DMC transmission, decoding by
/// `decoder` at R = `setup.rate` and N_m = ⌊e^{nR}⌋.
pub fn simulate_channel_coding(
    setup: &ChannelCodingSetup,
    decoder: ChannelDecoder,
    trials: u64,
    stream: RngStream,
    options: &SimOptions,
) -> Result<TrialReport> {
    check_trials(trials)?;
    let engine = options.engine(setup.ln_codebook_size(), setup.n, trials)?;
    let ctx = Context {
        setup,
        decoder,
        cells: setup.cells(decoder),
        input: SymbolSampler::new(&setup.input),
        rows: (0..setup.channel.input_size())
            .map(|x| SymbolSampler::new(&Distribution::new(setup.channel.row(x).to_vec()).expect("channel rows are distributions")))
            .collect(),
        threshold: setup.n as f64 * setup.rate,
    };
    let successes = match engine {
        Mode::Sampled => {
            let cache = Cache::new(CACHE_CAPACITY);
            run_trials(trials, stream, |s| sampled_trial(&ctx, &cache, s))?
        }
        _ => {
            let fixed = options.fixed_codebook.then(|| {
                let size = setup.ln_codebook_size().exp().round() as usize;
                let mut rng = stream.substream(u64::MAX).rng();
                Codebook::random(&setup.input, size, setup.n as usize, &mut rng)
            });
            run_trials(trials, stream, |s| materialized_trial(&ctx, fixed.as_ref(), s))?
        }
    };
    Ok(TrialReport::new(successes, trials, stream.seed, engine))
}
