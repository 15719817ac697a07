use crate::dist::{RngStream, SymbolSampler};
use crate::error::Result;
use crate::theorems::SourceCodingSetup;
use crate::types::type_of;

use super::{check_trials, run_trials, Mode, TrialReport};

/// Each trial draws xⁿ from the source and succeeds iff xⁿ lies in the
/// encoder's set A, so that the decoder reproduces it.
pub fn simulate_source_coding(setup: &SourceCodingSetup, trials: u64, stream: RngStream) -> Result<TrialReport> {
    check_trials(trials)?;
    let sampler = SymbolSampler::new(&setup.source);
    let n = setup.n as usize;
    let size = setup.source.len();
    let successes = run_trials(trials, stream, |s| {
        let mut rng = s.rng();
        let mut xs = vec![0; n];
        sampler.fill(&mut rng, &mut xs);
        Ok(setup.accepts(&type_of(&xs, size)?))
    })?;
    Ok(TrialReport::new(successes, trials, stream.seed, Mode::Materialized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::theorems::{source_coding_exact_psuc, SourceCodingMode};

    #[test]
    fn all_indexed_gives_certain_success() {
        let s = SourceCodingSetup::new(
            Distribution::new(vec![0.9, 0.1]).unwrap(),
            0.7,
            50,
            SourceCodingMode::SourceDependent,
        )
        .unwrap();
        let r = simulate_source_coding(&s, 200, RngStream::new(3, 0)).unwrap();
        assert_eq!(r.successes, 200);
    }

    #[test]
    fn matches_exact_and_is_deterministic() {
        let s = SourceCodingSetup::new(
            Distribution::new(vec![0.9, 0.1]).unwrap(),
            0.33,
            100,
            SourceCodingMode::SourceDependent,
        )
        .unwrap();
        let exact = source_coding_exact_psuc(&s).unwrap();
        let a = simulate_source_coding(&s, 4000, RngStream::new(9, 1)).unwrap();
        let b = simulate_source_coding(&s, 4000, RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!((a.p_hat - exact).abs() <= 3.0 * a.sigma_at(exact));
    }
}
