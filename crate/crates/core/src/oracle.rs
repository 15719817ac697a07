//! Independent numerical references: adaptive quadrature, uniform-simplex
//! Monte Carlo and brute-force sequence enumeration.

use rand::Rng;
use rayon::prelude::*;

use crate::dist::RngStream;
use crate::types::{JointSequenceType, SequenceType};

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // split first so narrow peaks are not missed by the initial 3-point rule
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = h / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

/// Iterated adaptive Simpson over a rectangle.
pub fn adaptive_simpson_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a0, b0): (f64, f64),
    (a1, b1): (f64, f64),
    tol: f64,
) -> f64 {
    let inner_tol = tol / (b0 - a0).max(1.0);
    adaptive_simpson(|u| adaptive_simpson(|v| f(u, v), a1, b1, inner_tol), a0, b0, tol)
}

#[derive(Debug, Clone, Copy)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// ∫ f over the probability simplex with the measure of the integral
/// ∫Πdp δ(Σp − 1) (total volume 1/(N−1)!), from uniform points obtained by
/// normalizing exponential draws.
pub fn simplex_monte_carlo<F>(f: F, dim: usize, samples: usize, stream: RngStream) -> MonteCarloEstimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c as u64).rng();
            let mut p = vec![0.0; dim];
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let mut total = 0.0;
                for v in p.iter_mut() {
                    *v = -(1.0 - rng.gen::<f64>()).ln();
                    total += *v;
                }
                for v in p.iter_mut() {
                    *v /= total;
                }
                let y = f(&p);
                s += y;
                s2 += y * y;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let volume = 1.0 / statrs::function::factorial::factorial(dim as u64 - 1);
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    MonteCarloEstimate {
        value: volume * mean,
        std_error: volume * (var / n).sqrt(),
    }
}

/// Odometer over all sequences of length n over `alphabet_size` symbols.
pub struct Sequences {
    digits: Vec<usize>,
    base: usize,
    done: bool,
}

impl Iterator for Sequences {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.digits.clone();
        let mut i = 0;
        loop {
            if i == self.digits.len() {
                self.done = true;
                break;
            }
            self.digits[i] += 1;
            if self.digits[i] < self.base {
                break;
            }
            self.digits[i] = 0;
            i += 1;
        }
        Some(out)
    }
}

pub fn all_sequences(alphabet_size: usize, n: usize) -> Sequences {
    Sequences {
        digits: vec![0; n],
        base: alphabet_size,
        done: alphabet_size == 0,
    }
}

/// Members of the class of `t`, counted by visiting every sequence.
pub fn brute_class_size(t: &SequenceType) -> u64 {
    all_sequences(t.alphabet_size(), t.n() as usize)
        .filter(|s| {
            let mut c = vec![0u64; t.alphabet_size()];
            for &x in s {
                c[x] += 1;
            }
            c == t.counts()
        })
        .count() as u64
}

/// Number of yⁿ that complete a fixed representative xⁿ of the x-marginal to
/// the given joint type.
pub fn brute_conditional_class_size(joint: &JointSequenceType) -> u64 {
    let tx = joint.x_marginal();
    let xs: Vec<usize> = tx
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
        .collect();
    all_sequences(joint.y_size(), xs.len())
        .filter(|ys| {
            JointSequenceType::of_pair(&xs, ys, joint.x_size(), joint.y_size())
                .map(|j| &j == joint)
                .unwrap_or(false)
        })
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simpson_polynomial_and_peak() {
        assert_abs_diff_eq!(adaptive_simpson(|t| t * (1.0 - t).powi(2), 0.0, 1.0, 1e-12), 1.0 / 12.0, epsilon = 1e-12);
        let l = 1000.0;
        let v = adaptive_simpson(|t| (-2.0 * l * (t - 0.5f64).powi(2)).exp(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, (std::f64::consts::PI / (2.0 * l)).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn simpson_2d_product() {
        let v = adaptive_simpson_2d(|u, v| u * v, (0.0, 1.0), (0.0, 2.0), 1e-10);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn simplex_volume_by_monte_carlo() {
        let est = simplex_monte_carlo(|_| 1.0, 3, 1000, RngStream::new(1, 0));
        assert_abs_diff_eq!(est.value, 0.5, epsilon = 1e-12);
        // E[p₀] = 1/N on the uniform simplex
        let est = simplex_monte_carlo(|p| p[0], 3, 200_000, RngStream::new(2, 0));
        assert!((est.value - 0.5 / 3.0).abs() < 4.0 * est.std_error);
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(all_sequences(3, 4).count(), 81);
        let t = SequenceType::new(vec![2, 2]).unwrap();
        assert_eq!(brute_class_size(&t), 6);
        let j = JointSequenceType::new(vec![vec![2, 1], vec![1, 0]]).unwrap();
        assert_eq!(brute_conditional_class_size(&j), 3);
    }
}
