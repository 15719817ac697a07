//! Exact law of an additive statistic of a random codeword against a fixed
//! sequence.
//!
//! The fixed sequence splits the positions into groups by symbol g. A codeword
//! drawn i.i.d. from π is, inside each group, a multinomial composition, so the
//! statistic Σ_g Σ_o c(o,g) v(o,g) has a law supported on the product of
//! per-group compositions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::types::{count_types, enumerate_types};

/// Upper bound on the number of joint compositions enumerated for one law.
pub const LAW_LIMIT: f64 = 2e7;

/// Additive per-cell values v(o, g), indexed `o * groups + g`.
#[derive(Debug, Clone)]
pub(crate) struct CellValues {
    pub others: usize,
    pub groups: usize,
    pub primary: Vec<f64>,
    pub secondary: Option<Vec<f64>>,
}

impl CellValues {
    fn at(values: &[f64], groups: usize, o: usize, g: usize) -> f64 {
        values[o * groups + g]
    }

    /// Σ_g (Σ_o c(o,g) v(o,g)) with the summation order used by the law.
    pub fn evaluate(&self, counts: &[u64]) -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for g in 0..self.groups {
            let mut p1 = 0.0;
            let mut p2 = 0.0;
            for o in 0..self.others {
                let c = counts[o * self.groups + g];
                if c > 0 {
                    p1 += c as f64 * Self::at(&self.primary, self.groups, o, g);
                    if let Some(sec) = &self.secondary {
                        p2 += c as f64 * Self::at(sec, self.groups, o, g);
                    }
                }
            }
            s1 += p1;
            s2 += p2;
        }
        (s1, s2)
    }

    /// (ln prob, primary, secondary) over all joint compositions with group
    /// sizes `group_counts`, for a codeword drawn from `ln_pi`.
    pub fn enumerate(&self, group_counts: &[u64], ln_pi: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let mut size = 1.0;
        for &k in group_counts {
            size *= num_traits::ToPrimitive::to_f64(&count_types(self.others, k)).unwrap_or(f64::INFINITY);
        }
        if size > LAW_LIMIT {
            return Err(Error::InstanceTooLarge {
                what: "competitor statistic law".into(),
                size,
                limit: LAW_LIMIT,
            });
        }
        let mut acc: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0)];
        for (g, &k) in group_counts.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let mut part = Vec::new();
            for t in enumerate_types(self.others, k)? {
                let mut lp = ln_factorial(k);
                let mut p1 = 0.0;
                let mut p2 = 0.0;
                let mut possible = true;
                for (o, &c) in t.counts().iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    if ln_pi[o] == f64::NEG_INFINITY {
                        possible = false;
                        break;
                    }
                    lp += c as f64 * ln_pi[o] - ln_factorial(c);
                    p1 += c as f64 * Self::at(&self.primary, self.groups, o, g);
                    if let Some(sec) = &self.secondary {
                        p2 += c as f64 * Self::at(sec, self.groups, o, g);
                    }
                }
                if possible {
                    part.push((lp, p1, p2));
                }
            }
            let mut next = Vec::with_capacity(acc.len() * part.len());
            for a in &acc {
                for b in &part {
                    next.push((a.0 + b.0, a.1 + b.1, a.2 + b.2));
                }
            }
            acc = next;
        }
        Ok(acc)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Sorted support of a scalar statistic with suffix log-masses.
#[derive(Debug, Clone)]
pub struct StatisticLaw {
    values: Vec<f64>,
    /// ln P(S ≥ values[i]) for i ≤ len; the last entry is −∞.
    suffix: Vec<f64>,
}

impl StatisticLaw {
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut suffix = vec![f64::NEG_INFINITY; atoms.len() + 1];
        for i in (0..atoms.len()).rev() {
            suffix[i] = log_add(suffix[i + 1], atoms[i].1);
        }
        StatisticLaw {
            values: atoms.into_iter().map(|a| a.0).collect(),
            suffix,
        }
    }

    /// ln P(S > t).
    pub fn ln_greater(&self, t: f64) -> f64 {
        self.suffix[self.values.partition_point(|&v| v <= t)]
    }

    /// ln P(S ≥ t).
    pub fn ln_at_least(&self, t: f64) -> f64 {
        self.suffix[self.values.partition_point(|&v| v < t)]
    }

    /// P(lo ≤ S ≤ hi).
    pub fn prob_between(&self, lo: f64, hi: f64) -> f64 {
        let a = self.ln_at_least(lo).exp();
        let b = self.ln_greater(hi).exp();
        (a - b).max(0.0)
    }
}

/// Per-key memo shared by all trials of one simulation.
pub(crate) struct Cache<V> {
    map: Mutex<HashMap<Vec<u64>, Arc<V>>>,
    capacity: usize,
}

impl<V> Cache<V> {
    pub fn new(capacity: usize) -> Self {
        Cache {
            map: Mutex::new(HashMap::new()),
            capacity,
        }
    }

    pub fn get_or_try_insert<F>(&self, key: &[u64], make: F) -> Result<Arc<V>>
    where
        F: FnOnce() -> Result<V>,
    {
        if let Some(v) = self.map.lock().expect("cache lock").get(key) {
            return Ok(Arc::clone(v));
        }
        let v = Arc::new(make()?);
        let mut map = self.map.lock().expect("cache lock");
        if map.len() < self.capacity {
            map.entry(key.to_vec()).or_insert_with(|| Arc::clone(&v));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::all_sequences;
    use approx::assert_abs_diff_eq;

    #[test]
    fn law_matches_brute_force() {
        // binary codeword from π against fixed y = 0 0 1 1 1, value v(x, y)
        let cells = CellValues {
            others: 2,
            groups: 2,
            primary: vec![0.3, -1.0, 0.7, 0.2],
            secondary: None,
        };
        let pi = [0.4f64, 0.6];
        let ln_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        let ys = [0usize, 0, 1, 1, 1];
        let atoms = cells.enumerate(&[2, 3], &ln_pi).unwrap();
        let total: f64 = atoms.iter().map(|a| a.0.exp()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let law = StatisticLaw::from_atoms(atoms.iter().map(|a| (a.1, a.0)).collect());
        let t = 0.5;
        let mut brute = 0.0;
        for xs in all_sequences(2, 5) {
            let p: f64 = xs.iter().map(|&x| pi[x]).product();
            let s: f64 = xs.iter().zip(&ys).map(|(&x, &y)| cells.primary[x * 2 + y]).sum();
            if s > t {
                brute += p;
            }
        }
        assert_abs_diff_eq!(law.ln_greater(t).exp(), brute, epsilon = 1e-12);
    }

    #[test]
    fn law_queries() {
        let law = StatisticLaw::from_atoms(vec![(1.0, 0.5f64.ln()), (2.0, 0.25f64.ln()), (3.0, 0.25f64.ln())]);
        assert_abs_diff_eq!(law.ln_greater(1.0).exp(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.ln_at_least(1.0).exp(), 1.0, epsilon = 1e-15);
        assert_eq!(law.ln_greater(3.0), f64::NEG_INFINITY);
        assert_abs_diff_eq!(law.prob_between(2.0, 2.0), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn guard_trips() {
        let cells = CellValues {
            others: 4,
            groups: 1,
            primary: vec![0.0; 4],
            secondary: None,
        };
        assert!(matches!(
            cells.enumerate(&[2000], &[0.0; 4]),
            Err(Error::InstanceTooLarge { .. })
        ));
    }
}
