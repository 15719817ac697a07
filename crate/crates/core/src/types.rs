//! Sequence types, type classes and their sizes.
//!
//! Exact sizes are multinomial coefficients; `ln` sizes come from log-factorials
//! so n in the thousands stays representable. Big integers are used wherever
//! an exact identity is checked.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::dist::{Distribution, JointDistribution};
use crate::error::{Error, Result};

/// Occurrence counts N(x|xⁿ) of a length-n sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SequenceType {
    counts: Vec<u64>,
    n: u64,
}

impl SequenceType {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty);
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(SequenceType { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// The p-type T(x) = N(x|xⁿ)/n.
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    pub fn as_distribution(&self) -> Distribution {
        Distribution::from_weights(&self.frequencies()).expect("a type is a valid distribution")
    }

    /// Number of symbols with positive count.
    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Joint counts N(x,y|xⁿ,yⁿ), stored row-major as `x * y_size + y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct JointSequenceType {
    x_size: usize,
    y_size: usize,
    counts: Vec<u64>,
    n: u64,
}

impl JointSequenceType {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        let x_size = rows.len();
        let y_size = rows.first().map(Vec::len).ok_or(Error::Empty)?;
        if y_size == 0 {
            return Err(Error::Empty);
        }
        let mut counts = Vec::with_capacity(x_size * y_size);
        for row in &rows {
            if row.len() != y_size {
                return Err(Error::DimensionMismatch {
                    expected: y_size,
                    found: row.len(),
                });
            }
            counts.extend_from_slice(row);
        }
        Self::from_flat(x_size, y_size, counts)
    }

    pub fn from_flat(x_size: usize, y_size: usize, counts: Vec<u64>) -> Result<Self> {
        if x_size == 0 || y_size == 0 {
            return Err(Error::Empty);
        }
        if counts.len() != x_size * y_size {
            return Err(Error::DimensionMismatch {
                expected: x_size * y_size,
                found: counts.len(),
            });
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(JointSequenceType {
            x_size,
            y_size,
            counts,
            n,
        })
    }

    /// Joint type of the paired sequences.
    pub fn of_pair(xs: &[usize], ys: &[usize], x_size: usize, y_size: usize) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        let mut counts = vec![0u64; x_size * y_size];
        for (&x, &y) in xs.iter().zip(ys) {
            if x >= x_size {
                return Err(Error::SymbolOutOfAlphabet { symbol: x, size: x_size });
            }
            if y >= y_size {
                return Err(Error::SymbolOutOfAlphabet { symbol: y, size: y_size });
            }
            counts[x * y_size + y] += 1;
        }
        Self::from_flat(x_size, y_size, counts)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.y_size + y]
    }

    pub fn flat_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row(&self, x: usize) -> &[u64] {
        &self.counts[x * self.y_size..(x + 1) * self.y_size]
    }

    pub fn x_marginal(&self) -> SequenceType {
        SequenceType {
            counts: (0..self.x_size).map(|x| self.row(x).iter().sum()).collect(),
            n: self.n,
        }
    }

    pub fn y_marginal(&self) -> SequenceType {
        SequenceType {
            counts: (0..self.y_size)
                .map(|y| (0..self.x_size).map(|x| self.count(x, y)).sum())
                .collect(),
            n: self.n,
        }
    }

    pub fn as_joint_distribution(&self) -> JointDistribution {
        let p = self.counts.iter().map(|&c| c as f64 / self.n as f64).collect();
        JointDistribution::from_flat(self.x_size, self.y_size, p).expect("a joint type is normalized")
    }
}

/// ln of the exact class size and of its Stirling form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassSize {
    pub exact_log: f64,
    pub stirling_log: f64,
}

impl ClassSize {
    /// |Stirling size / exact size − 1|.
    pub fn relative_error(&self) -> f64 {
        (self.stirling_log - self.exact_log).exp_m1().abs()
    }
}

pub fn type_of(seq: &[usize], alphabet_size: usize) -> Result<SequenceType> {
    if seq.is_empty() || alphabet_size == 0 {
        return Err(Error::Empty);
    }
    let mut counts = vec![0u64; alphabet_size];
    for &s in seq {
        if s >= alphabet_size {
            return Err(Error::SymbolOutOfAlphabet {
                symbol: s,
                size: alphabet_size,
            });
        }
        counts[s] += 1;
    }
    SequenceType::new(counts)
}

/// n! / Π cᵢ! as a big integer.
pub fn multinomial(counts: &[u64]) -> BigUint {
    // product of binomials C(c₁+…+cₖ, cₖ) keeps intermediates exact
    let mut result = BigUint::one();
    let mut total: u64 = 0;
    for &c in counts {
        for i in 1..=c {
            total += 1;
            result *= total;
            result /= i;
        }
    }
    result
}

pub fn ln_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// Stirling form of ln d: n·H(T) − ((N'−1)/2)·ln(2πn) − ½ Σ ln T(x), where
/// only the N' symbols with positive count take part.
pub fn stirling_log_size(t: &SequenceType) -> f64 {
    let n = t.n as f64;
    let mut acc = 0.0;
    let mut half_ln_t = 0.0;
    for &c in &t.counts {
        if c > 0 {
            let p = c as f64 / n;
            acc -= n * p * p.ln();
            half_ln_t += 0.5 * p.ln();
        }
    }
    let dims = t.support_size() as f64 - 1.0;
    acc - 0.5 * dims * (2.0 * PI * n).ln() - half_ln_t
}

pub fn class_size(t: &SequenceType) -> ClassSize {
    ClassSize {
        exact_log: ln_multinomial(&t.counts),
        stirling_log: stirling_log_size(t),
    }
}

pub fn exact_class_size(t: &SequenceType) -> BigUint {
    multinomial(&t.counts)
}

/// All compositions of n into N parts, in increasing lexicographic order of
/// the count vector.
#[derive(Debug, Clone)]
pub struct TypeIter {
    current: Option<Vec<u64>>,
}

impl Iterator for TypeIter {
    type Item = SequenceType;

    fn next(&mut self) -> Option<SequenceType> {
        let counts = self.current.take()?;
        let len = counts.len();
        let mut next = counts.clone();
        // rightmost position (excluding the last) whose suffix still has mass
        let mut suffix = next[len - 1];
        let mut pos = None;
        for i in (0..len.saturating_sub(1)).rev() {
            if suffix > 0 {
                pos = Some(i);
                break;
            }
            suffix += next[i];
        }
        if let Some(i) = pos {
            next[i] += 1;
            for v in next.iter_mut().skip(i + 1) {
                *v = 0;
            }
            next[len - 1] = suffix - 1;
            self.current = Some(next);
        }
        let n = counts.iter().sum();
        Some(SequenceType { counts, n })
    }
}

pub fn enumerate_types(alphabet_size: usize, n: u64) -> Result<TypeIter> {
    if alphabet_size == 0 || n == 0 {
        return Err(Error::Empty);
    }
    let mut start = vec![0u64; alphabet_size];
    start[alphabet_size - 1] = n;
    Ok(TypeIter { current: Some(start) })
}

/// Joint types over an `x_size × y_size` alphabet, as flattened compositions.
pub fn enumerate_joint_types(
    x_size: usize,
    y_size: usize,
    n: u64,
) -> Result<impl Iterator<Item = JointSequenceType>> {
    Ok(enumerate_types(x_size * y_size, n)?.map(move |t| JointSequenceType {
        x_size,
        y_size,
        counts: t.counts,
        n: t.n,
    }))
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k.min(n));
    let mut r = BigUint::one();
    for i in 0..k {
        r *= n - i;
        r /= i + 1;
    }
    r
}

/// C(n+N−1, N−1).
pub fn count_types(alphabet_size: usize, n: u64) -> BigUint {
    if alphabet_size == 0 {
        return BigUint::zero();
    }
    binomial(n + alphabet_size as u64 - 1, alphabet_size as u64 - 1)
}

/// The asymptotic type count n^{N−1}/(N−1)!.
pub fn approx_count_types(alphabet_size: usize, n: u64) -> f64 {
    let k = alphabet_size as f64 - 1.0;
    (k * (n as f64).ln() - ln_factorial(alphabet_size as u64 - 1)).exp()
}

/// ln Q(xⁿ) for any xⁿ of type t: n Σ T(x) ln q(x).
pub fn iid_type_probability(t: &SequenceType, q: &Distribution) -> Result<f64> {
    if t.alphabet_size() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: t.alphabet_size(),
            found: q.len(),
        });
    }
    let mut acc = 0.0;
    for (x, &c) in t.counts.iter().enumerate() {
        if c > 0 {
            let p = q.prob(x);
            if p <= 0.0 {
                return Err(Error::SupportViolation { symbol: x });
            }
            acc += c as f64 * p.ln();
        }
    }
    Ok(acc)
}

/// T(y|x); rows whose x never occurs are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalType {
    pub rows: Vec<Option<Vec<f64>>>,
}

impl ConditionalType {
    pub fn row(&self, x: usize) -> Option<&[f64]> {
        self.rows[x].as_deref()
    }
}

pub fn conditional_type(joint: &JointSequenceType) -> ConditionalType {
    let rows = (0..joint.x_size)
        .map(|x| {
            let row = joint.row(x);
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row.iter().map(|&c| c as f64 / total as f64).collect())
        })
        .collect();
    ConditionalType { rows }
}

/// d_{[yⁿ|xⁿ]}: number of yⁿ completing a fixed xⁿ to the joint type,
/// Π_x multinomial(row x).
pub fn exact_conditional_class_size(joint: &JointSequenceType) -> BigUint {
    (0..joint.x_size).map(|x| multinomial(joint.row(x))).product()
}

/// ln d_{[xⁿ,yⁿ]} − ln d_{[xⁿ]}.
pub fn conditional_class_size(joint: &JointSequenceType) -> f64 {
    ln_multinomial(&joint.counts) - ln_multinomial(&joint.x_marginal().counts)
}

pub const IDENTITY_CHECK_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeCountReport {
    pub x_size: usize,
    pub y_size: usize,
    pub n: u64,
    /// Σ_{[xⁿ]} d_{[xⁿ]} Σ_{[yⁿ|xⁿ]} d_{[yⁿ|xⁿ]}
    pub nested_sum: BigUint,
    /// Σ_{[xⁿ,yⁿ]} d_{[xⁿ,yⁿ]}
    pub joint_sum: BigUint,
    /// Σ_{[xⁿ]} d_{[xⁿ]} · Σ_{[yⁿ]} d_{[yⁿ]}
    pub product_sum: BigUint,
    /// |S_x|ⁿ |S_y|ⁿ
    pub total_pairs: BigUint,
    /// Sequence pairs visited by brute force, bucketed by joint type.
    pub enumerated_pairs: u64,
    /// Every bucket size equals the multinomial of its joint type.
    pub classes_match: bool,
    /// d_{[x,y]} = d_{[x]}·d_{[y|x]} for every joint type.
    pub ratio_identity: bool,
}

impl TypeCountReport {
    pub fn holds(&self) -> bool {
        self.nested_sum == self.joint_sum
            && self.joint_sum == self.total_pairs
            && self.product_sum == self.total_pairs
            && BigUint::from(self.enumerated_pairs) == self.total_pairs
            && self.classes_match
            && self.ratio_identity
    }
}

/// Exact counting identities for joint and conditional classes, with a brute
/// force partition of all sequence pairs.
pub fn type_count_identity_check(x_size: usize, y_size: usize, n: u64) -> Result<TypeCountReport> {
    if x_size == 0 || y_size == 0 || n == 0 {
        return Err(Error::Empty);
    }
    let pairs = (x_size as f64 * y_size as f64).powf(n as f64);
    if pairs > IDENTITY_CHECK_LIMIT {
        return Err(Error::InstanceTooLarge {
            what: "type count identity".into(),
            size: pairs,
            limit: IDENTITY_CHECK_LIMIT,
        });
    }

    let mut nested_sum = BigUint::zero();
    let mut joint_sum = BigUint::zero();
    let mut ratio_identity = true;
    let mut buckets = std::collections::HashMap::new();
    for jt in enumerate_joint_types(x_size, y_size, n)? {
        let d_joint = multinomial(&jt.counts);
        let d_x = multinomial(&jt.x_marginal().counts);
        let d_cond = exact_conditional_class_size(&jt);
        if &d_x * &d_cond != d_joint {
            ratio_identity = false;
        }
        nested_sum += d_x * d_cond;
        joint_sum += &d_joint;
        buckets.insert(jt.counts.clone(), (d_joint, 0u64));
    }

    let x_sum: BigUint = enumerate_types(x_size, n)?.map(|t| multinomial(&t.counts)).sum();
    let y_sum: BigUint = enumerate_types(y_size, n)?.map(|t| multinomial(&t.counts)).sum();
    let total_pairs = BigUint::from(x_size).pow(n as u32) * BigUint::from(y_size).pow(n as u32);

    // odometer over all (xⁿ, yⁿ), one digit per position in the pair alphabet
    let base = x_size * y_size;
    let mut digits = vec![0usize; n as usize];
    let mut enumerated_pairs = 0u64;
    loop {
        let mut key = vec![0u64; base];
        for &d in &digits {
            key[d] += 1;
        }
        buckets.get_mut(&key).expect("every pair has an enumerated joint type").1 += 1;
        enumerated_pairs += 1;
        let mut i = 0;
        while i < digits.len() {
            digits[i] += 1;
            if digits[i] < base {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
    }
    let classes_match = buckets
        .values()
        .all(|(d, seen)| d.to_u64() == Some(*seen));

    Ok(TypeCountReport {
        x_size,
        y_size,
        n,
        nested_sum,
        joint_sum,
        product_sum: x_sum * y_sum,
        total_pairs,
        enumerated_pairs,
        classes_match,
        ratio_identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(c: &[u64]) -> SequenceType {
        SequenceType::new(c.to_vec()).unwrap()
    }

    #[test]
    fn type_of_examples() {
        assert_eq!(type_of(&[0, 0, 1], 2).unwrap().counts(), &[2, 1]);
        assert_eq!(type_of(&[1, 1, 1, 1], 2).unwrap().counts(), &[0, 4]);
        for perm in [[0, 0, 1, 1], [1, 0, 1, 0], [1, 1, 0, 0]] {
            assert_eq!(type_of(&perm, 2).unwrap().counts(), &[2, 2]);
        }
        assert!(matches!(
            type_of(&[0, 2], 2),
            Err(Error::SymbolOutOfAlphabet { symbol: 2, size: 2 })
        ));
    }

    #[test]
    fn class_size_examples() {
        assert_eq!(exact_class_size(&t(&[2, 2])), BigUint::from(6u32));
        assert_eq!(exact_class_size(&t(&[5, 0])), BigUint::one());
        assert_abs_diff_eq!(class_size(&t(&[5, 0])).stirling_log, 0.0, epsilon = 1e-12);
        let cs = class_size(&t(&[50, 50]));
        assert!(cs.relative_error() < 0.01);
        assert_abs_diff_eq!(cs.exact_log, multinomial(&[50, 50]).to_f64().unwrap().ln(), epsilon = 1e-10);
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_types(2, 10).unwrap().count(), 11);
        assert_abs_diff_eq!(approx_count_types(2, 10), 10.0, epsilon = 1e-9);
        assert_eq!(enumerate_types(1, 7).unwrap().count(), 1);
        assert_eq!(enumerate_types(3, 4).unwrap().count(), 15);
        assert_eq!(count_types(3, 4), BigUint::from(15u32));
        let all: Vec<_> = enumerate_types(3, 3).unwrap().map(|t| t.counts().to_vec()).collect();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(all, sorted);
        assert!(all.iter().all(|c| c.iter().sum::<u64>() == 3));
    }

    #[test]
    fn iid_probability_examples() {
        let q = Distribution::point_mass(2, 0).unwrap();
        assert_eq!(iid_type_probability(&t(&[4, 0]), &q).unwrap(), 0.0);
        assert!(matches!(
            iid_type_probability(&t(&[3, 1]), &q),
            Err(Error::SupportViolation { symbol: 1 })
        ));
        let u = Distribution::uniform(2).unwrap();
        for ty in enumerate_types(2, 10).unwrap() {
            assert_abs_diff_eq!(iid_type_probability(&ty, &u).unwrap(), -10.0 * 2f64.ln(), epsilon = 1e-12);
        }
        let q = Distribution::new(vec![0.9, 0.1]).unwrap();
        let total: f64 = enumerate_types(2, 12)
            .unwrap()
            .map(|ty| (class_size(&ty).exact_log + iid_type_probability(&ty, &q).unwrap()).exp())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_type_examples() {
        let j = JointSequenceType::new(vec![vec![2, 0], vec![0, 2]]).unwrap();
        let c = conditional_type(&j);
        assert_eq!(c.row(0).unwrap(), &[1.0, 0.0]);
        assert_eq!(c.row(1).unwrap(), &[0.0, 1.0]);
        let j = JointSequenceType::new(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(conditional_type(&j).row(1).unwrap(), &[0.5, 0.5]);
        let j = JointSequenceType::new(vec![vec![3, 1], vec![0, 0]]).unwrap();
        let c = conditional_type(&j);
        assert_eq!(c.row(0).unwrap(), &[0.75, 0.25]);
        assert!(c.row(1).is_none());
    }

    #[test]
    fn conditional_class_size_examples() {
        let j = JointSequenceType::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_abs_diff_eq!(conditional_class_size(&j), 0.0, epsilon = 1e-12);
        let j = JointSequenceType::new(vec![vec![2, 1], vec![1, 0]]).unwrap();
        assert_eq!(exact_conditional_class_size(&j), BigUint::from(3u32));
        assert_abs_diff_eq!(conditional_class_size(&j), 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn identity_check_examples() {
        let r = type_count_identity_check(2, 2, 3).unwrap();
        assert!(r.holds());
        assert_eq!(r.total_pairs, BigUint::from(64u32));
        let r = type_count_identity_check(1, 3, 4).unwrap();
        assert!(r.holds());
        assert_eq!(r.joint_sum, BigUint::from(81u32));
        assert!(type_count_identity_check(2, 2, 6).unwrap().holds());
        assert!(matches!(
            type_count_identity_check(2, 2, 20),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn diagonal_embedding() {
        let xs = [0, 1, 1, 2, 2, 2];
        let j = JointSequenceType::of_pair(&xs, &xs, 3, 3).unwrap();
        let tx = type_of(&xs, 3).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let expected = if x == y { tx.counts()[x] } else { 0 };
                assert_eq!(j.count(x, y), expected);
            }
        }
    }
}
