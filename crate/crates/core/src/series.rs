//! Deterministic sequence constructions: a Wittmann subsequence and the
//! square-root tail weights of a summable sequence.

use thiserror::Error;

use crate::scalar::{compensated_sum, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("no subsequence of two or more terms exists on this prefix")]
    NotFoundOnPrefix,
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
}

/// Indices `n_1 < n_2 < ...` (1-based) of a source sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsequence<S> {
    pub indices: Vec<usize>,
    pub source_len: usize,
    pub m: S,
}

fn cube<S: Scalar>(m: S) -> S {
    m * m * m
}

/// Whether `M a_i <= a_j <= M^3 a_{i+1}` (1-based) holds exactly.
pub fn wittmann_step_holds<S: Scalar>(a: &[S], m: S, i: usize, j: usize) -> bool {
    i < j && j <= a.len() && i < a.len() && m * a[i - 1] <= a[j - 1] && a[j - 1] <= cube(m) * a[i]
}

/// Max segment tree over chain lengths; ties resolve to the smallest index.
struct MaxTree {
    size: usize,
    nodes: Vec<(usize, usize)>,
}

impl MaxTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        Self {
            size,
            nodes: vec![(0, usize::MAX); 2 * size],
        }
    }

    fn better(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    }

    fn set(&mut self, i: usize, len: usize) {
        let mut p = i + self.size;
        self.nodes[p] = (len, i);
        while p > 1 {
            p /= 2;
            self.nodes[p] = Self::better(self.nodes[2 * p], self.nodes[2 * p + 1]);
        }
    }

    /// Best `(len, index)` on `lo..=hi`.
    fn query(&self, lo: usize, hi: usize) -> (usize, usize) {
        let mut best = (0, usize::MAX);
        let (mut l, mut r) = (lo + self.size, hi + self.size + 1);
        while l < r {
            if l & 1 == 1 {
                best = Self::better(best, self.nodes[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                best = Self::better(best, self.nodes[r]);
            }
            l /= 2;
            r /= 2;
        }
        best
    }
}

/// The longest chain on the prefix with `M a_{n_k} <= a_{n_{k+1}} <= M^3 a_{n_k+1}`.
///
/// Because `a` is nondecreasing, the admissible successors of `i` form a
/// contiguous index range, so a backward pass with a range-maximum tree
/// finds a longest chain; among those the lexicographically smallest is
/// returned. Every step is re-verified before returning.
pub fn wittmann_subsequence<S: Scalar>(a: &[S], m: S) -> Result<Subsequence<S>, SeriesError> {
    if !(m > S::one()) {
        return Err(SeriesError::InvalidSequence("M must exceed 1".into()));
    }
    if a.iter().any(|v| !v.is_finite()) || a.windows(2).any(|w| w[1] < w[0]) {
        return Err(SeriesError::InvalidSequence(
            "sequence must be finite and nondecreasing".into(),
        ));
    }
    let n = a.len();
    if n < 2 {
        return Err(SeriesError::NotFoundOnPrefix);
    }
    let m3 = cube(m);
    let mut tree = MaxTree::new(n);
    let mut len = vec![1usize; n];
    let mut next = vec![usize::MAX; n];
    // 0-based: successors j of i satisfy m*a[i] <= a[j] <= m3*a[i+1], j > i
    for i in (0..n).rev() {
        if i + 1 < n {
            let lo = (i + 1) + a[i + 1..].partition_point(|&v| v < m * a[i]);
            let hi_excl = a.partition_point(|&v| v <= m3 * a[i + 1]);
            if lo < n && lo < hi_excl {
                let (best, j) = tree.query(lo, hi_excl - 1);
                if best > 0 {
                    len[i] = best + 1;
                    next[i] = j;
                }
            }
        }
        tree.set(i, len[i]);
    }
    let (best, start) = tree.query(0, n - 1);
    if best < 2 {
        return Err(SeriesError::NotFoundOnPrefix);
    }
    let mut indices = Vec::with_capacity(best);
    let mut i = start;
    while i != usize::MAX {
        indices.push(i + 1);
        i = next[i];
    }
    for w in indices.windows(2) {
        assert!(
            wittmann_step_holds(a, m, w[0], w[1]),
            "chain step {} -> {} fails verification",
            w[0],
            w[1]
        );
    }
    Ok(Subsequence {
        indices,
        source_len: n,
        m,
    })
}

/// `b_n = sqrt(t_n) - sqrt(t_{n+1})` with `t_n = Σ_{k>=n} a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSequence<S> {
    /// `t_1, ..., t_{N+1}`; the last entry is the supplied tail.
    pub tails: Vec<S>,
    pub b: Vec<S>,
    /// `a_n / b_n = sqrt(t_n) + sqrt(t_{n+1})`, or 0 once `t_n = 0`.
    pub ratios: Vec<S>,
    /// `Σ b_n`.
    pub total: S,
    /// First index with `t_n = 0`, from which `b` and the ratios are 0.
    pub zero_tail_from: Option<usize>,
}

impl<S: Scalar> EpsilonSequence<S> {
    /// `ε_n = sqrt(a_n / b_n)`, so that `Σ a_n / ε_n^2 = Σ b_n`.
    pub fn epsilons(&self) -> Vec<S> {
        self.ratios.iter().map(|r| r.sqrt()).collect()
    }
}

/// `tail` is `Σ_{k>N} a_k` for a prefix of length `N` (zero for a finite
/// sequence).
pub fn epsilon_sequence<S: Scalar>(a: &[S], tail: S) -> Result<EpsilonSequence<S>, SeriesError> {
    if a.iter().chain(std::iter::once(&tail)).any(|&v| !(v >= S::zero()) || !v.is_finite()) {
        return Err(SeriesError::InvalidSequence(
            "terms and tail must be finite and nonnegative".into(),
        ));
    }
    let n = a.len();
    let mut tails = vec![S::zero(); n + 1];
    tails[n] = tail;
    for i in (0..n).rev() {
        tails[i] = tails[i + 1] + a[i];
    }
    let roots: Vec<S> = tails.iter().map(|t| t.sqrt()).collect();
    let mut b = Vec::with_capacity(n);
    let mut ratios = Vec::with_capacity(n);
    let mut zero_tail_from = None;
    for i in 0..n {
        if tails[i] == S::zero() {
            zero_tail_from.get_or_insert(i + 1);
            b.push(S::zero());
            ratios.push(S::zero());
        } else {
            b.push(roots[i] - roots[i + 1]);
            ratios.push(roots[i] + roots[i + 1]);
        }
    }
    let total = compensated_sum(b.iter().copied());
    Ok(EpsilonSequence {
        tails,
        b,
        ratios,
        total,
        zero_tail_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wittmann_on_linear_sequence() {
        let a: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = wittmann_subsequence(&a, 2.0).unwrap();
        assert_eq!(s.indices, vec![1, 2, 4, 8, 16, 32, 64]);
    }

    #[test]
    fn wittmann_on_powers() {
        let a: Vec<f64> = (1..=20).map(|n| 2f64.powi(n)).collect();
        let s = wittmann_subsequence(&a, 2.0).unwrap();
        assert_eq!(s.indices, (1..=20).collect::<Vec<_>>());
    }

    #[test]
    fn wittmann_failures() {
        assert_eq!(
            wittmann_subsequence(&[1.0, 1.0, 1.0], 2.0),
            Err(SeriesError::NotFoundOnPrefix)
        );
        assert!(wittmann_subsequence(&[1.0, 2.0], 1.0).is_err());
        assert!(wittmann_subsequence(&[2.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn wittmann_jumps_need_the_upper_bound() {
        // a huge jump at index 4 cannot follow index 1 because a_2 is small
        let a = [1.0, 1.0, 1.5, 100.0, 150.0, 300.0];
        let s = wittmann_subsequence(&a, 2.0).unwrap();
        for w in s.indices.windows(2) {
            assert!(wittmann_step_holds(&a, 2.0, w[0], w[1]));
        }
        assert_eq!(s.indices, vec![3, 4, 6]);
    }

    #[test]
    fn epsilon_geometric() {
        let a: Vec<f64> = (1..=30).map(|n| 4f64.powi(-n)).collect();
        let tail = 4f64.powi(-30) / 3.0;
        let e = epsilon_sequence(&a, tail).unwrap();
        let c = (4.0f64 / 3.0).sqrt();
        for n in 1..=30 {
            let b = c * 2f64.powi(-(n as i32) - 1);
            assert!((e.b[n - 1] - b).abs() < 1e-12);
        }
        assert!((e.total - (e.tails[0].sqrt() - tail.sqrt())).abs() < 1e-12);
        assert!(e.ratios.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn epsilon_zero_sequence() {
        let e = epsilon_sequence(&[0.0f64; 5], 0.0).unwrap();
        assert!(e.b.iter().all(|&v| v == 0.0));
        assert_eq!(e.total, 0.0);
        assert_eq!(e.zero_tail_from, Some(1));
        assert!(epsilon_sequence(&[-1.0f64], 0.0).is_err());
    }
}
